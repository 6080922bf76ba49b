"""Point-set container, file ingestion, and elementary metrics.

Everything downstream operates on finite windows: a set of points known to
be the restriction of some larger point set to the ball ``|x| <= radius``
about the origin. The container is immutable, keeps its points in
canonical lexicographic order (so every tie-break in the package is
deterministic), and caches the nearest-neighbour structure that most
analyses need.
"""

from __future__ import annotations

import io
import json
from typing import IO, Union

import numpy as np
from scipy.spatial import cKDTree

from ._util import query_workers
from .errors import (
    ConfigError,
    DimensionMismatch,
    DuplicatePoint,
    EmptyWindow,
    ParseError,
    TooFewPoints,
)

#: Two points closer than this (model units) are treated as the same point.
TOL_EQ = 1e-9


def _canonical_order(pts: np.ndarray) -> np.ndarray:
    """Indices sorting rows lexicographically (first coordinate primary)."""
    if len(pts) == 0:
        return np.zeros(0, dtype=np.intp)
    keys = tuple(pts[:, k] for k in range(pts.shape[1] - 1, -1, -1))
    return np.lexsort(keys)


class WindowedSet:
    """Finite point set in R^p restricted to a ball about the origin.

    Parameters
    ----------
    points : array-like, shape (n, p)
        Coordinates. One-dimensional input is treated as n points in R^1.
    radius : float, optional
        Window radius. Defaults to ``max |a|`` over the points.
    label : str
        Free-form provenance string, carried through restriction and
        serialization.
    """

    def __init__(self, points, radius=None, label: str = "", *, _trusted=False):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise ConfigError("points must have shape (n, p)")
        if pts.shape[0] and pts.shape[1] < 1:
            raise ConfigError("dimension must be at least 1")
        if pts.size and not np.all(np.isfinite(pts)):
            raise ParseError("coordinates must be finite (no NaN or infinity)")

        if not _trusted:
            pts = pts[_canonical_order(pts)]
        pts = np.ascontiguousarray(pts)
        pts.flags.writeable = False
        self.points = pts
        self.dim = int(pts.shape[1]) if pts.shape[0] else max(int(pts.shape[1]), 1)
        self.label = str(label)

        norms = np.linalg.norm(pts, axis=1) if len(pts) else np.zeros(0)
        norms.flags.writeable = False
        self._norms = norms

        if radius is None:
            radius = float(norms.max()) if len(pts) else 0.0
        radius = float(radius)
        if radius < 0:
            raise ConfigError("radius must be non-negative")
        if len(pts) and norms.max() > radius + TOL_EQ:
            raise ConfigError(
                f"point with |a| = {norms.max():g} exceeds window radius {radius:g}"
            )
        self.radius = radius

        self._tree = None
        self._nn = None
        if not _trusted and len(pts) >= 2:
            if float(self.nn_distances().min()) < TOL_EQ:
                raise DuplicatePoint(
                    "two points coincide within tol_eq = %g" % TOL_EQ
                )

    # -- cached geometry ------------------------------------------------

    def tree(self) -> cKDTree:
        """KD-tree over the points (built once, shared by all queries)."""
        if self._tree is None:
            self._tree = cKDTree(self.points)
        return self._tree

    def nn_distances(self) -> np.ndarray:
        """Distance from each point to its nearest distinct neighbour."""
        if self._nn is None:
            if len(self.points) < 2:
                raise TooFewPoints("nearest-neighbour distances need >= 2 points")
            d, _ = self.tree().query(self.points, k=2, workers=query_workers())
            nn = d[:, 1].copy()
            nn.flags.writeable = False
            self._nn = nn
        return self._nn

    def norms(self) -> np.ndarray:
        return self._norms

    # -- conveniences ----------------------------------------------------

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return (
            f"WindowedSet(n={len(self)}, dim={self.dim}, "
            f"radius={self.radius:g}, label={self.label!r})"
        )

    def equals(self, other: "WindowedSet") -> bool:
        """Exact equality: same points bit-for-bit, radius, and label."""
        return (
            self.dim == other.dim
            and self.radius == other.radius
            and self.label == other.label
            and self.points.shape == other.points.shape
            and bool(np.array_equal(self.points, other.points))
        )


# -- ingestion and serialization ------------------------------------------


def _as_text(source: Union[bytes, str, IO]) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def load_points(source, format: str = "csv") -> WindowedSet:
    """Parse a point-set file.

    CSV: one point per line, comma-separated decimals, ``#`` comments.
    The window radius is inferred as ``max |a|`` (CSV carries no metadata).
    JSON: object ``{"dim", "radius", "label", "points"}``; extra keys are
    ignored so generator metadata can ride along.
    """
    text = _as_text(source)
    if format == "csv":
        return _load_csv(text)
    if format == "json":
        return _load_json(text)
    raise ConfigError(f"unknown format {format!r} (expected 'csv' or 'json')")


def _load_csv(text: str) -> WindowedSet:
    rows = []
    arity = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split(",")
        try:
            row = [float(f) for f in fields]
        except ValueError:
            raise ParseError(f"line {lineno}: malformed row {stripped!r}")
        if not all(np.isfinite(row)):
            raise ParseError(f"line {lineno}: non-finite coordinate")
        if arity is None:
            arity = len(row)
        elif len(row) != arity:
            raise DimensionMismatch(
                f"line {lineno}: expected {arity} coordinates, got {len(row)}"
            )
        rows.append(row)
    if not rows:
        raise ParseError("no data rows found")
    return WindowedSet(np.array(rows, dtype=np.float64))


def _load_json(text: str) -> WindowedSet:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}")
    if not isinstance(obj, dict) or "points" not in obj:
        raise ParseError("JSON point set must be an object with a 'points' key")
    raw = obj["points"]
    if not isinstance(raw, list):
        raise ParseError("'points' must be a list of coordinate rows")
    dim = obj.get("dim")
    rows = []
    for i, row in enumerate(raw):
        if not isinstance(row, list) or not all(
            isinstance(c, (int, float)) for c in row
        ):
            raise ParseError(f"points[{i}] is not a numeric row")
        if dim is None:
            dim = len(row)
        if len(row) != dim:
            raise DimensionMismatch(
                f"points[{i}] has {len(row)} coordinates, expected {dim}"
            )
        rows.append([float(c) for c in row])
    if not rows:
        raise ParseError("no points in JSON input")
    radius = obj.get("radius")
    if radius is not None:
        radius = float(radius)
    label = str(obj.get("label", ""))
    try:
        return WindowedSet(np.array(rows, dtype=np.float64), radius, label)
    except ConfigError as e:
        raise ParseError(str(e))


def serialize(S: WindowedSet, format: str = "csv", metadata: dict | None = None) -> str:
    """Render a point set back to text. ``load_points(serialize(S)) == S``
    (for CSV up to the inferred radius; JSON round-trips exactly).

    ``metadata`` is an optional JSON-serializable record stored under the
    ``"generator"`` key (JSON) or echoed as ``#`` comments (CSV).
    """
    if format == "csv":
        out = io.StringIO()
        if S.label:
            out.write(f"# label: {S.label}\n")
        if metadata:
            out.write(f"# generator: {json.dumps(metadata, sort_keys=True)}\n")
        for row in S.points:
            out.write(",".join(repr(float(c)) for c in row))
            out.write("\n")
        return out.getvalue()
    if format == "json":
        obj = {
            "dim": S.dim,
            "radius": S.radius,
            "label": S.label,
            "points": [[float(c) for c in row] for row in S.points],
        }
        if metadata:
            obj["generator"] = metadata
        return json.dumps(obj) + "\n"
    raise ConfigError(f"unknown format {format!r} (expected 'csv' or 'json')")


# -- elementary operations --------------------------------------------------


def window_restrict(S: WindowedSet, r: float) -> WindowedSet:
    """The subset ``{a in S : |a| <= r}`` as a window of radius ``r``."""
    r = float(r)
    if not 0 < r <= S.radius + TOL_EQ:
        raise ConfigError(f"restriction radius {r:g} outside (0, {S.radius:g}]")
    mask = S.norms() <= r + TOL_EQ
    if not mask.any():
        raise EmptyWindow(f"no points with |a| <= {r:g}")
    return WindowedSet(S.points[mask], min(r, S.radius), S.label, _trusted=True)


def min_separation(S: WindowedSet) -> float:
    """Smallest distance between two distinct points of the window."""
    if len(S) < 2:
        raise TooFewPoints("min_separation needs at least 2 points")
    return float(S.nn_distances().min())
