"""Almost-period testing, candidate generation, and exact-period extraction.

The almost-period test is the bijection criterion: tau is an epsilon-almost
period of the window when the core (points that cannot be pushed past the
window edge by tau) injects into the window with every displacement
|a + tau - b| < epsilon. Candidates come from the difference set, an
epsilon-almost period snaps to the unique nearby difference vector, and the
snapped vector is accepted only if it translates the whole core exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import maximum_bipartite_matching

from ._util import query_workers
from .errors import (
    AmbiguousSnap,
    ConfigError,
    CoreTooLarge,
    NoSnapTarget,
    NotExactPeriod,
    WindowTooSmall,
)
from .geometry import difference_vectors
from .pointset import TOL_EQ, WindowedSet, min_separation

#: Exact-period residual budget: one float addition of rounding on top of
#: the point-equality tolerance.
TOL_EXACT = 10 * TOL_EQ


@dataclass(frozen=True)
class AlmostPeriodCertificate:
    """Witness that tau moves the core onto the window within epsilon.

    matched holds (core index, target index) pairs into S.points; the map
    is injective and covers every core point.
    """

    tau: np.ndarray
    epsilon: float
    matched: np.ndarray
    core_radius: float
    max_displacement: float


@dataclass(frozen=True)
class Rejection:
    """Failure record: how many core points could not be matched."""

    tau: np.ndarray
    epsilon: float
    core_size: int
    unmatched: int


@dataclass(frozen=True)
class Period:
    """Exact translation symmetry of the window, with its verified reach."""

    T: np.ndarray
    verified_radius: float
    anchor: np.ndarray
    source_tau: np.ndarray


@dataclass(frozen=True)
class FailureWitness:
    """First core point (canonical order) that T fails to translate into S."""

    point: np.ndarray
    T: np.ndarray
    distance: float


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=np.float64)
    out.flags.writeable = False
    return out


def _core_indices(S: WindowedSet, margin: float) -> np.ndarray:
    """Indices of points with |a| <= R - margin, in canonical order."""
    return np.flatnonzero(S.norms() <= S.radius - margin)


def is_almost_period(S: WindowedSet, tau, epsilon: float):
    """Bijection test for tau at tolerance epsilon on the window core.

    Returns an AlmostPeriodCertificate when a core-saturating matching
    exists, else a Rejection counting the unmatched core points. The
    displacement bound is strict (< epsilon).
    """
    tau = np.asarray(tau, dtype=np.float64).reshape(-1)
    if len(tau) != S.dim:
        raise ConfigError(f"tau has dim {len(tau)}, window has dim {S.dim}")
    epsilon = float(epsilon)
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive")
    t = float(np.linalg.norm(tau))
    if t + epsilon >= S.radius:
        raise ConfigError(
            f"|tau| + epsilon = {t + epsilon:g} must stay below R = {S.radius:g}"
        )
    core = _core_indices(S, t + epsilon)
    if len(core) == 0:
        raise WindowTooSmall("no core points survive the |tau| + epsilon margin")
    core_radius = S.radius - t - epsilon
    shifted = S.points[core] + tau

    if len(S) >= 2 and epsilon < min_separation(S) / 2:
        # at most one target per core point and targets cannot collide, so
        # nearest-neighbour lookup decides the matching outright
        d, j = S.tree().query(
            shifted, k=1, distance_upper_bound=epsilon * (1 + 1e-12),
            workers=query_workers(),
        )
        ok = d < epsilon
        if not ok.all():
            return Rejection(_frozen(tau), epsilon, len(core),
                             int((~ok).sum()))
        matched = np.column_stack([core, j]).astype(np.intp)
        return AlmostPeriodCertificate(
            _frozen(tau), epsilon, _frozen_int(matched), float(core_radius),
            float(d.max()) if len(d) else 0.0,
        )

    rows, cols, dists = [], [], []
    neighborhoods = S.tree().query_ball_point(
        shifted, epsilon * (1 + 1e-12), workers=query_workers()
    )
    for i, cand in enumerate(neighborhoods):
        for j in sorted(cand):
            dd = float(np.linalg.norm(shifted[i] - S.points[j]))
            if dd < epsilon:
                rows.append(i)
                cols.append(j)
                dists.append(dd)
    graph = sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(len(core), len(S))
    )
    match = maximum_bipartite_matching(graph, perm_type="column")
    unmatched = int((match < 0).sum())
    if unmatched:
        return Rejection(_frozen(tau), epsilon, len(core), unmatched)
    targets = S.points[match]
    disp = np.linalg.norm(S.points[core] + tau - targets, axis=1)
    matched = np.column_stack([core, match]).astype(np.intp)
    return AlmostPeriodCertificate(
        _frozen(tau), epsilon, _frozen_int(matched), float(core_radius),
        float(disp.max()) if len(disp) else 0.0,
    )


def _frozen_int(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.intp)
    out.flags.writeable = False
    return out


def brute_force_almost_period(S: WindowedSet, tau, epsilon: float) -> bool:
    """Exhaustive oracle for is_almost_period (cores of at most 8 points).

    Tries every injection of the core into the window by backtracking;
    true iff some injection keeps all displacements below epsilon.
    """
    tau = np.asarray(tau, dtype=np.float64).reshape(-1)
    epsilon = float(epsilon)
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive")
    t = float(np.linalg.norm(tau))
    if t + epsilon >= S.radius:
        raise ConfigError("|tau| + epsilon must stay below R")
    core = _core_indices(S, t + epsilon)
    if len(core) == 0:
        raise WindowTooSmall("no core points survive the margin")
    if len(core) > 8:
        raise CoreTooLarge(f"core has {len(core)} points, oracle cap is 8")

    cand = []
    for i in core:
        shifted = S.points[i] + tau
        d = np.linalg.norm(S.points - shifted, axis=1)
        cand.append(list(np.flatnonzero(d < epsilon)))

    used = set()

    def assign(k: int) -> bool:
        if k == len(cand):
            return True
        for j in cand[k]:
            if j not in used:
                used.add(j)
                if assign(k + 1):
                    return True
                used.remove(j)
        return False

    return assign(0)


def candidate_almost_periods(
    S: WindowedSet, epsilon: float, r_min: float, r_max: float
) -> np.ndarray:
    """Difference vectors with r_min <= |v| <= r_max, shortest first.

    Every exact period of the set is a difference vector, and every
    epsilon/2-almost period lies within epsilon/2 of one, so this list
    exhausts the useful candidates. Ties in |v| break lexicographically.
    """
    if float(epsilon) <= 0:
        raise ConfigError("epsilon must be positive")
    r_min, r_max = float(r_min), float(r_max)
    if not 0 < r_min < r_max:
        raise ConfigError("need 0 < r_min < r_max")
    if r_max > S.radius / 2 + TOL_EQ:
        raise ConfigError(f"r_max {r_max:g} exceeds R/2 = {S.radius / 2:g}")
    V = difference_vectors(S, r_max)
    return _annulus_sorted(V.vectors, r_min, r_max)


def _annulus_sorted(vectors: np.ndarray, r_min: float, r_max: float) -> np.ndarray:
    """Rows with r_min <= |v| <= r_max ordered by (|v|, lexicographic)."""
    norms = np.linalg.norm(vectors, axis=1)
    keep = (norms >= r_min - TOL_EQ) & (norms <= r_max + TOL_EQ)
    vecs = vectors[keep]
    norms = norms[keep]
    keys = tuple(vecs[:, k] for k in range(vecs.shape[1] - 1, -1, -1)) + (norms,)
    return np.ascontiguousarray(vecs[np.lexsort(keys)])


def snap_to_period(
    S: WindowedSet, tau, epsilon: float, tol_exact: float = TOL_EXACT
) -> Period:
    """Replace an almost period by the exact difference vector it shadows.

    The anchor a is the window point nearest the origin; the unique c with
    |a + tau - c| < epsilon/2 defines T = c - a, which must then pass
    verify_exact_period on the full window.
    """
    tau = np.asarray(tau, dtype=np.float64).reshape(-1)
    epsilon = float(epsilon)
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive")
    if len(S) == 0:
        raise WindowTooSmall("cannot snap against an empty window")

    anchor_idx = int(np.argmin(S.norms()))
    a = S.points[anchor_idx]
    target = a + tau
    hits = S.tree().query_ball_point(target, epsilon / 2 * (1 + 1e-12))
    hits = [j for j in sorted(hits)
            if np.linalg.norm(S.points[j] - target) < epsilon / 2]
    if not hits:
        raise NoSnapTarget(
            f"no window point within epsilon/2 = {epsilon / 2:g} of anchor+tau"
        )
    if len(hits) > 1:
        raise AmbiguousSnap(
            f"{len(hits)} window points within epsilon/2 of anchor+tau; "
            "epsilon exceeds the separation scale"
        )
    T = S.points[hits[0]] - a
    outcome = verify_exact_period(S, T, tol_exact)
    if isinstance(outcome, FailureWitness):
        raise NotExactPeriod(
            f"snapped vector fails exact verification at point "
            f"{outcome.point.tolist()} (residual {outcome.distance:.3e})"
        )
    return Period(
        T=_frozen(T),
        verified_radius=float(outcome),
        anchor=_frozen(a),
        source_tau=_frozen(tau),
    )


def _first_failure(
    S: WindowedSet, core_pts: np.ndarray, T: np.ndarray, tol_exact: float
):
    """Index of the first core point (canonical order) not translated into
    S by T, or -1. Vectorized nearest-neighbour scan."""
    d, _ = S.tree().query(
        core_pts + T, k=1, distance_upper_bound=tol_exact * (1 + 1e-9),
        workers=query_workers(),
    )
    bad = d > tol_exact
    if not bad.any():
        return -1
    return int(np.argmax(bad))


def verify_exact_period(S: WindowedSet, T, tol_exact: float = TOL_EXACT):
    """Check that T translates every core point back into the window.

    Core = {a : |a| <= R - |T| - tol_exact}. Success returns the verified
    radius R - |T| - tol_exact; failure returns a FailureWitness carrying
    the first offending point in canonical order. A sparse probe pass
    rejects bad candidates early; the witness is still taken from the
    prefix scan so the canonical-order contract holds.
    """
    T = np.asarray(T, dtype=np.float64).reshape(-1)
    if len(T) != S.dim:
        raise ConfigError(f"T has dim {len(T)}, window has dim {S.dim}")
    tol_exact = float(tol_exact)
    if tol_exact <= 0:
        raise ConfigError("tol_exact must be positive")
    t = float(np.linalg.norm(T))
    if t >= S.radius:
        raise ConfigError(f"|T| = {t:g} must stay below R = {S.radius:g}")

    margin = t + tol_exact
    core = _core_indices(S, margin)
    if len(core) == 0:
        raise WindowTooSmall("no core points survive the |T| margin")
    core_pts = S.points[core]
    m = len(core_pts)

    if m > 64:
        probes = np.unique(np.linspace(0, m - 1, 32).astype(np.intp))
        d, _ = S.tree().query(
            core_pts[probes] + T, k=1,
            distance_upper_bound=tol_exact * (1 + 1e-9),
            workers=query_workers(),
        )
        bad = d > tol_exact
        if bad.any():
            # some offender exists at or before the first bad probe; scan
            # that prefix to return the canonical-order witness
            limit = int(probes[np.argmax(bad)])
            first = _first_failure(S, core_pts[: limit + 1], T, tol_exact)
            if first >= 0:
                return _witness(S, core_pts[first], T)

    first = _first_failure(S, core_pts, T, tol_exact)
    if first >= 0:
        return _witness(S, core_pts[first], T)
    return float(S.radius - margin)


def _witness(S: WindowedSet, point: np.ndarray, T: np.ndarray) -> FailureWitness:
    d, _ = S.tree().query(point + T, k=1)
    return FailureWitness(point=_frozen(point), T=_frozen(T), distance=float(d))
