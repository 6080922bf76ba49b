"""Difference-set analysis: the separation gap and the denseness radius.

Two scalars drive everything downstream. D is the empirical relative
denseness radius (every core point has a neighbour within D). g is the
minimal distance between distinct difference vectors of length at most
D+1; when g stays bounded away from zero the window looks finite-type,
and the working tolerance is set to epsilon = min(1, g)/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ._util import query_workers
from .errors import ConfigError, DegenerateGap, MarginTooLarge, TooFewPoints
from .pointset import TOL_EQ, WindowedSet, _canonical_order


@dataclass(frozen=True)
class DifferenceSet:
    """Distinct vectors a-b with |a-b| <= cutoff, plus realization counts.

    vectors rows are in canonical lexicographic order, closed under
    negation exactly (the mirror of each stored row is stored bit-for-bit),
    and always include the zero vector with multiplicity len(S).
    """

    vectors: np.ndarray
    counts: np.ndarray
    cutoff: float

    def __len__(self) -> int:
        return len(self.vectors)

    def multiplicity(self, v) -> int:
        """Count of ordered pairs (a, b) realizing v, 0 if v not stored."""
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        hit = np.all(np.abs(self.vectors - v) <= TOL_EQ, axis=1)
        idx = np.flatnonzero(hit)
        return int(self.counts[idx[0]]) if len(idx) else 0


def _normalize_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip each row so its first coordinate exceeding tol_eq is positive."""
    out = vecs.copy()
    big = np.abs(out) > TOL_EQ
    has = big.any(axis=1)
    lead = out[np.arange(len(out)), np.argmax(big, axis=1)]
    flip = has & (lead < 0)
    # rows with every |coord| <= tol_eq: fall back to plain sign of the
    # first nonzero coordinate so v and -v still collapse together
    for i in np.flatnonzero(~has):
        nz = np.flatnonzero(out[i])
        if len(nz) and out[i, nz[0]] < 0:
            flip[i] = True
    out[flip] = -out[flip]
    return out


def _group_rows(cells: np.ndarray):
    """Group identical integer rows; (inverse, counts) as np.unique gives.

    lexsort plus a run-length pass; np.unique(axis=0) sorts a byte view of
    the rows and is several times slower at the sizes seen here.
    """
    m = len(cells)
    order = np.lexsort(cells.T)
    sc = cells[order]
    new = np.empty(m, dtype=bool)
    new[0] = True
    np.any(sc[1:] != sc[:-1], axis=1, out=new[1:])
    gid_sorted = np.cumsum(new) - 1
    inverse = np.empty(m, dtype=np.intp)
    inverse[order] = gid_sorted
    counts = np.bincount(gid_sorted)
    return inverse, counts


def difference_vectors(S: WindowedSet, cutoff: float) -> DifferenceSet:
    """All difference vectors of S up to |a-b| <= cutoff, merged at tol_eq.

    Merging is the transitive closure of the tol_eq adjacency relation on
    sign-normalized vectors; each merged class is represented by its first
    enumerated member (class members agree to tol_eq, so the choice only
    moves the representative within the merge tolerance) and counted once
    per unordered pair.
    """
    cutoff = float(cutoff)
    if cutoff <= 0:
        raise ConfigError("cutoff must be positive")

    n = len(S)
    pairs = S.tree().query_pairs(cutoff + TOL_EQ, output_type="ndarray")
    zero = np.zeros((1, S.dim))
    if len(pairs) == 0:
        vecs = zero.copy()
        vecs.flags.writeable = False
        return DifferenceSet(vecs, np.array([n]), cutoff)

    raw = S.points[pairs[:, 0]] - S.points[pairs[:, 1]]
    norm = _normalize_signs(raw)
    m = len(norm)

    # collapse onto a tol_eq grid first: in structured sets one difference
    # vector is realized by thousands of pairs, and a pair query on the raw
    # rows would be quadratic in that multiplicity
    cells = np.round(norm / TOL_EQ).astype(np.int64)
    inverse, cell_count = _group_rows(cells)
    k = len(cell_count)
    first_idx = np.full(k, m, dtype=np.intp)
    np.minimum.at(first_idx, inverse, np.arange(m, dtype=np.intp))
    cell_reps = norm[first_idx]

    # vectors within tol_eq may straddle a cell boundary; merge neighbouring
    # cell representatives (grid diagonal widens the radius slightly)
    merge_r = (1.0 + float(np.sqrt(S.dim))) * TOL_EQ
    close = cKDTree(cell_reps).query_pairs(merge_r, output_type="ndarray")
    if len(close):
        graph = sp.coo_matrix(
            (np.ones(len(close)), (close[:, 0], close[:, 1])), shape=(k, k)
        )
        ncomp, labels = connected_components(graph, directed=False)
    else:
        ncomp, labels = k, np.arange(k)

    comp_count = np.zeros(ncomp, dtype=np.int64)
    np.add.at(comp_count, labels, cell_count)
    rep_order = _canonical_order(cell_reps)
    rep_rank = np.empty(k, dtype=np.intp)
    rep_rank[rep_order] = np.arange(k)
    comp_best = np.full(ncomp, k, dtype=np.intp)
    np.minimum.at(comp_best, labels, rep_rank)
    reps = cell_reps[rep_order[comp_best]]
    mult = comp_count

    vecs = np.concatenate([reps, -reps, zero])
    cnts = np.concatenate([mult, mult, [n]])
    order = _canonical_order(vecs)
    vecs = np.ascontiguousarray(vecs[order])
    vecs.flags.writeable = False
    return DifferenceSet(vecs, cnts[order], cutoff)


def denseness_radius(S: WindowedSet, core_margin: float) -> float:
    """Max nearest-neighbour distance over the core {|a| <= R - margin}.

    Neighbours are drawn from the full window, so trimming by core_margin
    removes only the points whose true nearest neighbour might lie outside
    the window; it never inflates the estimate.
    """
    core_margin = float(core_margin)
    if core_margin < 0:
        raise ConfigError("core_margin must be non-negative")
    if len(S) < 2:
        raise TooFewPoints("denseness radius needs at least 2 points")
    core = S.norms() <= S.radius - core_margin + TOL_EQ
    k = int(core.sum())
    if k == 0:
        raise MarginTooLarge(
            f"core_margin {core_margin:g} empties the window of radius {S.radius:g}"
        )
    if k < 2:
        raise TooFewPoints("core must keep at least 2 points")
    return float(S.nn_distances()[core].max())


@dataclass(frozen=True)
class TypeGapReport:
    """The proof-stage scalars: working tolerance, gap, D, and |A-A| size."""

    epsilon: float
    gap: float
    D: float
    pair_count: int


def finite_type_gap(S: WindowedSet, D: float) -> TypeGapReport:
    """Separation gap of the difference set at cutoff D+1.

    gap = min |u-v| over distinct stored difference vectors; epsilon is
    min(1, gap)/2, which sits strictly inside every bound the downstream
    matching and snapping stages need. A gap at the merge tolerance means
    the difference set is not resolvably discrete and is reported as
    DegenerateGap rather than a number.
    """
    D = float(D)
    if D <= 0:
        raise ConfigError("D must be positive")
    V = difference_vectors(S, D + 1.0)
    if len(V) < 2:
        # only the zero vector: no distinct pair to separate; treat the
        # cutoff itself as the gap floor (no pair closer than the cutoff)
        gap = V.cutoff
    else:
        d, _ = cKDTree(V.vectors).query(V.vectors, k=2, workers=query_workers())
        gap = float(d[:, 1].min())
    if gap <= 2 * TOL_EQ:
        raise DegenerateGap(
            f"difference vectors collide at gap {gap:.3e} <= 2*tol_eq; "
            "window is not finite type at this resolution"
        )
    eps = min(1.0, gap) / 2.0
    return TypeGapReport(epsilon=eps, gap=gap, D=D, pair_count=len(V))
