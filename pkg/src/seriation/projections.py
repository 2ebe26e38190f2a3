"""Projections onto structured sets used by the robust seriation pipeline.

Two projections live here:

* ``project_strong_r``: nearest (entrywise-l1 or Frobenius) matrix whose
  entries weakly decrease moving away from the main diagonal ("strong-R"
  structure: max over diagonal d+1 <= min over diagonal d).  Feasibility is
  encoded by one slack per diagonal: entries on diagonal d must lie in
  [lam_{d+1}, lam_d] with lam nonincreasing and nonnegative.  For a FIXED
  lam the optimal entries are just clamps of S, so the problem reduces to a
  convex separable program in lam under a chain constraint (an isotonic-type
  program with piecewise-linear/-quadratic coordinate losses), solved here by
  exact cyclic coordinate minimization over breakpoints plus joint moves of
  tied blocks (single-coordinate descent alone can stall on a tie, e.g.
  min 2|x-1| + |y| s.t. x <= y starting from (0,0)).

* ``project_sum_nonneg``: Euclidean projection onto {x >= 0, sum x = a},
  the classic sort-and-shift simplex projection with a fixed total.  The
  same point also minimizes the l1 distance over that set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SimilarityMatrix

_INF = float("inf")


# ---------------------------------------------------------------------------
# strong-R structure


def is_strong_r(M, tol=1e-9):
    """True when every diagonal's max is <= the previous diagonal's min + tol."""
    M = _as_dense_sym(M, tol=max(tol, 1e-9))
    n = M.shape[0]
    for d in range(n - 2 + 1):
        if d + 1 >= n:
            break
        if np.diagonal(M, d + 1).max() > np.diagonal(M, d).min() + tol:
            return False
    return True


@dataclass(frozen=True)
class DiagonalBounds:
    """Optional per-diagonal upper bounds b_d on the slack lam_d.

    ``values[d]`` caps lam_d (use inf for unbounded).  Bounds must be
    nonnegative; they are tightened to a nonincreasing envelope internally
    since lam itself is nonincreasing.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError("bounds must be a vector (one entry per diagonal)")
        if np.any(v < 0) or np.any(np.isnan(v)):
            raise ValueError("bounds must be nonnegative")
        object.__setattr__(self, "values", v)

    @classmethod
    def powerlaw(cls, n, gamma):
        """b_0 = 1, b_d = d^-gamma: natural caps when entries decay as a power law."""
        d = np.arange(1, n, dtype=np.float64)
        return cls(np.concatenate([[1.0], d ** (-float(gamma))]))


def _as_dense_sym(M, tol=1e-9):
    if isinstance(M, SimilarityMatrix):
        return M.dense()
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    scale = max(1.0, np.abs(M).max()) if M.size else 1.0
    if np.abs(M - M.T).max() > tol * scale:
        raise ValueError("matrix must be symmetric")
    return 0.5 * (M + M.T)


# --- 1-d convex pieces -----------------------------------------------------
#
# Every coordinate/block subproblem has the form
#     G(t) = sum_a w_a (a - t)_+^p  +  sum_c w_c (t - c)_+^p
# ("a" values pull t up from below-threshold clipping of diagonal d by its
# upper slack; "c" values push t down, from diagonal d-1 clipped by its lower
# slack).  A side is stored as sorted values with cumulative weight /
# weighted-value / weighted-square prefix sums, so G and its (sub)derivative
# at any t cost one binary search.


class _Side:
    __slots__ = ("v", "cw", "cwv", "cwvv")

    def __init__(self, parts):
        # parts: list of (values, weight) with scalar weight per part
        vals = [np.asarray(v, dtype=np.float64) for v, _ in parts if len(v)]
        ws = [np.full(len(v), w, dtype=np.float64) for v, w in parts if len(v)]
        if vals:
            v = np.concatenate(vals)
            w = np.concatenate(ws)
            o = np.argsort(v, kind="stable")
            v, w = v[o], w[o]
        else:
            v = np.empty(0)
            w = np.empty(0)
        self.v = v
        self.cw = np.concatenate([[0.0], np.cumsum(w)])
        self.cwv = np.concatenate([[0.0], np.cumsum(w * v)])
        self.cwvv = np.concatenate([[0.0], np.cumsum(w * v * v)])

    def above(self, t):
        """(W, sum wv, sum wv^2) over values strictly greater than t."""
        i = np.searchsorted(self.v, t, side="right")
        return self.cw[-1] - self.cw[i], self.cwv[-1] - self.cwv[i], self.cwvv[-1] - self.cwvv[i]

    def below_eq(self, t):
        """(W, sum wv, sum wv^2) over values <= t."""
        i = np.searchsorted(self.v, t, side="right")
        return self.cw[i], self.cwv[i], self.cwvv[i]

    def below_strict(self, t):
        i = np.searchsorted(self.v, t, side="left")
        return self.cw[i], self.cwv[i], self.cwvv[i]


_EMPTY_SIDE = _Side([])


def _g_value(side_a, side_c, t, p):
    wa, sva, svva = side_a.above(t)
    wc, svc, svvc = side_c.below_strict(t)
    if p == 1:
        return (sva - t * wa) + (t * wc - svc)
    return (svva - 2.0 * t * sva + t * t * wa) + (t * t * wc - 2.0 * t * svc + svvc)


def _candidates(side_a, side_c, lo, hi):
    pts = np.concatenate([side_a.v, side_c.v])
    pts = pts[(pts > lo) & (pts < hi)]
    return np.unique(np.concatenate([[lo], pts, [hi]]))


def _minimize_l1(side_a, side_c, lo, hi):
    # right-subgradient at t: W_c(c <= t) - W_a(a > t); take the leftmost
    # point where it turns nonnegative (a breakpoint, keeping solutions on
    # data values -- binary inputs then stay binary).
    if lo >= hi:
        return lo
    cands = _candidates(side_a, side_c, lo, hi)
    ia = np.searchsorted(side_a.v, cands, side="right")
    ic = np.searchsorted(side_c.v, cands, side="right")
    slope_right = side_c.cw[ic] - (side_a.cw[-1] - side_a.cw[ia])
    nz = np.nonzero(slope_right >= 0)[0]
    return float(cands[nz[0]]) if nz.size else hi


def _minimize_l2(side_a, side_c, lo, hi):
    # derivative/2: t*(W_a_above + W_c_below) - (SV_a_above + SV_c_below),
    # continuous and nondecreasing; root by segment search.
    if lo >= hi:
        return lo

    def deriv(t):
        wa, sva, _ = side_a.above(t)
        wc, svc, _ = side_c.below_strict(t)
        return t * (wa + wc) - (sva + svc)

    if deriv(lo) >= 0:
        return lo
    if deriv(hi) <= 0:
        return hi
    cands = _candidates(side_a, side_c, lo, hi)
    ia = np.searchsorted(side_a.v, cands, side="right")
    ic = np.searchsorted(side_c.v, cands, side="right")
    wa = side_a.cw[-1] - side_a.cw[ia]
    sva = side_a.cwv[-1] - side_a.cwv[ia]
    wc, svc = side_c.cw[ic], side_c.cwv[ic]
    dv = cands * (wa + wc) - (sva + svc)
    k = int(np.searchsorted(dv >= 0, True))  # first candidate with deriv >= 0
    if dv[k] == 0 or k == 0:
        return float(cands[k])
    # root inside (cands[k-1], cands[k]); side counts are constant on the open
    # segment and equal the counts just right of cands[k-1]
    iseg = np.searchsorted(side_c.v, cands[k - 1], side="right")
    wc_seg, svc_seg = side_c.cw[iseg], side_c.cwv[iseg]
    denom = wa[k - 1] + wc_seg
    if denom <= 0:
        return float(cands[k])
    t = (sva[k - 1] + svc_seg) / denom
    return float(min(max(t, cands[k - 1]), cands[k]))


def _minimize_1d(side_a, side_c, lo, hi, p):
    if side_a.v.size == 0 and side_c.v.size == 0:
        return None
    if p == 1:
        return _minimize_l1(side_a, side_c, lo, hi)
    return _minimize_l2(side_a, side_c, lo, hi)


# --- the projection itself --------------------------------------------------


def project_strong_r(S, norm="l1", bounds=None, tol=1e-10, max_sweeps=None):
    """Nearest strong-R matrix to symmetric nonnegative S (l1 or l2 norm).

    Distances are entrywise over the full matrix (off-diagonal entries weigh
    twice, once per triangle).  ``bounds`` optionally caps the per-diagonal
    slacks (see DiagonalBounds); the main-diagonal slack is always capped at
    max(S).  Returns the projected dense matrix.
    """
    if norm not in ("l1", "l2"):
        raise ValueError("norm must be 'l1' or 'l2'")
    p = 1 if norm == "l1" else 2
    S = _as_dense_sym(S)
    n = S.shape[0]
    if n == 0:
        return S.copy()
    smax = float(S.max()) if S.size else 0.0
    if S.min() < 0:
        raise ValueError("matrix entries must be nonnegative")

    diag_vals = [np.sort(np.diagonal(S, d)) for d in range(n)]
    weight = [1.0] + [2.0] * (n - 1)

    b = np.full(n, _INF)
    if bounds is not None:
        if not isinstance(bounds, DiagonalBounds):
            bounds = DiagonalBounds(np.asarray(bounds, dtype=np.float64))
        if bounds.values.shape[0] != n:
            raise ValueError(f"bounds must have length {n}")
        b = bounds.values.copy()
    b[0] = min(b[0], smax)
    b = np.minimum.accumulate(b)  # lam is nonincreasing anyway

    side_a = [_Side([(diag_vals[k], weight[k])]) for k in range(n)]
    side_c = [_EMPTY_SIDE] + [_Side([(diag_vals[k - 1], weight[k - 1])]) for k in range(1, n)]

    lam = b.copy()
    lam[~np.isfinite(lam)] = smax
    lam = np.minimum.accumulate(lam)

    max_sweeps = max_sweeps if max_sweeps is not None else 10 * n
    scale = max(1.0, smax)

    def block_pass():
        """Joint moves of tied runs; returns True if something improved.

        At a tie, the feasible directions that single coordinates cannot
        realize are raising a PREFIX of the run or lowering a SUFFIX (interior
        members are pinned between equal neighbors), so those are exactly the
        moves tried.
        """
        moved = False
        k = 0
        while k < n:
            j = k
            while j + 1 < n and lam[j + 1] == lam[k]:
                j += 1
            if j > k:
                cur = lam[k]
                # prefix raises
                for m in range(k, j + 1):
                    hi = b[m] if k == 0 else min(b[m], lam[k - 1])
                    if hi <= cur:
                        continue
                    pa = _Side([(diag_vals[q], weight[q]) for q in range(k, m + 1)])
                    pc = _Side([(diag_vals[q - 1], weight[q - 1]) for q in range(max(k, 1), m + 1)])
                    t = _minimize_1d(pa, pc, cur, hi, p)
                    if t is not None and t > cur:
                        old = _g_value(pa, pc, cur, p)
                        new = _g_value(pa, pc, t, p)
                        if new < old - 1e-12 * (1.0 + old):
                            lam[k : m + 1] = t
                            moved = True
                            break
                else:
                    # suffix lowers
                    for m in range(k, j + 1):
                        lo = lam[j + 1] if j + 1 < n else 0.0
                        if lo >= cur:
                            continue
                        pa = _Side([(diag_vals[q], weight[q]) for q in range(m, j + 1)])
                        pc = _Side([(diag_vals[q - 1], weight[q - 1]) for q in range(max(m, 1), j + 1)])
                        t = _minimize_1d(pa, pc, lo, cur, p)
                        if t is not None and t < cur:
                            old = _g_value(pa, pc, cur, p)
                            new = _g_value(pa, pc, t, p)
                            if new < old - 1e-12 * (1.0 + old):
                                lam[m : j + 1] = t
                                moved = True
                                break
            k = j + 1
        return moved

    guard = 0
    while guard < max_sweeps:
        guard += 1
        biggest = 0.0
        for k in range(n):
            lo = lam[k + 1] if k + 1 < n else 0.0
            hi = b[k] if k == 0 else min(b[k], lam[k - 1])
            t = _minimize_1d(side_a[k], side_c[k], lo, hi, p)
            if t is None:
                continue
            t = min(max(t, lo), hi)
            biggest = max(biggest, abs(t - lam[k]))
            lam[k] = t
        if biggest <= tol * scale:
            if not block_pass():
                break

    R = np.zeros_like(S)
    idx = np.arange(n)
    for d in range(n):
        lo = lam[d + 1] if d + 1 < n else 0.0
        vals = np.clip(np.diagonal(S, d), lo, lam[d])
        R[idx[: n - d], idx[: n - d] + d] = vals
        if d:
            R[idx[: n - d] + d, idx[: n - d]] = vals
    return R


def dist_to_strong_r(M):
    """Frobenius distance from M to its nearest strong-R matrix."""
    M = _as_dense_sym(M)
    R = project_strong_r(M, norm="l2")
    return float(np.linalg.norm(M - R))


# ---------------------------------------------------------------------------
# fixed-sum nonnegative projection


def project_sum_nonneg(s, a):
    """Euclidean projection of s onto {x >= 0, sum(x) = a} (a >= 0).

    Sort descending, then shift the largest k entries by a common constant
    chosen so the prefix sums to ``a``, growing k until the shifted candidate
    would dip below zero; remaining entries are zeroed.  The first candidate
    equals ``a`` >= 0, so k >= 1 always.  The same x also minimizes the l1
    distance to s over the constraint set.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1:
        raise ValueError("s must be a vector")
    if not np.all(np.isfinite(s)):
        raise ValueError("s must be finite")
    a = float(a)
    if not np.isfinite(a) or a < 0:
        raise ValueError("target sum a must be nonnegative and finite")
    m = s.shape[0]
    if m == 0:
        if a != 0.0:
            raise ValueError("cannot reach a positive sum with zero entries")
        return s.copy()
    order = np.argsort(-s, kind="stable")
    sd = s[order]
    csum = np.cumsum(sd)
    cand = sd + (a - csum) / np.arange(1.0, m + 1.0)
    neg = np.nonzero(cand < 0)[0]
    k = int(neg[0]) if neg.size else m
    # k == 0 cannot happen: cand[0] == a >= 0
    shift = (a - csum[k - 1]) / k
    out_sorted = np.concatenate([sd[:k] + shift, np.zeros(m - k)])
    x = np.empty_like(s)
    x[order] = out_sorted
    return x
