"""Shared helpers: small brute-force oracles used across test modules."""

import itertools

import numpy as np

import seriation as sr


def rand_sym_nonneg(rng, n, density=1.0):
    """Random dense symmetric nonnegative matrix with zero-able entries."""
    M = rng.random((n, n))
    if density < 1.0:
        M[rng.random((n, n)) > density] = 0.0
    M = 0.5 * (M + M.T)
    return M


def penalty(kind, d):
    d = np.abs(np.asarray(d, dtype=np.float64))
    if isinstance(kind, sr.TwoSum):
        return d**2
    if isinstance(kind, sr.R2Sum):
        return np.minimum(d**2, kind.lam)
    if isinstance(kind, sr.Huber):
        dd = kind.delta
        return np.where(d <= dd, d**2, dd * (2.0 * d - dd))
    raise TypeError(kind)


def brute_loss(Ad, positions, kind):
    """Ordered double sum: every (i, j), i != j, counted once per direction."""
    n = Ad.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                total += Ad[i, j] * penalty(kind, positions[i] - positions[j])
    return total


def brute_kendall(pos1, pos2):
    """Concordant-minus-discordant over all pairs, divided by the pair count."""
    n = len(pos1)
    num = 0
    for i, j in itertools.combinations(range(n), 2):
        s1 = np.sign(pos1[i] - pos1[j])
        s2 = np.sign(pos2[i] - pos2[j])
        num += int(s1 * s2)
    return num / (n * (n - 1) / 2)


def brute_lap(C, sense="min"):
    """Exhaustive linear assignment for tiny C."""
    n = C.shape[0]
    best_val, best_pos = None, None
    for per in itertools.permutations(range(n)):
        v = sum(C[i, per[i]] for i in range(n))
        if best_val is None or (v < best_val if sense == "min" else v > best_val):
            best_val, best_pos = v, per
    return np.array(best_pos), best_val


def all_position_vectors(n):
    for per in itertools.permutations(range(n)):
        yield np.array(per)


# ---------------------------------------------------------------------------
# independent oracles for the structured projections
#
# The strong-R projection reduces to choosing one slack per diagonal offset,
# nonincreasing, entries on offset d clamped into [lam_{d+1}, lam_d].  The
# oracle below minimizes that objective by dynamic programming over candidate
# grids per offset (the chain constraint couples only neighbors).  For the l1
# norm an optimal slack vector exists with every coordinate on the breakpoint
# grid {0, entry values, caps}, so the DP is exact; for l2 the grid is
# refined around the incumbent until the spacing is ~1e-8.


def _dp_lambda(diag, w, grids, p):
    n = len(diag)
    V_next = None
    args = [None] * n
    for d in range(n - 1, -1, -1):
        g = grids[d]
        e = diag[d]
        up = np.maximum(e[None, :] - g[:, None], 0.0)
        up = w[d] * ((up if p == 1 else up**2).sum(axis=1))
        if d == n - 1:
            dn = np.maximum(0.0 - e, 0.0)  # lam_n == 0
            V = up + w[d] * float((dn if p == 1 else dn**2).sum())
            args[d] = None
        else:
            g1 = grids[d + 1]
            dn = np.maximum(g1[:, None] - e[None, :], 0.0)
            dn = w[d] * ((dn if p == 1 else dn**2).sum(axis=1))
            T = dn[None, :] + V_next[None, :]  # (1, J)
            T = np.broadcast_to(T, (len(g), len(g1))).copy()
            jmax = np.searchsorted(g1, g, side="right") - 1
            T[np.arange(len(g1))[None, :] > jmax[:, None]] = np.inf
            best_j = np.argmin(T, axis=1)
            V = up + T[np.arange(len(g)), best_j]
            args[d] = best_j
        V_next = V
    k = int(np.argmin(V_next))
    lam = np.empty(n)
    lam[0] = grids[0][k]
    for d in range(1, n):
        k = int(args[d - 1][k])
        lam[d] = grids[d][k]
    return float(V_next.min()), lam


def _clamp_matrix(S, lam):
    n = S.shape[0]
    R = np.zeros_like(S)
    idx = np.arange(n)
    for d in range(n):
        lo = lam[d + 1] if d + 1 < n else 0.0
        vals = np.clip(np.diagonal(S, d), lo, lam[d])
        R[idx[: n - d], idx[: n - d] + d] = vals
        if d:
            R[idx[: n - d] + d, idx[: n - d]] = vals
    return R


def oracle_strong_r(S, norm, bounds=None):
    """Breakpoint-grid DP oracle; returns (distance, R)."""
    S = np.asarray(S, dtype=np.float64)
    n = S.shape[0]
    p = 1 if norm == "l1" else 2
    smax = float(S.max()) if S.size else 0.0
    cap = np.full(n, np.inf)
    if bounds is not None:
        cap = np.asarray(bounds, dtype=np.float64).copy()
    cap[0] = min(cap[0], smax)
    cap = np.minimum.accumulate(cap)
    diag = [np.diagonal(S, d) for d in range(n)]
    w = [1.0] + [2.0] * (n - 1)

    base = np.unique(np.concatenate([[0.0], S.ravel(), cap[np.isfinite(cap)]]))
    grids = [base[base <= cap[d] + 1e-15] for d in range(n)]
    grids = [np.unique(np.concatenate([g, [0.0]])) for g in grids]
    obj, lam = _dp_lambda(diag, w, grids, p)
    if p == 2:
        for _ in range(10):
            new_grids = []
            for d in range(n):
                g = grids[d]
                i = int(np.searchsorted(g, lam[d]))
                lo = g[max(i - 2, 0)]
                hi = g[min(i + 2, len(g) - 1)]
                loc = np.linspace(lo, hi, 41)
                loc = loc[(loc >= 0.0) & (loc <= cap[d] + 1e-15)]
                new_grids.append(np.unique(np.concatenate([loc, [0.0, lam[d]]])))
            grids = new_grids
            obj, lam = _dp_lambda(diag, w, grids, p)
    R = _clamp_matrix(S, lam)
    dist = np.abs(S - R).sum() if p == 1 else float(np.linalg.norm(S - R)) ** 2
    return dist, R


def oracle_sum_nonneg(s, a, iters=200):
    """Bisection on the shift multiplier for the fixed-sum simplex projection."""
    s = np.asarray(s, dtype=np.float64)
    m = len(s)
    lo = float(s.min()) - a / max(m, 1) - 1.0
    hi = float(s.max())
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.maximum(s - mid, 0.0).sum() > a:
            lo = mid
        else:
            hi = mid
    return np.maximum(s - hi, 0.0)
