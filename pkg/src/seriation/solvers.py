"""Robust ordering solvers.

Four families, all returning a SolverReport:

* ``eta_spectral``: iteratively reweighted spectral ordering.  The Huber
  penalty has the variational form delta * min_{eta >= delta} (x^2/eta + eta)
  - delta^2, so alternating (a) spectral ordering of the entrywise-reweighted
  matrix A./eta and (b) the closed-form update eta* = max(|gap|, delta) is a
  majorize-minimize scheme for the Huber seriation loss.  Large-gap entries
  get down-weighted, which is what strips out-of-band noise.

* ``ubi``: unconstrained smooth relaxation over the sum-zero hyperplane with
  an iteratively re-biased sigmoid attraction term that steers the relaxed
  point toward (a neighborhood of) the previous permutation instead of the
  constant center.

* ``faq``: Frank-Wolfe over the doubly stochastic polytope for the QAP
  formulation trace(A P B P^T) with a Toeplitz target B, started at the
  barycenter, rounded by linear assignment.

* ``fwtb``: away-step Frank-Wolfe directly over permutation vectors.  The
  hull of all permutations needs a symmetry break (the objective is
  flip-invariant, so the center is a useless stationary point); the linear
  minimization oracle ``lmo_tiebreak`` therefore optimizes over the face
  where element i precedes element j.  The naive pick (i, j) = (0, n-1) can
  anchor two arbitrary elements to opposite ends and wreck the ordering --
  kept, with its documented failure, alongside the spectral-informed pick.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .core import (
    Huber,
    Permutation,
    R2Sum,
    SimilarityMatrix,
    TwoSum,
    as_permutation,
    as_similarity_matrix,
    estimate_bandwidth,
    huber,
    linear_assignment,
    loss,
)
from .report import SolverReport
from .spectral import fiedler_vector, spectral_order

__all__ = [
    "eta_spectral",
    "ubi",
    "faq",
    "fwtb",
    "lmo_tiebreak",
    "HyperplaneBasis",
    "TwoSumB",
    "TruncatedB",
    "HuberB",
    "toeplitz_b",
]


# ---------------------------------------------------------------------------
# eta-spectral


def eta_spectral(A, delta=None, t_outer=20, gamma=0.5, tol=1e-8, max_iter=None):
    """Iteratively reweighted spectral ordering for the Huber seriation loss.

    Iteration 0 uses eta = delta * ones, i.e. plain spectral ordering; each
    round then relaxes eta toward max(|position gap|, delta) with memory
    ``gamma``.  Every iterate is scored with the Huber loss on the ORIGINAL
    matrix and the best one is returned (the alternation is not monotone
    through the spectral step, so we keep the best rather than the last).
    """
    t0 = time.perf_counter()
    A = as_similarity_matrix(A)
    if delta is None:
        delta = estimate_bandwidth(A).delta_hat
    delta = float(delta)
    if not delta > 0:
        raise ValueError("delta must be positive")
    if t_outer < 0:
        raise ValueError("t_outer must be >= 0")
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    kind = Huber(delta)
    eta = np.full(A.n_stored, delta)
    best_perm, best_obj = None, np.inf
    trace = []
    for t in range(t_outer + 1):
        At = SimilarityMatrix(A.n, A.row, A.col, A.val / eta, _skip_checks=True)
        _, x = fiedler_vector(At, tol=tol, max_iter=max_iter)
        perm = Permutation.from_order(np.argsort(x, kind="stable"))
        obj = loss(A, perm, kind)
        trace.append((t, obj))
        if obj < best_obj:
            best_perm, best_obj = perm, obj
        if t == t_outer:
            break
        pos = perm.positions
        gaps = np.abs(pos[A.row] - pos[A.col]).astype(np.float64)
        eta = gamma * eta + (1.0 - gamma) * np.maximum(gaps, delta)
    return SolverReport(
        permutation=best_perm,
        objective=best_obj,
        loss_kind=kind,
        iterations=len(trace),
        elapsed=time.perf_counter() - t0,
        trace=trace,
    )


# ---------------------------------------------------------------------------
# smooth losses on relaxed position vectors


def _smooth_loss_grad(rows, cols, vals, n, x, kind):
    """Value and gradient of the (ordered double-sum) loss at relaxed x."""
    d = x[rows] - x[cols]
    if isinstance(kind, TwoSum):
        f = 2.0 * float(np.dot(vals, d * d))
        coeff = 4.0 * vals * d
    elif isinstance(kind, Huber):
        f = 2.0 * float(np.dot(vals, huber(d, kind.delta)))
        hprime = np.where(np.abs(d) <= kind.delta, 2.0 * d,
                          2.0 * kind.delta * np.sign(d))
        coeff = 2.0 * vals * hprime
    else:
        raise TypeError("smooth relaxation needs TwoSum or Huber loss")
    g = np.bincount(rows, weights=coeff, minlength=n) - np.bincount(
        cols, weights=coeff, minlength=n
    )
    return f, g


class HyperplaneBasis:
    """Orthonormal basis U of {x in R^n : sum(x) = 0}, applied by cumsums.

    Column m (m = 1..n-1) is (0,...,0, -m, 1,...,1)/sqrt(m(m+1)) with the -m
    at index n-m-1 followed by exactly m ones.  U^T U = I and 1^T U = 0, so
    any relaxed position vector decomposes as x = U y + c with c the constant
    center.  Matvecs are O(n); nothing dense is formed.
    """

    def __init__(self, n):
        if n < 2:
            raise ValueError("basis needs n >= 2")
        self.n = int(n)
        m = np.arange(1.0, n)
        self._norms = np.sqrt(m * (m + 1.0))
        self._m = m

    @property
    def shape(self):
        return (self.n, self.n - 1)

    def matvec(self, y):
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.n - 1,):
            raise ValueError(f"y must have length {self.n - 1}")
        coef = y / self._norms  # coef[j] multiplies column m = j+1
        suf = np.concatenate([np.cumsum(coef[::-1])[::-1], [0.0]])
        i = np.arange(self.n)
        # ones part: columns with m >= n-i contribute coef_m (empty sum at i=0)
        x = suf[self.n - 1 - i]
        # spike part: column m = n-1-i puts -m at index i
        x[: self.n - 1] -= (self.n - 1 - i[: self.n - 1]) * coef[::-1]
        return x

    def rmatvec(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise ValueError(f"x must have length {self.n}")
        sufx = np.concatenate([np.cumsum(x[::-1])[::-1], [0.0]])
        m = self._m.astype(np.int64)
        out = (-self._m * x[self.n - m - 1] + sufx[self.n - m]) / self._norms
        return out

    def dense(self):
        U = np.zeros((self.n, self.n - 1))
        for j in range(self.n - 1):
            m = j + 1
            U[self.n - m - 1, j] = -m
            U[self.n - m :, j] = 1.0
            U[:, j] /= self._norms[j]
        return U


def ubi(
    A,
    kind=None,
    t_outer=10,
    mu=None,
    lam_sig=None,
    memory=10,
    gtol=1e-6,
    max_inner=500,
    init=None,
    tol=1e-8,
):
    """Unconstrained relaxation with iterative re-biasing.

    Each round minimizes, over y in R^{n-1} (x = U y + c, c the center),

        smooth_loss(x) - mu * sigmoid(lam_sig * (x - c)^T (w - c))

    by L-BFGS, where w is the previous round's permutation (positions).  The
    sigmoid term pays for drifting toward the flip/center symmetry point; by
    default lam_sig = 1/||w - c||^2 (so the sigmoid argument is ~1 at the
    bias point) and mu is 32x the loss at the bias, large enough that the
    minimizer settles near permutation scale instead of collapsing toward
    the center -- with the scale-free sigmoid, quality is flat in mu over
    roughly a factor-of-four range around this default.  The bias starts at
    the spectral ordering and is re-set to each round's sorted minimizer;
    rounds stop early on a fixed point.  A line-search failure inside
    L-BFGS aborts the remaining rounds and the best permutation so far is
    returned with a warning.
    """
    t0 = time.perf_counter()
    A = as_similarity_matrix(A)
    n = A.n
    if kind is None:
        kind = Huber(float(estimate_bandwidth(A).delta_hat))
    if isinstance(kind, R2Sum):
        raise ValueError("truncated loss is not smooth; use TwoSum or Huber")
    if mu is not None and mu < 0:
        raise ValueError("mu must be nonnegative")
    off = A.row != A.col
    rows, cols, vals = A.row[off], A.col[off], A.val[off]
    U = HyperplaneBasis(n)
    center = 0.5 * (n - 1.0)

    if init is not None:
        bias = as_permutation(init, n)
    else:
        bias = spectral_order(A, tol=tol).permutation
    best_perm = bias
    best_obj = loss(A, bias, kind)
    trace = [(0, best_obj)]
    warns = ()

    for t in range(1, t_outer + 1):
        w = bias.positions.astype(np.float64)
        wc = w - center
        mu_t = float(mu) if mu is not None else 32.0 * loss(A, bias, kind)
        ls = float(lam_sig) if lam_sig is not None else 1.0 / float(wc @ wc)

        def fg(y):
            x = U.matvec(y) + center
            f, gx = _smooth_loss_grad(rows, cols, vals, n, x, kind)
            z = ls * float((x - center) @ wc)
            sig = float(expit(z))
            f -= mu_t * sig
            gx = gx - (mu_t * sig * (1.0 - sig) * ls) * wc
            return f, U.rmatvec(gx)

        res = minimize(
            fg,
            U.rmatvec(wc),
            jac=True,
            method="L-BFGS-B",
            options=dict(maxcor=memory, maxiter=max_inner, ftol=1e-13, gtol=gtol),
        )
        if res.status == 2:
            warns += (f"round {t}: inner solver aborted ({res.message})",)
            break
        x = U.matvec(res.x) + center
        perm = Permutation.from_order(np.argsort(x, kind="stable"))
        obj = loss(A, perm, kind)
        trace.append((t, obj))
        if obj < best_obj:
            best_perm, best_obj = perm, obj
        if perm == bias:
            break
        bias = perm

    return SolverReport(
        permutation=best_perm,
        objective=best_obj,
        loss_kind=kind,
        iterations=len(trace) - 1,
        elapsed=time.perf_counter() - t0,
        trace=trace,
        warnings=warns,
    )


# ---------------------------------------------------------------------------
# FAQ: Frank-Wolfe over doubly stochastic matrices


@dataclass(frozen=True)
class TwoSumB:
    pass


@dataclass(frozen=True)
class TruncatedB:
    lam: float


@dataclass(frozen=True)
class HuberB:
    delta: float


QapKind = TwoSumB | TruncatedB | HuberB


def toeplitz_b(n, kind):
    """Toeplitz distance-target B for the QAP form of each seriation loss."""
    d = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).astype(np.float64)
    if isinstance(kind, TwoSumB):
        return d * d
    if isinstance(kind, TruncatedB):
        return np.minimum(float(kind.lam), d * d)
    if isinstance(kind, HuberB):
        return huber(d, float(kind.delta))
    raise TypeError(f"unknown QAP kind: {kind!r}")


def _loss_kind_of(kind):
    if isinstance(kind, TwoSumB):
        return TwoSum()
    if isinstance(kind, TruncatedB):
        return R2Sum(float(kind.lam))
    return Huber(float(kind.delta))


def _faq_once(Ad, B, max_iter, tol):
    """One Frank-Wolfe pass from the barycenter.

    Returns (positions, trace, iters, ds_err) where ds_err is the worst
    row/column-sum deviation from 1 seen over all iterates (the path must
    stay doubly stochastic; convex combinations of permutation matrices
    only drift by accumulated rounding).
    """
    n = Ad.shape[0]
    P = np.full((n, n), 1.0 / n)
    rng_idx = np.arange(n)

    def ds_deviation(M):
        return max(
            float(np.abs(M.sum(axis=0) - 1.0).max()),
            float(np.abs(M.sum(axis=1) - 1.0).max()),
        )

    ds_err = ds_deviation(P)
    APB = Ad @ P @ B
    f = float(np.sum(APB * P))
    trace = [(0, f)]
    iterations = 0
    for it in range(1, max_iter + 1):
        iterations = it
        G = 2.0 * APB
        vertex, _ = linear_assignment(G, sense="min")
        gap = float(np.sum(G * P)) - float(G[rng_idx, vertex.positions].sum())
        if gap <= tol * (1.0 + abs(f)):
            iterations = it - 1
            break
        D = -P.copy()
        D[rng_idx, vertex.positions] += 1.0
        ADB = Ad @ D @ B
        a = float(np.sum(ADB * D))
        b = 2.0 * float(np.sum(ADB * P))
        step = 1.0 if a <= 0 else min(1.0, max(0.0, -b / (2.0 * a)))
        if step == 0.0:
            iterations = it - 1
            break
        P = P + step * D
        ds_err = max(ds_err, ds_deviation(P))
        APB = Ad @ P @ B
        f = float(np.sum(APB * P))
        trace.append((it, f))

    perm, _ = linear_assignment(-P, sense="min")
    return perm.positions, trace, iterations, ds_err


def faq(A, kind=TwoSumB(), max_iter=100, tol=1e-8, restarts=5, seed=0):
    """Frank-Wolfe QAP solver, barycenter start, LAP rounding.

    Minimizes trace(A P B P^T) over doubly stochastic P.  Per step the
    gradient is 2 A P B (A, B symmetric), the linear minimization oracle is a
    linear assignment on it, and the step size has the closed form of a 1-d
    quadratic: with D the direction, a = trace(A D B D^T),
    b = 2 trace(A D B P^T), take clamp(-b/2a, 0, 1) or the far endpoint when
    a <= 0.  Stops when the Frank-Wolfe gap is small; the final P is rounded
    to the permutation with maximal inner product.

    At the exact barycenter the first gradient is rank-one, so the first
    assignment step is degenerate: huge tie classes whose resolution decides
    the basin the whole run descends into, and some resolutions land on
    locally-stable but badly scrambled orders.  The standard remedy is to
    randomize the tie-breaking, here done deterministically: the solve is
    repeated under `restarts` seeded relabelings of the input (the barycenter
    itself is relabeling-invariant), each answer is mapped back to the
    original labels, and the permutation with the best rounded objective
    wins.  Restart 0 always uses the identity relabeling, so ``restarts=1``
    is the single plain pass.  Fixed `seed` keeps the result bit-reproducible.
    """
    t0 = time.perf_counter()
    A = as_similarity_matrix(A)
    n = A.n
    Ad = A.dense()
    B = toeplitz_b(n, kind)
    lk = _loss_kind_of(kind)

    best = None  # (objective, positions, trace, iterations, restart_idx)
    restart_info = []
    ds_err = 0.0
    for r in range(max(1, int(restarts))):
        if r == 0:
            sigma = np.arange(n)
            A_r = Ad
        else:
            ss = np.random.SeedSequence(seed, spawn_key=(r,))
            sigma = np.random.Generator(np.random.PCG64(ss)).permutation(n)
            A_r = np.empty_like(Ad)
            A_r[np.ix_(sigma, sigma)] = Ad
        pos_r, trace_r, iters_r, ds_r = _faq_once(A_r, B, max_iter, tol)
        ds_err = max(ds_err, ds_r)
        perm_r = Permutation(pos_r[sigma])
        obj_r = loss(A, perm_r, lk)
        restart_info.append((r, iters_r, obj_r))
        if best is None or obj_r < best[0]:
            best = (obj_r, perm_r, trace_r, iters_r, r)

    obj, perm, trace, iterations, _ = best
    return SolverReport(
        permutation=perm,
        objective=obj,
        loss_kind=lk,
        iterations=iterations,
        elapsed=time.perf_counter() - t0,
        trace={"relaxed": trace, "restarts": restart_info, "ds_err": ds_err},
    )


# ---------------------------------------------------------------------------
# FWTB: away-step Frank-Wolfe over permutation vectors with a tie break


def lmo_tiebreak(g, pair):
    """Minimize g . pos over position vectors with pos[i] + 1 <= pos[j].

    Unconstrained, the minimizer sorts g descending (largest coefficient gets
    position 0; ties by ascending index).  If that violates the precedence of
    the tie-break pair, the constraint binds as pos[i] = K, pos[j] = K + 1:
    scanning K, the objective difference between consecutive K is
    2*g_rest[K] - (g_i + g_j), so the optimum is the first K where the
    remaining coefficient drops to (g_i + g_j)/2 or below (ties resolved to
    the smallest K); the remaining elements fill the remaining positions in
    descending order of g.  Returns (Permutation, objective value).
    """
    g = np.asarray(g, dtype=np.float64)
    n = g.shape[0]
    i, j = pair
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise ValueError("tie-break pair must be two distinct element indices")
    order_desc = np.lexsort((np.arange(n), -g))
    pos = np.empty(n, dtype=np.int64)
    pos[order_desc] = np.arange(n)
    if pos[i] + 1 <= pos[j]:
        return Permutation(pos), float(g @ pos)
    rest = order_desc[(order_desc != i) & (order_desc != j)]
    mean = 0.5 * (g[i] + g[j])
    hit = np.nonzero(g[rest] <= mean)[0]
    k_star = int(hit[0]) if hit.size else n - 2
    pos = np.empty(n, dtype=np.int64)
    pos[i] = k_star
    pos[j] = k_star + 1
    slots = np.concatenate([np.arange(k_star), np.arange(k_star + 2, n)])
    pos[rest] = slots
    return Permutation(pos), float(g @ pos)


def _huber_dir_derivative(vals, base, dd, delta, gam):
    r = base + gam * dd
    hp = np.where(np.abs(r) <= delta, 2.0 * r, 2.0 * delta * np.sign(r))
    return 2.0 * float(np.dot(vals, hp * dd))


def _line_search(rows, cols, vals, x, d, kind, gmax):
    """Exact minimizer of the smooth loss along x + gamma d on [0, gmax]."""
    base = x[rows] - x[cols]
    dd = d[rows] - d[cols]
    if isinstance(kind, TwoSum):
        a = 2.0 * float(np.dot(vals, dd * dd))
        b = 4.0 * float(np.dot(vals, base * dd))
        if a <= 0:
            return gmax if b < 0 else 0.0
        return min(gmax, max(0.0, -b / (2.0 * a)))
    # Huber: convex piecewise quadratic; bisect the nondecreasing derivative
    delta = kind.delta
    lo, hi = 0.0, gmax
    dlo = _huber_dir_derivative(vals, base, dd, delta, lo)
    if dlo >= 0:
        return 0.0
    dhi = _huber_dir_derivative(vals, base, dd, delta, hi)
    if dhi <= 0:
        return gmax
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _huber_dir_derivative(vals, base, dd, delta, mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fwtb(A, kind=None, tiebreak="naive", max_iter=1000, tol=1e-7, drop_tol=1e-12):
    """Away-step Frank-Wolfe over the hull of tie-broken permutation vectors.

    ``tiebreak`` picks the precedence pair (i, j):
      * "naive": (0, n-1) — cheap and order-agnostic, but anchoring two
        arbitrary elements to far ends is exactly wrong when they are
        similar, and recovery quality collapses on noisy instances;
      * "spectral": i/j = first/last element of the spectral ordering, so
        the anchored pair really belongs at opposite ends;
      * an explicit (i, j) tuple.

    Maintains the active vertex set for away steps; the relaxed iterate is
    finally rounded by sorting.  Trace records the relaxed objective, which
    exact line search makes nonincreasing.
    """
    t0 = time.perf_counter()
    A = as_similarity_matrix(A)
    n = A.n
    if kind is None:
        kind = TwoSum()
    if not isinstance(kind, (TwoSum, Huber)):
        raise ValueError("fwtb supports TwoSum or Huber losses")
    off = A.row != A.col
    rows, cols, vals = A.row[off], A.col[off], A.val[off]

    if tiebreak == "naive":
        pair = (0, n - 1)
    elif tiebreak == "spectral":
        sp = spectral_order(A).permutation
        pair = (int(sp.order[0]), int(sp.order[-1]))
    else:
        pair = (int(tiebreak[0]), int(tiebreak[1]))

    start, _ = lmo_tiebreak(np.zeros(n), pair)
    active = {start: 1.0}
    x = start.positions.astype(np.float64)
    f, _ = _smooth_loss_grad(rows, cols, vals, n, x, kind)
    trace = [(0, f)]
    iterations = 0

    for it in range(1, max_iter + 1):
        iterations = it
        f, gx = _smooth_loss_grad(rows, cols, vals, n, x, kind)
        s_perm, _ = lmo_tiebreak(gx, pair)
        s = s_perm.positions.astype(np.float64)
        gap_fw = float(gx @ (x - s))
        if gap_fw <= tol * (1.0 + abs(f)):
            iterations = it - 1
            break
        away_perm, away_val = None, -np.inf
        for p in active:
            v = float(gx @ p.positions)
            if v > away_val:
                away_perm, away_val = p, v
        gap_away = away_val - float(gx @ x)
        if gap_fw >= gap_away:
            d = s - x
            gmax = 1.0
            gam = _line_search(rows, cols, vals, x, d, kind, gmax)
            for p in list(active):
                active[p] *= 1.0 - gam
            active[s_perm] = active.get(s_perm, 0.0) + gam
        else:
            alpha = active[away_perm]
            gmax = alpha / (1.0 - alpha)
            d = x - away_perm.positions.astype(np.float64)
            gam = _line_search(rows, cols, vals, x, d, kind, gmax)
            for p in list(active):
                active[p] *= 1.0 + gam
            active[away_perm] -= gam
        # prune and renormalize
        for p in [p for p, wgt in active.items() if wgt <= drop_tol]:
            del active[p]
        total = sum(active.values())
        x = np.zeros(n)
        for p, wgt in active.items():
            wgt /= total
            active[p] = wgt
            x += wgt * p.positions
        fnew, _ = _smooth_loss_grad(rows, cols, vals, n, x, kind)
        trace.append((it, fnew))

    perm = Permutation.from_order(np.argsort(x, kind="stable"))
    obj = loss(A, perm, kind)
    return SolverReport(
        permutation=perm,
        objective=obj,
        loss_kind=kind,
        iterations=iterations,
        elapsed=time.perf_counter() - t0,
        trace=trace,
    )
