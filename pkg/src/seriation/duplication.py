"""Seriation with duplications.

The observed n x n matrix A aggregates an unknown N x N strong-R matrix S
through an assignment of N fragments into n bins with known multiplicities c:
A_ij is the sum of S over the block L_i x L_j of fragment positions.  The
solver alternates between (a) reordering the current S estimate toward
strong-R form (inner seriation solver + projection onto the strong-R cone)
and (b) restoring the aggregation constraints exactly (independent
sum-and-nonnegativity projections per block), carrying the bin assignment
along with every reordering.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Permutation,
    as_similarity_matrix,
    estimate_bandwidth,
    linear_assignment,
)
from .projections import dist_to_strong_r, project_strong_r, project_sum_nonneg
from .spectral import spectral_order

__all__ = [
    "DuplicationCounts",
    "AssignmentMatrix",
    "DupliReport",
    "init_expand",
    "compress",
    "project_dupli_constraints",
    "alt_proj_dupli",
    "mean_assignment_distance",
]


@dataclass(frozen=True)
class DuplicationCounts:
    """Per-bin copy numbers c (each >= 1); N = sum(c) fragments total."""

    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("counts must be a nonempty 1-d vector")
        if not np.issubdtype(c.dtype, np.integer):
            if not np.all(c == np.floor(c)):
                raise ValueError("counts must be integers")
            c = c.astype(np.int64)
        else:
            c = c.astype(np.int64)
        if c.min() < 1:
            raise ValueError("every count must be >= 1")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @property
    def n(self):
        return self.c.shape[0]

    @property
    def total(self):
        return int(self.c.sum())


class AssignmentMatrix:
    """Partition of the N fragment positions into n bins of sizes c.

    Stored as ``bin_of`` (length N, bin index of each fragment position);
    ``lists()`` gives the equivalent sorted per-bin position lists.  As a
    0/1 matrix Z (n x N), rows sum to c and columns sum to 1.
    """

    __slots__ = ("bin_of", "_counts")

    def __init__(self, bin_of, n=None):
        b = np.asarray(bin_of)
        if b.ndim != 1 or b.size == 0:
            raise ValueError("bin_of must be a nonempty 1-d vector")
        if not np.issubdtype(b.dtype, np.integer):
            raise ValueError("bin_of must be integer-valued")
        b = b.astype(np.int64)
        if n is None:
            n = int(b.max()) + 1
        n = int(n)
        if b.min() < 0 or b.max() >= n:
            raise ValueError("bin indices out of range")
        sizes = np.bincount(b, minlength=n)
        if sizes.min() < 1:
            raise ValueError("every bin must hold at least one fragment")
        b.setflags(write=False)
        self.bin_of = b
        self._counts = DuplicationCounts(sizes)

    @classmethod
    def consecutive(cls, counts):
        """Canonical start: fragments of bin i occupy a contiguous run."""
        counts = _as_counts(counts)
        return cls(np.repeat(np.arange(counts.n), counts.c), counts.n)

    @property
    def counts(self):
        return self._counts

    @property
    def n(self):
        return self._counts.n

    @property
    def N(self):
        return self.bin_of.shape[0]

    def lists(self):
        order = np.argsort(self.bin_of, kind="stable")
        bounds = np.cumsum(self._counts.c)
        return np.split(order, bounds[:-1])

    def dense(self):
        Z = np.zeros((self.n, self.N))
        Z[self.bin_of, np.arange(self.N)] = 1.0
        return Z

    def permute(self, perm):
        """Relabel fragment positions: position k moves to perm.positions[k]."""
        if perm.n != self.N:
            raise ValueError("permutation size must equal N")
        new = np.empty(self.N, dtype=np.int64)
        new[perm.positions] = self.bin_of
        return AssignmentMatrix(new, self.n)

    def flip(self):
        """Reverse the fragment axis (position k -> N-1-k)."""
        return AssignmentMatrix(self.bin_of[::-1].copy(), self.n)

    def __eq__(self, other):
        if not isinstance(other, AssignmentMatrix):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.bin_of, other.bin_of)

    def __hash__(self):
        return hash((self.n, self.bin_of.tobytes()))

    def __repr__(self):
        return f"AssignmentMatrix(n={self.n}, N={self.N})"


def _as_counts(c):
    if isinstance(c, DuplicationCounts):
        return c
    return DuplicationCounts(np.asarray(c))


def init_expand(A, counts, Z0=None):
    """Spread A uniformly over blocks: S0_kl = A_ij/(c_i c_j), k in L_i, l in L_j."""
    A = as_similarity_matrix(A)
    counts = _as_counts(counts)
    if A.n != counts.n:
        raise ValueError("counts length must match matrix size")
    if Z0 is None:
        Z0 = AssignmentMatrix.consecutive(counts)
    elif not np.array_equal(Z0.counts.c, counts.c):
        raise ValueError("Z0 is inconsistent with the counts vector")
    b = Z0.bin_of
    Ad = A.dense()
    c = counts.c.astype(np.float64)
    S0 = Ad[np.ix_(b, b)] / np.outer(c[b], c[b])
    return S0, Z0


def compress(Z, S):
    """Aggregate S over bin blocks: entry (i,j) = sum of S over L_i x L_j."""
    S = np.asarray(S, dtype=np.float64)
    if S.shape != (Z.N, Z.N):
        raise ValueError("S must be N x N for this assignment")
    Zd = Z.dense()
    return Zd @ S @ Zd.T


def project_dupli_constraints(S, Z, A):
    """Per-block projection restoring compress(Z, .) = A with nonnegativity.

    Each unordered bin pair (i, j) is an independent problem: project the
    flattened block of S onto {x >= 0, sum(x) = A_ij}.  Off-diagonal blocks
    are mirrored; diagonal blocks are projected whole (their symmetry
    survives because the projection maps equal values to equal values).
    """
    S = np.asarray(S, dtype=np.float64)
    A = as_similarity_matrix(A)
    if A.n != Z.n or S.shape != (Z.N, Z.N):
        raise ValueError("dimension mismatch between S, Z and A")
    Ad = A.dense()
    lists = Z.lists()
    out = np.empty_like(S)
    for i in range(Z.n):
        Li = lists[i]
        for j in range(i, Z.n):
            Lj = lists[j]
            a = Ad[i, j]
            if a == 0.0:
                out[np.ix_(Li, Lj)] = 0.0
                if j > i:
                    out[np.ix_(Lj, Li)] = 0.0
                continue
            if Li.size == 1 and Lj.size == 1:
                out[Li[0], Lj[0]] = a
                if j > i:
                    out[Lj[0], Li[0]] = a
                continue
            block = project_sum_nonneg(S[np.ix_(Li, Lj)].ravel(), a)
            block = block.reshape(Li.size, Lj.size)
            out[np.ix_(Li, Lj)] = block
            if j > i:
                out[np.ix_(Lj, Li)] = block.T
    return out


@dataclass
class DupliReport:
    """Result of the alternating-projection duplication solver."""

    assignment: AssignmentMatrix
    S: np.ndarray
    feasibility_residual: float
    iterations: int
    converged_by: str  # "Z-fixed-point" | "max-iter"
    elapsed: float = 0.0
    trace: list = field(default_factory=list)  # (round, residual) pairs
    warnings: tuple = ()


def _resolve_inner(inner):
    from .solvers import eta_spectral, ubi  # local import to avoid a cycle

    if callable(inner):
        return inner
    if inner == "spectral":
        return lambda S: spectral_order(S)
    if inner == "eta-spectral":
        def run(S):
            return eta_spectral(S)

        return run
    if inner == "h-ubi":
        return lambda S: ubi(S)
    raise ValueError(f"unknown inner solver: {inner!r}")


def alt_proj_dupli(A, counts, inner="eta-spectral", T=100, bounds=None):
    """Alternating projections for seriation with duplications.

    Round t: run the inner ordering solver on S(t), apply its permutation to
    both S(t) and the fragment assignment, project onto the strong-R cone
    (l1 norm, optional diagonal bounds), then restore the block-sum
    constraints exactly.  Stops when the assignment reaches a fixed point or
    after T rounds.  Inner-solver failures are re-raised with the round
    index attached (``.round_index``).

    Inputs with exactly interchangeable fragments (identical rows in S) can
    trap the deterministic iteration in an assignment cycle: the tied
    fragments are indistinguishable to every inner solver and the same
    states repeat forever.  When a revisited assignment (modulo flip) is
    seen together with that degeneracy witness, the tie is broken with a
    tiny deterministic multiplicative perturbation of S (relative scale
    1e-6, fixed internal seed) -- the usual anti-cycling device for
    degenerate alternating schemes.  A perturbed run accepts an assignment
    fixed point only after certifying it: both projections are continued in
    their Euclidean flavor with the assignment frozen, and the strong-R gap
    must vanish (to 1e-8 relative), which happens exactly when the
    assignment admits a strong-R factorization.  The certified S replaces
    the iterate.  An uncertifiable fixed point triggers a restart from the
    uniform expansion with a fresh perturbation, up to 8 times, finally
    falling back to the smallest-gap fixed point seen.  Runs without the
    degeneracy witness never perturb and behave exactly as the plain
    iteration.
    """
    t0 = time.perf_counter()
    A = as_similarity_matrix(A)
    counts = _as_counts(counts)
    if T < 1:
        raise ValueError("T must be >= 1")
    solve = _resolve_inner(inner)
    S, Z = init_expand(A, counts)
    trace = []
    warn = []
    converged_by = "max-iter"
    rounds = 0
    rng = None
    kick = False
    kicks = 0
    max_kicks = 8
    best = None
    final_residual = None
    seen = {_assignment_key(Z): 0}
    for t in range(1, T + 1):
        rounds = t
        kicked_now = False
        if kick:
            if rng is None:
                rng = np.random.Generator(np.random.PCG64(20260814))
            U = rng.random(S.shape) - 0.5
            S = S * (1.0 + 1e-6 * (U + U.T))
            kick = False
            kicked_now = True
            kicks += 1
        try:
            report = solve(as_similarity_matrix(S))
        except Exception as exc:  # noqa: BLE001 - annotate and re-raise
            exc.round_index = t
            raise
        perm = report.permutation
        S = perm.apply_to(S)
        Z_next = Z.permute(perm)
        S = project_strong_r(S, norm="l1", bounds=bounds)
        S = project_dupli_constraints(S, Z_next, A)
        residual = float(np.linalg.norm(compress(Z_next, S) - A.dense()))
        trace.append((t, residual))
        # Fixed point modulo orientation: the loss is flip-invariant, so an
        # ordered iterate alternates with its mirror image forever; both
        # states carry the same assignment information.  A perturbation
        # round never stops: its comparison spans the injected noise.
        fixed = (Z_next == Z or Z_next == Z.flip()) and not kicked_now
        Z = Z_next
        if fixed:
            if kicks > 0:
                S_cert, gap, certified = _certify_assignment(S, Z, A, bounds)
                if certified:
                    S = S_cert
                    final_residual = float(
                        np.linalg.norm(compress(Z, S) - A.dense())
                    )
                else:
                    if best is None or gap < best[0]:
                        best = (gap, Z, S_cert)
                    if kicks < max_kicks:
                        warn.append(
                            f"fixed point at round {t} rejected "
                            f"(strong-R gap {gap:.3g}); restarting with a "
                            f"fresh perturbation"
                        )
                        S, Z = init_expand(A, counts)
                        seen = {_assignment_key(Z): t}
                        kick = True
                        continue
                    warn.append(
                        f"fixed point at round {t} still has strong-R gap "
                        f"{gap:.3g} after {kicks} perturbations; returning "
                        f"the smallest-gap state"
                    )
                    _, Z, S = best
                    final_residual = float(
                        np.linalg.norm(compress(Z, S) - A.dense())
                    )
            converged_by = "Z-fixed-point"
            break
        key = _assignment_key(Z)
        if key in seen:
            if kicks < max_kicks and _has_tied_rows(S):
                warn.append(
                    f"assignment cycle with interchangeable fragments "
                    f"detected at round {t}; applying a symmetry-breaking "
                    f"perturbation"
                )
                kick = True
            seen.clear()
        else:
            seen[key] = t
    if converged_by == "max-iter" and best is not None:
        # The perturbation budget ran out mid-search: the smallest-gap fixed
        # point beats whatever transient state round T happened to hold.
        _, Z, S = best
        final_residual = float(np.linalg.norm(compress(Z, S) - A.dense()))
        warn.append("round budget exhausted; returning the smallest-gap state")
    return DupliReport(
        assignment=Z,
        S=S,
        feasibility_residual=(
            trace[-1][1] if final_residual is None else final_residual
        ),
        iterations=rounds,
        converged_by=converged_by,
        elapsed=time.perf_counter() - t0,
        trace=trace,
        warnings=tuple(warn),
    )


def _assignment_key(Z):
    """Hashable form of an assignment, identified with its mirror image."""
    fwd = Z.bin_of.tobytes()
    rev = Z.bin_of[::-1].tobytes()
    return min(fwd, rev)


def _has_tied_rows(S, rtol=1e-9):
    """Degeneracy witness: some pair of fragments has identical S rows."""
    scale = max(float(np.abs(S).max()), 1.0)
    for i in range(S.shape[0] - 1):
        gap = np.abs(S[i + 1 :] - S[i]).max(axis=1)
        if (gap <= rtol * scale).any():
            return True
    return False


def _certify_assignment(S, Z, A, bounds, tol=1e-8, max_sweeps=500):
    """Check whether Z admits a strong-R factorization of A.

    Alternates the Euclidean projections onto the strong-R cone and onto
    the block-sum constraints with Z frozen; both sets are convex, so the
    strong-R gap of the iterate converges to zero exactly when they
    intersect, and stalls at the positive set distance otherwise.  Returns
    ``(S, gap, certified)`` with S feasible for the block sums.
    """
    gap = np.inf
    prev = np.inf
    for k in range(1, max_sweeps + 1):
        S = project_strong_r(S, norm="l2", bounds=bounds)
        S = project_dupli_constraints(S, Z, A)
        gap = dist_to_strong_r(S)
        thr = tol * (1.0 + float(np.linalg.norm(S)))
        if gap <= thr:
            return S, gap, True
        if k % 20 == 0:
            # a trajectory this flat, this far from the cone, has stalled
            # at the distance between disjoint sets
            if gap > 0.999 * prev and gap > 100.0 * thr:
                break
            prev = gap
    return S, gap, False


def mean_assignment_distance(Z_a, Z_b):
    """(mean, std, median) over bins of the matched fragment-position gap.

    Per bin, fragments of Z_a and Z_b are matched by a min-cost assignment
    on absolute position differences; the bin's score is the mean matched
    distance.  Symmetric in its arguments; zero iff the partitions agree.
    """
    if not np.array_equal(Z_a.counts.c, Z_b.counts.c):
        raise ValueError("assignments have different counts vectors")
    per_bin = np.empty(Z_a.n)
    for i, (La, Lb) in enumerate(zip(Z_a.lists(), Z_b.lists())):
        if La.size == 1:
            per_bin[i] = abs(float(La[0]) - float(Lb[0]))
            continue
        cost = np.abs(La[:, None].astype(np.float64) - Lb[None, :])
        _, total = linear_assignment(cost, sense="min")
        per_bin[i] = total / La.size
    return float(per_bin.mean()), float(per_bin.std()), float(np.median(per_bin))
