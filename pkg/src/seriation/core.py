"""Core types and primitives: similarity matrices, permutations, losses.

The seriation problem: given a symmetric nonnegative similarity matrix A,
find a permutation pi of its elements such that the reordered matrix
A[pi][:, pi] concentrates its large entries near the main diagonal.  All
solvers in this package score candidate orderings with one of three losses
over element positions p (p[i] = position assigned to element i):

    TwoSum       sum_ij A_ij (p_i - p_j)^2
    R2Sum(lam)   sum_ij A_ij min(lam, (p_i - p_j)^2)
    Huber(delta) sum_ij A_ij h_delta(p_i - p_j)

with h_delta(x) = x^2 for |x| <= delta and delta(2|x| - delta) beyond.  The
truncated and Huber variants stop far-apart noise entries from dominating,
which is what makes the seriation "robust".  Sums run over ordered pairs, so
every stored off-diagonal entry counts twice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment


# ---------------------------------------------------------------------------
# permutations


class Permutation:
    """A permutation of n elements, stored as a position vector.

    ``positions[i]`` is the rank (0-based) assigned to element i; ``order[k]``
    is the element placed at rank k (the two views are inverses).  Losses and
    rank correlations act on ``positions``; matrix reordering uses ``order``.
    """

    __slots__ = ("positions", "_order")

    def __init__(self, positions):
        positions = np.asarray(positions, dtype=np.int64)
        if positions.ndim != 1:
            raise ValueError("positions must be a 1-d integer vector")
        n = positions.shape[0]
        seen = np.zeros(n, dtype=bool)
        if n and (positions.min() < 0 or positions.max() >= n):
            raise ValueError("positions must take values in 0..n-1")
        seen[positions] = True
        if not seen.all():
            raise ValueError("positions must be a bijection of 0..n-1")
        positions.setflags(write=False)
        self.positions = positions
        self._order = None

    @classmethod
    def identity(cls, n):
        return cls(np.arange(n, dtype=np.int64))

    @classmethod
    def from_order(cls, order):
        """Build from the ``order`` view (order[k] = element at rank k)."""
        order = np.asarray(order, dtype=np.int64)
        positions = np.empty_like(order)
        positions[order] = np.arange(order.shape[0], dtype=np.int64)
        return cls(positions)

    @property
    def order(self):
        if self._order is None:
            order = np.argsort(self.positions, kind="stable")
            order.setflags(write=False)
            self._order = order
        return self._order

    @property
    def n(self):
        return self.positions.shape[0]

    def __len__(self):
        return self.positions.shape[0]

    def flip(self):
        """The reversed ordering T(pi) = (n-1) - pi, same seriation quality."""
        return Permutation((self.n - 1) - self.positions)

    def apply_to(self, M):
        """Reorder a dense square matrix: result[k, l] = M[order[k], order[l]]."""
        M = np.asarray(M)
        o = self.order
        return M[np.ix_(o, o)]

    def __eq__(self, other):
        if not isinstance(other, Permutation):
            return NotImplemented
        return self.n == other.n and bool(np.all(self.positions == other.positions))

    def __hash__(self):
        return hash(self.positions.tobytes())

    def __repr__(self):
        return f"Permutation(positions={self.positions.tolist()!r})"


def as_permutation(p, n=None):
    """Coerce an array of positions or a Permutation; optionally check length."""
    if isinstance(p, Permutation):
        perm = p
    else:
        perm = Permutation(p)
    if n is not None and perm.n != n:
        raise ValueError(f"permutation has length {perm.n}, expected {n}")
    return perm


# ---------------------------------------------------------------------------
# similarity matrices


class SimilarityMatrix:
    """Square symmetric nonnegative matrix, stored as upper-triangle triples.

    Zero entries are not stored.  ``nnz`` follows the convention used by the
    bandwidth heuristic: diagonal entries count once, each off-diagonal
    symmetric pair counts twice (i.e. the number of nonzero cells of the full
    matrix).
    """

    __slots__ = ("n", "row", "col", "val", "_csr")

    def __init__(self, n, row, col, val, _skip_checks=False):
        self.n = int(n)
        row = np.asarray(row, dtype=np.int64)
        col = np.asarray(col, dtype=np.int64)
        val = np.asarray(val, dtype=np.float64)
        if not _skip_checks:
            if row.shape != col.shape or row.shape != val.shape:
                raise ValueError("row/col/val must have identical shapes")
            if row.size:
                if row.min() < 0 or col.max() >= self.n:
                    raise ValueError("index out of range")
                if np.any(row > col):
                    raise ValueError("triples must satisfy i <= j")
            if not np.all(np.isfinite(val)):
                raise ValueError("similarity entries must be finite")
            if np.any(val < 0):
                raise ValueError("similarity entries must be nonnegative")
            keep = val > 0
            if not keep.all():
                row, col, val = row[keep], col[keep], val[keep]
            # canonical ordering + duplicate check
            key = np.lexsort((col, row))
            row, col, val = row[key], col[key], val[key]
            if row.size > 1 and np.any((np.diff(row) == 0) & (np.diff(col) == 0)):
                raise ValueError("duplicate (i, j) triples")
        self.row, self.col, self.val = row, col, val
        for a in (self.row, self.col, self.val):
            a.setflags(write=False)
        self._csr = None

    @classmethod
    def from_dense(cls, M, tol=1e-12):
        M = np.asarray(M, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("similarity matrix must be square")
        if not np.all(np.isfinite(M)):
            raise ValueError("similarity entries must be finite")
        scale = np.abs(M).max() if M.size else 0.0
        if np.abs(M - M.T).max() > tol * max(1.0, scale):
            raise ValueError("similarity matrix must be symmetric")
        M = 0.5 * (M + M.T)
        if M.size and M.min() < -tol * max(1.0, scale):
            raise ValueError("similarity entries must be nonnegative")
        np.maximum(M, 0.0, out=M)
        iu, ju = np.nonzero(np.triu(M))
        return cls(M.shape[0], iu, ju, M[iu, ju], _skip_checks=False)

    @property
    def n_stored(self):
        return self.val.shape[0]

    @property
    def nnz(self):
        off = int(np.count_nonzero(self.row != self.col))
        return (self.n_stored - off) + 2 * off

    def csr(self):
        """Full symmetric matrix as scipy CSR (cached)."""
        if self._csr is None:
            off = self.row != self.col
            r = np.concatenate([self.row, self.col[off]])
            c = np.concatenate([self.col, self.row[off]])
            v = np.concatenate([self.val, self.val[off]])
            self._csr = sp.csr_matrix((v, (r, c)), shape=(self.n, self.n))
        return self._csr

    def dense(self):
        return self.csr().toarray()

    def degrees(self):
        return np.asarray(self.csr().sum(axis=1)).ravel()

    def max_value(self):
        return float(self.val.max()) if self.n_stored else 0.0

    def permute(self, perm):
        """Similarity of the reordered elements (entry (k,l) = A[o_k, o_l])."""
        perm = as_permutation(perm, self.n)
        p = perm.positions
        r, c = p[self.row], p[self.col]
        swap = r > c
        r2 = np.where(swap, c, r)
        c2 = np.where(swap, r, c)
        return SimilarityMatrix(self.n, r2, c2, self.val.copy())

    def __repr__(self):
        return f"<SimilarityMatrix n={self.n} stored={self.n_stored}>"


def as_similarity_matrix(A):
    """Accept a SimilarityMatrix, dense array, or scipy sparse matrix."""
    if isinstance(A, SimilarityMatrix):
        return A
    if sp.issparse(A):
        return SimilarityMatrix.from_dense(A.toarray())
    return SimilarityMatrix.from_dense(np.asarray(A, dtype=np.float64))


# ---------------------------------------------------------------------------
# losses


@dataclass(frozen=True)
class TwoSum:
    pass


@dataclass(frozen=True)
class R2Sum:
    lam: float

    def __post_init__(self):
        if not (self.lam > 0):
            raise ValueError("R2Sum truncation lam must be positive")


@dataclass(frozen=True)
class Huber:
    delta: float

    def __post_init__(self):
        if not (self.delta > 0):
            raise ValueError("Huber width delta must be positive")


LossKind = TwoSum | R2Sum | Huber


def huber(x, delta):
    """Huber penalty h_delta: quadratic up to |x| = delta, linear beyond.

    h_delta(x) = x^2 for |x| <= delta, delta*(2|x| - delta) otherwise;
    continuous with continuous derivative at the knee.
    """
    if not (delta > 0):
        raise ValueError("delta must be positive")
    x = np.abs(np.asarray(x, dtype=np.float64))
    out = np.where(x <= delta, x * x, delta * (2.0 * x - delta))
    return out if out.ndim else float(out)


def _gap_penalty(d, kind):
    # d: nonnegative position gaps (float array), one per stored entry
    if isinstance(kind, TwoSum):
        return d * d
    if isinstance(kind, R2Sum):
        return np.minimum(kind.lam, d * d)
    if isinstance(kind, Huber):
        return huber(d, kind.delta)
    raise TypeError(f"unknown loss kind: {kind!r}")


def loss(A, perm, kind):
    """Seriation loss of a permutation (sum over ordered pairs, see module doc).

    Invariant under the flip (n-1) - positions, since only |p_i - p_j|
    enters.
    """
    A = as_similarity_matrix(A)
    perm = as_permutation(perm, A.n)
    p = perm.positions
    off = A.row != A.col
    d = np.abs(p[A.row[off]] - p[A.col[off]]).astype(np.float64)
    return float(2.0 * np.dot(A.val[off], _gap_penalty(d, kind)))


def two_sum_quadratic_form(A, x):
    """x^T L_A x with L_A = diag(A 1) - A; equals sum_{i<j} A_ij (x_i - x_j)^2."""
    A = as_similarity_matrix(A)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.n,):
        raise ValueError("x must have length n")
    off = A.row != A.col
    dx = x[A.row[off]] - x[A.col[off]]
    return float(np.dot(A.val[off], dx * dx))


# ---------------------------------------------------------------------------
# rank correlation and assignment


def kendall_tau(p1, p2, flip_invariant=False):
    """Kendall rank correlation of two orderings' position vectors.

    Computed exactly as (concordant - discordant) / (n choose 2) by integer
    pair counting (permutations have no ties), so perfect agreement returns
    1.0 bit-exactly.  With ``flip_invariant=True`` returns max over the
    reversal of p1, so a perfectly recovered but reversed ordering scores
    1.0.
    """
    p1 = as_permutation(p1)
    p2 = as_permutation(p2, p1.n)
    n = p1.n
    if n < 2:
        return 1.0
    # p2-positions scanned in p1 order; discordant pairs = inversions
    s = p2.positions[p1.order]
    disc = 0
    for b in range(0, n, 512):
        block = s[b : b + 512]
        m = block.shape[0]
        gt = block[:, None] > s[None, b:]
        disc += int(np.triu(gt[:, :m], k=1).sum()) + int(gt[:, m:].sum())
    pairs = n * (n - 1) // 2
    t = (pairs - 2 * disc) / pairs
    if flip_invariant:
        # reversing one ordering flips every pair's concordance
        t = max(t, -t)
    return t


def linear_assignment(C, sense="min"):
    """Solve the linear assignment problem on a square cost matrix.

    Returns ``(pi, cost)`` with cost = sum_i C[i, pi(i)] optimal for the
    requested sense.
    """
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("cost matrix must be square")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix must be finite")
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    rows, cols = linear_sum_assignment(C if sense == "min" else -C)
    cost = float(C[rows, cols].sum())
    return Permutation(cols), cost


# ---------------------------------------------------------------------------
# bandwidth heuristic


@dataclass(frozen=True)
class BandwidthEstimate:
    delta_hat: int
    lam_hat: float
    nnz: int


def estimate_bandwidth(A):
    """Estimate the bandwidth of the ordered matrix from the nonzero count.

    A clean band of half-width delta on n elements holds exactly
    n + (2n-1)*delta - delta^2 nonzero cells, so the smallest delta >= 1 whose
    band can accommodate nnz(A) cells is a cheap, permutation-invariant
    bandwidth guess.  The companion truncation level is lam = delta^2.
    """
    A = as_similarity_matrix(A)
    n, nnz = A.n, A.nnz
    delta = 1
    while delta < n - 1 and n + (2 * n - 1) * delta - delta * delta < nnz:
        delta += 1
    return BandwidthEstimate(delta_hat=delta, lam_hat=float(delta * delta), nnz=nnz)
