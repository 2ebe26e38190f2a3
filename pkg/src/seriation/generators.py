"""Synthetic instance generators with hidden ground truth.

All sampling uses numpy's PCG64 generator seeded explicitly, so a given
(parameters, seed) pair reproduces the same instance bit-for-bit on any
platform: index sampling is pure integer arithmetic and the only float
values produced are exactly representable (0/1 band entries) or derived
from the generator's documented uniform stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Permutation, SimilarityMatrix
from .duplication import AssignmentMatrix, DuplicationCounts, compress
from .projections import is_strong_r

__all__ = [
    "BandedInstance",
    "DupliInstance",
    "gen_banded",
    "gen_toeplitz_powerlaw",
    "gen_dupli_instance",
    "banded_membership",
]


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class BandedInstance:
    """Shuffled binary band-plus-noise matrix with its hidden ordering.

    ``perm_true.apply_to(A)`` is exactly ones on the band |i-j| <= delta
    plus s symmetric out-of-band entries.
    """

    A: SimilarityMatrix
    perm_true: Permutation
    n: int
    delta: int
    s: int
    seed: int


@dataclass(frozen=True)
class DupliInstance:
    """Aggregated similarity instance with duplication ground truth."""

    A: np.ndarray
    counts: DuplicationCounts
    Z_true: AssignmentMatrix
    S_true: np.ndarray
    noise_prop: float
    seed: int


def _sample_outband_pairs(rng, n, delta, s):
    """s distinct (i, j), i < j, j - i > delta, uniform without replacement.

    Strict-upper-triangle slots beyond the band are indexed row-major: row i
    holds m_i = max(0, n - i - delta - 1) slots; a sampled flat index is
    mapped back through the cumulative row counts.
    """
    m = np.maximum(0, n - np.arange(n) - delta - 1)
    starts = np.concatenate([[0], np.cumsum(m)])
    total = int(starts[-1])
    if s > total:
        raise ValueError(
            f"requested {s} out-of-band entries but only {total} slots exist"
        )
    if s == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    flat = rng.choice(total, size=s, replace=False)
    i = np.searchsorted(starts, flat, side="right") - 1
    j = i + delta + 1 + (flat - starts[i])
    return i.astype(np.int64), j.astype(np.int64)


def gen_banded(n, delta, s_ratio=0.0, seed=0):
    """Binary band matrix plus s = round(s_ratio * (n - delta - 1)) noise pairs.

    The band |i-j| <= delta is set to one, s distinct out-of-band symmetric
    pairs are set to one, and rows/columns are shuffled by a uniform random
    permutation returned as the ground truth.
    """
    n = int(n)
    delta = int(delta)
    if not 0 < delta < n:
        raise ValueError("need 0 < delta < n")
    if s_ratio < 0:
        raise ValueError("s_ratio must be nonnegative")
    s = int(round(s_ratio * (n - delta - 1)))
    rng = _rng(seed)
    noise_i, noise_j = _sample_outband_pairs(rng, n, delta, s)
    sigma = rng.permutation(n)
    perm_true = Permutation(sigma)
    inv = perm_true.order  # inv[k] = element whose true position is k

    # band triples in true coordinates, then relabeled by the shuffle
    ti, tj = [], []
    for d in range(delta + 1):
        idx = np.arange(n - d)
        ti.append(idx)
        tj.append(idx + d)
    ti = np.concatenate(ti + [noise_i])
    tj = np.concatenate(tj + [noise_j])
    ri, rj = inv[ti], inv[tj]
    lo, hi = np.minimum(ri, rj), np.maximum(ri, rj)
    A = SimilarityMatrix(n, lo, hi, np.ones(lo.shape[0]))
    return BandedInstance(A=A, perm_true=perm_true, n=n, delta=delta, s=s, seed=seed)


def banded_membership(A, delta, s):
    """Check that dense M is ones on the band |i-j| <= delta plus exactly s
    symmetric out-of-band unit pairs (the unpermuted-instance invariant)."""
    M = A.dense() if isinstance(A, SimilarityMatrix) else np.asarray(A, dtype=float)
    n = M.shape[0]
    d = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    band = d <= delta
    if not np.all(M[band] == 1.0):
        return False
    out = M[~band]
    if not np.all((out == 0.0) | (out == 1.0)):
        return False
    return int(np.triu(M * ~band).sum()) == s


def gen_toeplitz_powerlaw(n, gamma):
    """Dense Toeplitz matrix with entries |k-l|^(-gamma), ones on the diagonal."""
    n = int(n)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    d = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).astype(np.float64)
    with np.errstate(divide="ignore"):
        S = np.where(d > 0, d ** (-float(gamma)), 1.0)
    return S


def gen_dupli_instance(N, ratio, s_kind, noise_prop=0.0, seed=0):
    """Aggregated instance: strong-R S_true, random counts and assignment.

    ``s_kind`` is ("powerlaw", gamma) or ("banded", delta, s); n = round(N /
    ratio) bins receive one fragment each plus N - n extra units placed
    uniformly at random; fragment positions are a uniform shuffle.  With
    noise_prop > 0 the observed matrix gets multiplicative symmetric uniform
    relative noise, clipped at zero.
    """
    N = int(N)
    if ratio < 1:
        raise ValueError("ratio must be >= 1")
    n = int(round(N / ratio))
    if n < 2:
        raise ValueError("ratio leaves fewer than 2 bins")
    if noise_prop < 0:
        raise ValueError("noise_prop must be nonnegative")
    rng = _rng(seed)

    kind = s_kind[0]
    if kind == "powerlaw":
        S_true = gen_toeplitz_powerlaw(N, s_kind[1])
    elif kind == "banded":
        delta, s = int(s_kind[1]), int(s_kind[2])
        d = np.abs(np.subtract.outer(np.arange(N), np.arange(N)))
        S_true = (d <= delta).astype(np.float64)
        if s:
            oi, oj = _sample_outband_pairs(rng, N, delta, s)
            S_true[oi, oj] = 1.0
            S_true[oj, oi] = 1.0
    else:
        raise ValueError(f"unknown S kind: {kind!r}")

    c = np.ones(n, dtype=np.int64)
    if N > n:
        np.add.at(c, rng.integers(0, n, size=N - n), 1)
    counts = DuplicationCounts(c)

    rho = rng.permutation(N)
    Z_true = AssignmentMatrix.consecutive(counts).permute(Permutation(rho))
    A = compress(Z_true, S_true)
    if noise_prop > 0:
        E = rng.uniform(-1.0, 1.0, size=(n, n))
        E = np.triu(E) + np.triu(E, 1).T
        A = np.maximum(0.0, A * (1.0 + noise_prop * E))
    return DupliInstance(
        A=A,
        counts=counts,
        Z_true=Z_true,
        S_true=S_true,
        noise_prop=float(noise_prop),
        seed=seed,
    )
