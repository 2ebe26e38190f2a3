"""Result container shared by all ordering solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import LossKind, Permutation


@dataclass
class SolverReport:
    """Outcome of one solver run.

    ``objective`` is always the loss of ``permutation`` recomputed with
    ``loss_kind`` on the input matrix (never a stale internal value), and
    ``trace`` records (iteration, objective-of-that-iterate) pairs so the
    best-so-far curve can be audited: its running minimum is nonincreasing
    by construction.
    """

    permutation: Permutation
    objective: float
    loss_kind: LossKind
    iterations: int
    elapsed: float
    trace: list[tuple[int, float]] = field(default_factory=list)
    warnings: tuple[str, ...] = ()

    def best_so_far(self):
        out, best = [], float("inf")
        for it, v in self.trace:
            best = min(best, v)
            out.append((it, best))
        return out
