"""Robust seriation: reorder noisy similarity matrices toward banded form.

Given pairwise similarities whose rows/columns have been scrambled, recover
an ordering under which similarity decays away from the diagonal.  The
toolbox covers robust loss functions and bandwidth estimation (``core``),
spectral and optimization-based solvers (``spectral``, ``solvers``),
projections onto structured matrix cones (``projections``), seriation with
duplicated elements (``duplication``), synthetic instance generators
(``generators``), estimator-style wrappers (``estimators``) and a CLI
(``seriation`` entry point).
"""

from .core import (
    BandwidthEstimate,
    Huber,
    LossKind,
    Permutation,
    R2Sum,
    SimilarityMatrix,
    TwoSum,
    as_permutation,
    as_similarity_matrix,
    estimate_bandwidth,
    huber,
    kendall_tau,
    linear_assignment,
    loss,
    two_sum_quadratic_form,
)
from .duplication import (
    AssignmentMatrix,
    DupliReport,
    DuplicationCounts,
    alt_proj_dupli,
    compress,
    init_expand,
    mean_assignment_distance,
    project_dupli_constraints,
)
from .estimators import (
    DupliSeriation,
    EtaSpectralOrdering,
    FaqOrdering,
    FwtbOrdering,
    SpectralOrdering,
    UbiOrdering,
)
from .generators import (
    BandedInstance,
    DupliInstance,
    gen_banded,
    gen_dupli_instance,
    gen_toeplitz_powerlaw,
)
from .projections import (
    DiagonalBounds,
    dist_to_strong_r,
    is_strong_r,
    project_strong_r,
    project_sum_nonneg,
)
from .report import SolverReport
from .solvers import (
    HuberB,
    HyperplaneBasis,
    QapKind,
    TruncatedB,
    TwoSumB,
    eta_spectral,
    faq,
    fwtb,
    lmo_tiebreak,
    toeplitz_b,
    ubi,
)
from .spectral import (
    ConvergenceError,
    DisconnectedError,
    check_connected,
    fiedler_vector,
    spectral_order,
)

__version__ = "0.1.0"

__all__ = [
    "BandwidthEstimate",
    "Huber",
    "LossKind",
    "Permutation",
    "R2Sum",
    "SimilarityMatrix",
    "TwoSum",
    "as_permutation",
    "as_similarity_matrix",
    "estimate_bandwidth",
    "huber",
    "kendall_tau",
    "linear_assignment",
    "loss",
    "two_sum_quadratic_form",
    "AssignmentMatrix",
    "DupliReport",
    "DuplicationCounts",
    "alt_proj_dupli",
    "compress",
    "init_expand",
    "mean_assignment_distance",
    "project_dupli_constraints",
    "DupliSeriation",
    "EtaSpectralOrdering",
    "FaqOrdering",
    "FwtbOrdering",
    "SpectralOrdering",
    "UbiOrdering",
    "BandedInstance",
    "DupliInstance",
    "gen_banded",
    "gen_dupli_instance",
    "gen_toeplitz_powerlaw",
    "DiagonalBounds",
    "dist_to_strong_r",
    "is_strong_r",
    "project_strong_r",
    "project_sum_nonneg",
    "SolverReport",
    "HuberB",
    "HyperplaneBasis",
    "QapKind",
    "TruncatedB",
    "TwoSumB",
    "eta_spectral",
    "faq",
    "fwtb",
    "lmo_tiebreak",
    "toeplitz_b",
    "ubi",
    "ConvergenceError",
    "DisconnectedError",
    "check_connected",
    "fiedler_vector",
    "spectral_order",
    "__version__",
]
