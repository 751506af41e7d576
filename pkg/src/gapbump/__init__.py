"""Exact L2 tools for gap-constrained sums of truncated cosine bumps."""

__version__ = "0.1.0"

from .kernel import KernelTable, bump_deriv, bump_eval, kernel_g, kernel_g_quadrature_oracle
from .quadform import (
    QuadFormReport,
    check_g_inequality,
    check_lemma41,
    decompose_m2,
    defect,
    kernel_gram,
    min_eigenvalue,
    quad_form,
    second_derivative_identity_residual,
)
from .search import (
    SearchConfig,
    SearchReport,
    local_refine,
    max_rayleigh,
    sample_gap_sequence,
    search_counterexample,
)
from .trigsum import (
    GapConditionError,
    GapSequence,
    PiecewiseExpSum,
    TrigPolynomial,
    build_G,
    derivative,
    expand_bump,
    gram_matrices,
    l2_inner,
    norms_G,
    parseval_norms,
)
