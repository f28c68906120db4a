"""Certificate-producing constructions for trace-constant pinchings, Dixmier
averaging, sums of projections, nilpotent realizations and unitary
majorization in M_n(C) with the normalized trace."""

__version__ = "0.1.0"

from .core import (
    DEFAULT_TOL,
    Interval,
    PartialIsometry,
    Tolerance,
    hermitian_eig,
    jacobi_eigh,
    normalized_trace,
    partial_isometry,
    polar,
    range_projection,
    spectral_projection,
    sqrt_psd,
)
from .pinching import (
    AveragingUnitary,
    PinchingCertificate,
    constant_diagonal_unitary,
    dixmier_unitary_from_pinching,
    optimize_block_pinching,
    pinching_from_averaging_unitary,
    schur_horn_diagonal,
)
from .projection_sums import (
    ExcessDefect,
    PositiveCombination,
    ProjectionSumCertificate,
    TwoProjectionForm,
    build_q_pm,
    excess_defect,
    feasibility,
    fillmore_decompose,
    gp_bound,
    halve_two_projections,
    mu_bound,
    pinching_from_projections,
    positive_combination,
    projections_from_pinching,
    two_projection_form,
)
from .nilpotent import NilpotentRealization, nilpotent_realization, shift_trace
from .averaging import DixmierCertificate, average_simultaneous, average_single, verify_average
from .majorization import (
    BlockPartition,
    MajorizationCertificate,
    compose_certificates,
    conjugate_certificate,
    corner_reduction,
    corner_sum_certificate,
    cyclic_mean_certificate,
    eigen_majorization_check,
    pad_certificate,
    sign_pinch_certificate,
    tau_scalar_certificate,
    verify_majorization,
)

__all__ = [
    "average_simultaneous",
    "average_single",
    "AveragingUnitary",
    "BlockPartition",
    "build_q_pm",
    "compose_certificates",
    "conjugate_certificate",
    "constant_diagonal_unitary",
    "corner_reduction",
    "corner_sum_certificate",
    "cyclic_mean_certificate",
    "DEFAULT_TOL",
    "dixmier_unitary_from_pinching",
    "DixmierCertificate",
    "eigen_majorization_check",
    "excess_defect",
    "ExcessDefect",
    "feasibility",
    "fillmore_decompose",
    "gp_bound",
    "halve_two_projections",
    "hermitian_eig",
    "Interval",
    "jacobi_eigh",
    "MajorizationCertificate",
    "mu_bound",
    "nilpotent_realization",
    "NilpotentRealization",
    "normalized_trace",
    "optimize_block_pinching",
    "pad_certificate",
    "partial_isometry",
    "PartialIsometry",
    "pinching_from_averaging_unitary",
    "pinching_from_projections",
    "PinchingCertificate",
    "polar",
    "positive_combination",
    "PositiveCombination",
    "projections_from_pinching",
    "ProjectionSumCertificate",
    "range_projection",
    "schur_horn_diagonal",
    "shift_trace",
    "sign_pinch_certificate",
    "spectral_projection",
    "sqrt_psd",
    "tau_scalar_certificate",
    "Tolerance",
    "two_projection_form",
    "TwoProjectionForm",
    "verify_average",
    "verify_majorization",
]
