"""Monte Carlo and analytic toolkit for entanglement, CHSH nonlocality,
QBER and device-independent QKD key rates of random two-qubit states."""

from .campaign import (
    CampaignConfig,
    CampaignSummary,
    Histogram,
    RankSummary,
    average_positive_keyrate,
    collect_envelope_samples,
    fraction_in_bins_labeled_at_least,
    fraction_with_chsh_at_least,
    fraction_with_ln_at_least,
    normalized_distribution,
    run_campaign,
)
from .errors import ContractViolation, NumericIntegrityError
from .families import (
    EnvelopeVerdict,
    Rank2Params,
    envelope_check,
    pure_keyrate,
    pure_state_matrix,
    rank2_keyrate,
    rank2_keyrate_from_negativity,
    rank2_negativity,
    rank2_p_from_negativity,
    rank2_state_matrix,
    werner_keyrate,
    werner_state_matrix,
)
from .keyrate import (
    KeyRateReport,
    binary_entropy,
    evaluate,
    keyrate_ca,
    keyrate_osca,
    qber,
    qber_consistency,
)
from .linalg import (
    Spectrum,
    hermitian_eigenvalues,
    partial_trace,
    partial_transpose,
    singular_values_3x3,
    tensor_product,
)
from .resources import (
    ResourceReport,
    chsh_value,
    correlation_matrix,
    evaluate_resources,
    log_negativity,
    negativity,
)
from .stategen import (
    GaussianStream,
    RandomStateSpec,
    generate,
    generate_batch,
    generate_pure,
    generate_rank2,
    generate_rank3,
    generate_rank4,
    sample_complex_gaussian,
    validate_two_qubit_state,
)

__version__ = "0.1.0"
