"""Conditional continuous-variable teleportation simulator in truncated Fock space."""

from .analysis import (
    PhotonNumberDistribution,
    WignerGrid,
    entanglement_entropy,
    photon_number_distribution,
    wigner_grid,
    wigner_origin,
)
from .channels import (
    KrausSet,
    NegativityThresholds,
    amplitude_damping_kraus,
    gain_tuned_channel,
    negativity_threshold,
    noiseless_attenuation,
    noiseless_attenuation_mixed,
)
from .errors import (
    AccuracyError,
    ConfigError,
    HeraldImpossibleError,
    SamplingError,
    TelefockError,
    TruncationError,
)
from .filters import (
    HybridPair,
    ProgramState,
    apply_filter_matrix,
    apply_program_filter,
    attenuate_hybrid_both,
    hybrid_entangled_state,
)
from .fock import (
    BellOutcome,
    DensityOperator,
    ModeOperator,
    StateVector,
    annihilation_matrix,
    coherent_state,
    displacement_block,
    displacement_matrix,
    fidelity,
    fock_state,
    loss_channel,
    partial_trace,
    state_fidelity,
    tmsv_truncation_deficit,
    two_mode_squeezed_vacuum,
)
from .teleporter import (
    ConditionalResult,
    ExperimentConfig,
    GridSpec,
    bsm_conditional,
    build_resource,
    feed_forward,
    lossy_noiseless_oracle,
    mc_ensemble,
    sample_run,
    success_probability,
    teleport,
)
from .tomography import (
    BootstrapResult,
    MLEResult,
    QuadratureRecord,
    TomographyOptions,
    bootstrap_errors,
    mle_reconstruct,
    quadrature_pdf,
    sample_homodyne,
)

__version__ = "0.1.0"
