"""Multiphoton down-conversion states through symmetric lossy channels.

The package derives and verifies the post-selected two-photon Werner state
at arbitrary nonlinear gain, and carries the associated analysis chain:
coincidence-count simulation, maximum-likelihood state tomography,
entanglement metrics, and gain calibration from detector rates.
"""

__version__ = "0.1.0"

from .calibration import (
    CalibrationFit,
    CalibrationPoint,
    count_rate_model,
    fit_gain,
    synthetic_calibration_points,
    transmitted_photons_per_mode,
)
from .channel import (
    LossCoefficients,
    apply_beamsplitters,
    post_select_two_photon,
    singlet_weight,
    transmitted_reduced_state,
    two_photon_block_closed,
    two_photon_state,
)
from .errors import (
    CapacityError,
    ConvergenceError,
    DesignError,
    FitError,
    PhysicalityError,
)
from .fock import (
    ALL_MODES,
    TRANSMITTED_MODES,
    TWO_PHOTON_BASIS,
    DensityMatrix,
    PureState,
    outer_product,
    partial_trace,
)
from .metrics import (
    WernerDescriptor,
    concurrence_tangle,
    fidelity,
    is_entangled_ppt,
    linear_entropy,
    metrics_report,
    singlet_ket,
    singlet_weight_extract,
    tangle_from_entropy_werner,
    werner_state,
    witness_expectation,
    witness_operator,
)
from .source import (
    GainChannelParams,
    mean_photons_per_mode,
    n_pair_singlet,
    pair_number_weights,
)
from .tomography import (
    CountRecord,
    MLReconstruction,
    ProjectorSetting,
    WitnessEstimate,
    born_probability,
    linear_reconstruction,
    ml_reconstruction,
    read_count_records,
    simulate_counts,
    standard_tomography_settings,
    witness_from_counts,
    witness_settings,
    write_count_records,
)

__all__ = [
    "ALL_MODES",
    "CalibrationFit",
    "CalibrationPoint",
    "CapacityError",
    "ConvergenceError",
    "CountRecord",
    "DensityMatrix",
    "DesignError",
    "FitError",
    "GainChannelParams",
    "LossCoefficients",
    "MLReconstruction",
    "PhysicalityError",
    "ProjectorSetting",
    "PureState",
    "TRANSMITTED_MODES",
    "TWO_PHOTON_BASIS",
    "WernerDescriptor",
    "WitnessEstimate",
    "apply_beamsplitters",
    "born_probability",
    "concurrence_tangle",
    "count_rate_model",
    "fidelity",
    "fit_gain",
    "is_entangled_ppt",
    "linear_entropy",
    "linear_reconstruction",
    "mean_photons_per_mode",
    "metrics_report",
    "ml_reconstruction",
    "n_pair_singlet",
    "outer_product",
    "pair_number_weights",
    "partial_trace",
    "post_select_two_photon",
    "read_count_records",
    "simulate_counts",
    "singlet_ket",
    "singlet_weight",
    "singlet_weight_extract",
    "standard_tomography_settings",
    "synthetic_calibration_points",
    "tangle_from_entropy_werner",
    "transmitted_photons_per_mode",
    "transmitted_reduced_state",
    "two_photon_block_closed",
    "two_photon_state",
    "werner_state",
    "witness_expectation",
    "witness_from_counts",
    "witness_operator",
    "witness_settings",
    "write_count_records",
]
