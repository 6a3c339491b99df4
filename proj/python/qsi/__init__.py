"""Interferogram synthesis, fringe fitting and quantum state estimation."""

from ._qsi import (
    FringeEstimate,
    InterferometerConfig,
    QubitState,
    QuditPureState,
    ReconstructionResult,
    average_intensity,
    density_matrix,
    entanglement_entropy,
    entanglement_from_marginal,
    fidelity,
    fit_image,
    intensity_curve,
    invert_qubit,
    invert_qudit,
    prepare_qubit,
    qudit_amplitudes,
    qudit_intensity_curve,
    reconstruct_pure_assumed,
    settings_row,
    simulate_qst,
    state_fidelity,
    synthesize,
    synthesize_qudit,
    visibility,
    __version__,
)

__all__ = [
    "FringeEstimate",
    "InterferometerConfig",
    "QubitState",
    "QuditPureState",
    "ReconstructionResult",
    "average_intensity",
    "density_matrix",
    "entanglement_entropy",
    "entanglement_from_marginal",
    "fidelity",
    "fit_image",
    "intensity_curve",
    "invert_qubit",
    "invert_qudit",
    "prepare_qubit",
    "qudit_amplitudes",
    "qudit_intensity_curve",
    "reconstruct_pure_assumed",
    "settings_row",
    "simulate_qst",
    "state_fidelity",
    "synthesize",
    "synthesize_qudit",
    "visibility",
    "__version__",
]
