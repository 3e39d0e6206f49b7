"""Exact spectra of the collectively dissipative Richardson-Gaudin
Liouvillian.

The Liouvillian of L spins with collective gain and loss maps to a
non-Hermitian spin-1 XXZ Richardson-Gaudin model, so its full eigenspectrum
follows from L coupled cubic equations per eigenstate instead of a
3^L-dimensional diagonalization.  The package solves those equations by
homotopy continuation (evb), recovers and verifies the underlying Bethe
rapidities (rapidity), cross-checks everything against a dense
exact-diagonalization oracle at small size (ed), and packages the headline
computations - spectral flows, gap scaling, ratio quantization, exceptional
points - behind a library API (experiments) and a CLI (cli).
"""

from .model import (
    ModelSpec,
    SingularInputError,
    SpectrumRecord,
    homogeneous_model,
    homogeneous_ratio,
    homogeneous_spectrum,
    multiplicity_of_total_spin,
    picket_fence,
    sector_dimension,
)
from .evb import (
    ContinuationSettings,
    EvbState,
    NonConvergenceError,
    continue_along,
    continue_in_g,
    enumerate_sector,
    leading_mode_path,
    locate_exceptional_point,
    solve_sector,
)
from .rapidity import (
    RapiditySet,
    UnsupportedExtractionError,
    laguerre_roots,
    quantized_ratio_prediction,
    rapidities_from_state,
    verify_bethe_equations,
)
from .experiments import (
    GapScalingResult,
    TransitionRecord,
    conjugate_label,
    full_spectrum,
    gap_scaling,
    leading_mode,
    ratio_quantization,
    sector_records,
    spectral_flow,
    targeted_leading_mode,
    transition_map,
)

__version__ = "1.0.0"

__all__ = [
    "ModelSpec",
    "SingularInputError",
    "SpectrumRecord",
    "homogeneous_model",
    "homogeneous_ratio",
    "homogeneous_spectrum",
    "multiplicity_of_total_spin",
    "picket_fence",
    "sector_dimension",
    "ContinuationSettings",
    "EvbState",
    "NonConvergenceError",
    "continue_along",
    "continue_in_g",
    "enumerate_sector",
    "leading_mode_path",
    "locate_exceptional_point",
    "solve_sector",
    "RapiditySet",
    "UnsupportedExtractionError",
    "laguerre_roots",
    "quantized_ratio_prediction",
    "rapidities_from_state",
    "verify_bethe_equations",
    "GapScalingResult",
    "TransitionRecord",
    "conjugate_label",
    "full_spectrum",
    "gap_scaling",
    "leading_mode",
    "ratio_quantization",
    "sector_records",
    "spectral_flow",
    "targeted_leading_mode",
    "transition_map",
]
