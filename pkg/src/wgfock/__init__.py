"""Multimode N-photon states from nonlinear waveguide decays.

Numerical engine for characterizing the photonic states emitted by an
N-level nonlinear ladder into a 1D waveguide (exact correlators via sparse
matrix chains, few-mode effective descriptions) and for evaluating their
phase-estimation performance in a lossy Mach-Zehnder interferometer.
"""

from .emitter import EmitterSpec, kerr_spec, spec_from_dict, spec_from_json, superradiant_spec
from .modes import ExpMode, OrthoBasis, commutator, gram_matrix, ladder_family, orthogonalize
from .correlators import (
    CorrelatorCache,
    CorrelatorRequest,
    build_cache,
    chain_I,
    correlator,
    norm,
    overlap_amplitude,
    photon_number,
)
from .states import (
    OccupationAmplitudes,
    build_basis,
    mode_occupations,
    project,
    ratio_C,
    variance_sigma,
)
from .interferometer import (
    OutcomeDistribution,
    TwoArmState,
    cfi,
    cfi_scan,
    derivative_state,
    evolve,
    lossy_distribution,
    noon_two_mode_arm,
    pure_qfi,
    qfi_from_occupations,
    twin_fock_arm,
    uniform_two_mode_arm,
)

__version__ = "0.1.0"

__all__ = [
    "EmitterSpec",
    "superradiant_spec",
    "kerr_spec",
    "spec_from_dict",
    "spec_from_json",
    "ExpMode",
    "OrthoBasis",
    "commutator",
    "gram_matrix",
    "ladder_family",
    "orthogonalize",
    "CorrelatorCache",
    "CorrelatorRequest",
    "build_cache",
    "chain_I",
    "correlator",
    "norm",
    "overlap_amplitude",
    "photon_number",
    "OccupationAmplitudes",
    "build_basis",
    "mode_occupations",
    "project",
    "ratio_C",
    "variance_sigma",
    "OutcomeDistribution",
    "TwoArmState",
    "cfi",
    "cfi_scan",
    "derivative_state",
    "evolve",
    "lossy_distribution",
    "pure_qfi",
    "qfi_from_occupations",
    "twin_fock_arm",
    "uniform_two_mode_arm",
    "noon_two_mode_arm",
    "__version__",
]
