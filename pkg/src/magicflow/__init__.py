"""Growth of CSS-entropy magic under random qudit circuits.

Three routes to the same quantities: dense statevector simulation
(:mod:`magicflow.exact`), closed-form Haar averages
(:mod:`magicflow.analytics`) and the replica Weingarten tensor network
(:mod:`magicflow.replica`).
"""
__version__ = "0.1.0"

from .analytics import (
    DecayFit,
    HaarValue,
    doped_reference_curve,
    fit_decay,
    haar_css_entropy,
    haar_Y,
    saturation_time,
    stirling_cycle,
)
from .defects import (
    CssProjector,
    DefectSubspace,
    OverlapTable,
    css_overlap_table,
    css_projector,
    find_defect_subspaces,
    validate_defect_subspace,
)
from .exact import (
    CircuitSpec,
    DopedCliffordSpec,
    EnsembleStats,
    StateVector,
    apply_two_site_gate,
    clifford2_group,
    css_entropy_exact,
    ensemble_averages,
    init_zero_state,
    run_brickwall,
    run_doped_clifford,
    sample_uniform_clifford2,
)
from .qudit import (
    FieldScalar,
    NumericalError,
    PauliString,
    ResourceError,
    clifford_generators,
    pauli_expectation,
    pauli_matrix,
    pauli_string_matrix,
    random_haar_unitary,
)
from .replica import (
    annealed_css_entropy,
    annealed_curve,
    contract_annealed_upsilon,
    css_entropy_mps,
)
