"""Generalized-inverse propagators for divisible, possibly non-invertible, quantum dynamical maps."""
from .analysis import MapCertificate, certify, kernel_inclusion, monotonicity_check
from .config import DEFAULT_SEED, DEFAULT_TOL, Tolerances
from .discrete import DiscreteFamily, Ensemble2, discrete_propagator, helstrom, right_inverse
from .errors import DivpropError
from .ginverse import (
    build_ginverse,
    classify,
    ginverse_with_projector,
    moore_penrose,
    spectral_decompose,
    spectral_ginverse,
    transversal_ginverse,
)
from .models import (
    GlobalAttractor,
    NonDiagonal,
    PauliChannel,
    PhaseCovariant,
    Rate,
    builtin_model,
    classify_qubit_projector,
    integrate_map,
    special_form_decompose,
    transfer_at,
)
from .operators import (
    apply_map,
    choi_to_kraus,
    herm_basis,
    superop,
    svd,
    transfer_to_choi,
)
from .propagator import (
    cptp_search,
    propagate,
    propagator_by_rule,
    propagator_family,
    tp_inverse_family,
)

__version__ = "0.1.0"
