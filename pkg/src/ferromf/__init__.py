"""Numerical laboratory for mean-field equations of ferromagnetic spin systems."""

__version__ = "0.1.0"

from .core import (
    BoundReport,
    DomainError,
    NormTriple,
    SpinSystem,
    dump_system,
    hamiltonian,
    load_system,
    mf_residual,
    norms,
    theorem_bound,
)
from .exact import (
    GibbsReport,
    LeeYangZeros,
    cavity_system,
    coupling_identity_check,
    curie_weiss_exact,
    field_derivative,
    gibbs_exact,
    gibbs_expectation,
    lee_yang_zeros,
)
from .solver import MeanFieldSolution, branch_scan, fixed_point, scalar_curie_weiss
