"""Spectral analysis and energy decay of the damped wave operator on a tadpole graph."""

from .core import (
    DampingParameter,
    GraphFunction,
    Regime,
    StateVector,
    TadpoleGeometry,
    apply_adjoint,
    apply_generator,
    check_transmission,
    energy,
    inner_product_H,
    norm_H,
)
from .errors import *  # noqa: F401,F403
from .spectrum import (
    Eigenfunction,
    Eigenvalue,
    Kind,
    Rectangle,
    char_det_minus,
    char_det_plus,
    damped_eigenvalues,
    default_geometry,
    eigenfunction_damped,
    eigenfunction_embedded,
    embedded_eigenvalues,
    find_roots,
    spectral_abscissa,
    weyl_quasimode,
)
from .resolvent import (
    BoundaryFunctionals,
    ResolventSolution,
    boundary_functionals,
    estimate_function,
    green_kernel,
    resolvent_apply,
    solve_ABC,
)
from .riesz import GramMatrix, expand_in_basis, frame_bounds, gram_entry, gram_matrix, k_constant, project_onto_Hp
from .simulator import EnergyTrace, SimulationConfig, check_energy_identity, fit_decay_rate, run

__version__ = "0.1.0"
