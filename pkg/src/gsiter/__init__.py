"""Iterative ground-state solver with monotone upper/lower energy bounds."""

from .grid import GridFunction, RadialGrid, build_grid, cumulative_from_tail, cumulative_from_zero, integrate
from .trial import (
    ProblemSpec,
    TrialFunction,
    harmonic_problem,
    harmonic_trial,
    hj_expansion_1d,
    perturbative_energy_quartic,
    quartic_S0,
    quartic_problem,
    quartic_trial,
    verify_trial,
)
from .iterate import (
    CaseBViolation,
    IterationState,
    RunReport,
    action_functional,
    chi,
    displacement,
    energy_step,
    f_step,
    fixed_point_residual,
    iterate_ground,
    weighted_moment,
)
from .hierarchy import (
    HierarchyVerdict,
    check_bounds,
    check_displacement_ratio,
    check_energy_monotone,
    check_ratio_monotone,
    crossing_point,
)
from .squarewell import (
    SquareWellModel,
    assemble_iterate_polys,
    exact_ground,
    first_iterate_closed_form,
    iterate_squarewell,
    perturbative_radius,
    poly_family_R,
    singularity_locator,
)
from .greens import BoxEigenbasis, defect_check, green_reduced, green_resolvent, green_sturm
from .oracle import EigenResult, fd_ground_state, orthonormal_check, root_bracket

__version__ = "0.1.0"
