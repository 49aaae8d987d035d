"""Pseudospectral toolkit on the periodic 3-torus.

Spectral fields with exact multiplier calculus, frequency-band blending
operators, dyadic (Littlewood-Paley style) frequency analysis, three
independent Navier-Stokes time schemes, and a verification harness that
measures the identities, inequalities, and convergence rates the pieces
are supposed to satisfy.
"""

from .config import ExperimentConfig, parse_config
from .diagnostics import (
    ConvergenceStudy,
    DiagnosticsRecord,
    bkm_monitor,
    convergence_study,
    diagnostics_csv,
    energy_identity_residual,
    enstrophy,
    kinetic_energy,
    mild_residual,
    records_for_trajectory,
    strong_residual,
    unified_reconstruction,
    vorticity_residual,
    weak_form_residual,
    weak_test_battery,
)
from .dyadic import (
    DyadicPartition,
    almost_orthogonality_ratio,
    bernstein_check,
    block_energies,
    commutator_bound_ratio,
    commutator_constant,
    dyadic_block,
    low_pass,
    midband_pair_sum,
    paraproduct_decompose,
    reassemble,
)
from .operators import (
    MollifierSpec,
    WeightPartition,
    binary_cutoff,
    blend,
    default_weights,
    mollifier_symbol,
    regularize,
    smooth,
    spatial_window,
    weight_eval,
    weighted_blend,
)
from .solvers import (
    SolverParams,
    Trajectory,
    cfl_limit,
    lifespan_lower_bound,
    pressure_solve,
    random_solenoidal_init,
    run,
    run_weak_galerkin,
    shear_init,
    step_mild,
    step_strong,
    taylor_green_init,
)
from .spectral import (
    GridSpec,
    PhysicalField,
    SpectralField,
    advect,
    advective_term,
    curl,
    dealias,
    derivative,
    divergence,
    divergence_defect,
    forward_transform,
    gradient,
    heat_semigroup,
    hermitian_defect,
    inner_product,
    inverse_transform,
    l2_norm,
    leray_project,
    nonlinear_term,
    physical_l2_norm,
    sobolev_norm,
    zero_mean,
)

__version__ = "0.1.0"
