from .comparison import (
    check_comparison,
    check_lower_invasion,
    check_outer_decay,
    check_scheme_consistency,
    check_time_monotonicity,
    comparison_energy,
    seeded_barrier,
    critical_rate,
    pde_residual,
    run_barrier_iteration,
)
from .reaction import ReactionForm, ReactionKPP, logistic_solution
from .solver import (
    Scheme,
    SolverConfig,
    Trajectory,
    edge_magnitude,
    phi_functions,
    solve,
    step_exponential_euler,
    step_picard,
)
