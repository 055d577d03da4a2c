"""Priority-priced edge offloading: model, solvers, pricing, queue simulator."""

from .model import (
    Cls,
    EquilibriumOutcome,
    LoadState,
    MarketSignal,
    SystemParams,
    UnstableLoadError,
    UserProfile,
    beta_of_x,
    demand,
    demand_inverse,
    demand_zero,
    edge_delays,
    edge_tx,
    local_cost,
    profit,
    utility,
)
from .experiments import (
    ALL_SCHEMES,
    ConfigError,
    ExperimentConfig,
    build_config,
    export_suite,
    generate_scenario,
    parse_config_file,
    run_suite,
)
from .pricing import (
    LearningConfig,
    LearningTrace,
    best_response,
    check_incentive_compatibility,
    prices_from_delays,
    run_learning,
)
from .queuesim import SimConfig, SimReport, measure_congestion, simulate
from .solvers import (
    Scenario,
    SolverConfig,
    assign_priority,
    solve_selfish_single_class,
    solve_social_single_class,
    solve_social_two_class,
)

__version__ = "0.1.0"
