"""Mobile parcel locker delivery planning toolkit."""

from .model import (
    Coord,
    Customer,
    FleetParams,
    GenConfig,
    GenerationError,
    LoadError,
    MplpError,
    ParkingSpace,
    ProblemInstance,
    Stopover,
    TimeWindow,
    generate_instance,
    load_instance,
    save_instance,
    validate_instance,
)
from .siting import (
    KMeansResult,
    SitingInfeasibleError,
    SitingResult,
    assign_to_spaces,
    kmeans,
    min_parking_spaces,
)
from .taskgen import (
    SubInterval,
    Task,
    UncoverableCustomerError,
    build_task_list,
    reduce_windows,
    split_subintervals,
)
from .routing import AdjustPolicy, RoutingContext, Schedule, State, Visit, build_schedule, decode_state
from .objective import (
    ConstraintCheck,
    CostBreakdown,
    agent_reward,
    cost_breakdown,
    evaluate_state,
    validate_solution,
)
from .hqm import (
    Agent,
    HqmConfig,
    QModel,
    SolveResult,
    global_step,
    init_agent,
    local_step,
    run_hqm,
    selection_probabilities,
    update_q,
)
from .ga import GaConfig, run_ga
from .oracle import OracleResult, SearchSpaceError, brute_force_best
from .stats import WilcoxonResult, wilcoxon_signed_rank

__version__ = "0.1.0"
