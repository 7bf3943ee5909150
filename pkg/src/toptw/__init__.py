"""Ant colony system solver for team orienteering problems with time windows."""

from .acs import (
    AcsParams,
    BestRecord,
    PheromoneMatrix,
    construct,
    desirability,
    global_update,
    init_pheromone,
    solve,
)
from .instances import (
    Instance,
    InstanceFormat,
    Node,
    ParseError,
    build_instance,
    load_instance,
    parse_cordeau,
    parse_solomon,
)
from .local_search import (
    ChainLengthState,
    CrossMove,
    LocalSearchParams,
    apply_move,
    descend,
    update_schedule,
)
from .model import (
    ExpandedGraph,
    GiantTour,
    HierarchicScore,
    InfeasibleTourError,
    RouteSet,
    compare,
    expand,
    extract_routes,
    propagate,
    score,
)
from .oracle import ExactResult, brute_force
from .reporting import (
    CSV_COLUMNS,
    InstanceAggregate,
    RunReport,
    SuiteReport,
    aggregate,
    check_solution,
    read_solution,
    write_csv,
    write_solution,
)

__version__ = "0.1.0"
