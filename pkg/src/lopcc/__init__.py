"""Memetic solver for the linear ordering problem with cumulative costs (LOPCC)."""

__version__ = "0.1.0"

from .evaluation import AlphaState, evaluate, insert, insertion_profile, swap_adjacent
from .exact import ExactResult, brute_force
from .instance import (
    Instance,
    InstanceFormatError,
    generate_random_instance,
    parse_instance,
    random_permutation,
    read_instance,
    write_instance,
)
from .local_search import LsConfig, LsMode, backward_pass, forward_pass, local_search
from .memetic import (
    EngineParams,
    Population,
    RunStats,
    distance,
    init_population,
    pool_update,
    population_diversity,
    recombine,
    run,
    select_parents,
)

__all__ = [
    "AlphaState",
    "EngineParams",
    "ExactResult",
    "Instance",
    "InstanceFormatError",
    "LsConfig",
    "LsMode",
    "Population",
    "RunStats",
    "backward_pass",
    "brute_force",
    "distance",
    "evaluate",
    "forward_pass",
    "generate_random_instance",
    "init_population",
    "insert",
    "insertion_profile",
    "local_search",
    "parse_instance",
    "pool_update",
    "population_diversity",
    "random_permutation",
    "read_instance",
    "recombine",
    "run",
    "select_parents",
    "swap_adjacent",
    "write_instance",
]
