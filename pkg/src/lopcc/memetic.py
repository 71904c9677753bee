"""Memetic algorithm: population of local optima, order-based recombination,
PoolWorst replacement.

Each generation draws two parents whose distance is at least the mean
pairwise distance of the population, copies the first, reorders ``k``
random positions to follow the second parent's order, applies local search
and replaces the worst member when the offspring is strictly better and not
already present.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .evaluation import AlphaState, evaluate
from .instance import Instance, make_rng, random_permutation
from .local_search import LsConfig, LsMode, local_search

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EngineParams:
    pop_size: int = 15
    k_fraction: float = 0.5
    generation_limit: int | None = 100
    seed: int = 0
    max_parent_retries: int = 50
    ls_mode: LsMode = LsMode.FORWARD_BACKWARD
    eps_improve: float = 1e-10
    alternate_passes: bool = False
    # "diverse": parents at distance >= mean distance; "similar": <= mean
    parent_rule: str = "diverse"
    time_budget: float | None = None
    # local search used while seeding the population (None -> ls_mode)
    init_ls_mode: LsMode | None = None

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")
        if not 0 < self.k_fraction <= 1:
            raise ValueError("k_fraction must lie in (0, 1]")
        if self.generation_limit is None and self.time_budget is None:
            raise ValueError("need a generation limit or a time budget")
        if self.generation_limit is not None and self.generation_limit < 0:
            raise ValueError("generation_limit must be nonnegative")
        if self.max_parent_retries < 1:
            raise ValueError("max_parent_retries must be >= 1")
        if self.parent_rule not in ("diverse", "similar"):
            raise ValueError("parent_rule must be 'diverse' or 'similar'")
        object.__setattr__(self, "ls_mode", LsMode(self.ls_mode))
        if self.init_ls_mode is not None:
            object.__setattr__(self, "init_ls_mode", LsMode(self.init_ls_mode))

    def k_for(self, n: int) -> int:
        return min(n, max(1, math.floor(self.k_fraction * n)))

    @property
    def ls_config(self) -> LsConfig:
        return LsConfig(eps_improve=self.eps_improve, alternate_passes=self.alternate_passes)


# --------------------------------------------------------------------------
# distance


def lcs_length(a, b) -> int:
    """Longest common subsequence of two permutations of the same vertex set.

    Maps ``a`` to positions in ``b`` and takes the longest increasing run
    (patience sorting), O(n log n).
    """
    where = np.empty(len(b), dtype=np.int64)
    where[np.asarray(b)] = np.arange(len(b))
    tails: list[int] = []
    for x in where[np.asarray(a)].tolist():
        i = bisect_left(tails, x)
        if i == len(tails):
            tails.append(x)
        else:
            tails[i] = x
    return len(tails)


def distance(a, b) -> int:
    """n minus the LCS length of two permutations."""
    if len(a) != len(b):
        raise ValueError("permutations differ in length")
    return len(a) - lcs_length(a, b)


# --------------------------------------------------------------------------
# population


@dataclass
class Population:
    members: list[AlphaState]
    dist: np.ndarray
    degenerate: bool = False

    @classmethod
    def from_states(cls, members: list[AlphaState], degenerate: bool = False) -> "Population":
        p = len(members)
        dist = np.zeros((p, p), dtype=np.int64)
        for i in range(p):
            for j in range(i + 1, p):
                dist[i, j] = dist[j, i] = distance(members[i].perm, members[j].perm)
        return cls(members, dist, degenerate)

    def __len__(self):
        return len(self.members)

    @property
    def f(self) -> np.ndarray:
        return np.array([m.f for m in self.members])

    def worst_index(self) -> int:
        # argmax returns the first maximum: ties go to the lowest index
        return int(np.argmax(self.f))

    def best_index(self) -> int:
        return int(np.argmin(self.f))

    def mean_f(self) -> float:
        return float(self.f.mean())

    def contains(self, perm) -> bool:
        return any(np.array_equal(m.perm, perm) for m in self.members)

    def replace(self, idx: int, state: AlphaState) -> None:
        self.members[idx] = state
        for j, m in enumerate(self.members):
            if j != idx:
                self.dist[idx, j] = self.dist[j, idx] = distance(state.perm, m.perm)
        self.dist[idx, idx] = 0


def population_diversity(pop: Population) -> float:
    """Mean pairwise distance over all member pairs."""
    p = len(pop)
    if p < 2:
        raise ValueError("diversity needs at least two members")
    iu = np.triu_indices(p, 1)
    return float(pop.dist[iu].sum() / (p * (p - 1) / 2))


def init_population(
    inst: Instance,
    params: EngineParams,
    rng: np.random.Generator,
    on_ls: Callable[[float, list[float]], None] | None = None,
) -> Population:
    """Fill the population with distinct local optima of random permutations.

    Duplicates are redrawn for up to ``max_parent_retries * pop_size``
    attempts; past that they are admitted and the population is flagged
    degenerate. ``on_ls(f_start, history)`` is called after every local
    search that actually runs.
    """
    mode = params.init_ls_mode or params.ls_mode
    cfg = params.ls_config
    limit = params.max_parent_retries * params.pop_size
    members: list[AlphaState] = []
    seen: set[bytes] = set()
    # local search is deterministic in its start, so repeated starts are memoised
    memo: dict[bytes, AlphaState] = {}
    attempts = 0
    degenerate = False
    while len(members) < params.pop_size:
        start = random_permutation(inst.n, rng)
        key = start.tobytes()
        attempts += 1
        if key in memo:
            state = memo[key].copy()
        else:
            state = evaluate(inst, start)
            f0 = state.f
            history: list[float] = []
            local_search(state, inst, mode, cfg, history)
            if on_ls is not None:
                on_ls(f0, history)
            memo[key] = state.copy()
        sig = state.perm.tobytes()
        if sig in seen:
            if attempts < limit:
                continue
            degenerate = True
        seen.add(sig)
        members.append(state)
    if degenerate:
        log.info("population degenerate after %d attempts (n=%d)", attempts, inst.n)
    return Population.from_states(members, degenerate)


def select_parents(pop: Population, rng: np.random.Generator, params: EngineParams) -> tuple[int, int]:
    """Draw an ordered pair of distinct members meeting the distance rule."""
    p = len(pop)
    if p < 2:
        raise ValueError("need at least two members")
    pdi = population_diversity(pop)
    for _ in range(params.max_parent_retries):
        a, b = (int(x) for x in rng.choice(p, size=2, replace=False))
        dab = pop.dist[a, b]
        if (dab >= pdi) if params.parent_rule == "diverse" else (dab <= pdi):
            return a, b
    log.debug("parent selection fell back after %d draws", params.max_parent_retries)
    return a, b


def recombine(a, b, k: int, rng: np.random.Generator | None = None, positions=None) -> np.ndarray:
    """Order-based recombination.

    Copies ``a`` and rearranges the vertices on ``k`` random positions (or
    the given ``positions``) so that they follow their relative order in
    ``b``.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    n = a.shape[0]
    if b.shape[0] != n:
        raise ValueError("parents differ in length")
    if positions is None:
        if not 1 <= k <= n:
            raise ValueError(f"k={k} out of range for n={n}")
        positions = rng.choice(n, size=k, replace=False)
    positions = np.sort(np.asarray(positions, dtype=np.int64))
    rank_in_b = np.empty(n, dtype=np.int64)
    rank_in_b[b] = np.arange(n)
    chosen = a[positions]
    child = a.copy()
    child[positions] = chosen[np.argsort(rank_in_b[chosen], kind="stable")]
    return child


def pool_update(pop: Population, offspring: AlphaState, eps_improve: float = 1e-10) -> bool:
    """Replace the worst member with ``offspring`` if strictly better and novel.

    Returns whether the population changed.
    """
    w = pop.worst_index()
    worst = pop.members[w].f
    if not offspring.f < worst - eps_improve * max(1.0, abs(worst)):
        return False
    if pop.contains(offspring.perm):
        return False
    pop.replace(w, offspring)
    return True


# --------------------------------------------------------------------------
# main loop


@dataclass
class TraceRow:
    elapsed_s: float
    generation: int
    best_f: float
    pop_mean_f: float
    pdi: float
    pop_worst_f: float


@dataclass
class RunStats:
    best_f: float
    best_perm: np.ndarray
    generation_of_best: int
    time_to_best: float
    time_total: float
    time_init: float
    generations: int
    trace: list[TraceRow] = field(default_factory=list)
    degenerate: bool = False
    # self-audit counters, expected to stay at zero
    ls_increases: int = 0
    worst_increases: int = 0


def _count_increases(f0: float, history: list[float]) -> int:
    bad = 0
    prev = f0
    for f in history:
        if f > prev:
            bad += 1
        prev = f
    return bad


def run(
    inst: Instance,
    params: EngineParams,
    sample_interval: float | None = None,
) -> RunStats:
    """Run the memetic algorithm and collect statistics.

    Without ``sample_interval`` the trace holds one row per generation
    (generation 0 is the initial population). With it, rows are taken when
    the evolution clock passes each multiple of the interval, plus the
    first and last generation. Trace ``elapsed_s`` and the time budget
    count from the end of initialisation; ``time_to_best`` and
    ``time_total`` count from the start of the call.
    """
    t_start = time.perf_counter()
    rng = make_rng(params.seed)
    cfg = params.ls_config
    k = params.k_for(inst.n)
    init_bad = [0]

    def audit(f0: float, history: list[float]) -> None:
        init_bad[0] += _count_increases(f0, history)

    pop = init_population(inst, params, rng, audit)
    t_evo = time.perf_counter()
    bi = pop.best_index()
    best = pop.members[bi].copy()
    stats = RunStats(
        best_f=best.f,
        best_perm=best.perm.copy(),
        generation_of_best=0,
        time_to_best=t_evo - t_start,
        time_total=0.0,
        time_init=t_evo - t_start,
        generations=0,
        degenerate=pop.degenerate,
        ls_increases=init_bad[0],
    )

    def sample(g: int, now: float) -> None:
        fs = pop.f
        stats.trace.append(
            TraceRow(now - t_evo, g, stats.best_f, float(fs.mean()), population_diversity(pop), float(fs.max()))
        )

    sample(0, t_evo)
    next_sample = sample_interval
    g = 0
    while True:
        now = time.perf_counter()
        if params.generation_limit is not None and g >= params.generation_limit:
            break
        if params.time_budget is not None and now - t_evo >= params.time_budget:
            break
        g += 1
        a, b = select_parents(pop, rng, params)
        child = recombine(pop.members[a].perm, pop.members[b].perm, k, rng)
        state = evaluate(inst, child)
        history: list[float] = []
        f0 = state.f
        local_search(state, inst, params.ls_mode, cfg, history)
        stats.ls_increases += _count_increases(f0, history)
        worst_before = pop.f.max()
        pool_update(pop, state, params.eps_improve)
        if pop.f.max() > worst_before:
            stats.worst_increases += 1
        now = time.perf_counter()
        if state.f < stats.best_f - params.eps_improve * max(1.0, abs(stats.best_f)):
            stats.best_f = state.f
            stats.best_perm = state.perm.copy()
            stats.generation_of_best = g
            stats.time_to_best = now - t_start
        if sample_interval is None:
            sample(g, now)
        elif now - t_evo >= next_sample:
            sample(g, now)
            while next_sample <= now - t_evo:
                next_sample += sample_interval
    end = time.perf_counter()
    if sample_interval is not None and stats.trace[-1].generation != g:
        sample(g, end)
    stats.generations = g
    stats.time_total = end - t_start
    return stats
