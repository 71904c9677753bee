import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lopcc.evaluation import evaluate
from lopcc.exact import brute_force
from lopcc.instance import Instance, generate_random_instance, make_rng, random_permutation
from lopcc.local_search import LsMode, backward_pass, local_search
from lopcc.memetic import (
    EngineParams,
    Population,
    distance,
    init_population,
    pool_update,
    population_diversity,
    recombine,
    run,
    select_parents,
)

from conftest import ext, lcs_dp, rel_close

perms = st.integers(1, 30).flatmap(lambda n: st.tuples(st.permutations(range(n)), st.permutations(range(n))))


# --- distance -------------------------------------------------------------


def test_distance_identical_is_zero():
    a = ext(2, 3, 1, 4, 6, 5)
    assert distance(a, a) == 0


def test_distance_worked_pair():
    a, b = ext(2, 3, 1, 4, 6, 5), ext(4, 1, 2, 5, 6, 3)
    assert lcs_dp(a, b) == 2
    assert distance(a, b) == 4


def test_distance_reversal():
    assert distance(ext(1, 2, 3, 4), ext(4, 3, 2, 1)) == 3


def test_distance_length_mismatch():
    with pytest.raises(ValueError):
        distance([0, 1], [0, 1, 2])


@settings(max_examples=200, deadline=None)
@given(perms)
def test_distance_matches_dp_and_is_a_proper_metric_shape(pair):
    a, b = pair
    n = len(a)
    dab = distance(a, b)
    assert dab == n - lcs_dp(a, b)
    assert dab == distance(b, a)
    assert 0 <= dab <= n - 1
    assert (dab == 0) == (list(a) == list(b))


# --- diversity ------------------------------------------------------------


def _pop_from_perms(inst, perm_list):
    return Population.from_states([evaluate(inst, p) for p in perm_list])


def test_diversity_all_equal():
    inst = generate_random_instance(5, 1)
    pop = _pop_from_perms(inst, [range(5)] * 4)
    assert population_diversity(pop) == 0


def test_diversity_single_pair():
    inst = generate_random_instance(6, 1)
    pop = _pop_from_perms(inst, [ext(2, 3, 1, 4, 6, 5), ext(4, 1, 2, 5, 6, 3)])
    assert population_diversity(pop) == 4


def test_diversity_mean_of_three():
    pop = Population(members=[None] * 3, dist=np.array([[0, 2, 4], [2, 0, 6], [4, 6, 0]]))
    assert population_diversity(pop) == 4


def test_diversity_needs_two():
    inst = generate_random_instance(3, 1)
    with pytest.raises(ValueError):
        population_diversity(_pop_from_perms(inst, [range(3)]))


# --- recombination --------------------------------------------------------


def test_recombine_worked_example():
    a, b = ext(2, 3, 1, 4, 6, 5), ext(4, 1, 2, 5, 6, 3)
    child = recombine(a, b, 3, positions=[1, 3, 5])
    assert (child + 1).tolist() == [2, 4, 1, 5, 6, 3]


def test_recombine_equal_parents():
    a = ext(3, 1, 2, 5, 4)
    child = recombine(a, a, 3, make_rng(0))
    assert child.tolist() == a.tolist()


def test_recombine_full_reorder_adopts_second_parent():
    rng = make_rng(1)
    a, b = random_permutation(9, rng), random_permutation(9, rng)
    assert recombine(a, b, 9, rng).tolist() == b.tolist()


def test_recombine_rejects_bad_k():
    with pytest.raises(ValueError):
        recombine([0, 1, 2], [2, 1, 0], 4, make_rng(0))


@settings(max_examples=100, deadline=None)
@given(perms, st.integers(0, 2**32), st.data())
def test_recombine_postcondition(pair, seed, data):
    a, b = (np.array(x) for x in pair)
    n = len(a)
    k = data.draw(st.integers(1, n))
    positions = sorted(make_rng(seed).choice(n, size=k, replace=False).tolist())
    child = recombine(a, b, k, positions=positions)
    assert sorted(child.tolist()) == list(range(n))
    outside = [i for i in range(n) if i not in positions]
    assert child[outside].tolist() == a[outside].tolist()
    rank_b = {v: i for i, v in enumerate(b.tolist())}
    inside = [rank_b[v] for v in child[positions].tolist()]
    assert inside == sorted(inside)


# --- init / selection / pool update --------------------------------------


def test_init_single_vertex_degenerate():
    inst = Instance(d=[2.0], C=[[0.0]])
    pop = init_population(inst, EngineParams(), make_rng(0))
    assert len(pop) == 15
    assert pop.degenerate
    assert all(m.perm.tolist() == [0] for m in pop.members)


def test_init_distinct_fixpoints():
    inst = generate_random_instance(35, 3)
    params = EngineParams(seed=3)
    pop = init_population(inst, params, make_rng(3))
    assert len(pop) == 15 and not pop.degenerate
    keys = {m.perm.tobytes() for m in pop.members}
    assert len(keys) == 15
    for m in pop.members:
        # the last executed pass sequence (backward sweeps) has nothing left to do
        _, improved = backward_pass(m.copy(), inst, params.ls_config)
        assert not improved
        assert m.audit(inst)
    for i, j in itertools.combinations(range(15), 2):
        assert pop.dist[i, j] == distance(pop.members[i].perm, pop.members[j].perm)


def test_init_members_improve_on_their_starts():
    inst = generate_random_instance(20, 4)
    params = EngineParams()
    rng = make_rng(4)
    pop = init_population(inst, params, rng)
    # replay the first start: it is the first permutation drawn from the stream
    first = random_permutation(20, make_rng(4))
    assert pop.members[0].f <= evaluate(inst, first).f


def test_select_parents_two_members():
    inst = generate_random_instance(4, 1)
    pop = _pop_from_perms(inst, [ext(1, 2, 3, 4), ext(4, 3, 2, 1)])
    a, b = select_parents(pop, make_rng(0), EngineParams(pop_size=2))
    assert {a, b} == {0, 1}


def test_select_parents_equal_distances_first_draw():
    inst = generate_random_instance(3, 1)
    pop = _pop_from_perms(inst, [ext(1, 2, 3), ext(2, 3, 1), ext(3, 1, 2)])
    assert len(set(pop.dist[np.triu_indices(3, 1)].tolist())) == 1
    rng = make_rng(9)
    expected = tuple(int(x) for x in make_rng(9).choice(3, size=2, replace=False))
    assert select_parents(pop, rng, EngineParams(pop_size=3)) == expected


@pytest.mark.parametrize("seed", range(30))
def test_select_parents_respects_rule(seed):
    inst = generate_random_instance(10, seed)
    rng = make_rng(seed)
    # one far pair, everything else close
    base = np.arange(10)
    close = [np.r_[base[:8], base[9], base[8]], np.r_[base[1], base[0], base[2:]], base.copy()]
    members = [base[::-1].copy()] + close
    pop = _pop_from_perms(inst, members)
    pdi = population_diversity(pop)
    params = EngineParams(pop_size=4, max_parent_retries=50)
    a, b = select_parents(pop, rng, params)
    assert a != b
    assert pop.dist[a, b] >= pdi
    a, b = select_parents(pop, rng, EngineParams(pop_size=4, parent_rule="similar"))
    assert pop.dist[a, b] <= pdi


def test_pool_update_rejects_worse():
    inst = generate_random_instance(6, 2)
    pop = _pop_from_perms(inst, [random_permutation(6, make_rng(s)) for s in range(4)])
    worst = max(m.f for m in pop.members)
    off = evaluate(inst, np.arange(6))
    off.f = worst * 2
    before = [m.perm.tolist() for m in pop.members]
    assert not pool_update(pop, off)
    assert [m.perm.tolist() for m in pop.members] == before


def test_pool_update_rejects_duplicate():
    inst = generate_random_instance(6, 2)
    pop = _pop_from_perms(inst, [random_permutation(6, make_rng(s)) for s in range(4)])
    best = pop.members[pop.best_index()]
    assert not pool_update(pop, best.copy())


def test_pool_update_replaces_first_worst_on_ties():
    inst = Instance(d=np.ones(4), C=np.zeros((4, 4)))
    pop = _pop_from_perms(inst, [ext(1, 2, 3, 4), ext(2, 1, 3, 4), ext(3, 2, 1, 4)])
    off = evaluate(inst, ext(4, 3, 2, 1))
    off.f = 1.0
    assert pool_update(pop, off)
    assert pop.members[0] is off
    assert pop.dist[0, 1] == distance(off.perm, pop.members[1].perm)


@pytest.mark.parametrize("seed", range(10))
def test_pool_update_worst_never_increases(seed):
    inst = generate_random_instance(12, seed)
    rng = make_rng(seed)
    pop = init_population(inst, EngineParams(pop_size=6), rng)
    for _ in range(40):
        a, b = select_parents(pop, rng, EngineParams(pop_size=6))
        child = local_search(evaluate(inst, recombine(pop.members[a].perm, pop.members[b].perm, 6, rng)), inst)
        worst = max(m.f for m in pop.members)
        replaced = pool_update(pop, child)
        new_worst = max(m.f for m in pop.members)
        assert new_worst <= worst
        if replaced:
            assert child.f < worst


# --- params ---------------------------------------------------------------


@pytest.mark.parametrize(
    "kw", [dict(pop_size=1), dict(k_fraction=0), dict(k_fraction=1.5), dict(generation_limit=None), dict(parent_rule="x")]
)
def test_params_validation(kw):
    with pytest.raises(ValueError):
        EngineParams(**kw)


@pytest.mark.parametrize("n, k", [(1, 1), (3, 1), (6, 3), (7, 3), (150, 75)])
def test_k_rounding(n, k):
    assert EngineParams().k_for(n) == k


# --- run ------------------------------------------------------------------


def test_run_single_vertex():
    inst = Instance(d=[4.5], C=[[0.0]])
    stats = run(inst, EngineParams(generation_limit=5))
    assert stats.best_f == 4.5
    assert stats.generation_of_best == 0


def test_run_zero_costs():
    inst = Instance(d=[1.0, 2.0, 3.0, 4.0], C=np.zeros((4, 4)))
    stats = run(inst, EngineParams(generation_limit=10))
    assert stats.best_f == pytest.approx(10)
    assert stats.generation_of_best == 0


@pytest.mark.parametrize("seed", range(1, 31))
def test_run_matches_exact_on_small_instances(seed):
    n = 3 + seed % 5
    inst = generate_random_instance(n, 3000 + seed)
    stats = run(inst, EngineParams(seed=seed, generation_limit=50))
    assert rel_close(stats.best_f, brute_force(inst).optimum_f)


def test_run_trace_invariants():
    inst = generate_random_instance(30, 2)
    params = EngineParams(seed=2, generation_limit=40)
    stats = run(inst, params)
    assert len(stats.trace) == 41
    assert [t.generation for t in stats.trace] == list(range(41))
    best = [t.best_f for t in stats.trace]
    worst = [t.pop_worst_f for t in stats.trace]
    assert all(b <= a for a, b in zip(best, best[1:]))
    assert all(b <= a for a, b in zip(worst, worst[1:]))
    assert stats.generation_of_best <= params.generation_limit
    assert stats.time_to_best <= stats.time_total
    assert stats.ls_increases == 0 and stats.worst_increases == 0
    assert rel_close(evaluate(inst, stats.best_perm).f, stats.best_f)


def test_run_deterministic():
    inst = generate_random_instance(25, 5)
    params = EngineParams(seed=77, generation_limit=30)
    a, b = run(inst, params), run(inst, params)
    strip = lambda s: [(t.generation, t.best_f, t.pop_mean_f, t.pdi) for t in s.trace]
    assert strip(a) == strip(b)
    assert a.best_perm.tolist() == b.best_perm.tolist()
    assert a.generation_of_best == b.generation_of_best


def test_run_time_budget_sampling():
    inst = generate_random_instance(40, 1)
    params = EngineParams(generation_limit=None, time_budget=0.6, seed=1)
    stats = run(inst, params, sample_interval=0.2)
    assert len(stats.trace) >= 3
    assert stats.trace[0].elapsed_s == 0.0
    assert stats.trace[-1].elapsed_s >= 0.6


def test_shared_init_mode_gives_identical_first_sample():
    inst = generate_random_instance(30, 4)
    rows = []
    for mode in LsMode:
        p = EngineParams(seed=4, generation_limit=5, ls_mode=mode, init_ls_mode=LsMode.FORWARD_ONLY)
        t = run(inst, p).trace[0]
        rows.append((t.elapsed_s, t.pop_mean_f, t.pdi))
    assert rows[0] == rows[1]
