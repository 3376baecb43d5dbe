import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import evaluated
from mopo.core import ContractViolation, ObjectiveVector
from mopo.pareto import (
    crowding_distance,
    dominates,
    fast_non_dominated_sort,
    hypervolume,
    pareto_selection,
)
from oracles import brute_crowding, brute_hypervolume, brute_ranks, brute_selection

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
# a coarse grid makes ties and duplicates common
grid = st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0])


def vectors(m, values=unit, min_size=1, max_size=30):
    return st.lists(st.tuples(*[values] * m), min_size=min_size, max_size=max_size)


def test_dominates_examples():
    assert dominates((0.9, 0.5), (0.8, 0.5))
    assert not dominates((0.9, 0.4), (0.8, 0.5))
    assert not dominates((0.5, 0.5), (0.5, 0.5))


def test_dominates_rejects_mismatched_orderings():
    a = ObjectiveVector((0.1, 0.2), ("x", "y"))
    b = ObjectiveVector((0.1, 0.2), ("y", "x"))
    with pytest.raises(ContractViolation):
        dominates(a, b)
    with pytest.raises(ContractViolation):
        dominates((0.1,), (0.1, 0.2))


@given(st.integers(2, 3).flatmap(lambda m: st.tuples(*[st.tuples(*[grid] * m)] * 3)))
def test_dominance_is_a_strict_partial_order(triple):
    a, b, c = triple
    assert not dominates(a, a)
    assert not (dominates(a, b) and dominates(b, a))
    if dominates(a, b) and dominates(b, c):
        assert dominates(a, c)


def test_sort_example():
    fronts = fast_non_dominated_sort([(0.9, 0.1), (0.1, 0.9), (0.5, 0.5), (0.4, 0.4)])
    assert [f.member_indices for f in fronts] == [(0, 1, 2), (3,)]


def test_sort_rejects_empty_population():
    with pytest.raises(ContractViolation):
        fast_non_dominated_sort([])


@settings(max_examples=200)
@given(st.integers(2, 3).flatmap(lambda m: vectors(m, st.one_of(unit, grid))))
def test_sort_matches_brute_force(points):
    ranks = brute_ranks(points)
    fronts = fast_non_dominated_sort(points)
    got = [None] * len(points)
    for f in fronts:
        for i in f.member_indices:
            got[i] = f.rank
    assert got == ranks
    for f in fronts:
        assert list(f.member_indices) == sorted(f.member_indices)


def test_crowding_small_fronts_are_all_boundary():
    assert crowding_distance([(0.1, 0.2)]) == [math.inf]
    assert crowding_distance([(0.1, 0.2), (0.2, 0.1)]) == [math.inf, math.inf]
    assert crowding_distance([]) == []


def test_crowding_example():
    # middle point: gaps (1-0)/1 on both objectives
    d = crowding_distance([(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)])
    assert d == [math.inf, 2.0, math.inf]


def test_crowding_zero_range_objective_contributes_nothing():
    d = crowding_distance([(0.0, 0.5), (0.4, 0.5), (1.0, 0.5)])
    assert d[1] == pytest.approx(1.0)


def test_crowding_duplicates_share_a_distance():
    d = crowding_distance([(0.0, 1.0), (0.5, 0.5), (0.5, 0.5), (1.0, 0.0)])
    assert d[1] == d[2] == 2.0


@settings(max_examples=200)
@given(st.integers(2, 3).flatmap(lambda m: vectors(m, st.one_of(unit, grid))), st.randoms())
def test_crowding_matches_oracle_and_ignores_order(points, rnd):
    expected = brute_crowding(points)
    assert crowding_distance(points) == pytest.approx(expected)
    perm = list(range(len(points)))
    rnd.shuffle(perm)
    shuffled = crowding_distance([points[i] for i in perm])
    assert shuffled == pytest.approx([expected[i] for i in perm])


def _population(points):
    return [evaluated(p, pid=f"{i:04d}") for i, p in enumerate(points)]


def test_selection_keeps_whole_fronts_then_truncates():
    pop = _population([(1, 0), (0, 1), (0.5, 0.5), (0.4, 0.6), (0.2, 0.2)])
    chosen = pareto_selection(pop, G=3)
    # rank 0 has four members; besides the two extremes, (0.5,0.5) has
    # crowding 0.6+0.6 against 0.5+0.5 for (0.4,0.6)
    assert {e.id for e in chosen} == {"0000", "0001", "0002"}
    assert all(e.pareto_rank == 0 for e in chosen)


def test_selection_elites_rescue_an_objective_champion_of_rank_two():
    # three points tied on objective 0; the lowest id is the champion
    pop = _population([(1.0, 0.1), (1.0, 0.2), (1.0, 0.3), (0.0, 0.9)])
    chosen = pareto_selection(pop, G=2, top_n=1)
    assert [e.id for e in chosen][:2] == ["0002", "0003"]
    assert chosen[2].id == "0000" and chosen[2].pareto_rank == 2
    assert len(chosen) == 3


def test_selection_prefers_distinct_vectors_over_copies():
    pop = _population([(1, 0)] * 5 + [(0, 1), (0.5, 0.5)])
    chosen = pareto_selection(pop, G=3)
    assert sorted(e.fitness.scores for e in chosen) == [(0, 1), (0.5, 0.5), (1, 0)]


def test_selection_contract():
    with pytest.raises(ContractViolation):
        pareto_selection([], 3)
    with pytest.raises(ContractViolation):
        pareto_selection(_population([(0.1, 0.2)]), 0)


@settings(max_examples=100)
@given(st.integers(2, 3).flatmap(lambda m: vectors(m, st.one_of(unit, grid), max_size=25)),
       st.integers(1, 12), st.integers(0, 2))
def test_selection_matches_brute_force(points, G, top_n):
    pop = _population(points)
    ids = [e.id for e in pop]
    got = [ids.index(e.id) for e in pareto_selection(pop, G, top_n)]
    assert got == brute_selection(points, ids, G, top_n)


def test_selection_output_does_not_depend_on_input_order():
    rng = random.Random(3)
    pop = _population([(rng.random(), rng.random()) for _ in range(40)])
    a = pareto_selection(pop, 7, 1)
    shuffled = pop[:]
    rng.shuffle(shuffled)
    b = pareto_selection(shuffled, 7, 1)
    assert sorted(e.id for e in a) == sorted(e.id for e in b)


def test_hypervolume_examples():
    assert hypervolume([(1, 1)], (0, 0)) == 1.0
    assert hypervolume([(1, 0.5), (0.5, 1)], (0, 0)) == 0.75
    assert hypervolume([], (0, 0)) == 0.0
    assert hypervolume([(0.5, 0.5, 0.5)], (0, 0, 0)) == 0.125


def test_hypervolume_rejects_points_below_reference():
    with pytest.raises(ContractViolation):
        hypervolume([(0.5, 0.1)], (0.2, 0.2))
    with pytest.raises(ContractViolation):
        hypervolume([(0.5, 0.5, 0.5, 0.5)], (0, 0, 0, 0))


@settings(max_examples=150)
@given(st.integers(2, 3).flatmap(lambda m: vectors(m, st.one_of(unit, grid), max_size=7)))
def test_hypervolume_matches_inclusion_exclusion(points):
    ref = (0.0,) * len(points[0])
    assert hypervolume(points, ref) == pytest.approx(brute_hypervolume(points, ref), abs=1e-12)


@given(st.integers(2, 3).flatmap(lambda m: st.tuples(vectors(m), st.tuples(*[unit] * m))))
def test_hypervolume_never_decreases_when_a_point_is_added(case):
    points, extra = case
    ref = (0.0,) * len(extra)
    assert hypervolume(points + [extra], ref) >= hypervolume(points, ref) - 1e-12


def test_numpy_input_is_accepted():
    fronts = fast_non_dominated_sort(np.array([[0.1, 0.2], [0.2, 0.1]]))
    assert fronts[0].member_indices == (0, 1)
