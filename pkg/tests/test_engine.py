from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spawnnet.engine import (
    NodeRecord,
    ResourceLimitError,
    SimConfig,
    SimResult,
    SpawnEvent,
    advance_tick,
    child_first_spawn,
    iter_spawn_events,
    run,
    seed_network,
    spawn_interval,
    spawn_time_recursion,
    verify_tree,
)

# Hand trace of ticks 3..10 from the timer rules.
FIRST_EVENTS = [
    SpawnEvent(3, 1, 3, 2),
    SpawnEvent(4, 2, 4, 2),
    SpawnEvent(6, 1, 5, 3),
    SpawnEvent(6, 3, 6, 2),
    SpawnEvent(8, 2, 7, 3),
    SpawnEvent(8, 4, 8, 2),
    SpawnEvent(9, 1, 9, 4),
]


def _event_columns(result: SimResult):
    return result.event_tick.tolist(), result.event_parent.tolist(), result.event_parent_degree.tolist()


def test_seed_network():
    state = seed_network()
    assert state.tick == 3
    assert state.node(1) == NodeRecord(1, None, 1, 1, 3)
    assert state.node(2) == NodeRecord(2, 1, 2, 1, 4)
    assert state.edge_count == 1
    assert sum(state.degree) == 2


@pytest.mark.parametrize(
    "t, q, rule, expected",
    [(4, 1, "ceiling", 4), (54, 18, "ceiling", 3), (7, 2, "ceiling", 4), (7, 2, "floor", 3), (1, 5, "floor", 1)],
)
def test_spawn_interval(t, q, rule, expected):
    assert spawn_interval(t, q, rule) == expected


def test_spawn_interval_rejects_zero_degree():
    with pytest.raises(ValueError):
        spawn_interval(5, 0)


@given(t=st.integers(1, 10**6), q=st.integers(1, 10**4), rule=st.sampled_from(["ceiling", "floor"]))
def test_spawn_interval_positive(t, q, rule):
    interval = spawn_interval(t, q, rule)
    assert interval >= 1
    if rule == "ceiling":
        assert interval == -(-Fraction(t, q) // 1)


@pytest.mark.parametrize("t, expected", [(2, 4), (3, 6), (4, 8)])
def test_child_first_spawn(t, expected):
    assert child_first_spawn(t) == expected


@pytest.mark.parametrize("t1, n, expected", [(4, 4, 16), (7, 1, 7), (3, 18, 54)])
def test_spawn_time_recursion(t1, n, expected):
    assert spawn_time_recursion(t1, n) == expected


@given(t1=st.integers(1, 1000), n=st.integers(1, 60))
def test_spawn_time_recursion_closed_form(t1, n):
    assert spawn_time_recursion(t1, n) == n * t1


def test_advance_tick_hand_trace():
    state = seed_network()
    log = []
    per_tick = {}
    while state.tick <= 10:
        t = state.tick
        events = advance_tick(state)
        per_tick[t] = events
        log += events
    assert log == FIRST_EVENTS
    assert per_tick[3] == [SpawnEvent(3, 1, 3, 2)]
    assert per_tick[5] == []
    assert [(e.parent_id, e.child_id) for e in per_tick[6]] == [(1, 5), (3, 6)]


def test_children_wait_until_next_tick():
    state = seed_network()
    advance_tick(state)  # node 3 born at tick 3
    assert state.node(3).next_spawn_tick == 6
    assert state.timer[3] == 2


def test_event_stream_matches_hand_trace():
    events = list(iter_spawn_events(max_ticks=10))
    assert events == FIRST_EVENTS


def test_node_two_schedule():
    result = run(SimConfig(max_ticks=16))
    assert result.spawn_ticks(2) == [4, 8, 12, 16]


def test_node_one_spawns_on_multiples_of_three():
    result = run(SimConfig(max_ticks=54))
    assert result.spawn_ticks(1) == list(range(3, 55, 3))


def test_exact_division_schedule():
    # every interval divides exactly, so each node spawns at k * T1
    result = run(SimConfig(max_ticks=400))
    for node in (1, 2, 3, 7, 20, 50):
        ticks = result.spawn_ticks(node)
        first = ticks[0]
        assert ticks == [spawn_time_recursion(first, k) for k in range(1, len(ticks) + 1)]


def test_births_at_tick_54():
    result = run(SimConfig(max_ticks=54))
    at = [e for e in result.events if e.tick == 54]
    assert [(e.parent_id, e.child_id) for e in at] == [(1, 94), (3, 95), (9, 96), (36, 97)]
    assert dict(result.births_per_tick)[53] == 0


def test_stop_completes_the_tick():
    result = run(SimConfig(max_nodes=95))
    # tick 54 crosses 95 nodes; the whole tick is kept
    assert result.final_tick == 54
    assert result.node_count == 97


@pytest.mark.parametrize("engine", ["sweep", "event_driven"])
def test_seed_only_run(engine):
    result = run(SimConfig(max_ticks=2, engine=engine))
    assert result.node_count == 2
    assert result.event_count == 0
    assert result.final_tick == 2
    assert verify_tree(result).valid


@pytest.mark.parametrize("rule", ["ceiling", "floor"])
def test_engines_identical_at_500_ticks(rule):
    sweep = run(SimConfig(max_ticks=500, rounding_rule=rule, engine="sweep"))
    event = run(SimConfig(max_ticks=500, rounding_rule=rule, engine="event_driven"))
    assert _event_columns(sweep) == _event_columns(event)
    assert np.array_equal(sweep.degree, event.degree)
    assert np.array_equal(sweep.next_spawn_tick, event.next_spawn_tick)
    assert sweep.final_tick == event.final_tick == 500


@settings(max_examples=25, deadline=None)
@given(
    max_ticks=st.integers(1, 500),
    rule=st.sampled_from(["ceiling", "floor"]),
)
def test_engine_equivalence_property(max_ticks, rule):
    sweep = run(SimConfig(max_ticks=max_ticks, rounding_rule=rule, engine="sweep"))
    event = run(SimConfig(max_ticks=max_ticks, rounding_rule=rule))
    assert _event_columns(sweep) == _event_columns(event)
    assert sweep.final_tick == event.final_tick


@settings(max_examples=20, deadline=None)
@given(max_nodes=st.integers(1, 3000))
def test_engine_equivalence_node_stop(max_nodes):
    sweep = run(SimConfig(max_nodes=max_nodes, engine="sweep"))
    event = run(SimConfig(max_nodes=max_nodes))
    assert _event_columns(sweep) == _event_columns(event)
    assert sweep.final_tick == event.final_tick
    assert event.node_count >= max_nodes


def test_determinism():
    a = run(SimConfig(max_nodes=5000))
    b = run(SimConfig(max_nodes=5000))
    assert a == b


def test_invariants_on_medium_run():
    result = run(SimConfig(max_nodes=20_000))
    assert result.node_count == result.event_count + 2
    assert int(result.degree.sum()) == 2 * (result.node_count - 1)
    assert np.all(np.diff(result.birth_tick) >= 0)
    assert np.all(result.next_spawn_tick > result.birth_tick)
    assert np.all(result.parent[1:] < np.arange(2, result.node_count + 1))
    ticks = result.event_tick
    parents = result.event_parent
    same = ticks[1:] == ticks[:-1]
    assert np.all(parents[1:][same] > parents[:-1][same])


def test_verify_tree_small(small_run):
    report = verify_tree(small_run)
    assert report.valid
    assert report.edge_count == small_run.node_count - 1


def test_verify_tree_forged_duplicate_child():
    result = run(SimConfig(max_nodes=200))
    tick = result.event_tick.copy()
    parent = result.event_parent.copy()

    class Forged(SimResult):
        @property
        def events(self):
            evs = list(super().events)
            evs[10] = evs[10]._replace(child_id=evs[9].child_id)
            return evs

    forged = Forged(**{**result.__dict__, "event_tick": tick, "event_parent": parent})
    report = verify_tree(forged)
    assert not report.valid
    assert report.event_index == 10
    assert "child id" in report.violation


def test_verify_tree_bad_degree():
    result = run(SimConfig(max_nodes=200))
    degree = result.degree.copy()
    degree[5] += 1
    broken = SimResult(**{**result.__dict__, "degree": degree})
    report = verify_tree(broken)
    assert not report.valid
    assert "node 6" in report.violation


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig()
    with pytest.raises(ValueError):
        SimConfig(max_nodes=0)
    with pytest.raises(ValueError):
        SimConfig(max_ticks=10, rounding_rule="nearest")
    with pytest.raises(NotImplementedError):
        SimConfig(max_ticks=10, clock_model="jittered")


def test_resource_limit():
    with pytest.raises(ResourceLimitError):
        run(SimConfig(max_nodes=10_000, node_capacity=500))
    with pytest.raises(ResourceLimitError):
        run(SimConfig(max_nodes=10_000, node_capacity=500, engine="sweep"))


def test_event_log_view(small_run):
    events = small_run.events
    assert len(events) == small_run.event_count
    assert events[0] == SpawnEvent(3, 1, 3, 2)
    assert events[-1].child_id == small_run.node_count
    assert [e.child_id for e in events] == list(range(3, small_run.node_count + 1))
    assert events[:2] == list(events)[:2]
