"""Deterministic spawning-node growth engine.

Two realizations of the same rules live here:

* a tick sweep (:class:`NetworkState` + :func:`advance_tick`) that keeps a
  literal count-down timer per node and examines every node once per tick;
* an event-driven runner (:func:`iter_spawn_events`) that keeps a heap of
  scheduled spawn ticks keyed on ``(tick, id)``.

Both must emit identical event logs.
"""

from __future__ import annotations

import heapq
import math
from collections.abc import Iterator, Sequence
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Literal, NamedTuple

import numpy as np

RoundingRule = Literal["ceiling", "floor"]
EngineKind = Literal["sweep", "event_driven"]

ROUNDING_RULES: tuple[str, ...] = ("ceiling", "floor")
ENGINES: tuple[str, ...] = ("sweep", "event_driven")

# The sweep starts here; ticks 1 and 2 are the births of the two seeds.
FIRST_TICK = 3


class ResourceLimitError(RuntimeError):
    """Raised when a run would grow past ``SimConfig.node_capacity``."""


@dataclass(frozen=True)
class SimConfig:
    """Run parameters. At least one of ``max_nodes`` / ``max_ticks`` is required.

    ``node_capacity`` is the declared memory bound: a run that would hold more
    nodes than this aborts with :class:`ResourceLimitError`. ``clock_model`` is
    reserved for desynchronized-clock experiments and only accepts
    ``"synchronized"``.
    """

    max_nodes: int | None = None
    max_ticks: int | None = None
    rounding_rule: RoundingRule = "ceiling"
    engine: EngineKind = "event_driven"
    node_capacity: int = 50_000_000
    clock_model: str = "synchronized"

    def __post_init__(self) -> None:
        if self.max_nodes is None and self.max_ticks is None:
            raise ValueError("SimConfig needs max_nodes or max_ticks")
        for name in ("max_nodes", "max_ticks"):
            value = getattr(self, name)
            if value is not None and (not isinstance(value, int) or value < 1):
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.rounding_rule not in ROUNDING_RULES:
            raise ValueError(f"unknown rounding_rule {self.rounding_rule!r}")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.node_capacity < 2:
            raise ValueError("node_capacity must be at least 2")
        if self.clock_model != "synchronized":
            raise NotImplementedError(f"clock model {self.clock_model!r} is not implemented")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> SimConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


class NodeRecord(NamedTuple):
    id: int
    parent_id: int | None
    birth_tick: int
    degree: int
    next_spawn_tick: int


class SpawnEvent(NamedTuple):
    tick: int
    parent_id: int
    child_id: int
    parent_degree_after: int


def spawn_interval(t: int, q_prior: int, rule: RoundingRule = "ceiling") -> int:
    """Ticks until a parent that just spawned at ``t`` spawns again.

    ``q_prior`` is the parent's degree before the new child is counted. The
    timer is set to ``t/q_prior - 1`` and the expiry is only noticed on the
    following examination, so the realized interval is ``t/q_prior``.
    """
    if q_prior < 1:
        raise ValueError(f"q_prior must be >= 1, got {q_prior}")
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if rule == "ceiling":
        return -(-t // q_prior)
    if rule == "floor":
        return max(t // q_prior, 1)
    raise ValueError(f"unknown rounding rule {rule!r}")


def child_first_spawn(t: int) -> int:
    """First spawn tick of a child born at ``t`` (timer ``t - 1`` plus discovery)."""
    if t < 2:
        raise ValueError(f"birth tick must be >= 2, got {t}")
    return 2 * t


def spawn_time_recursion(t1: int | Fraction, n: int) -> Fraction:
    """Continuum spawn time of the ``n``-th spawn: ``T(k) = T(k-1) * k/(k-1)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if t1 < 1:
        raise ValueError("T1 must be >= 1")
    value = Fraction(t1)
    for k in range(2, n + 1):
        value = value + value / (k - 1)
    return value


def _reset_timer(t: int, q_prior: int, rule: RoundingRule) -> int | Fraction:
    if q_prior < 1:
        raise ValueError(f"q_prior must be >= 1, got {q_prior}")
    if rule == "floor":
        return max(t // q_prior, 1) - 1
    timer = Fraction(t, q_prior) - 1
    return timer.numerator if timer.denominator == 1 else timer


@dataclass
class NetworkState:
    """Mutable sweep state; index 0 of every list is a placeholder."""

    tick: int
    rounding_rule: RoundingRule = "ceiling"
    parent: list[int] = field(default_factory=lambda: [0])
    birth: list[int] = field(default_factory=lambda: [0])
    degree: list[int] = field(default_factory=lambda: [0])
    timer: list[int | Fraction] = field(default_factory=lambda: [0])

    @property
    def node_count(self) -> int:
        return len(self.degree) - 1

    @property
    def edge_count(self) -> int:
        return self.node_count - 1

    def next_spawn_tick(self, node: int) -> int:
        # A node examined at the current tick spawns once its timer is <= 0.
        return self.tick + max(0, math.ceil(self.timer[node]))

    def node(self, node: int) -> NodeRecord:
        return NodeRecord(
            node,
            self.parent[node] or None,
            self.birth[node],
            self.degree[node],
            self.next_spawn_tick(node),
        )


def seed_network(rounding_rule: RoundingRule = "ceiling") -> NetworkState:
    """Two connected seeds at the start of tick 3: node 1 due now, node 2 at tick 4."""
    state = NetworkState(tick=FIRST_TICK, rounding_rule=rounding_rule)
    state.parent += [0, 1]
    state.birth += [1, 2]
    state.degree += [1, 1]
    state.timer += [0, 1]
    return state


def advance_tick(state: NetworkState) -> list[SpawnEvent]:
    """Examine every existing node once, in id order, then move to the next tick."""
    t = state.tick
    rule = state.rounding_rule
    degree, timer = state.degree, state.timer
    events = []
    existing = state.node_count
    for node in range(1, existing + 1):
        if timer[node] > 0:
            timer[node] -= 1
            continue
        q_prior = degree[node]
        child = len(degree)
        state.parent.append(node)
        state.birth.append(t)
        degree.append(1)
        timer.append(t - 1)
        degree[node] = q_prior + 1
        timer[node] = _reset_timer(t, q_prior, rule)
        events.append(SpawnEvent(t, node, child, q_prior + 1))
    state.tick = t + 1
    return events


def iter_spawn_events(
    rounding_rule: RoundingRule = "ceiling",
    max_ticks: int | None = None,
) -> Iterator[SpawnEvent]:
    """Stream spawn events from the scheduled-heap engine, tick by tick.

    Ticks with no births produce nothing. Without ``max_ticks`` the stream is
    unbounded; callers stop consuming when they have enough.
    """
    degree = [0, 1, 1]
    heap = [(FIRST_TICK, 1), (child_first_spawn(2), 2)]
    next_child = 3
    while heap:
        t, node = heap[0]
        if max_ticks is not None and t > max_ticks:
            return
        heapq.heappop(heap)
        q_prior = degree[node]
        degree[node] = q_prior + 1
        degree.append(1)
        heapq.heappush(heap, (t + spawn_interval(t, q_prior, rounding_rule), node))
        heapq.heappush(heap, (child_first_spawn(t), next_child))
        yield SpawnEvent(t, node, next_child, q_prior + 1)
        next_child += 1


class EventLog(Sequence):
    """Read-only view of the event columns as :class:`SpawnEvent` tuples."""

    def __init__(self, tick: np.ndarray, parent: np.ndarray, parent_degree_after: np.ndarray):
        self.tick = tick
        self.parent = parent
        self.parent_degree_after = parent_degree_after

    def __len__(self) -> int:
        return len(self.tick)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return SpawnEvent(int(self.tick[i]), int(self.parent[i]), i + 3, int(self.parent_degree_after[i]))

    def __iter__(self) -> Iterator[SpawnEvent]:
        for i, (t, p, d) in enumerate(
            zip(self.tick.tolist(), self.parent.tolist(), self.parent_degree_after.tolist())
        ):
            yield SpawnEvent(t, p, i + 3, d)


@dataclass(frozen=True, eq=False)
class SimResult:
    """Complete outcome of a run, stored column-wise.

    Node arrays are indexed by ``id - 1``. Event child ids are implicit
    (``3, 4, 5, ...`` in log order). ``births_per_tick`` covers every swept
    tick, zero-birth ticks included.
    """

    config: SimConfig
    final_tick: int
    parent: np.ndarray
    birth_tick: np.ndarray
    degree: np.ndarray
    next_spawn_tick: np.ndarray
    event_tick: np.ndarray
    event_parent: np.ndarray
    event_parent_degree: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.degree)

    @property
    def event_count(self) -> int:
        return len(self.event_tick)

    @property
    def events(self) -> EventLog:
        return EventLog(self.event_tick, self.event_parent, self.event_parent_degree)

    @property
    def nodes(self) -> list[NodeRecord]:
        return [self.node(i) for i in range(1, self.node_count + 1)]

    def node(self, node_id: int) -> NodeRecord:
        i = node_id - 1
        parent = int(self.parent[i])
        return NodeRecord(
            node_id,
            parent or None,
            int(self.birth_tick[i]),
            int(self.degree[i]),
            int(self.next_spawn_tick[i]),
        )

    @property
    def births_per_tick(self) -> list[tuple[int, int]]:
        ticks, counts = self.births_series()
        return list(zip(ticks.tolist(), counts.tolist()))

    def births_series(self) -> tuple[np.ndarray, np.ndarray]:
        ticks = np.arange(FIRST_TICK, self.final_tick + 1, dtype=np.int64)
        counts = np.bincount(self.event_tick - FIRST_TICK, minlength=len(ticks)) if len(ticks) else np.zeros(0)
        return ticks, counts.astype(np.int64)

    def spawn_ticks(self, node_id: int) -> list[int]:
        return self.event_tick[self.event_parent == node_id].tolist()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimResult):
            return NotImplemented
        if self.config != other.config or self.final_tick != other.final_tick:
            return False
        return all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in (
                "parent",
                "birth_tick",
                "degree",
                "next_spawn_tick",
                "event_tick",
                "event_parent",
                "event_parent_degree",
            )
        )

    __hash__ = None


def _done(config: SimConfig, tick: int, node_count: int) -> bool:
    if config.max_nodes is not None and node_count >= config.max_nodes:
        return True
    return config.max_ticks is not None and tick >= config.max_ticks


def _check_capacity(config: SimConfig, node_count: int) -> None:
    if node_count > config.node_capacity:
        raise ResourceLimitError(
            f"run would hold {node_count} nodes, above node_capacity={config.node_capacity}"
        )


def result_from_events(
    config: SimConfig,
    final_tick: int,
    event_tick: np.ndarray,
    event_parent: np.ndarray,
) -> SimResult:
    """Rebuild every per-node column from the two event columns alone."""
    event_tick = np.asarray(event_tick, dtype=np.int64)
    event_parent = np.asarray(event_parent, dtype=np.int64)
    n = len(event_tick) + 2
    parent = np.zeros(n, dtype=np.int64)
    birth = np.zeros(n, dtype=np.int64)
    parent[1] = 1
    birth[:2] = (1, 2)
    parent[2:] = event_parent
    birth[2:] = event_tick
    # seeds start at degree 1 (their shared edge)
    degree = [0, 1, 1] + [1] * (n - 2)
    nxt = [0, FIRST_TICK, child_first_spawn(2)] + [2 * t for t in event_tick.tolist()]
    parent_degree = []
    rule = config.rounding_rule
    for t, p in zip(event_tick.tolist(), event_parent.tolist()):
        q_prior = degree[p]
        degree[p] = q_prior + 1
        nxt[p] = t + spawn_interval(t, q_prior, rule)
        parent_degree.append(q_prior + 1)
    return SimResult(
        config=config,
        final_tick=final_tick,
        parent=parent,
        birth_tick=birth,
        degree=np.asarray(degree[1:], dtype=np.int64),
        next_spawn_tick=np.asarray(nxt[1:], dtype=np.int64),
        event_tick=event_tick,
        event_parent=event_parent,
        event_parent_degree=np.asarray(parent_degree, dtype=np.int64),
    )


def _run_sweep(config: SimConfig) -> SimResult:
    state = seed_network(config.rounding_rule)
    ticks: list[int] = []
    parents: list[int] = []
    final_tick = FIRST_TICK - 1
    while not _done(config, final_tick, state.node_count):
        events = advance_tick(state)
        final_tick = state.tick - 1
        _check_capacity(config, state.node_count)
        for ev in events:
            ticks.append(ev.tick)
            parents.append(ev.parent_id)
    result = result_from_events(config, final_tick, np.array(ticks), np.array(parents))
    # the sweep's own bookkeeping must agree with the replay
    assert result.degree.tolist() == state.degree[1:]
    assert result.next_spawn_tick.tolist() == [state.next_spawn_tick(i) for i in range(1, state.node_count + 1)]
    return result


def _run_event_driven(config: SimConfig) -> SimResult:
    ticks: list[int] = []
    parents: list[int] = []
    degree = [0, 1, 1]
    nxt = [0, FIRST_TICK, child_first_spawn(2)]
    parent_degree: list[int] = []
    rule = config.rounding_rule
    heap = [(FIRST_TICK, 1), (nxt[2], 2)]
    node_count = 2
    final_tick = FIRST_TICK - 1
    push, pop = heapq.heappush, heapq.heappop
    while not _done(config, final_tick, node_count):
        t = heap[0][0]
        if config.max_ticks is not None and t > config.max_ticks:
            final_tick = config.max_ticks
            break
        while heap[0][0] == t:
            _, node = pop(heap)
            q_prior = degree[node]
            degree[node] = q_prior + 1
            node_count += 1
            if node_count > config.node_capacity:
                _check_capacity(config, node_count)
            degree.append(1)
            nxt[node] = t + spawn_interval(t, q_prior, rule)
            nxt.append(2 * t)
            push(heap, (nxt[node], node))
            push(heap, (2 * t, node_count))
            ticks.append(t)
            parents.append(node)
            parent_degree.append(q_prior + 1)
        final_tick = t
    n = node_count
    parent = np.zeros(n, dtype=np.int64)
    birth = np.zeros(n, dtype=np.int64)
    parent[1] = 1
    birth[:2] = (1, 2)
    parent[2:] = parents
    birth[2:] = ticks
    return SimResult(
        config=config,
        final_tick=final_tick,
        parent=parent,
        birth_tick=birth,
        degree=np.asarray(degree[1:], dtype=np.int64),
        next_spawn_tick=np.asarray(nxt[1:], dtype=np.int64),
        event_tick=np.asarray(ticks, dtype=np.int64),
        event_parent=np.asarray(parents, dtype=np.int64),
        event_parent_degree=np.asarray(parent_degree, dtype=np.int64),
    )


def run(config: SimConfig) -> SimResult:
    """Run to the stop criterion with the engine named in ``config``.

    A ``max_nodes`` stop finishes the whole tick in which the threshold is
    crossed, so the final population can exceed ``max_nodes``.
    """
    if config.engine == "sweep":
        return _run_sweep(config)
    return _run_event_driven(config)


@dataclass
class TreeReport:
    valid: bool
    node_count: int
    edge_count: int
    violation: str | None = None
    event_index: int | None = None


def verify_tree(result: SimResult) -> TreeReport:
    """Structural check of a run; reports the first violation found."""
    n = result.node_count
    edges = result.event_count + 1 if n >= 2 else 0

    def bad(msg: str, index: int | None = None) -> TreeReport:
        return TreeReport(False, n, edges, msg, index)

    if len(result.parent) != n or len(result.birth_tick) != n:
        return bad("node columns have inconsistent lengths")
    if n != result.event_count + 2:
        return bad(f"node count {n} != event count {result.event_count} + 2")
    children = np.zeros(n + 1, dtype=np.int64)
    last_tick = 0
    for i, ev in enumerate(result.events):
        if ev.child_id != i + 3:
            return bad(f"child id {ev.child_id} out of sequence, expected {i + 3}", i)
        if not 1 <= ev.parent_id < ev.child_id:
            return bad(f"parent {ev.parent_id} does not precede child {ev.child_id}", i)
        if ev.tick < last_tick:
            return bad(f"tick {ev.tick} precedes earlier event tick {last_tick}", i)
        if int(result.parent[ev.child_id - 1]) != ev.parent_id:
            return bad(f"node {ev.child_id} parent column disagrees with event", i)
        if int(result.birth_tick[ev.child_id - 1]) != ev.tick:
            return bad(f"node {ev.child_id} birth tick disagrees with event", i)
        last_tick = ev.tick
        children[ev.parent_id] += 1
        # node 2 plays the role of node 1's parent link, so every node gets the +1
        if ev.parent_degree_after != children[ev.parent_id] + 1:
            return bad(f"parent degree after event is {ev.parent_degree_after}", i)
    expected = children[1:] + 1
    mismatch = np.flatnonzero(result.degree != expected)
    if len(mismatch):
        node = int(mismatch[0]) + 1
        return bad(f"node {node} degree {int(result.degree[node - 1])} != {int(expected[node - 1])}")
    if int(result.degree.sum()) != 2 * (n - 1):
        return bad("degree sum is not 2 * (nodes - 1)")
    # every node reaches node 1 because parents always precede children
    if n >= 2 and (result.parent[1] != 1 or result.parent[0] != 0):
        return bad("seed nodes are not linked")
    if np.any(np.diff(result.birth_tick) < 0):
        return bad("birth ticks decrease with id")
    if np.any(result.next_spawn_tick <= result.birth_tick):
        node = int(np.flatnonzero(result.next_spawn_tick <= result.birth_tick)[0]) + 1
        return bad(f"node {node} is scheduled to spawn before it is born")
    return TreeReport(True, n, edges)
