"""Trajectory sampling and incremental range / trace-digraph state.

Positions and steps are stored as raw payloads (see :mod:`rangewalk.groups`)
so that million-step trajectories stay cheap; wrap single values in
``GroupElement`` when the object API is wanted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import groups
from .errors import StructuralError, ValidationError
from .groups import GroupDescriptor, StepDistribution
from .streams import RngStreamSpec, Stream


@dataclass(frozen=True)
class Trajectory:
    """Steps X_1..X_n and positions S_0..S_n of one sampled walk."""

    group: GroupDescriptor
    steps: tuple
    positions: tuple
    stream: RngStreamSpec | None = None

    def __post_init__(self):
        if len(self.positions) != len(self.steps) + 1:
            raise ValidationError("positions must contain one more entry than steps")

    @property
    def n(self) -> int:
        return len(self.steps)

    def prefix(self, k: int) -> "Trajectory":
        return Trajectory(self.group, self.steps[:k], self.positions[: k + 1], self.stream)


@dataclass(frozen=True)
class RangeState:
    """The visited set R_n together with the endpoint S_n.

    On the integer line the visited set is always an interval and is stored
    as its two ends; other groups store the set itself.
    """

    group: GroupDescriptor
    endpoint: object
    n: int
    interval: tuple[int, int] | None = None
    members: frozenset | None = None

    @property
    def size(self) -> int:
        if self.interval is not None:
            return self.interval[1] - self.interval[0] + 1
        return len(self.members)

    @property
    def visited(self) -> frozenset:
        if self.interval is not None:
            lo, hi = self.interval
            return frozenset(range(lo, hi + 1))
        return self.members

    def __contains__(self, value) -> bool:
        if self.interval is not None:
            return self.interval[0] <= value <= self.interval[1]
        return value in self.members

    def key(self):
        """Canonical hashable key of (R_n, S_n)."""
        return (self.range_key(), self.endpoint)

    def range_key(self):
        if self.interval is not None:
            return self.interval
        return tuple(sorted(self.members, key=lambda v: groups.sort_key(self.group, v)))


@dataclass(frozen=True)
class TraceDigraph:
    """Vertices, directed edges and traversal counts left by the first n steps."""

    group: GroupDescriptor
    vertices: frozenset
    edges: dict = field(hash=False)  # (u, v) -> positive traversal count
    n: int = 0

    def weight(self, u, v) -> int:
        return self.edges.get((u, v), 0)

    def total_weight(self) -> int:
        return sum(self.edges.values())

    def key(self):
        """Canonical hashable key of the digraph (vertex set plus weighted edges)."""
        skey = lambda v: groups.sort_key(self.group, v)
        verts = tuple(sorted(self.vertices, key=skey))
        edges = tuple(sorted(((u, v, c) for (u, v), c in self.edges.items()),
                             key=lambda t: (skey(t[0]), skey(t[1]))))
        return (verts, edges)

    def __eq__(self, other):
        if not isinstance(other, TraceDigraph):
            return NotImplemented
        return (self.group == other.group and self.vertices == other.vertices
                and self.edges == other.edges and self.n == other.n)

    def __hash__(self):
        return hash((self.group, self.key(), self.n))


class WalkAccumulator:
    """Incremental (range, endpoint, digraph) state with O(1) undo.

    ``push(step)`` advances the walk by one step; ``pop()`` rewinds it.  The
    undo support is what makes exhaustive path enumeration affordable: the
    exact-law engines drive one accumulator depth-first over all step
    sequences instead of rebuilding state per path.

    ``interval=True`` (legal only when :func:`groups.interval_ranges` holds
    for the driving measure) stores range keys as (lo, hi) pairs.
    """

    __slots__ = ("group", "_kind", "_interval", "pos", "n", "lo", "hi",
                 "counts", "edges", "_undo")

    def __init__(self, group: GroupDescriptor, interval: bool = False):
        self.group = group
        self._kind = group.kind
        self._interval = interval and group.kind == "Z"
        self.pos = groups.identity_value(group)
        self.n = 0
        self.lo = 0
        self.hi = 0
        self.counts = {self.pos: 1}  # visit multiplicities, for undo
        self.edges = {}
        self._undo = []

    def push(self, step) -> None:
        old_pos = self.pos
        new_pos = groups.mul_values(self.group, old_pos, step)
        edge = (old_pos, new_pos)
        c = self.edges.get(edge, 0)
        self.edges[edge] = c + 1
        fresh = False
        if self._kind == "Z":
            rec = (old_pos, self.lo, self.hi)
            if new_pos < self.lo:
                self.lo = new_pos
            elif new_pos > self.hi:
                self.hi = new_pos
        else:
            rec = (old_pos, None, None)
        k = self.counts.get(new_pos, 0)
        if k == 0:
            fresh = True
        self.counts[new_pos] = k + 1
        self._undo.append((edge, rec, fresh))
        self.pos = new_pos
        self.n += 1

    def pop(self) -> None:
        edge, rec, fresh = self._undo.pop()
        old_pos, lo, hi = rec
        c = self.edges[edge] - 1
        if c == 0:
            del self.edges[edge]
        else:
            self.edges[edge] = c
        k = self.counts[self.pos] - 1
        if k == 0:
            del self.counts[self.pos]
        else:
            self.counts[self.pos] = k
        if lo is not None:
            self.lo, self.hi = lo, hi
        self.pos = old_pos
        self.n -= 1

    # --- snapshots -----------------------------------------------------

    def range_key(self):
        if self._interval:
            return (self.lo, self.hi)
        return tuple(sorted(self.counts, key=lambda v: groups.sort_key(self.group, v)))

    def range_size(self) -> int:
        if self._interval:
            return self.hi - self.lo + 1
        return len(self.counts)

    def trace_key(self):
        skey = lambda v: groups.sort_key(self.group, v)
        verts = tuple(sorted(self.counts, key=skey))
        edges = tuple(sorted(((u, v, c) for (u, v), c in self.edges.items()),
                             key=lambda t: (skey(t[0]), skey(t[1]))))
        return (verts, edges)

    def range_state(self) -> RangeState:
        if self._interval:
            return RangeState(self.group, self.pos, self.n, interval=(self.lo, self.hi))
        return RangeState(self.group, self.pos, self.n, members=frozenset(self.counts))

    def trace_digraph(self) -> TraceDigraph:
        return TraceDigraph(self.group, frozenset(self.counts), dict(self.edges), self.n)


def sample_trajectory(mu: StepDistribution, n: int, stream: RngStreamSpec) -> Trajectory:
    """n i.i.d. steps from ``mu`` under the given stream; deterministic in
    (master seed, stream index)."""
    if n < 0:
        raise ValidationError(f"step count must be >= 0, got {n}")
    rng = Stream(stream)
    cum = mu.cumulative()
    desc = mu.group
    values = mu.values
    pos = groups.identity_value(desc)
    steps = []
    positions = [pos]
    for _ in range(n):
        x = values[rng.next_index(cum)]
        pos = groups.mul_values(desc, pos, x)
        steps.append(x)
        positions.append(pos)
    return Trajectory(desc, tuple(steps), tuple(positions), stream)


def range_of(traj: Trajectory) -> RangeState:
    """Full recomputation of (R_n, S_n) from a trajectory."""
    desc = traj.group
    if desc.kind == "Z" and all(abs(x) <= 1 for x in traj.steps):
        lo = min(traj.positions)
        hi = max(traj.positions)
        return RangeState(desc, traj.positions[-1], traj.n, interval=(lo, hi))
    return RangeState(desc, traj.positions[-1], traj.n, members=frozenset(traj.positions))


def trace_of(traj: Trajectory) -> TraceDigraph:
    """Full recomputation of the trace digraph from a trajectory."""
    edges: dict = {}
    for u, v in zip(traj.positions, traj.positions[1:]):
        edges[(u, v)] = edges.get((u, v), 0) + 1
    return TraceDigraph(traj.group, frozenset(traj.positions), edges, traj.n)


def accumulate(traj: Trajectory) -> WalkAccumulator:
    """Incremental construction over the whole trajectory (the cross-check
    partner of :func:`range_of` / :func:`trace_of`)."""
    interval = traj.group.kind == "Z" and all(abs(x) <= 1 for x in traj.steps)
    acc = WalkAccumulator(traj.group, interval=interval)
    for x in traj.steps:
        acc.push(x)
    if acc.pos != traj.positions[-1]:
        raise StructuralError("trajectory positions do not match its steps")
    return acc


def reversed_trajectory(traj: Trajectory) -> Trajectory:
    """The walk driven by the inverted steps, in original order."""
    desc = traj.group
    steps = tuple(groups.inverse_value(desc, x) for x in traj.steps)
    pos = groups.identity_value(desc)
    positions = [pos]
    for x in steps:
        pos = groups.mul_values(desc, pos, x)
        positions.append(pos)
    return Trajectory(desc, steps, tuple(positions), traj.stream)


def assert_reachable(digraph: TraceDigraph) -> None:
    """Breadth-first search from the identity must cover every vertex; this is
    the precondition for the width-first codec."""
    desc = digraph.group
    e = groups.identity_value(desc)
    if e not in digraph.vertices:
        raise StructuralError("digraph does not contain the identity")
    adjacency: dict = {}
    for (u, v) in digraph.edges:
        adjacency.setdefault(u, []).append(v)
    seen = {e}
    queue = [e]
    while queue:
        u = queue.pop()
        for v in adjacency.get(u, ()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    missing = digraph.vertices - seen
    if missing:
        raise StructuralError(f"{len(missing)} vertex(es) unreachable from the identity")
