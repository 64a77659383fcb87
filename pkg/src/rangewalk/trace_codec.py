"""Canonical width-first coding of walk trace digraphs.

A digraph left by a walk is visited starting from the identity.  Every visited
vertex ``v_h`` emits its neighbour index set ``N_h`` (the enumeration indices
``i`` with an edge ``(v_h, v_h g_i)``) and the traversal counts ``O[i, h]``.
Unvisited neighbours enter a frontier keyed by their *address*, the sequence
of enumeration indices along the discovery path; the next vertex visited is
always the one whose address is minimal in the (length, lexicographic) order.
Addresses pointing at already-visited vertices are dropped.

The resulting code determines the digraph completely, so its fixed-width byte
serialization can serve as an exact dictionary key for digraph-valued laws.
"""

from __future__ import annotations

import heapq
import struct
from dataclasses import dataclass

from . import groups, walk
from .errors import MalformedCodeError, StructuralError, ValidationError
from .groups import GroupEnumeration
from .walk import TraceDigraph

KEY_VERSION = 1


@dataclass(frozen=True)
class TraceCode:
    """Neighbour index sets N_0..N_{|A|-1} plus sparse positive weights O[i, h]."""

    neighbor_sets: tuple  # tuple of sorted int tuples
    weights: dict        # (i, h) -> positive int

    def __post_init__(self):
        if len(self.neighbor_sets) == 0:
            raise MalformedCodeError("a trace code always contains the root vertex")

    @property
    def vertex_count(self) -> int:
        return len(self.neighbor_sets)

    def validate(self) -> None:
        """Check the structural invariants tying N to O."""
        h_max = self.vertex_count
        seen = set()
        for (i, h), w in self.weights.items():
            if h >= h_max:
                raise MalformedCodeError(f"weight entry at h={h} beyond the {h_max} visited vertices")
            if w <= 0:
                raise MalformedCodeError(f"weight O[{i},{h}] = {w} must be positive")
            seen.add((i, h))
        for h, nh in enumerate(self.neighbor_sets):
            if tuple(sorted(nh)) != tuple(nh):
                raise MalformedCodeError(f"N_{h} is not sorted")
            for i in nh:
                if (i, h) not in seen:
                    raise MalformedCodeError(f"N_{h} lists index {i} but O[{i},{h}] is zero")
        listed = {(i, h) for h, nh in enumerate(self.neighbor_sets) for i in nh}
        if listed != set(self.weights):
            extra = set(self.weights) - listed
            raise MalformedCodeError(f"weights present for indices not in any N_h: {sorted(extra)[:3]}")


def encode(digraph: TraceDigraph, enum: GroupEnumeration) -> TraceCode:
    """Width-first visit of the digraph, producing its canonical code."""
    desc = digraph.group
    if enum.group != desc:
        raise ValidationError("enumeration and digraph belong to different groups")
    walk.assert_reachable(digraph)
    e = groups.identity_value(desc)

    adjacency: dict = {}
    for (u, v), w in digraph.edges.items():
        adjacency.setdefault(u, []).append((v, w))

    visited = {e}
    neighbor_sets = []
    weights = {}
    frontier: list = []  # (len(addr), addr, element)
    current = e
    current_addr: tuple = ()
    total = len(digraph.vertices)

    for h in range(total):
        inv_cur = groups.inverse_value(desc, current)
        out = []
        for (y, w) in adjacency.get(current, ()):
            i = enum.index(groups.mul_values(desc, inv_cur, y))
            out.append((i, y, w))
        out.sort()
        neighbor_sets.append(tuple(i for (i, _, _) in out))
        for (i, y, w) in out:
            weights[(i, h)] = w
            if y not in visited:
                addr = current_addr + (i,)
                heapq.heappush(frontier, (len(addr), addr, y))
        if h + 1 == total:
            break
        # addresses resolving to visited vertices are dropped, exactly the
        # frontier set-subtraction; dropping lazily at pop selects the same
        # minimal valid address.
        while frontier and frontier[0][2] in visited:
            heapq.heappop(frontier)
        if not frontier:
            raise StructuralError("frontier exhausted before all vertices were visited")
        _, current_addr, current = heapq.heappop(frontier)
        visited.add(current)

    return TraceCode(tuple(neighbor_sets), weights)


def decode(code: TraceCode, enum: GroupEnumeration) -> TraceDigraph:
    """Rebuild the digraph a code came from; raises MalformedCodeError when the
    code could not have been produced by :func:`encode`."""
    code.validate()
    desc = enum.group
    e = groups.identity_value(desc)
    visited = {e}
    edges = {}
    frontier: list = []
    current = e
    current_addr: tuple = ()
    total = code.vertex_count

    for h in range(total):
        for i in code.neighbor_sets[h]:
            w = code.weights[(i, h)]
            y = groups.mul_values(desc, current, groups.element_at(desc, i))
            edges[(current, y)] = w
            if y not in visited:
                addr = current_addr + (i,)
                heapq.heappush(frontier, (len(addr), addr, y))
        if h + 1 == total:
            break
        while frontier and frontier[0][2] in visited:
            heapq.heappop(frontier)
        if not frontier:
            raise MalformedCodeError(
                f"frontier exhausted after {h + 1} of {total} declared vertices"
            )
        _, current_addr, current = heapq.heappop(frontier)
        visited.add(current)

    while frontier and frontier[0][2] in visited:
        heapq.heappop(frontier)
    if frontier:
        raise MalformedCodeError("unvisited frontier left after the declared vertex count")

    n = sum(edges.values())
    return TraceDigraph(desc, frozenset(visited), edges, n)


def code_bytes(code: TraceCode) -> bytes:
    """Fixed-width big-endian serialization: version byte, vertex count, the
    length-prefixed neighbour sets in visit order, then the (i, h, weight)
    triples sorted lexicographically."""
    out = bytearray()
    out += struct.pack(">B", KEY_VERSION)
    out += struct.pack(">I", code.vertex_count)
    for nh in code.neighbor_sets:
        out += struct.pack(">I", len(nh))
        for i in nh:
            if i >= 1 << 64:
                raise ValidationError(f"enumeration index {i} does not fit the key format")
            out += struct.pack(">Q", i)
    triples = sorted((i, h, w) for (i, h), w in code.weights.items())
    out += struct.pack(">I", len(triples))
    for (i, h, w) in triples:
        if w >= 1 << 64:
            raise ValidationError("edge weight does not fit the key format")
        out += struct.pack(">QIQ", i, h, w)
    return bytes(out)


def group_tag(desc) -> bytes:
    """Short byte tag identifying the group, prepended to canonical keys so
    that codes from different groups can never collide."""
    if desc.kind == "Z":
        return struct.pack(">B", 0)
    if desc.kind == "Zd":
        return struct.pack(">BI", 1, desc.d)
    if desc.kind == "free":
        return struct.pack(">BI", 2, desc.rank)
    return struct.pack(">BI", 3, len(desc.moduli)) + b"".join(
        struct.pack(">I", m) for m in desc.moduli
    )


def canonical_key(digraph: TraceDigraph, enum: GroupEnumeration) -> bytes:
    """Platform-independent byte key: equal digraphs give equal keys and
    distinct digraphs distinct keys (the code is one-to-one)."""
    return group_tag(digraph.group) + code_bytes(encode(digraph, enum))
