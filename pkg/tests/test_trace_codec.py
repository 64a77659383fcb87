import pytest

from rangewalk import trace_codec, walk
from rangewalk.errors import MalformedCodeError, StructuralError
from rangewalk.groups import GroupDescriptor, GroupEnumeration, StepDistribution
from rangewalk.streams import RngStreamSpec
from rangewalk.trace_codec import TraceCode, canonical_key, code_bytes, decode, encode
from rangewalk.walk import TraceDigraph, Trajectory


@pytest.fixture(scope="module")
def z_enum():
    return GroupEnumeration(GroupDescriptor.integer_line())


def test_empty_digraph(z_enum):
    desc = z_enum.group
    g0 = walk.trace_of(Trajectory(desc, (), (0,)))
    code = encode(g0, z_enum)
    assert code.neighbor_sets == ((),)
    assert code.weights == {}
    assert decode(code, z_enum) == g0


def test_hand_derived_walk_up_down(z_enum):
    # 0 -> 1 -> 0 under the spiral enumeration g_1 = 1, g_2 = -1
    desc = z_enum.group
    g = walk.trace_of(Trajectory(desc, (1, -1), (0, 1, 0)))
    code = encode(g, z_enum)
    assert code.neighbor_sets == ((1,), (2,))
    assert code.weights == {(1, 0): 1, (2, 1): 1}
    assert decode(code, z_enum) == g


def test_hand_derived_walk_up_up(z_enum):
    desc = z_enum.group
    g = walk.trace_of(Trajectory(desc, (1, 1), (0, 1, 2)))
    code = encode(g, z_enum)
    assert code.neighbor_sets == ((1,), (1,), ())
    assert code.weights == {(1, 0): 1, (1, 1): 1}
    assert decode(code, z_enum) == g


def test_distinct_paths_distinct_keys(z_enum):
    desc = z_enum.group
    k_plus_minus = canonical_key(walk.trace_of(Trajectory(desc, (1, -1), (0, 1, 0))), z_enum)
    k_minus_plus = canonical_key(walk.trace_of(Trajectory(desc, (-1, 1), (0, -1, 0))), z_enum)
    assert k_plus_minus != k_minus_plus


def test_key_stable_under_roundtrip(z_enum, sym_z):
    for s in range(20):
        traj = walk.sample_trajectory(sym_z, 40, RngStreamSpec(3, s))
        g = walk.trace_of(traj)
        rebuilt = decode(encode(g, z_enum), z_enum)
        assert canonical_key(g, z_enum) == canonical_key(rebuilt, z_enum)


def test_malformed_codes(z_enum):
    with pytest.raises(MalformedCodeError):
        TraceCode((), {})
    # N_0 lists an index whose weight is missing
    code = TraceCode(((1,), ()), {})
    with pytest.raises(MalformedCodeError):
        decode(code, z_enum)
    # weight entry with a zero value
    code = TraceCode(((1,), ()), {(1, 0): 0})
    with pytest.raises(MalformedCodeError):
        decode(code, z_enum)
    # weight entry beyond the declared vertex count
    code = TraceCode(((1,), (2,)), {(1, 0): 1, (2, 1): 1, (1, 5): 1})
    with pytest.raises(MalformedCodeError):
        decode(code, z_enum)
    # frontier exhausts before the declared vertex count is reached
    code = TraceCode(((), ()), {})
    with pytest.raises(MalformedCodeError):
        decode(code, z_enum)


def test_unreachable_digraph_rejected(z_enum):
    desc = z_enum.group
    bad = TraceDigraph(desc, frozenset({0, 5, 6}), {(5, 6): 1}, 1)
    with pytest.raises(StructuralError):
        encode(bad, z_enum)


def test_lazy_walk_self_loops():
    desc = GroupDescriptor.cyclic_product([5])
    enum = GroupEnumeration(desc)
    mu = StepDistribution.from_pairs(desc, [((0,), 0.5), ((1,), 0.5)])
    for s in range(30):
        traj = walk.sample_trajectory(mu, 12, RngStreamSpec(8, s))
        g = walk.trace_of(traj)
        assert decode(encode(g, enum), enum) == g


def test_visit_covers_all_and_frontier_empties(f2_uniform):
    enum = GroupEnumeration(f2_uniform.group)
    for s in range(30):
        traj = walk.sample_trajectory(f2_uniform, 25, RngStreamSpec(17, s))
        g = walk.trace_of(traj)
        code = encode(g, enum)
        assert code.vertex_count == len(g.vertices)
        assert decode(code, enum) == g


def test_fuzz_roundtrip_and_injectivity(test_measures, cyclic_mu):
    cases = dict(test_measures)
    cases["cyclic"] = cyclic_mu
    seen = {}
    total = 0
    for name, mu in cases.items():
        enum = GroupEnumeration(mu.group)
        for s in range(250):
            n = 1 + (s * 13) % 60
            traj = walk.sample_trajectory(mu, n, RngStreamSpec(1234, s))
            g = walk.trace_of(traj)
            code = encode(g, enum)
            assert decode(code, enum) == g, (name, s)
            key = canonical_key(g, enum)
            if key in seen:
                assert seen[key] == g.key(), (name, s)
            seen[key] = g.key()
            total += 1
    assert total == 1250


def test_code_bytes_deterministic(z_enum, sym_z):
    traj = walk.sample_trajectory(sym_z, 60, RngStreamSpec(5, 5))
    g = walk.trace_of(traj)
    assert code_bytes(encode(g, z_enum)) == code_bytes(encode(g, z_enum))
    assert canonical_key(g, z_enum)[0:1] != b""  # carries the group tag header
