import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rangewalk import groups
from rangewalk.errors import DescriptorMismatchError, ValidationError
from rangewalk.groups import (
    GroupDescriptor,
    GroupElement,
    GroupEnumeration,
    StepDistribution,
    element_at,
    identity,
    index_of_value,
    mul,
    reversed_measure,
)

ALL_DESCRIPTORS = [
    GroupDescriptor.integer_line(),
    GroupDescriptor.integer_lattice(2),
    GroupDescriptor.integer_lattice(3),
    GroupDescriptor.free_group(1),
    GroupDescriptor.free_group(2),
    GroupDescriptor.cyclic_product([4]),
    GroupDescriptor.cyclic_product([5, 3]),
]


def _random_element(desc, rng):
    if desc.kind == "cyclic":
        i = int(rng.integers(0, desc.order))
    else:
        i = int(rng.integers(0, 5000))
    return element_at(desc, i)


def test_mul_examples():
    z = GroupDescriptor.integer_line()
    assert groups.mul_values(z, 2, 3) == 5
    f2 = GroupDescriptor.free_group(2)
    # (a b^-1) * (b a) cancels fully in the middle, leaving a a
    assert groups.mul_values(f2, (1, -2), (2, 1)) == (1, 1)
    c4 = GroupDescriptor.cyclic_product([4])
    assert groups.mul_values(c4, (3,), (2,)) == (1,)


def test_inverse_examples():
    z = GroupDescriptor.integer_line()
    assert groups.inverse_value(z, 5) == -5
    f2 = GroupDescriptor.free_group(2)
    assert groups.inverse_value(f2, (1, 2)) == (-2, -1)
    c4 = GroupDescriptor.cyclic_product([4])
    assert groups.inverse_value(c4, (3,)) == (1,)


def test_descriptor_mismatch():
    a = identity(GroupDescriptor.integer_line())
    b = identity(GroupDescriptor.integer_lattice(2))
    with pytest.raises(DescriptorMismatchError):
        mul(a, b)


@pytest.mark.parametrize("desc", ALL_DESCRIPTORS, ids=lambda d: d.describe())
def test_group_laws_random_triples(desc):
    rng = np.random.default_rng(1001 + hash(desc.kind) % 97)
    e = groups.identity_value(desc)
    for _ in range(10_000):
        a = _random_element(desc, rng)
        b = _random_element(desc, rng)
        c = _random_element(desc, rng)
        left = groups.mul_values(desc, groups.mul_values(desc, a, b), c)
        right = groups.mul_values(desc, a, groups.mul_values(desc, b, c))
        assert left == right
        assert groups.mul_values(desc, a, e) == a
        assert groups.mul_values(desc, e, a) == a
        assert groups.mul_values(desc, a, groups.inverse_value(desc, a)) == e


@pytest.mark.parametrize("desc", ALL_DESCRIPTORS, ids=lambda d: d.describe())
def test_enumeration_bijective(desc):
    top = desc.order if desc.is_finite else 10_000
    seen = set()
    for i in range(top):
        v = element_at(desc, i)
        groups.validate_value(desc, v)
        assert v not in seen
        seen.add(v)
        assert index_of_value(desc, v) == i
    assert element_at(desc, 0) == groups.identity_value(desc)


def test_z_spiral_order():
    z = GroupDescriptor.integer_line()
    assert [element_at(z, i) for i in range(5)] == [0, 1, -1, 2, -2]


def test_f1_matches_z_spiral():
    f1 = GroupDescriptor.free_group(1)
    words = [element_at(f1, i) for i in range(7)]
    exps = [sum(1 if s > 0 else -1 for s in w) for w in words]
    assert exps == [0, 1, -1, 2, -2, 3, -3]


def test_lattice_order_is_shells_then_lex():
    d2 = GroupDescriptor.integer_lattice(2)
    brute = sorted(
        itertools.product(range(-4, 5), repeat=2),
        key=lambda t: (max(abs(t[0]), abs(t[1])), t),
    )
    assert [element_at(d2, i) for i in range(81)] == brute


def test_cyclic_order_lex_and_bounds():
    c = GroupDescriptor.cyclic_product([3])
    assert [element_at(c, i) for i in range(3)] == [(0,), (1,), (2,)]
    with pytest.raises(ValidationError):
        element_at(c, 3)


def test_reversed_measure_examples(z_line):
    mu = StepDistribution.from_pairs(z_line, [(1, 0.3), (-1, 0.7)])
    rev = reversed_measure(mu)
    assert dict(zip(rev.values, rev.probs)) == {-1: 0.3, 1: 0.7}
    sym = StepDistribution.from_pairs(z_line, [(1, 0.5), (-1, 0.5)])
    rev2 = reversed_measure(sym)
    assert dict(zip(rev2.values, rev2.probs)) == dict(zip(sym.values, sym.probs)) == {1: 0.5, -1: 0.5}
    f2 = GroupDescriptor.free_group(2)
    m = StepDistribution.from_pairs(f2, [((1,), 0.5), ((2,), 0.5)])
    assert set(reversed_measure(m).values) == {(-1,), (-2,)}


GENERATING_SUPPORTS = {
    "Z": [1, -1, 2],
    "Z^2": [(1, 0), (0, 1), (-1, -1)],
    "Z^3": [(1, 0, 0), (0, 1, 0), (0, 0, 1)],
    "F_1": [(1,), (-1,), (1, 1)],
    "F_2": [(1,), (2,), (-1,)],
    "Z/4": [(1,), (2,), (3,)],
    "Z/5xZ/3": [(1, 0), (0, 1), (2, 2)],
}


@pytest.mark.parametrize("desc", ALL_DESCRIPTORS, ids=lambda d: d.describe())
def test_reversed_measure_involution(desc):
    vals = GENERATING_SUPPORTS[desc.describe()]
    mu = StepDistribution.from_pairs(desc, [(v, p) for v, p in zip(vals, (0.2, 0.3, 0.5))])
    back = reversed_measure(reversed_measure(mu))
    assert back.values == mu.values and back.probs == mu.probs


def test_validation_rejects_degenerate():
    z = GroupDescriptor.integer_line()
    with pytest.raises(ValidationError):
        StepDistribution.from_pairs(z, [(1, 1.0)])
    with pytest.raises(ValidationError):
        StepDistribution.from_pairs(z, [(1, 0.5), (1, 0.5)])
    with pytest.raises(ValidationError):
        StepDistribution.from_pairs(z, [(1, 0.5), (-1, 0.49)])
    with pytest.raises(ValidationError):
        StepDistribution.from_pairs(z, [(1, 0.0), (-1, 1.0)])


def test_generation_sanity_checks():
    z = GroupDescriptor.integer_line()
    with pytest.raises(ValidationError):
        StepDistribution.from_pairs(z, [(2, 0.5), (-2, 0.5)])
    StepDistribution.from_pairs(z, [(2, 0.5), (-1, 0.5)])  # gcd 1, fine
    d2 = GroupDescriptor.integer_lattice(2)
    with pytest.raises(ValidationError):
        StepDistribution.from_pairs(d2, [((2, 0), 0.5), ((0, 2), 0.5)])
    with pytest.raises(ValidationError):
        StepDistribution.from_pairs(d2, [((1, 0), 0.5), ((-1, 0), 0.5)])
    StepDistribution.from_pairs(d2, [((1, 0), 0.5), ((0, 1), 0.5)])


def test_rational_mode_detection(z_line):
    mu = StepDistribution.from_pairs(z_line, [(1, Fraction(1, 3)), (-1, Fraction(2, 3))])
    assert mu.fractions == (Fraction(1, 3), Fraction(2, 3))
    mu2 = StepDistribution.from_pairs(z_line, [(1, 0.5), (-1, 0.5)])
    assert mu2.fractions is None


def test_free_words_must_be_reduced():
    f2 = GroupDescriptor.free_group(2)
    with pytest.raises(ValidationError):
        groups.validate_value(f2, (1, -1))
    assert groups.reduce_word([1, -1, 2]) == (2,)


@given(st.integers(min_value=0, max_value=200_000))
@settings(max_examples=200, deadline=None)
def test_enumeration_roundtrip_property(i):
    for desc in (GroupDescriptor.integer_lattice(2), GroupDescriptor.free_group(3)):
        assert index_of_value(desc, element_at(desc, i)) == i


def test_positive_grading():
    z = GroupDescriptor.integer_line()
    up = StepDistribution.from_pairs(z, [(1, 0.5), (2, 0.5)])
    assert groups.positive_grading(up) == (1,)
    sym = StepDistribution.from_pairs(z, [(1, 0.5), (-1, 0.5)])
    assert groups.positive_grading(sym) is None
    d2 = GroupDescriptor.integer_lattice(2)
    dz2 = StepDistribution.from_pairs(d2, [((1, 0), 0.5), ((0, 1), 0.5)])
    w = groups.positive_grading(dz2)
    assert w is not None
    assert all(groups.grade_value(d2, w, v) >= 1 for v in dz2.values)
    cyc = StepDistribution.from_pairs(
        GroupDescriptor.cyclic_product([5]), [((1,), 0.5), ((2,), 0.5)])
    assert groups.positive_grading(cyc) is None


def test_group_element_wrapper(z_line):
    a = GroupElement(z_line, 2)
    b = GroupElement(z_line, 3)
    assert (a * b).value == 5
    assert a.inverse().value == -2
    assert identity(z_line).is_identity
