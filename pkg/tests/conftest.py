import pytest

from rangewalk.groups import GroupDescriptor, StepDistribution


@pytest.fixture(scope="session")
def z_line():
    return GroupDescriptor.integer_line()


@pytest.fixture(scope="session")
def sym_z(z_line):
    return StepDistribution.from_pairs(z_line, [(1, 0.5), (-1, 0.5)])


@pytest.fixture(scope="session")
def drift_z(z_line):
    return StepDistribution.from_pairs(z_line, [(-1, 0.7), (1, 0.3)])


@pytest.fixture(scope="session")
def directed_z2():
    d = GroupDescriptor.integer_lattice(2)
    return StepDistribution.from_pairs(d, [((1, 0), 0.5), ((0, 1), 0.5)])


@pytest.fixture(scope="session")
def f2_uniform():
    d = GroupDescriptor.free_group(2)
    return StepDistribution.from_pairs(
        d, [((1,), 0.25), ((-1,), 0.25), ((2,), 0.25), ((-2,), 0.25)]
    )


@pytest.fixture(scope="session")
def f2_asymmetric():
    d = GroupDescriptor.free_group(2)
    return StepDistribution.from_pairs(
        d, [((1,), 0.4), ((2,), 0.3), ((-1,), 0.2), ((-2,), 0.1)]
    )


@pytest.fixture(scope="session")
def cyclic_mu():
    d = GroupDescriptor.cyclic_product([5, 3])
    return StepDistribution.from_pairs(d, [((1, 0), 0.5), ((0, 1), 0.3), ((2, 2), 0.2)])


@pytest.fixture(scope="session")
def test_measures(sym_z, drift_z, directed_z2, f2_uniform):
    return {
        "sym_z": sym_z,
        "drift_z": drift_z,
        "directed_z2": directed_z2,
        "f2_uniform": f2_uniform,
    }
