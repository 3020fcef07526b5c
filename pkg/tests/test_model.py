import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multitime.model import (
    Configuration,
    Kind,
    ModelParams,
    all_spins,
    characteristic_values,
    classify,
    component_index,
    parse_spin,
    reduce_angle,
    spin_label,
    spin_of_index,
)
from multitime.solver import random_interior


def test_component_index_examples():
    for n in (2, 3, 5):
        assert component_index((-1,) * n) == 1
        assert component_index((-1,) * (n - 1) + (1,)) == 2
        assert component_index((1,) * n) == 2**n


@pytest.mark.parametrize("n", range(1, 11))
def test_component_index_bijection_exhaustive(n):
    seen = set()
    for i in range(1, 2**n + 1):
        s = spin_of_index(i, n)
        assert component_index(s) == i
        seen.add(s)
    assert len(seen) == 2**n
    assert [component_index(s) for s in all_spins(n)] == list(range(1, 2**n + 1))


def test_spin_labels_round_trip():
    for s in all_spins(3):
        assert parse_spin(spin_label(s)) == s


def test_bad_spin_rejected():
    with pytest.raises(ValueError):
        component_index((1, 0))


def test_classify_examples():
    assert classify([(0, 0), (0, 1)]).kind is Kind.INTERIOR
    c = classify([(0, 0), (0, 0)])
    assert c.kind is Kind.BOUNDARY and c.stratum == 1
    assert classify([(0, 0), (1, 0.5)]).kind is Kind.NOT_SPACELIKE


def test_classify_light_like_and_reversed():
    assert classify([(0, 0), (1, 1)]).kind is Kind.NOT_SPACELIKE
    assert classify([(0, 1), (0, 0)]).kind is Kind.OUTSIDE


def test_non_adjacent_coincidence_is_boundary_of_all_pairs():
    c = classify([(0, 0), (0, 0), (0, 0)])
    assert c.kind is Kind.BOUNDARY and c.strata == (1, 2)


def test_classify_tolerance():
    assert classify([(0, 0), (0, 1e-14)], tol=1e-12).kind is Kind.BOUNDARY
    assert classify([(0, 0), (0, 1e-14)], tol=0.0).kind is Kind.INTERIOR


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), shift=st.floats(-50, 50), n=st.integers(2, 5))
def test_classify_time_shift_invariant(seed, shift, n):
    rng = np.random.default_rng(seed)
    x = random_interior(rng, n, 1)[0]
    y = x.copy()
    y[:, 0] += shift
    assert classify(x) == classify(y)
    # stratum points stay on their stratum
    x[1] = x[0]
    y = x.copy()
    y[:, 0] += shift
    assert classify(x) == classify(y)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 4))
def test_permuted_interior_is_outside(seed, n):
    rng = np.random.default_rng(seed)
    x = random_interior(rng, n, 1)[0]
    for p in itertools.permutations(range(n)):
        kind = classify(x[list(p)]).kind
        assert kind is (Kind.INTERIOR if list(p) == list(range(n)) else Kind.OUTSIDE)


def test_characteristic_values_examples():
    np.testing.assert_array_equal(characteristic_values([(0, 1.5), (0, 2.5), (0, 4.0)], (1, -1, 1)),
                                  [1.5, 2.5, 4.0])
    np.testing.assert_array_equal(characteristic_values([(1, 2), (0.5, 4.5)], (1, -1)), [3, 4])
    np.testing.assert_array_equal(characteristic_values([(2, 1), (3, 7)], (-1, 1)), [-1, 10])


def test_model_params_validation():
    p = ModelParams(3, (np.pi, -1.0))
    assert p.phases == (np.pi, -1.0)
    with pytest.raises(ValueError):
        ModelParams(1, ())
    with pytest.raises(ValueError):
        ModelParams(2, (-np.pi,))
    with pytest.raises(ValueError):
        ModelParams(3, (0.0,))
    with pytest.raises(ValueError):
        ModelParams(2, (0.0,), smoothness=0)


@given(st.floats(-100, 100))
def test_reduce_angle_half_open(x):
    y = reduce_angle(x)
    assert -np.pi < y <= np.pi
    assert abs(np.exp(1j * x) - np.exp(1j * y)) < 1e-9


def test_configuration_helpers():
    cfg = Configuration.equal_time(0.5, [0.0, 1.0, 3.0])
    assert cfg.n == 3
    assert cfg.classify().kind is Kind.INTERIOR
    assert cfg.array.shape == (3, 2)
