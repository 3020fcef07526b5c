import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multitime.model import ModelParams, all_spins
from multitime.phases import (
    admissible_collision_signs,
    all_decomposition_coefficients,
    collisions,
    compose,
    from_images,
    identity,
    inverse,
    permute_spin,
    phase,
    phase_coefficients,
    sort_permutation,
    spin_potential,
    transposition,
)
from multitime.solver import random_interior


def brute_sort(c):
    """Ordering permutation with the fewest inversions, by enumeration."""
    best = None
    for p in itertools.permutations(range(len(c))):
        if all(c[p[i]] <= c[p[i + 1]] for i in range(len(c) - 1)):
            if best is None or collisions(p) < collisions(best):
                best = p
    return best


def test_sort_permutation_examples():
    assert sort_permutation((1, 2, 3)) == identity(3)
    assert sort_permutation((4, 3)) == transposition(2, 0)
    # images (2, 3, 1) in 1-based labels
    assert sort_permutation((3, 1, 2)) == from_images((2, 3, 1))
    assert sort_permutation((3, 1, 2)) == brute_sort((3, 1, 2))


@given(st.lists(st.integers(-3, 3), min_size=1, max_size=6))
def test_sort_permutation_matches_enumeration(c):
    assert sort_permutation(c) == brute_sort(c)


def test_collision_examples():
    assert collisions(identity(4)) == 0
    assert collisions((2, 1, 0)) == 3
    assert collisions(from_images((2, 3, 1))) == 2


@given(st.permutations(list(range(6))))
def test_collisions_by_pair_enumeration(p):
    pairs = sum(1 for k, l in itertools.combinations(range(6), 2) if p[k] > p[l])
    assert collisions(p) == pairs == collisions(inverse(p))


@given(st.permutations(list(range(5))), st.permutations(list(range(5))))
def test_permutation_algebra(a, b):
    a, b = tuple(a), tuple(b)
    assert compose(a, inverse(a)) == identity(5)
    s = (1, -1, 1, 1, -1)
    assert permute_spin(permute_spin(s, a), b) == permute_spin(s, compose(a, b))


def test_phase_examples():
    params = ModelParams(2, (0.7,))
    assert phase((1, -1), identity(2), params).phase == 0.0
    r = phase((1, -1), transposition(2, 0), params)
    assert r.phase == pytest.approx(0.7)
    assert r.coefficients == (1,)
    # reversed spin picks up the opposite sign
    assert phase((-1, 1), transposition(2, 0), params).phase == pytest.approx(-0.7)


def test_phase_identity_is_zero_for_every_spin():
    params = ModelParams(4, (0.3, -1.1, 2.0))
    for s in all_spins(4):
        assert phase(s, identity(4), params).coefficients == (0, 0, 0)


def test_three_particle_two_collision_path_independent():
    s = (1, -1, -1)
    # particle 1 overtakes both others: c_1 > c_3 > c_2 style order
    pi = from_images((2, 3, 1))
    assert collisions(pi) == 2
    coeffs = all_decomposition_coefficients(s, pi)
    assert len(coeffs) == 1
    assert coeffs == {phase_coefficients(s, pi)[0]}
    assert coeffs == {(1, 1)}


def test_phase_reduced_to_half_open_interval():
    params = ModelParams(3, (3.0, 3.0))
    r = phase((1, -1, -1), from_images((2, 3, 1)), params)
    assert -np.pi < r.phase <= np.pi
    assert np.exp(1j * r.phase) == pytest.approx(np.exp(6j))


def test_phase_is_total_on_inadmissible_pairs():
    params = ModelParams(3, (0.4, 0.9))
    for s in all_spins(3):
        for p in itertools.permutations(range(3)):
            r = phase(s, p, params)
            assert -np.pi < r.phase <= np.pi


def test_final_spin_is_permuted_spin():
    for s in all_spins(4):
        for p in itertools.permutations(range(4)):
            assert phase_coefficients(s, p)[1] == permute_spin(s, p)


def sampled_pairs(seed, n, size):
    rng = np.random.default_rng(seed)
    x = random_interior(rng, n, size, time_scale=3.0, spread=1.0, min_gap=0.01)
    spins = rng.choice([-1, 1], size=(size, n))
    return x, spins


@pytest.mark.parametrize("n", [2, 3, 4])
def test_admissible_pairs_path_independent_and_potential(n):
    x, spins = sampled_pairs(n, n, 3000)
    seen = set()
    for cfg, s in zip(x, spins):
        s = tuple(int(v) for v in s)
        c = cfg[:, 1] + np.asarray(s) * cfg[:, 0]
        pi = sort_permutation(c)
        seen.add((s, pi))
        # sign claim on every colliding particle pair
        for a, b in itertools.combinations(range(n), 2):
            if c[a] > c[b]:
                assert admissible_collision_signs(s, cfg[:, 0], a, b)
    assert any(collisions(pi) >= 2 for _, pi in seen) or n == 2
    for s, pi in seen:
        coeffs = all_decomposition_coefficients(s, pi)
        assert coeffs == {phase_coefficients(s, pi)[0]}
        # independent oracle: difference of the spin potential
        u = permute_spin(s, pi)
        expect = tuple(a - b for a, b in zip(spin_potential(u), spin_potential(s)))
        assert coeffs == {expect}


@pytest.mark.parametrize("n", [3, 4])
def test_adjacent_collisions_never_share_a_particle(n):
    x, spins = sampled_pairs(10 + n, n, 3000)
    for cfg, s in zip(x, spins):
        c = cfg[:, 1] + s * cfg[:, 0]
        for a in range(n - 2):
            assert not (c[a] > c[a + 1] and c[a + 1] > c[a + 2])


def test_inadmissible_pair_can_be_path_dependent():
    # sanity check that the enumeration oracle can see disagreement at all
    found = False
    for s in all_spins(3):
        for p in itertools.permutations(range(3)):
            if len(all_decomposition_coefficients(s, p)) > 1:
                found = True
    assert found
