import numpy as np
import pytest

from gasketdim.energy import VertexFunction, crude_energy
from gasketdim.harmonic import harmonic_extend
from gasketdim.oracle import (
    brute_min_energy_check,
    exhaustive_pair_check,
    harmonic_system,
    solve_harmonic_linear,
    solve_harmonic_linear_many,
)
from gasketdim.harmonic import BoundaryValues


def test_constant_boundary():
    u = solve_harmonic_linear((0.7, 0.7, 0.7), 4)
    np.testing.assert_allclose(u.values, 0.7, atol=1e-14)


def test_level_one_by_hand():
    u = solve_harmonic_linear((1, 0, 0), 1)
    # sorted lattice order: (0,0) (0,1) (0,2) (1,0) (1,1) (2,0)
    np.testing.assert_allclose(u.values, [1, 0.4, 0, 0.4, 0.2, 0], atol=1e-15)


def test_system_shape():
    system, coords, interior, corners = harmonic_system([BoundaryValues(1, 0, 0)], 3)
    assert system.matrix.shape == (system.dimension, system.dimension)
    assert system.dimension == len(coords) - 3 == len(interior)
    assert np.all(np.diag(system.matrix) == 4)
    # rows of interior vertices not touching a corner sum to zero
    assert np.all(system.matrix.sum(axis=1) >= 0)


@pytest.mark.parametrize("m", range(0, 7))
def test_matches_rule(m):
    rng = np.random.default_rng(m)
    triples = rng.uniform(-1, 1, (5, 3))
    for t, u in zip(triples, solve_harmonic_linear_many(triples, m)):
        assert u.max_abs_diff(harmonic_extend(t, m)) <= 1e-10


def test_deterministic():
    a = solve_harmonic_linear((0.3, 0.1, -0.5), 5).values
    b = solve_harmonic_linear((0.3, 0.1, -0.5), 5).values
    assert np.array_equal(a, b)


def test_level_limit():
    with pytest.raises(ValueError):
        solve_harmonic_linear((1, 0, 0), 9)


def test_minimality():
    assert brute_min_energy_check((1, 0, 0), 4, trials=200)
    assert brute_min_energy_check((2, 2, 2), 3, trials=50)
    h = harmonic_extend((1, 0, 0), 3)
    values = h.values.copy()
    values[4] += 1.0
    bumped = h.with_values(values)
    assert crude_energy(bumped) > crude_energy(h)
    assert brute_min_energy_check((1, 0, 0), 3, trials=200, candidate=h)
    with pytest.raises(ValueError):
        brute_min_energy_check((1, 0, 0), 7)


def test_pair_check_examples():
    assert exhaustive_pair_check(VertexFunction.constant(3.0, 5), lambda m: 0.0).worst_ratio == 0
    h = harmonic_extend((1, 0, 0), 8)
    rep = exhaustive_pair_check(h, lambda m: 0.6 ** (m / 2) * np.sqrt(2))
    assert rep.passed and rep.worst_ratio <= 1
    assert rep.n_pairs == sum(3 ** (m + 1) for m in range(9))
    rep = exhaustive_pair_check(harmonic_extend((1, 0, 0), 10), lambda m: 0.6**m)
    assert rep.passed


def test_pair_check_reports_violation():
    h = harmonic_extend((1, 0, 0), 4)
    rep = exhaustive_pair_check(h, lambda m: 0.1)
    assert not rep.passed and rep.worst_level == 0
    x, y = rep.worst_pair
    assert abs(h(x) - h(y)) == pytest.approx(rep.worst_ratio * 0.1)
