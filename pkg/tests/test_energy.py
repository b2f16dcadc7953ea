import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gasketdim.energy import (
    InconsistentSamplerError,
    VertexFunction,
    crude_energy,
    energy_norm,
    energy_series,
    holder_bound_check,
    renormalized_energy,
)
from gasketdim.fif import AlphaSpec, OperatorSpec, build_fif, check_energy_condition, energy_cap
from gasketdim.gasket import LatticeVertex, apply_map
from gasketdim.harmonic import harmonic_extend
from gasketdim.harmonic import BoundaryValues
from gasketdim.providers import CoordinateProvider, HarmonicProvider, VertexTableProvider, constant


def test_crude_energy_examples():
    assert crude_energy(VertexFunction.constant(3.0, 4)) == 0.0
    assert crude_energy(harmonic_extend((1, 0, 0), 0)) == 2.0
    assert crude_energy(harmonic_extend((1, 0, 0), 1)) == pytest.approx(6 / 5, rel=1e-15)


def test_renormalized_energy_examples():
    assert renormalized_energy(VertexFunction.constant(-1.0, 5)) == 0.0
    assert renormalized_energy(harmonic_extend((1, 0, 0), 1)) == pytest.approx(2.0, rel=1e-15)
    assert renormalized_energy(harmonic_extend((1, 0, 0), 5)) == pytest.approx(2.0, rel=1e-9)


def test_energy_norm():
    assert energy_norm(VertexFunction.constant(1.0, 3)) == 0.0
    for m in (0, 3, 8):
        assert energy_norm(harmonic_extend((1, 0, 0), m)) == pytest.approx(math.sqrt(2), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(
    st.integers(-5000, 5000).map(lambda i: i / 100),
    st.lists(st.integers(-200, 200).map(lambda i: i / 100), min_size=3, max_size=3),
)
def test_energy_norm_homogeneous(c, bv):
    u = harmonic_extend(bv, 4)
    assert energy_norm(u * c) == pytest.approx(abs(c) * energy_norm(u), rel=1e-12, abs=1e-12)


def test_series_harmonic_constant():
    s = energy_series(HarmonicProvider(BoundaryValues(0.2, -0.4, 1.1)), 9)
    r = s.renormalized
    np.testing.assert_allclose(r, r[0], rtol=1e-9)
    assert s.levels == list(range(10))
    z = energy_series(constant(4.0), 6)
    assert np.all(z.renormalized == 0) and np.all(z.crude == 0)


def test_series_fif_monotone_and_bounded():
    alpha = AlphaSpec.constant(1, 0.25)
    assert check_energy_condition(alpha).holds
    seed = CoordinateProvider("x")
    inst = build_fif(seed, OperatorSpec().apply(seed), alpha, 9)
    s = energy_series(inst.values.restrict, 9)
    assert s.monotone
    assert s.renormalized[-1] > s.renormalized[0]
    cap = energy_cap(alpha, 1.0, renormalized_energy(seed.sample(9)))
    assert s.bounded_by(cap)


def test_series_fixed_point_when_base_is_seed():
    f = HarmonicProvider(BoundaryValues(1.0, 0.0, 0.5))
    u = build_fif(f, f, AlphaSpec.constant(1, 0.25), 8).values
    np.testing.assert_allclose(u.values, f.sample(8).values, atol=1e-15)
    r = energy_series(u.restrict, 8).renormalized
    np.testing.assert_allclose(r, r[0], rtol=1e-9)


def test_series_rejects_inconsistent_sampler():
    def bad(m):
        return VertexFunction.constant(float(m), m)

    with pytest.raises(InconsistentSamplerError):
        energy_series(bad, 3)


def test_holder_bound_harmonic():
    h = harmonic_extend((1, 0, 0), 8)
    rep = holder_bound_check(h)
    assert rep.passed and rep.max_ratio <= 1
    assert holder_bound_check(VertexFunction.constant(2.0, 5)).max_ratio == 0


def test_holder_bound_reports_violation():
    h = harmonic_extend((1, 0, 0), 6)
    v = apply_map((2, 3, 1, 2, 3), LatticeVertex(1, 1, 0))  # interior point of level 6
    values = h.values.copy()
    values[h.gasket.index(v)] += 10
    bumped = h.with_values(values)
    # measured against the energy of the unperturbed function
    rep = holder_bound_check(bumped, energy=2.0)
    assert not rep.passed
    assert rep.n_violations > 0
    for m, x, y, ratio in rep.violations:
        assert v in (x, y) and ratio > 1 and m <= 6
    # against its own energy the inequality holds at every finite level
    assert holder_bound_check(bumped).passed


def test_csv_roundtrip():
    rng = np.random.default_rng(3)
    u = VertexFunction(4, rng.standard_normal(enumerate_count := (3**5 + 3) // 2))
    fh = io.StringIO()
    u.to_csv(fh)
    fh.seek(0)
    v = VertexFunction.from_csv(fh)
    assert v.level == 4 and len(v.values) == enumerate_count
    np.testing.assert_array_equal(u.values, v.values)


def test_csv_rejects_missing_rows():
    u = harmonic_extend((1, 2, 3), 2)
    fh = io.StringIO()
    u.to_csv(fh)
    text = "\n".join(fh.getvalue().splitlines()[:-1]) + "\n"
    with pytest.raises(ValueError):
        VertexFunction.from_csv(io.StringIO(text))


def test_table_provider_extends_harmonically():
    u = harmonic_extend((0.5, 0.1, -0.3), 3)
    p = VertexTableProvider(u)
    np.testing.assert_allclose(p.sample(7).values, harmonic_extend((0.5, 0.1, -0.3), 7).values, atol=1e-15)
    np.testing.assert_array_equal(p.sample(2).values, u.restrict(2).values)


def test_vertex_function_validation():
    with pytest.raises(ValueError):
        VertexFunction(1, np.zeros(5))
    with pytest.raises(ValueError):
        VertexFunction(1, np.array([0, 1, 2, 3, 4, np.inf]))
