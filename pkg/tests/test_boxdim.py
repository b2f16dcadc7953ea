import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gasketdim.boxdim import (
    FINITE_ENERGY_UPPER,
    HARMONIC_UPPER,
    LOWER,
    BoxCountSeries,
    bound_report,
    box_count_series,
    cell_oscillations,
    column_box_count,
    estimate_dimension,
    fif_bounds,
    fif_eta,
    finite_energy_bounds,
    grid_box_count,
    harmonic_bounds,
    holder_estimate,
    interpolation_points_coplanar,
)
from gasketdim.energy import VertexFunction
from gasketdim.fif import AlphaSpec, OperatorSpec, build_fif
from gasketdim.gasket import words
from gasketdim.io import fmt_real
from gasketdim.harmonic import BoundaryValues, PiecewiseHarmonicSpec, harmonic_extend, piecewise_harmonic_extend
from gasketdim.providers import CoordinateProvider, HarmonicProvider

X = CoordinateProvider("x")


@pytest.fixture(scope="module")
def h100():
    return harmonic_extend((1, 0, 0), 14)


def test_oscillations_constant():
    t = cell_oscillations(VertexFunction.constant(1.5, 6), 3)
    assert len(t) == 27
    assert np.all(t.minima == 1.5) and np.all(t.maxima == 1.5)


def test_oscillations_harmonic(h100):
    t = cell_oscillations(h100, 1, 4)
    lo, hi = t["2"]
    assert 0 <= lo and hi <= 0.4 + 1e-15
    assert np.all(t.oscillation <= 0.6 + 1e-15)


def test_oscillations_coordinate():
    for r in (0, 2, 5):
        assert cell_oscillations(X, 2, r)["11"] == (0.0, 0.25)


def test_oscillation_monotone_in_depth(h100):
    f = build_fif(X, OperatorSpec().apply(X), AlphaSpec(1, [0.5, -0.6, 0.3]), 10).values
    for u in (h100.restrict(10), f):
        prev = cell_oscillations(u, 3, 0).oscillation
        for r in range(1, 8):
            cur = cell_oscillations(u, 3, r).oscillation
            assert np.all(cur >= prev)
            prev = cur


def test_column_count_examples(h100):
    for k in range(6):
        assert column_box_count(VertexFunction.constant(0.3, k + 2), k) == 3**k
    assert column_box_count(h100, 0, 6) == 2
    for k in range(11):
        assert column_box_count(h100, k, 4) <= 3**k * ((6 / 5) ** k * math.sqrt(2) + 2)


def test_grid_count_constant():
    # the footprint meets all four squares of the 2x2 grid at one z-layer
    assert grid_box_count(VertexFunction.constant(0.0, 6), 1, 4) == 4
    s = box_count_series(VertexFunction.constant(0.0, 14), 4, 10, "grid")
    assert estimate_dimension(s).slope == pytest.approx(LOWER, abs=0.05)


def test_grid_within_four_columns(h100):
    f = build_fif(X, OperatorSpec().apply(X), AlphaSpec(1, [0.5, -0.6, 0.3]), 14).values
    for u in (h100, f, X.sample(14)):
        for k in range(3, 11):
            assert grid_box_count(u, k, 4) <= 4 * column_box_count(u, k, 4)


def test_grid_needs_oversampling(h100):
    with pytest.raises(ValueError):
        grid_box_count(h100, 3, 0)


@pytest.mark.parametrize(
    "base,expected",
    [(3.0, LOWER), (4.0, 2.0), (3.0 * 1.2, HARMONIC_UPPER)],
)
def test_estimator_exact_series(base, expected):
    s = BoxCountSeries([(k, base**k) for k in range(4, 11)])
    assert estimate_dimension(s).slope == pytest.approx(expected, abs=1e-9)
    assert estimate_dimension(s).r_squared == pytest.approx(1.0)


def test_estimator_needs_three_points():
    with pytest.raises(ValueError):
        estimate_dimension(BoxCountSeries([(1, 3), (2, 9)]))


def test_series_csv_and_plot_data():
    s = BoxCountSeries([(1, 3), (2, 9), (3, 27)])
    fh = io.StringIO()
    s.to_csv(fh)
    assert fh.getvalue().splitlines()[:2] == ["k,count,log2_count", "1,3," + fmt_real(math.log2(3))]
    fh = io.StringIO()
    s.plot_csv(fh)
    assert fh.getvalue().splitlines()[0] == "k_log2,log_count"
    x, y = s.plot_data()[1]
    assert x == pytest.approx(2 * math.log(2)) and y == pytest.approx(math.log(9))


def test_threads_do_not_change_counts(h100):
    a = box_count_series(h100, 3, 9, "grid", threads=1)
    b = box_count_series(h100, 3, 9, "grid", threads=4)
    assert a.entries == b.entries


def test_bounds_constants():
    lo, hi = harmonic_bounds()
    assert lo == pytest.approx(1.584963, abs=5e-7) and hi == pytest.approx(1.847997, abs=5e-7)
    assert hi == pytest.approx(1.8479, abs=1e-4) and lo < hi
    lo, hi = finite_energy_bounds()
    assert hi == pytest.approx(2.21648, abs=1e-5)
    assert hi == pytest.approx(math.log(21.6) / math.log(4), rel=1e-15)
    assert FINITE_ENERGY_UPPER == hi


def test_fif_bounds_examples():
    b = fif_bounds(1.5, 1.0)
    assert b.case == "I" and b.upper == pytest.approx(LOWER)
    b = fif_bounds(2.4, 1.0)
    assert b.case == "II" and b.upper == pytest.approx(2.26303, abs=1e-5)
    b = fif_bounds(1.0, 0.5)
    assert b.case == "I" and b.upper == pytest.approx(2.08496, abs=1e-5)
    with pytest.raises(ValueError):
        fif_bounds(1.0, 0.0)


@settings(max_examples=200)
@given(st.floats(0, 27), st.floats(0.01, 1))
def test_fif_upper_never_below_lower(psi, eta):
    # case II needs psi > 3 * 2**-eta, which keeps the upper bound above LOWER + 1 - eta
    b = fif_bounds(psi, eta)
    assert b.upper >= b.lower - 1e-12


def test_holder_estimate_examples(h100):
    assert holder_estimate(X, 12).eta == pytest.approx(1.0, abs=0.05)
    assert holder_estimate(h100, 12).eta == pytest.approx(math.log(5 / 3) / math.log(2), abs=0.05)
    c = holder_estimate(VertexFunction.constant(1.0, 8))
    assert c.degenerate and c.eta == 1.0
    with pytest.raises(ValueError):
        holder_estimate(h100, 3)


def test_fif_eta_is_minimum():
    f = X
    b = HarmonicProvider(BoundaryValues(0.0, 1.0, 0.5))
    assert fif_eta(f, b) == pytest.approx(holder_estimate(b, 10).eta)


def test_coplanarity_metadata():
    assert interpolation_points_coplanar(X)
    assert not interpolation_points_coplanar(HarmonicProvider(BoundaryValues(1, 0, 0)))


def test_bound_report():
    est = estimate_dimension(BoxCountSeries([(k, 3.0**k) for k in range(4, 11)]))
    rep = bound_report("harmonic", est, tolerance=0.03)
    assert rep.within_bounds and rep.as_dict()["kind"] == "harmonic"
    rep = bound_report("fif", est, psi=2.4, eta=1.0)
    assert rep.metadata["case"] == "II" and rep.within_bounds
    with pytest.raises(ValueError):
        bound_report("fif", est)


def test_harmonic_and_piecewise_below_upper_bound(h100):
    s = box_count_series(h100, 4, 10, "column")
    assert LOWER - 0.03 <= estimate_dimension(s).slope <= HARMONIC_UPPER + 0.03
    # conforming piecewise data: independent values at the level-2 vertices
    rng = np.random.default_rng(11)
    g = harmonic_extend((0, 0, 0), 2).gasket
    shared = rng.uniform(0, 1, g.n_vertices)
    cells = {w: [shared[i] for i in g.cell_corners[j]] for j, w in enumerate(words(2))}
    u = piecewise_harmonic_extend(PiecewiseHarmonicSpec(2, cells), 14)
    slope = estimate_dimension(box_count_series(u, 4, 10, "column")).slope
    assert slope <= HARMONIC_UPPER + 0.03
