"""Box counting for graphs of vertex functions and the proved dimension bounds.

Two counts are provided.  The column count covers the graph over each
level-k cell by one vertical stack of ``2**-k`` cubes, as in the covering
arguments for the upper bounds.  The grid count is the usual occupancy
count of an axis-aligned ``2**-k`` grid and serves as an independent
cross-check.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from gasketdim.energy import VertexFunction
from gasketdim.gasket import word_index
from gasketdim.io import fmt_real

LOG2 = math.log(2.0)
LOWER = math.log(3.0) / LOG2
HARMONIC_UPPER = math.log(18.0 / 5.0) / LOG2
FINITE_ENERGY_UPPER = math.log(108.0 / 5.0) / (2.0 * LOG2)

DEFAULT_OVERSAMPLE = 4


def _at_level(u, level: int) -> VertexFunction:
    """Restrict a vertex function, or sample a provider, at ``level``."""
    if isinstance(u, VertexFunction):
        if u.level < level:
            raise ValueError(f"function is sampled at level {u.level}, need at least {level}")
        return u.restrict(level)
    return u.sample(level)


@dataclass(eq=False)
class OscillationTable:
    k: int
    r: int
    minima: np.ndarray
    maxima: np.ndarray

    @property
    def oscillation(self) -> np.ndarray:
        return self.maxima - self.minima

    def __getitem__(self, word) -> tuple[float, float]:
        i = word_index(word)
        return float(self.minima[i]), float(self.maxima[i])

    def __len__(self):
        return len(self.minima)


def cell_oscillations(u, k: int, r: int | None = None) -> OscillationTable:
    """Per-cell min and max over the level-(k+r) vertices of every level-k cell.

    ``r`` defaults to everything ``u`` has below level ``k``.
    """
    if r is None:
        if not isinstance(u, VertexFunction):
            raise ValueError("oversampling depth r is required for providers")
        r = u.level - k
    if r < 0:
        raise ValueError(f"function level is below k={k}")
    cv = _at_level(u, k + r).cell_values().reshape(3**k, -1)
    return OscillationTable(k, r, cv.min(axis=1), cv.max(axis=1))


def column_box_count(u, k: int, r: int | None = None) -> int:
    """``sum over level-k cells of (ceil(osc * 2**k) + 1)``."""
    osc = cell_oscillations(u, k, r).oscillation
    return int(np.sum(np.ceil(osc * 2.0**k)) + len(osc))


def grid_box_count(u, k: int, r: int | None = None, chunk: int = 1 << 21) -> int:
    """Occupied cells of the pitch-``2**-k`` grid met by the sampled graph.

    The graph is represented by its level-(k+r) points joined by straight
    segments along the graph edges; the z-grid starts at the minimum value.
    """
    if r is None:
        if not isinstance(u, VertexFunction):
            raise ValueError("oversampling depth r is required for providers")
        r = u.level - k
    if r < 1:
        raise ValueError("grid counting needs at least one level of oversampling")
    um = _at_level(u, k + r)
    g = um.gasket
    scale = 2.0**k
    X = g.points[:, 0] * scale
    Y = g.points[:, 1] * scale
    Z = (um.values - um.values.min()) * scale
    # closed boxes: points on the far faces belong to the last column or layer
    nx = 1 << k
    ny = nx
    nz = max(int(math.ceil(Z.max())), 1)

    def encode(ix, iy, lo, hi):
        lo = np.minimum(lo, nz - 1)
        hi = np.minimum(hi, nz - 1)
        counts = (hi - lo + 1).astype(np.int64)
        base = (ix.astype(np.int64) * ny + iy) * nz
        start = np.repeat(base + lo - np.cumsum(counts) + counts, counts)
        return start + np.arange(counts.sum(), dtype=np.int64)

    fx = np.minimum(np.floor(X), nx - 1).astype(np.int64)
    fy = np.minimum(np.floor(Y), ny - 1).astype(np.int64)
    fz = np.minimum(np.floor(Z), nz - 1).astype(np.int64)
    keys = [np.unique((fx * ny + fy) * nz + fz)]
    edges = g.edges
    for s in range(0, len(edges), chunk):
        e = edges[s : s + chunk]
        i, j = e[:, 0], e[:, 1]
        same = (fx[i] == fx[j]) & (fy[i] == fy[j])
        a, b = i[same], j[same]
        lo = np.minimum(fz[a], fz[b])
        hi = np.maximum(fz[a], fz[b])
        keys.append(np.unique(encode(fx[a], fy[a], lo, hi)))

        a, b = i[~same], j[~same]
        if len(a):
            keys.append(np.unique(_split_segments(X, Y, Z, a, b, encode)))
    return int(len(np.unique(np.concatenate(keys))))


def _split_segments(X, Y, Z, a, b, encode):
    """Cut segments at grid lines; each piece lies in a single grid square."""
    x0, y0, z0 = X[a], Y[a], Z[a]
    dx, dy, dz = X[b] - x0, Y[b] - y0, Z[b] - z0
    ix0, ix1 = np.floor(x0), np.floor(X[b])
    iy0, iy1 = np.floor(y0), np.floor(Y[b])
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(ix0 != ix1, (np.maximum(ix0, ix1) - x0) / dx, np.nan)
        ty = np.where(iy0 != iy1, (np.maximum(iy0, iy1) - y0) / dy, np.nan)
    ts = np.column_stack((np.zeros_like(x0), tx, ty, np.ones_like(x0)))
    ts = np.sort(np.clip(ts, 0.0, 1.0), axis=1)  # nan sorts last
    out = []
    for p in range(3):
        t0, t1 = ts[:, p], ts[:, p + 1]
        ok = np.isfinite(t1) & (t1 > t0)
        if not ok.any():
            continue
        t0, t1 = t0[ok], t1[ok]
        tm = 0.5 * (t0 + t1)
        sx = np.floor(x0[ok] + tm * dx[ok]).astype(np.int64)
        sy = np.floor(y0[ok] + tm * dy[ok]).astype(np.int64)
        za = z0[ok] + t0 * dz[ok]
        zb = z0[ok] + t1 * dz[ok]
        lo = np.floor(np.minimum(za, zb)).astype(np.int64)
        hi = np.floor(np.maximum(za, zb)).astype(np.int64)
        out.append(encode(sx, sy, lo, hi))
    return np.concatenate(out) if out else np.empty(0, dtype=np.int64)


@dataclass
class BoxCountSeries:
    entries: list[tuple[int, int]] = field(default_factory=list)
    method: str = "column"

    @property
    def ks(self) -> np.ndarray:
        return np.array([k for k, _ in self.entries])

    @property
    def counts(self) -> np.ndarray:
        return np.array([c for _, c in self.entries], dtype=np.float64)

    def plot_data(self) -> list[tuple[float, float]]:
        """``(k log 2, log N(k))`` pairs."""
        return [(k * LOG2, math.log(c)) for k, c in self.entries]

    def to_csv(self, fh) -> None:
        fh.write("k,count,log2_count\n")
        for k, c in self.entries:
            fh.write(f"{k},{c},{fmt_real(math.log2(c))}\n")

    def plot_csv(self, fh) -> None:
        fh.write("k_log2,log_count\n")
        for x, y in self.plot_data():
            fh.write(f"{fmt_real(x)},{fmt_real(y)}\n")


COUNTERS = {"column": column_box_count, "grid": grid_box_count}


def box_count_series(
    u,
    k_min: int,
    k_max: int,
    method: str = "column",
    oversample: int = DEFAULT_OVERSAMPLE,
    threads: int = 1,
) -> BoxCountSeries:
    """Counts ``N(k)`` for ``k_min <= k <= k_max`` sampling each cell to depth ``oversample``.

    ``u`` is a vertex function of level at least ``k_max + oversample`` or a
    provider.  Counts are exact integers, so ``threads`` does not affect the
    result.
    """
    try:
        counter = COUNTERS[method]
    except KeyError:
        raise ValueError(f"unknown counting method {method!r}; use 'column' or 'grid'") from None
    if k_min < 0 or k_max < k_min:
        raise ValueError("need 0 <= k_min <= k_max")
    if not isinstance(u, VertexFunction):
        u = u.sample(k_max + oversample)

    def one(k):
        return k, counter(u, k, oversample)

    ks = range(k_min, k_max + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            entries = list(pool.map(one, ks))
    else:
        entries = [one(k) for k in ks]
    return BoxCountSeries(entries, method)


def _linregress(x, y):
    # deferred: importing scipy.stats dominates CLI start-up time
    from scipy.stats import linregress

    return linregress(x, y)


@dataclass
class DimensionEstimate:
    slope: float
    intercept: float
    r_squared: float
    k_range: tuple[int, int]

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "k_range": list(self.k_range),
        }


def estimate_dimension(series: BoxCountSeries, k_min: int | None = None, k_max: int | None = None) -> DimensionEstimate:
    """Least-squares slope of ``log N(k)`` against ``k log 2``."""
    ks, counts = series.ks, series.counts
    lo = ks.min() if k_min is None else k_min
    hi = ks.max() if k_max is None else k_max
    sel = (ks >= lo) & (ks <= hi)
    if sel.sum() < 3:
        raise ValueError("at least three levels are needed for a dimension estimate")
    if np.any(counts[sel] <= 0):
        raise ValueError("box counts must be positive")
    fit = _linregress(ks[sel] * LOG2, np.log(counts[sel]))
    slope = float(fit.slope)
    if not math.isfinite(slope):
        raise ValueError("regression slope is not finite")
    return DimensionEstimate(slope, float(fit.intercept), float(fit.rvalue**2), (int(lo), int(hi)))


class Bounds(NamedTuple):
    lower: float
    upper: float


class FifBounds(NamedTuple):
    lower: float
    upper: float
    case: str


def harmonic_bounds() -> Bounds:
    return Bounds(LOWER, HARMONIC_UPPER)


def finite_energy_bounds() -> Bounds:
    return Bounds(LOWER, FINITE_ENERGY_UPPER)


def fif_bounds(psi: float, eta: float) -> FifBounds:
    """Two-case bounds for a fractal function with ``psi = sum |alpha_i|`` and Hoelder exponent ``eta``."""
    if psi < 0:
        raise ValueError("psi must be non-negative")
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    if psi * 2.0**eta / 3.0 <= 1.0:
        return FifBounds(LOWER, 1.0 - eta + LOWER, "I")
    return FifBounds(LOWER, 1.0 + math.log(psi) / LOG2, "II")


@dataclass
class HolderEstimate:
    eta: float
    degenerate: bool
    levels: list[int]
    max_oscillation: list[float]


def holder_estimate(u, m_max: int | None = None, m_min: int = 2) -> HolderEstimate:
    """Decay exponent of the largest cell oscillation, fitted over levels ``m_min..m_max``.

    Oscillations are taken over all vertices of ``u`` (sampled at ``m_max``)
    lying in each cell.
    """
    if m_max is None:
        if not isinstance(u, VertexFunction):
            raise ValueError("m_max is required for providers")
        m_max = u.level
    if m_max < 4:
        raise ValueError("m_max must be at least 4")
    um = _at_level(u, m_max)
    cv = um.cell_values()
    levels, osc = [], []
    for m in range(m_min, m_max + 1):
        block = cv.reshape(3**m, -1)
        levels.append(m)
        osc.append(float(np.max(block.max(axis=1) - block.min(axis=1))))
    osc_arr = np.array(osc)
    keep = osc_arr > 0
    if keep.sum() < 2:
        return HolderEstimate(1.0, True, levels, osc)
    x = -np.array(levels)[keep] * LOG2
    fit = _linregress(x, np.log(osc_arr[keep]))
    return HolderEstimate(float(fit.slope), False, levels, osc)


@dataclass
class BoundReport:
    kind: str
    lower: float
    upper: float
    estimate: DimensionEstimate
    tolerance: float
    within_bounds: bool
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lower": self.lower,
            "upper": self.upper,
            "tolerance": self.tolerance,
            "within_bounds": self.within_bounds,
            "estimate": self.estimate.as_dict(),
            "metadata": self.metadata,
        }


def bound_report(
    kind: str,
    estimate: DimensionEstimate,
    tolerance: float = 0.0,
    psi: float | None = None,
    eta: float | None = None,
) -> BoundReport:
    meta = {}
    if kind == "harmonic":
        lo, hi = harmonic_bounds()
    elif kind in ("finite_energy", "energy"):
        kind = "finite_energy"
        lo, hi = finite_energy_bounds()
    elif kind == "fif":
        if psi is None or eta is None:
            raise ValueError("fif bounds need psi and eta")
        lo, hi, case = fif_bounds(psi, eta)
        meta = {"psi": psi, "eta": eta, "case": case}
    else:
        raise ValueError(f"unknown bound kind {kind!r}")
    ok = lo - tolerance <= estimate.slope <= hi + tolerance
    return BoundReport(kind, lo, hi, estimate, tolerance, ok, meta)


def interpolation_points_coplanar(f, tol: float = 1e-12) -> bool:
    """Whether the six level-1 graph points ``(x, y, f)`` lie in one plane."""
    u = _at_level(f, 1)
    pts = np.column_stack((u.gasket.points, u.values, np.ones(len(u.values))))
    s = np.linalg.svd(pts, compute_uv=False)
    return bool(s[-1] <= tol * max(1.0, s[0]))


def fif_eta(f, b, m_max: int = 10) -> float:
    """``min`` of the fitted Hoelder exponents of seed and base, clipped to (0, 1]."""
    eta = min(holder_estimate(f, m_max).eta, holder_estimate(b, m_max).eta)
    return float(min(max(eta, 1e-9), 1.0))
