"""Vertex functions and their graph energies.

``E_m(u)`` is the sum of squared differences over all within-cell pairs of the
level-m graph and the renormalized energy is ``(5/3)**m * E_m(u)``.  Only
finite levels are ever computed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from gasketdim.gasket import (
    CELL_PAIRS,
    GasketLevel,
    LatticeVertex,
    check_level,
    enumerate_level,
)
from gasketdim.io import fmt_real, read_csv_rows

RENORMALIZATION = 5.0 / 3.0


@dataclass(frozen=True, eq=False)
class VertexFunction:
    """One real value per canonical vertex of the level-``level`` graph.

    ``values`` is aligned with ``enumerate_level(level).coords``.
    """

    level: int
    values: np.ndarray

    def __post_init__(self):
        check_level(self.level)
        vals = np.array(self.values, dtype=np.float64)
        n = enumerate_level(self.level).n_vertices
        if vals.shape != (n,):
            raise ValueError(f"expected {n} values for level {self.level}, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("vertex values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __repr__(self):
        return f"VertexFunction(level={self.level}, n={len(self.values)})"

    @classmethod
    def constant(cls, c: float, level: int) -> "VertexFunction":
        return cls(level, np.full(enumerate_level(level).n_vertices, float(c)))

    @property
    def gasket(self) -> GasketLevel:
        return enumerate_level(self.level)

    def cell_values(self) -> np.ndarray:
        """``(3**m, 3)`` corner values of every cell, lexicographic order."""
        return self.values[self.gasket.cell_corners]

    def restrict(self, level: int) -> "VertexFunction":
        if level == self.level:
            return self
        return VertexFunction(level, self.values[self.gasket.coarse_indices(level)])

    def __call__(self, v: LatticeVertex) -> float:
        return float(self.values[self.gasket.index(v)])

    def with_values(self, values) -> "VertexFunction":
        return VertexFunction(self.level, values)

    def __add__(self, other):
        if isinstance(other, VertexFunction):
            _same_level(self, other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, VertexFunction):
            _same_level(self, other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - float(other))

    def __mul__(self, c):
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def oscillation(self) -> float:
        return float(self.values.max() - self.values.min())

    def max_abs_diff(self, other: "VertexFunction") -> float:
        _same_level(self, other)
        return float(np.max(np.abs(self.values - other.values)))

    def to_csv(self, fh) -> None:
        fh.write("level,a,b,value\n")
        for (a, b), v in zip(self.gasket.coords.tolist(), self.values.tolist()):
            fh.write(f"{self.level},{a},{b},{fmt_real(v)}\n")

    @classmethod
    def from_csv(cls, fh) -> "VertexFunction":
        rows = read_csv_rows(fh, ("level", "a", "b", "value"))
        if not rows:
            raise ValueError("empty vertex-function CSV")
        levels = {int(r["level"]) for r in rows}
        if len(levels) != 1:
            raise ValueError(f"CSV mixes levels {sorted(levels)}")
        level = levels.pop()
        g = enumerate_level(level)
        coords = np.array([[int(r["a"]), int(r["b"])] for r in rows], dtype=np.int64)
        idx = g.indices_of(coords)
        if len(rows) != g.n_vertices or len(np.unique(idx)) != g.n_vertices:
            raise ValueError(f"CSV does not list every level-{level} vertex exactly once")
        values = np.empty(g.n_vertices)
        values[idx] = [float(r["value"]) for r in rows]
        return cls(level, values)


def _same_level(u: VertexFunction, v: VertexFunction) -> None:
    if u.level != v.level:
        raise ValueError(f"level mismatch: {u.level} vs {v.level}")


def pair_differences(u: VertexFunction) -> np.ndarray:
    """Within-cell differences, shape ``(3**m, 3)`` in pair order (1,2), (1,3), (2,3)."""
    cv = u.cell_values()
    i = [p[0] for p in CELL_PAIRS]
    j = [p[1] for p in CELL_PAIRS]
    return cv[:, i] - cv[:, j]


def crude_energy(u: VertexFunction) -> float:
    d = pair_differences(u)
    return float(np.sum(d * d))


def renormalized_energy(u: VertexFunction) -> float:
    return RENORMALIZATION**u.level * crude_energy(u)


def energy_norm(u: VertexFunction) -> float:
    return float(np.sqrt(renormalized_energy(u)))


Sampler = Union[Callable[[int], VertexFunction], object]


def _sample(sampler, level: int) -> VertexFunction:
    if hasattr(sampler, "sample"):
        return sampler.sample(level)
    return sampler(level)


class InconsistentSamplerError(ValueError):
    pass


@dataclass
class EnergySeries:
    entries: list[tuple[int, float, float]] = field(default_factory=list)
    rtol: float = 1e-12

    @property
    def levels(self) -> list[int]:
        return [m for m, _, _ in self.entries]

    @property
    def crude(self) -> np.ndarray:
        return np.array([c for _, c, _ in self.entries])

    @property
    def renormalized(self) -> np.ndarray:
        return np.array([r for _, _, r in self.entries])

    @property
    def monotone(self) -> bool:
        """Renormalized entries non-decreasing up to rounding."""
        r = self.renormalized
        if len(r) < 2:
            return True
        slack = self.rtol * np.maximum(np.abs(r[:-1]), 1e-300)
        return bool(np.all(r[1:] >= r[:-1] - slack))

    @property
    def lower_estimate(self) -> float:
        """Finest-level value; a lower estimate of the limiting energy."""
        return self.entries[-1][2]

    def bounded_by(self, cap: float) -> bool:
        return bool(np.all(self.renormalized <= cap))

    def to_csv(self, fh) -> None:
        fh.write("m,crude,renormalized\n")
        for m, c, r in self.entries:
            fh.write(f"{m},{fmt_real(c)},{fmt_real(r)}\n")


def energy_series(sampler: Sampler, m_max: int, m_min: int = 0, rtol: float = 1e-12) -> EnergySeries:
    """Crude and renormalized energies of one function at levels ``m_min..m_max``.

    ``sampler`` is a provider with ``.sample(level)`` or a plain callable.  Each
    level is sampled separately and must agree with the next finer sample on
    the shared vertices, otherwise :class:`InconsistentSamplerError` is raised.
    """
    check_level(m_max)
    if m_min > m_max:
        raise ValueError("m_min must not exceed m_max")
    series = EnergySeries(rtol=rtol)
    prev = None
    for m in range(m_min, m_max + 1):
        u = _sample(sampler, m)
        if u.level != m:
            raise InconsistentSamplerError(f"sampler returned level {u.level} for level {m}")
        if prev is not None:
            coarse = u.restrict(m - 1)
            scale = max(1.0, prev.sup_norm())
            gap = np.abs(coarse.values - prev.values)
            bad = int(np.argmax(gap))
            if gap[bad] > 1e-12 * scale:
                v = prev.gasket.vertex(bad)
                raise InconsistentSamplerError(
                    f"value at {v} changed from {prev.values[bad]!r} to {coarse.values[bad]!r} at level {m}"
                )
        c = crude_energy(u)
        series.entries.append((m, c, RENORMALIZATION**m * c))
        prev = u
    return series


@dataclass
class HolderReport:
    energy: float
    max_ratio: float
    worst: tuple[int, LatticeVertex, LatticeVertex] | None
    violations: list[tuple[int, LatticeVertex, LatticeVertex, float]]
    n_violations: int

    @property
    def passed(self) -> bool:
        return self.n_violations == 0


def holder_bound_check(
    u: VertexFunction, energy: float | None = None, max_listed: int = 100
) -> HolderReport:
    """Check ``|u(x) - u(y)| <= (3/5)**(m'/2) * sqrt(energy)`` on every cell of every level ``m' <= m``.

    ``energy`` defaults to the renormalized energy of ``u`` at its own level,
    in which case the inequality always holds for a finite-level function;
    pass a different value to test against an externally known energy.
    """
    if energy is None:
        energy = renormalized_energy(u)
    root = float(np.sqrt(energy))
    max_ratio = 0.0
    worst = None
    violations: list[tuple[int, LatticeVertex, LatticeVertex, float]] = []
    n_viol = 0
    for m in range(u.level + 1):
        um = u.restrict(m)
        d = np.abs(pair_differences(um))
        bound = 0.6 ** (m / 2) * root
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(d == 0, 0.0, d / bound) if bound > 0 else np.where(d == 0, 0.0, np.inf)
        flat = int(np.argmax(ratio))
        if ratio.flat[flat] > max_ratio:
            max_ratio = float(ratio.flat[flat])
            worst = (m,) + _pair_at(um, flat)
        bad = np.flatnonzero(ratio.ravel() > 1.0)
        n_viol += len(bad)
        for k in bad[: max(0, max_listed - len(violations))]:
            violations.append((m,) + _pair_at(um, int(k)) + (float(ratio.flat[k]),))
    return HolderReport(energy, max_ratio, worst, violations, n_viol)


def _pair_at(u: VertexFunction, flat: int) -> tuple[LatticeVertex, LatticeVertex]:
    cell, p = divmod(flat, 3)
    i, j = CELL_PAIRS[p]
    cc = u.gasket.cell_corners[cell]
    return u.gasket.vertex(int(cc[i])), u.gasket.vertex(int(cc[j]))

