"""Harmonic and piecewise-harmonic functions via the 1/5-2/5 midpoint rule."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from gasketdim.energy import VertexFunction
from gasketdim.gasket import (
    LatticeVertex,
    Word,
    apply_map,
    check_level,
    enumerate_level,
    parse_word,
    word_from_index,
    word_index,
    word_label,
    words,
)


@dataclass(frozen=True)
class BoundaryValues:
    at_q1: float
    at_q2: float
    at_q3: float

    def __post_init__(self):
        for name in ("at_q1", "at_q2", "at_q3"):
            x = float(getattr(self, name))
            if not math.isfinite(x):
                raise ValueError(f"boundary value {name} must be finite, got {x!r}")
            object.__setattr__(self, name, x)

    @classmethod
    def of(cls, values: Sequence[float]) -> "BoundaryValues":
        if isinstance(values, BoundaryValues):
            return values
        a, b, c = values
        return cls(a, b, c)

    def as_array(self) -> np.ndarray:
        return np.array([self.at_q1, self.at_q2, self.at_q3])


@dataclass(frozen=True)
class HarmonicSpec:
    boundary: BoundaryValues


@dataclass(frozen=True)
class PiecewiseHarmonicSpec:
    partition_level: int
    per_cell_boundaries: Mapping[Word, BoundaryValues]

    def __post_init__(self):
        check_level(self.partition_level)
        cells = {parse_word(w): BoundaryValues.of(bv) for w, bv in self.per_cell_boundaries.items()}
        expected = set(words(self.partition_level))
        if set(cells) != expected:
            missing = sorted(expected - set(cells))
            extra = sorted(set(cells) - expected)
            raise ValueError(
                f"need one boundary triple per level-{self.partition_level} cell"
                f" (missing {[word_label(w) for w in missing]}, unexpected {[word_label(w) for w in extra]})"
            )
        object.__setattr__(self, "per_cell_boundaries", cells)

    def cell_array(self) -> np.ndarray:
        """``(3**p, 3)`` boundary triples in lexicographic cell order."""
        out = np.empty((3**self.partition_level, 3))
        for w, bv in self.per_cell_boundaries.items():
            out[word_index(w)] = bv.as_array()
        return out


class ConformityError(ValueError):
    """Two cells prescribe different values at a shared vertex."""

    def __init__(self, message: str, vertex: LatticeVertex, cells: tuple[Word, Word]):
        super().__init__(message)
        self.vertex = vertex
        self.cells = cells


def refine_cell_values(cv: np.ndarray) -> np.ndarray:
    """One step of the 1/5-2/5 rule on ``(N, 3)`` corner values.

    Child ``i`` of cell ``w`` is cell ``w i`` and lands at row ``3*c + i - 1``,
    which keeps the lexicographic word order.
    """
    x, y, z = cv[:, 0], cv[:, 1], cv[:, 2]
    m12 = 0.4 * x + 0.4 * y + 0.2 * z
    m13 = 0.4 * x + 0.4 * z + 0.2 * y
    m23 = 0.4 * y + 0.4 * z + 0.2 * x
    out = np.empty((len(cv), 3, 3))
    out[:, 0] = np.column_stack((x, m12, m13))
    out[:, 1] = np.column_stack((m12, y, m23))
    out[:, 2] = np.column_stack((m13, m23, z))
    return out.reshape(-1, 3)


def extend_cell_values(cv: np.ndarray, steps: int) -> np.ndarray:
    for _ in range(steps):
        cv = refine_cell_values(cv)
    return cv


def from_cell_values(cv: np.ndarray, level: int) -> VertexFunction:
    """Scatter per-cell corner values onto the canonical vertex list."""
    g = enumerate_level(level)
    values = np.empty(g.n_vertices)
    values[g.cell_corners.ravel()] = cv.ravel()
    return VertexFunction(level, values)


def harmonic_extend(spec: HarmonicSpec | BoundaryValues | Sequence[float], m: int) -> VertexFunction:
    """Harmonic function with the given corner values, sampled on the level-m vertices."""
    check_level(m)
    boundary = spec.boundary if isinstance(spec, HarmonicSpec) else BoundaryValues.of(spec)
    cv = extend_cell_values(boundary.as_array()[None, :], m)
    return from_cell_values(cv, m)


def check_conformity(spec: PiecewiseHarmonicSpec, atol: float = 1e-12) -> None:
    """Raise :class:`ConformityError` if cells disagree at a shared vertex."""
    p = spec.partition_level
    g = enumerate_level(p)
    cv = spec.cell_array()
    idx = g.cell_corners.ravel()
    vals = cv.ravel()
    # every vertex occurs, so unique() returns 0..n-1 with first-occurrence slots
    _, first = np.unique(idx, return_index=True)
    gap = np.abs(vals - vals[first[idx]])
    bad = np.flatnonzero(gap > atol)
    if len(bad):
        k = int(bad[0])
        other = int(first[idx[k]])
        w_a = _word_of_slot(other, p)
        w_b = _word_of_slot(k, p)
        vertex = g.vertex(int(idx[k]))
        raise ConformityError(
            f"cells {word_label(w_a)} and {word_label(w_b)} disagree at shared vertex "
            f"{vertex}: {vals[other]!r} vs {vals[k]!r}",
            vertex,
            (w_a, w_b),
        )


def _word_of_slot(slot: int, p: int) -> Word:
    return word_from_index(slot // 3, p)


def piecewise_harmonic_extend(spec: PiecewiseHarmonicSpec, m: int, atol: float = 1e-12) -> VertexFunction:
    """Harmonic on every level-p cell with the prescribed corner triples."""
    check_level(m)
    if m < spec.partition_level:
        raise ValueError(f"level {m} is coarser than the partition level {spec.partition_level}")
    check_conformity(spec, atol=atol)
    cv = extend_cell_values(spec.cell_array(), m - spec.partition_level)
    return from_cell_values(cv, m)


def restrict_to_cells(h: VertexFunction, p: int) -> PiecewiseHarmonicSpec:
    """Corner triples of ``h`` on each level-p cell, as a piecewise spec."""
    g = enumerate_level(h.level)
    cells = {}
    for w in words(p):
        corners = [apply_map(w, LatticeVertex.corner(i)) for i in (1, 2, 3)]
        cells[w] = BoundaryValues.of([h(v.at_level(g.level)) for v in corners])
    return PiecewiseHarmonicSpec(p, cells)
