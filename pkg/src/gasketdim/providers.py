"""Level-consistent function providers used as FIF seeds and base functions.

A provider can be sampled at any level; the value it assigns to a vertex
does not depend on the level at which it is asked.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from gasketdim.energy import VertexFunction
from gasketdim.gasket import LatticeVertex, check_level, enumerate_level
from gasketdim.harmonic import BoundaryValues, extend_cell_values, from_cell_values, harmonic_extend


class FunctionProvider:
    kind = "abstract"

    def sample(self, level: int) -> VertexFunction:
        raise NotImplementedError

    def __call__(self, v: LatticeVertex) -> float:
        return self.sample(v.level)(v)

    def corner_values(self) -> np.ndarray:
        """Values at q1, q2, q3."""
        u = self.sample(0)
        return u.values[u.gasket.corner_indices]

    def to_spec(self) -> dict:
        raise NotImplementedError

    def __add__(self, other: "FunctionProvider") -> "AffineProvider":
        return AffineProvider(0.0, ((1.0, self), (1.0, other)))

    def __sub__(self, other: "FunctionProvider") -> "AffineProvider":
        return AffineProvider(0.0, ((1.0, self), (-1.0, other)))

    def __rmul__(self, c: float) -> "AffineProvider":
        return AffineProvider(0.0, ((float(c), self),))


@lru_cache(maxsize=8)
def _harmonic_sample(boundary: tuple[float, float, float], level: int) -> VertexFunction:
    return harmonic_extend(boundary, level)


@dataclass(frozen=True)
class HarmonicProvider(FunctionProvider):
    boundary: BoundaryValues
    kind = "harmonic"

    def sample(self, level: int) -> VertexFunction:
        b = self.boundary
        return _harmonic_sample((b.at_q1, b.at_q2, b.at_q3), check_level(level))

    def to_spec(self) -> dict:
        b = self.boundary
        return {"kind": "harmonic", "boundary": [b.at_q1, b.at_q2, b.at_q3]}


@dataclass(frozen=True)
class CoordinateProvider(FunctionProvider):
    axis: str = "x"

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise ValueError(f"axis must be 'x' or 'y', got {self.axis!r}")

    @property
    def kind(self):
        return f"coordinate_{self.axis}"

    def sample(self, level: int) -> VertexFunction:
        g = enumerate_level(check_level(level))
        return VertexFunction(level, g.points[:, 0 if self.axis == "x" else 1])

    def to_spec(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True, eq=False)
class VertexTableProvider(FunctionProvider):
    """Tabulated values; finer levels are filled in harmonically cell by cell."""

    table: VertexFunction
    source: str | None = None
    kind = "vertex_table"

    def sample(self, level: int) -> VertexFunction:
        check_level(level)
        if level <= self.table.level:
            return self.table.restrict(level)
        cv = extend_cell_values(self.table.cell_values(), level - self.table.level)
        return from_cell_values(cv, level)

    def to_spec(self) -> dict:
        return {"kind": "vertex_table", "level": self.table.level, "source": self.source}


@dataclass(frozen=True)
class AffineProvider(FunctionProvider):
    """``constant + sum(coef * provider)``."""

    constant: float
    terms: tuple[tuple[float, FunctionProvider], ...]
    kind = "affine"

    def sample(self, level: int) -> VertexFunction:
        g = enumerate_level(check_level(level))
        values = np.full(g.n_vertices, float(self.constant))
        for coef, p in self.terms:
            values = values + coef * p.sample(level).values
        return VertexFunction(level, values)

    def to_spec(self) -> dict:
        return {
            "kind": "affine",
            "constant": float(self.constant),
            "terms": [[float(c), p.to_spec()] for c, p in self.terms],
        }


def constant(c: float) -> AffineProvider:
    return AffineProvider(float(c), ())


def from_spec(spec: dict) -> FunctionProvider:
    kind = spec.get("kind")
    if kind == "harmonic":
        return HarmonicProvider(BoundaryValues.of(spec["boundary"]))
    if kind in ("coordinate_x", "coordinate_y"):
        return CoordinateProvider(kind[-1])
    if kind == "affine":
        terms = tuple((float(c), from_spec(s)) for c, s in spec.get("terms", []))
        return AffineProvider(float(spec.get("constant", 0.0)), terms)
    if kind == "vertex_table":
        source = spec.get("source")
        if not source:
            raise ValueError("vertex_table spec needs a 'source' CSV path")
        with open(source) as fh:
            return VertexTableProvider(VertexFunction.from_csv(fh), source)
    raise ValueError(f"unknown provider kind {kind!r}")


def parse_provider(text: str) -> FunctionProvider:
    """Parse the CLI provider grammar.

    ``coordinate_x``, ``coordinate_y``, ``harmonic:A,B,C``, ``const:C``,
    ``table:PATH`` or a JSON object as produced by ``to_spec``.
    """
    text = text.strip()
    if text.startswith("{"):
        return from_spec(json.loads(text))
    head, _, rest = text.partition(":")
    if head in ("coordinate_x", "coordinate_y") and not rest:
        return CoordinateProvider(head[-1])
    if head == "harmonic" and rest:
        return HarmonicProvider(BoundaryValues.of([float(t) for t in rest.split(",")]))
    if head == "const" and rest:
        return constant(float(rest))
    if head == "table" and rest:
        return from_spec({"kind": "vertex_table", "source": rest})
    raise ValueError(f"cannot parse function spec {text!r}")
