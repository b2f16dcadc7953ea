"""Alpha-fractal interpolation functions on the gasket.

The fractal function ``F`` of a seed ``f`` with base ``b`` and scalings
``alpha_w`` (one per word of length ``n``) satisfies, on each piece
``L_w(S)``,

    F(L_w(x)) = f(L_w(x)) + alpha_w * (F(x) - b(x)).

Since every level-(k+n) vertex is ``L_w(v)`` for some word ``w`` and some
level-k vertex ``v``, the values of ``F`` on ``V_k`` determine those on
``V_{k+n}`` exactly; starting from ``F = f`` on the three corners this fills
in every level that is a multiple of ``n``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from gasketdim.energy import VertexFunction, energy_norm
from gasketdim.gasket import (
    Word,
    cell_origins,
    check_level,
    enumerate_level,
    parse_word,
    word_from_index,
    word_index,
    word_label,
)
from gasketdim.harmonic import BoundaryValues
from gasketdim.io import dumps_json
from gasketdim.providers import AffineProvider, FunctionProvider, HarmonicProvider, VertexTableProvider

SHARED_IMAGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class AlphaSpec:
    """Scaling factors ``alpha_w`` for every word ``w`` of length ``n``, lexicographic order."""

    n: int
    alphas: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("interpolation depth n must be a positive integer")
        a = np.array(self.alphas, dtype=np.float64).ravel()
        if a.shape != (3**self.n,):
            raise ValueError(f"need {3 ** self.n} scaling factors for n={self.n}, got {a.size}")
        if not np.all(np.abs(a) < 1):
            raise ValueError("every scaling factor must lie strictly inside (-1, 1)")
        a.setflags(write=False)
        object.__setattr__(self, "alphas", a)

    @classmethod
    def constant(cls, n: int, value: float) -> "AlphaSpec":
        return cls(n, np.full(3**n, float(value)))

    @classmethod
    def from_mapping(cls, n: int, mapping: Mapping[Word | str, float]) -> "AlphaSpec":
        a = np.full(3**n, np.nan)
        for w, v in mapping.items():
            w = parse_word(w)
            if len(w) != n:
                raise ValueError(f"word {word_label(w)} does not have length {n}")
            a[word_index(w)] = v
        if np.isnan(a).any():
            raise ValueError("scaling factor missing for some word")
        return cls(n, a)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.alphas)))

    @property
    def psi(self) -> float:
        """Sum of magnitudes of the scaling factors."""
        return float(np.sum(np.abs(self.alphas)))

    @property
    def signed_sum(self) -> float:
        return float(np.sum(self.alphas))

    def __getitem__(self, word) -> float:
        return float(self.alphas[word_index(word)])

    def as_mapping(self) -> dict[str, float]:
        return {word_label(word_from_index(i, self.n)): float(a) for i, a in enumerate(self.alphas)}


class FifConstructionError(ValueError):
    """Two pieces assign different values to a shared image vertex."""

    def __init__(self, message, vertex=None, words=None):
        super().__init__(message)
        self.vertex = vertex
        self.words = words


class CompatibilityError(ValueError):
    pass


def check_compatibility(f: FunctionProvider, b: FunctionProvider, atol: float = SHARED_IMAGE_TOL) -> None:
    fc, bc = f.corner_values(), b.corner_values()
    scale = max(1.0, float(np.max(np.abs(fc))))
    bad = np.flatnonzero(np.abs(fc - bc) > atol * scale)
    if len(bad):
        i = int(bad[0]) + 1
        raise CompatibilityError(f"base function differs from seed at q{i}: {bc[i - 1]!r} vs {fc[i - 1]!r}")


def rb_refine(
    current: VertexFunction,
    f: FunctionProvider,
    b: FunctionProvider,
    alpha: AlphaSpec,
    atol: float = SHARED_IMAGE_TOL,
) -> VertexFunction:
    """Apply the functional equation once: level-k values to level-(k+n) values."""
    k, n = current.level, alpha.n
    check_level(k + n)
    check_compatibility(f, b, atol)
    if k == 0:
        fc = f.corner_values()
        cc = current.values[current.gasket.corner_indices]
        if np.any(np.abs(cc - fc) > atol * max(1.0, float(np.max(np.abs(fc))))):
            raise CompatibilityError("level-0 start must agree with the seed at the corners")

    gk, gt = enumerate_level(k), enumerate_level(k + n)
    shifts = cell_origins(n) << k
    images = gk.coords[None, :, :] + shifts[:, None, :]
    idx = gt.indices_of(images.reshape(-1, 2))

    f_fine = f.sample(k + n).values
    gap_to_base = current.values - b.sample(k).values
    assigned = f_fine[idx] + (alpha.alphas[:, None] * gap_to_base[None, :]).ravel()

    targets, first = np.unique(idx, return_index=True)
    if len(targets) != gt.n_vertices:
        raise FifConstructionError("images of the pieces do not cover the finer level")
    values = assigned[first]
    # shared images: every later write must reproduce the stored value
    mismatch = np.abs(assigned - values[idx])
    tol = atol * max(1.0, float(np.max(np.abs(values))))
    bad = np.flatnonzero(mismatch > tol)
    if len(bad):
        j = int(bad[0])
        vertex = gt.vertex(int(idx[j]))
        w_new = word_from_index(j // gk.n_vertices, n)
        w_old = word_from_index(int(first[idx[j]]) // gk.n_vertices, n)
        raise FifConstructionError(
            f"pieces {word_label(w_old)} and {word_label(w_new)} disagree at {vertex} "
            f"by {mismatch[j]:.3e}",
            vertex,
            (w_old, w_new),
        )
    return VertexFunction(k + n, values)


@dataclass(eq=False)
class FifInstance:
    f: FunctionProvider
    b: FunctionProvider
    alpha: AlphaSpec
    values: VertexFunction

    @property
    def level(self) -> int:
        return self.values.level

    def restrict(self, level: int) -> VertexFunction:
        return self.values.restrict(level)

    def as_provider(self) -> VertexTableProvider:
        return VertexTableProvider(self.values)

    def interpolation_error(self) -> float:
        """Largest deviation from the seed at the level-n interpolation points."""
        n = self.alpha.n
        return self.restrict(n).max_abs_diff(self.f.sample(n))

    def header(self) -> dict:
        return {
            "n": self.alpha.n,
            "alphas": self.alpha.as_mapping(),
            "f_spec": self.f.to_spec(),
            "b_spec": self.b.to_spec(),
            "M": self.level,
        }

    def dump(self, csv_fh, json_fh) -> None:
        self.values.to_csv(csv_fh)
        json_fh.write(dumps_json(self.header()))


def build_fif(f: FunctionProvider, b: FunctionProvider, alpha: AlphaSpec, M: int) -> FifInstance:
    """Values of the alpha-fractal function on ``V_M``; ``M`` must be a multiple of ``n``."""
    check_level(M)
    if M % alpha.n:
        raise ValueError(f"level {M} is not a multiple of n={alpha.n}")
    check_compatibility(f, b)
    current = f.sample(0)
    for _ in range(M // alpha.n):
        current = rb_refine(current, f, b, alpha)
    return FifInstance(f, b, alpha, current)


@dataclass(frozen=True)
class OperatorSpec:
    """How the base function is produced from the seed, ``b = T(f)``.

    ``harmonic_interpolant``: the harmonic function with the seed's corner values.
    ``scaled_blend``: ``f + c * (g - f)`` for a provider ``g`` that agrees with
    ``f`` at the corners.
    ``operator_norm_bound`` is the caller's value of the operator norm, used
    only when evaluating the energy formulas.
    """

    kind: str = "harmonic_interpolant"
    operator_norm_bound: float = 1.0
    g: FunctionProvider | None = None
    c: float = 0.0

    def apply(self, f: FunctionProvider) -> FunctionProvider:
        if self.kind == "harmonic_interpolant":
            return HarmonicProvider(_boundary(f.corner_values()))
        if self.kind == "scaled_blend":
            if self.g is None:
                raise ValueError("scaled_blend needs a provider g")
            check_compatibility(f, self.g)
            return AffineProvider(0.0, ((1.0 - self.c, f), (self.c, self.g)))
        raise ValueError(f"unknown operator kind {self.kind!r}")


def _boundary(values: Sequence[float]) -> BoundaryValues:
    return BoundaryValues.of([float(v) for v in values])


class EnergyCondition(NamedTuple):
    holds: bool
    threshold: float


def energy_threshold(n: int) -> float:
    return 1.0 / math.sqrt(3.0 * 5.0**n)


def check_energy_condition(alpha: AlphaSpec) -> EnergyCondition:
    """Finite-energy sufficient condition ``sup|alpha| <= 1/sqrt(3 * 5**n)``."""
    t = energy_threshold(alpha.n)
    return EnergyCondition(alpha.sup_norm <= t, t)


class DomainError(ValueError):
    pass


def _contraction(alpha: AlphaSpec) -> float:
    return 5.0**alpha.n * 3.0 * alpha.sup_norm**2


def operator_norm_bound(alpha: AlphaSpec, t_norm: float) -> float:
    rho = _contraction(alpha)
    if 1.0 - rho <= 0:
        raise DomainError(f"5**n * 3 * sup|alpha|**2 = {rho:.6g} >= 1; the finite-energy condition fails")
    return math.sqrt((3.0 + rho * t_norm) / (1.0 - rho))


def energy_cap(alpha: AlphaSpec, t_norm: float, f_energy: float) -> float:
    """Closed-form cap ``(3 E + rho t E) / (1 - rho)`` on the fractal function's energy."""
    rho = _contraction(alpha)
    if 1.0 - rho <= 0:
        raise DomainError(f"5**n * 3 * sup|alpha|**2 = {rho:.6g} >= 1; the finite-energy condition fails")
    return (3.0 * f_energy + rho * t_norm * f_energy) / (1.0 - rho)


@dataclass
class PerturbationReport:
    level: int
    lhs: float
    rhs: float
    ratio: float | None = field(default=None)

    def as_dict(self) -> dict:
        return {"level": self.level, "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio}


def perturbation_report(instance: FifInstance, level: int | None = None) -> PerturbationReport:
    """Finite-level values of ``|F - f|_E`` and ``sup|alpha|**2 3**n |F - b|_E``.

    The two sides are reported, not compared.
    """
    level = instance.level if level is None else level
    F = instance.restrict(level)
    lhs = energy_norm(F - instance.f.sample(level))
    rhs = instance.alpha.sup_norm**2 * 3.0**instance.alpha.n * energy_norm(F - instance.b.sample(level))
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else None)
    return PerturbationReport(level, lhs, rhs, ratio)


def parse_alpha(text: str, n: int, rng: np.random.Generator | None = None) -> AlphaSpec:
    """``"0.2,0.2,0.2"``, a single broadcast value, ``random[:MAX]`` or a JSON word map."""
    text = text.strip()
    if text.startswith("{"):
        return AlphaSpec.from_mapping(n, json.loads(text))
    if text.startswith("random"):
        _, _, cap = text.partition(":")
        cap = float(cap) if cap else 0.9 * energy_threshold(n)
        rng = rng if rng is not None else np.random.default_rng(0)
        return AlphaSpec(n, rng.uniform(-cap, cap, size=3**n))
    vals = [float(t) for t in text.split(",") if t.strip()]
    if len(vals) == 1:
        return AlphaSpec.constant(n, vals[0])
    return AlphaSpec(n, vals)

