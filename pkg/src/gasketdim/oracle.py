"""Brute-force reference computations used only to cross-check the fast paths.

Nothing here relies on the cell enumeration of :mod:`gasketdim.gasket`:
cells are rebuilt from explicit words with :func:`apply_map` or from word
digits, and vertex values are looked up by coordinates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from gasketdim.energy import VertexFunction
from gasketdim.gasket import OFFSETS, LatticeVertex, apply_map, enumerate_level
from gasketdim.harmonic import BoundaryValues

MAX_ORACLE_LEVEL = 8


@dataclass
class LinearSystem:
    dimension: int
    matrix: np.ndarray
    rhs: np.ndarray


def _graph(m: int):
    """Vertex list (first-appearance order) and within-cell edges, built word by word."""
    index: dict[tuple[int, int], int] = {}
    edges = []
    corners0 = [LatticeVertex.corner(i) for i in (1, 2, 3)]
    for w in itertools.product((1, 2, 3), repeat=m):
        ids = []
        for q in corners0:
            v = apply_map(w, q)
            ids.append(index.setdefault((v.a, v.b), len(index)))
        edges += [(ids[0], ids[1]), (ids[0], ids[2]), (ids[1], ids[2])]
    coords = np.array(list(index), dtype=np.int64)
    return coords, np.array(edges, dtype=np.int64)


def harmonic_system(boundaries: Sequence[BoundaryValues], m: int):
    """Interior equations ``4 h(x) - sum of neighbours = 0`` with pinned corners.

    Returns the system (one right-hand side column per boundary triple), the
    vertex coordinates, and the interior/corner index arrays.
    """
    coords, edges = _graph(m)
    n = len(coords)
    side = 1 << m
    corner_ids = [int(np.flatnonzero((coords == c * side).all(axis=1))[0]) for c in OFFSETS]
    is_corner = np.zeros(n, dtype=bool)
    is_corner[corner_ids] = True
    interior = np.flatnonzero(~is_corner)
    pos = np.full(n, -1)
    pos[interior] = np.arange(len(interior))

    bvals = np.array([[b.at_q1, b.at_q2, b.at_q3] for b in boundaries]).T  # (3, nrhs)
    corner_value = np.zeros((n, bvals.shape[1]))
    corner_value[corner_ids] = bvals

    A = np.zeros((len(interior), len(interior)))
    rhs = np.zeros((len(interior), bvals.shape[1]))
    for i, j in ((edges[:, 0], edges[:, 1]), (edges[:, 1], edges[:, 0])):
        rows = pos[i]
        ok = rows >= 0
        np.add.at(A, (rows[ok], rows[ok]), 1.0)
        inner = ok & ~is_corner[j]
        np.add.at(A, (rows[inner], pos[j[inner]]), -1.0)
        pinned = ok & is_corner[j]
        np.add.at(rhs, rows[pinned], corner_value[j[pinned]])
    return LinearSystem(len(interior), A, rhs), coords, interior, np.array(corner_ids)


def solve_harmonic_linear_many(boundaries: Sequence[BoundaryValues | Sequence[float]], m: int) -> list[VertexFunction]:
    """Energy minimisers with the given corner values, one dense LU for all triples."""
    if not 0 <= m <= MAX_ORACLE_LEVEL:
        raise ValueError(f"oracle solve supports levels 0..{MAX_ORACLE_LEVEL}")
    boundaries = [BoundaryValues.of(b) for b in boundaries]
    system, coords, interior, corners = harmonic_system(boundaries, m)
    full = np.zeros((len(coords), len(boundaries)))
    full[corners] = np.array([[b.at_q1, b.at_q2, b.at_q3] for b in boundaries]).T
    if system.dimension:
        lu = scipy.linalg.lu_factor(system.matrix, overwrite_a=True, check_finite=False)
        full[interior] = scipy.linalg.lu_solve(lu, system.rhs, check_finite=False)
    order = enumerate_level(m).indices_of(coords)
    out = []
    for col in full.T:
        values = np.empty(len(coords))
        values[order] = col
        out.append(VertexFunction(m, values))
    return out


def solve_harmonic_linear(boundary: BoundaryValues | Sequence[float], m: int) -> VertexFunction:
    return solve_harmonic_linear_many([boundary], m)[0]


def _edge_energy(values: np.ndarray, edges: np.ndarray) -> float:
    d = values[edges[:, 0]] - values[edges[:, 1]]
    return float(d @ d)


def brute_min_energy_check(
    boundary: BoundaryValues | Sequence[float],
    m: int,
    trials: int = 200,
    candidate: VertexFunction | None = None,
    scale: float = 0.1,
    rng: np.random.Generator | None = None,
) -> bool:
    """True iff no random interior perturbation has strictly lower crude energy.

    ``candidate`` defaults to the harmonic extension; any level-m function
    with the same corner values may be tested instead.
    """
    if not 0 <= m <= 6:
        raise ValueError("brute-force minimality check supports levels 0..6")
    if candidate is None:
        from gasketdim.harmonic import harmonic_extend

        candidate = harmonic_extend(boundary, m)
    rng = rng if rng is not None else np.random.default_rng(0)
    coords, edges = _graph(m)
    vals = candidate.values[candidate.gasket.indices_of(coords)]
    side = 1 << m
    interior = ~np.any([(coords == c * side).all(axis=1) for c in OFFSETS], axis=0)
    base = _edge_energy(vals, edges)
    for _ in range(trials):
        trial = vals.copy()
        trial[interior] += scale * rng.standard_normal(int(interior.sum()))
        if _edge_energy(trial, edges) < base:
            return False
    return True


@dataclass
class PairCheckReport:
    worst_ratio: float
    worst_level: int | None
    worst_pair: tuple[LatticeVertex, LatticeVertex] | None
    n_pairs: int
    n_violations: int

    @property
    def passed(self) -> bool:
        return self.n_violations == 0


def _cell_corner_coords(level: int) -> np.ndarray:
    """``(3**level, 3, 2)`` corner coordinates from the word digits."""
    if level == 0:
        digits = np.zeros((1, 0), dtype=np.int64)
    else:
        digits = np.array(list(itertools.product((0, 1, 2), repeat=level)), dtype=np.int64)
    weights = 1 << np.arange(level - 1, -1, -1, dtype=np.int64)
    origin = np.einsum("cjd,j->cd", OFFSETS[digits], weights) if level else np.zeros((1, 2), dtype=np.int64)
    return origin[:, None, :] + OFFSETS[None, :, :]


def exhaustive_pair_check(u: VertexFunction, bound: Callable[[int], float]) -> PairCheckReport:
    """Worst ``|u(x) - u(y)| / bound(m')`` over every within-cell pair at every level ``m' <= level(u)``."""
    table = {(a, b): v for (a, b), v in zip(u.gasket.coords.tolist(), u.values.tolist())}
    worst, worst_level, worst_pair = 0.0, None, None
    n_pairs = n_viol = 0
    for m in range(u.level + 1):
        corners = _cell_corner_coords(m) << (u.level - m)
        vals = np.array([table[(a, b)] for a, b in corners.reshape(-1, 2).tolist()]).reshape(-1, 3)
        bnd = float(bound(m))
        for i, j in ((0, 1), (0, 2), (1, 2)):
            d = np.abs(vals[:, i] - vals[:, j])
            if bnd > 0:
                ratio = d / bnd
            else:
                ratio = np.where(d == 0, 0.0, np.inf)
            n_pairs += len(d)
            n_viol += int(np.sum(ratio > 1.0))
            c = int(np.argmax(ratio))
            if ratio[c] > worst:
                worst, worst_level = float(ratio[c]), m
                worst_pair = (
                    LatticeVertex(u.level, *map(int, corners[c, i])),
                    LatticeVertex(u.level, *map(int, corners[c, j])),
                )
    return PairCheckReport(worst, worst_level, worst_pair, n_pairs, n_viol)
