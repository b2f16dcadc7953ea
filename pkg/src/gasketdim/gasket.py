"""Level-m Sierpinski gasket on an exact integer lattice.

A vertex at level ``m`` is stored as integer coordinates ``(a, b)`` with
``a, b >= 0`` and ``a + b <= 2**m``; its planar position is
``(a*e1 + b*e2) / 2**m`` with ``e1 = (1, 0)`` and ``e2 = (1/2, sqrt(3)/2)``.
The corners are ``q1 = (0, 0)``, ``q2 = (2**m, 0)`` and ``q3 = (0, 2**m)``.

Words are tuples over the symbols 1, 2, 3.  Cells of a level are always
listed in lexicographic word order, so the ``3**r`` subcells of a level-k
cell occupy one contiguous block at level ``k + r``.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterator, Sequence

import numpy as np

from gasketdim.io import fmt_real

MAX_LEVEL = 30
SQRT3_2 = math.sqrt(3.0) / 2.0

# lattice offset of L_i, equal to the level-0 coordinates of q_i
OFFSETS = np.array([[0, 0], [1, 0], [0, 1]], dtype=np.int64)

# vertex pairs inside a cell, in summation order
CELL_PAIRS = ((0, 1), (0, 2), (1, 2))

Word = tuple[int, ...]


def level_cap() -> int:
    """Largest admissible level; ``GASKETDIM_LEVEL_CAP`` may only lower it."""
    raw = os.environ.get("GASKETDIM_LEVEL_CAP")
    if raw is None:
        return MAX_LEVEL
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"GASKETDIM_LEVEL_CAP must be an integer, got {raw!r}") from None
    if cap < 0:
        raise ValueError("GASKETDIM_LEVEL_CAP must be non-negative")
    return min(cap, MAX_LEVEL)


def check_level(m: int) -> int:
    if isinstance(m, bool) or int(m) != m:
        raise TypeError(f"level must be an integer, got {m!r}")
    m = int(m)
    cap = level_cap()
    if m < 0 or m > cap:
        raise ValueError(f"level {m} outside [0, {cap}]")
    return m


def parse_word(word: Sequence[int] | str) -> Word:
    """Accept ``(1, 2, 3)``, ``[1, 2]`` or ``"123"``; return a validated tuple."""
    if isinstance(word, str):
        word = [int(ch) for ch in word]
    out = tuple(int(s) for s in word)
    for s in out:
        if s not in (1, 2, 3):
            raise ValueError(f"invalid symbol {s!r} in word; symbols are 1, 2, 3")
    return out


def words(m: int) -> Iterator[Word]:
    """All words of length ``m`` in lexicographic order."""
    return itertools.product((1, 2, 3), repeat=m)


def word_index(word: Sequence[int] | str) -> int:
    """Position of ``word`` in the lexicographic listing of its length."""
    idx = 0
    for s in parse_word(word):
        idx = 3 * idx + (s - 1)
    return idx


def word_from_index(index: int, m: int) -> Word:
    digits = []
    for _ in range(m):
        index, d = divmod(index, 3)
        digits.append(d + 1)
    return tuple(reversed(digits))


def word_label(word: Sequence[int]) -> str:
    return "".join(str(s) for s in word) or "-"


@dataclass(frozen=True, order=True)
class LatticeVertex:
    level: int
    a: int
    b: int

    def __post_init__(self):
        check_level(self.level)
        n = 1 << self.level
        if self.a < 0 or self.b < 0 or self.a + self.b > n:
            raise ValueError(f"({self.a}, {self.b}) is not a lattice point at level {self.level}")

    @classmethod
    def corner(cls, i: int, level: int = 0) -> "LatticeVertex":
        """Corner ``q_i`` (i in 1..3) expressed at ``level``."""
        da, db = OFFSETS[parse_word((i,))[0] - 1]
        n = 1 << level
        return cls(level, int(da) * n, int(db) * n)

    def embed(self) -> tuple[float, float]:
        return embed(self)

    def at_level(self, level: int) -> "LatticeVertex":
        """The same point expressed at a finer level."""
        if level < self.level:
            raise ValueError("can only move a vertex to a finer level")
        s = 1 << (level - self.level)
        return LatticeVertex(level, self.a * s, self.b * s)

    def canonical(self) -> "LatticeVertex":
        """Coarsest-level representation of the same point."""
        level, a, b = self.level, self.a, self.b
        while level > 0 and a % 2 == 0 and b % 2 == 0:
            level, a, b = level - 1, a // 2, b // 2
        return LatticeVertex(level, a, b)

    def is_gasket_vertex(self) -> bool:
        """True when the point is a vertex of the level-``self.level`` graph."""
        a, b = self.a, self.b
        for j in range(self.level, 0, -1):
            # strip the top-level symbol: locate the half-size subtriangle
            h = 1 << (j - 1)
            if a >= h:
                a -= h
            elif b >= h:
                b -= h
            if a + b > h:
                return False
        return True


def apply_map(word: Sequence[int] | str, v: LatticeVertex) -> LatticeVertex:
    """Image of ``v`` under ``L_w1 o L_w2 o ... o L_wn`` in exact lattice coordinates."""
    w = parse_word(word)
    check_level(v.level + len(w))
    a, b, level = v.a, v.b, v.level
    for s in reversed(w):
        da, db = OFFSETS[s - 1]
        a += int(da) << level
        b += int(db) << level
        level += 1
    return LatticeVertex(level, a, b)


def embed(v: LatticeVertex) -> tuple[float, float]:
    n = float(1 << v.level)
    return ((v.a + v.b / 2.0) / n, v.b * SQRT3_2 / n)


def embed_coords(coords: np.ndarray, level: int) -> np.ndarray:
    """Vectorised :func:`embed` for an ``(N, 2)`` integer array."""
    a = coords[:, 0].astype(np.float64)
    b = coords[:, 1].astype(np.float64)
    n = float(1 << level)
    return np.column_stack(((a + 0.5 * b) / n, b * SQRT3_2 / n))


def coord_keys(coords: np.ndarray, level: int) -> np.ndarray:
    """Order-preserving scalar key of lattice coordinates (lexicographic in (a, b))."""
    stride = (1 << level) + 1
    return coords[..., 0].astype(np.int64) * stride + coords[..., 1].astype(np.int64)


def cell_origins(m: int) -> np.ndarray:
    """Lattice position of ``q1`` of every level-m cell, lexicographic word order.

    With the first symbol most significant, ``L_w(q1) = sum_j delta(w_j) 2**(m-j)``
    so each extra leading symbol adds a block offset of ``delta * 2**j``.
    """
    origins = np.zeros((1, 2), dtype=np.int64)
    for j in range(m):
        origins = np.concatenate([OFFSETS[s] * (1 << j) + origins for s in range(3)])
    return origins


@dataclass(frozen=True)
class Cell:
    word: Word
    corners: tuple[LatticeVertex, LatticeVertex, LatticeVertex]


class GasketLevel:
    """Vertices, cells and edges of the level-m graph.

    ``coords`` holds the canonical vertices sorted by ``(a, b)``;
    ``cell_corners[c, i]`` is the vertex index of ``q_{w i}`` for the c-th cell.
    """

    def __init__(self, m: int):
        self.level = check_level(m)
        corners = cell_origins(m)[:, None, :] + OFFSETS[None, :, :]
        keys, inverse = np.unique(coord_keys(corners, m), return_inverse=True)
        self._keys = keys
        stride = (1 << m) + 1
        self.coords = np.column_stack((keys // stride, keys % stride))
        self.cell_corners = inverse.reshape(-1, 3).astype(np.int64)
        self.coords.setflags(write=False)
        self.cell_corners.setflags(write=False)
        self._keys.setflags(write=False)

    def __repr__(self):
        return f"GasketLevel(level={self.level}, vertices={self.n_vertices}, cells={self.n_cells})"

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    @property
    def n_cells(self) -> int:
        return len(self.cell_corners)

    @cached_property
    def points(self) -> np.ndarray:
        pts = embed_coords(self.coords, self.level)
        pts.setflags(write=False)
        return pts

    @property
    def edges(self) -> np.ndarray:
        """``(3**(m+1), 2)`` vertex index pairs, cell by cell, pairs (1,2), (1,3), (2,3)."""
        cc = self.cell_corners
        return np.stack([cc[:, [0, 0, 1]], cc[:, [1, 2, 2]]], axis=-1).reshape(-1, 2)

    @cached_property
    def corner_indices(self) -> np.ndarray:
        """Vertex indices of q1, q2, q3."""
        return self.indices_of(OFFSETS * (1 << self.level))

    def indices_of(self, coords: np.ndarray) -> np.ndarray:
        """Vertex indices for an array of level-m lattice coordinates (must be vertices)."""
        coords = np.asarray(coords)
        keys = coord_keys(coords, self.level)
        idx = np.searchsorted(self._keys, keys)
        idx = np.minimum(idx, len(self._keys) - 1)
        if not np.array_equal(self._keys[idx], keys):
            raise KeyError(f"coordinates are not vertices of level {self.level}")
        return idx

    def index(self, v: LatticeVertex) -> int:
        if v.level != self.level:
            v = v.at_level(self.level)
        return int(self.indices_of(np.array([[v.a, v.b]]))[0])

    def vertex(self, i: int) -> LatticeVertex:
        a, b = self.coords[i]
        return LatticeVertex(self.level, int(a), int(b))

    def vertices(self) -> Iterator[LatticeVertex]:
        for a, b in self.coords.tolist():
            yield LatticeVertex(self.level, a, b)

    def cells(self) -> Iterator[Cell]:
        for w, cc in zip(words(self.level), self.cell_corners.tolist()):
            yield Cell(w, tuple(self.vertex(i) for i in cc))

    def coarse_indices(self, level: int) -> np.ndarray:
        """Indices (into this level) of the vertices of a coarser ``level``."""
        if level > self.level:
            raise ValueError("restriction target must be coarser")
        coarse = enumerate_level(level)
        return self.indices_of(coarse.coords << (self.level - level))


def enumerate_level(m: int) -> GasketLevel:
    return _cached_level(check_level(m))


@lru_cache(maxsize=12)
def _cached_level(m: int) -> GasketLevel:
    return GasketLevel(m)


def n_vertices(m: int) -> int:
    return (3 ** (m + 1) + 3) // 2


def write_vertices_csv(level: GasketLevel, fh) -> None:
    fh.write("level,a,b,x,y\n")
    for (a, b), (x, y) in zip(level.coords.tolist(), level.points.tolist()):
        fh.write(f"{level.level},{a},{b},{fmt_real(x)},{fmt_real(y)}\n")


def write_edges_csv(level: GasketLevel, fh) -> None:
    fh.write("level,a1,b1,a2,b2\n")
    c = level.coords
    for i, j in level.edges.tolist():
        fh.write(f"{level.level},{c[i, 0]},{c[i, 1]},{c[j, 0]},{c[j, 1]}\n")
