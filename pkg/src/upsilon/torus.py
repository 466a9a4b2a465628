"""This module provides essential simple closed curves on the torus, given by primitive
slopes, and exact maximum k-systems among curves of bounded height."""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple
import json
import logging
import math

import numpy as np

from .constants import DEFAULT_HEIGHT_CAP
from .graph import Graph, build_graph


class CurveError(ValueError):
    """Invalid slope, invalid curve system, or a search beyond the height cap."""


@dataclass(frozen=True, order=True)
class TorusCurve:
    """
    The homotopy class of an essential simple closed curve on the torus,
    as a primitive slope (p, q) up to sign.

    Attributes:
        p: First coordinate, p > 0 or p = 0.
        q: Second coordinate, q = 1 when p = 0.
    """

    p: int
    q: int

    def __post_init__(self):
        if self.p == 0 and self.q == 0:
            raise CurveError('The zero slope is not a curve')
        if math.gcd(self.p, self.q) != 1:
            raise CurveError(f'Slope ({self.p}, {self.q}) is not primitive')
        if not (self.p > 0 or (self.p == 0 and self.q == 1)):
            raise CurveError(f'Slope ({self.p}, {self.q}) is not normalized; use TorusCurve.of')

    @classmethod
    def of(cls, p: int, q: int) -> 'TorusCurve':
        """The curve of slope (p, q), flipping the sign if needed."""
        if p < 0 or (p == 0 and q < 0):
            p, q = -p, -q
        return cls(p, q)

    @property
    def height(self) -> int:
        """max(|p|, |q|)."""
        return max(abs(self.p), abs(self.q))

    def to_pair(self) -> List[int]:
        return [self.p, self.q]


def intersection_number(a: TorusCurve, b: TorusCurve) -> int:
    """Geometric intersection number |a.p b.q - a.q b.p|."""
    return abs(a.p * b.q - a.q * b.p)


def is_k_system(curves: Sequence[TorusCurve], k: int) -> bool:
    """Are `curves` pairwise distinct, with pairwise intersection numbers at most `k`?"""
    if len(set(curves)) != len(curves):
        return False
    return all(intersection_number(a, b) <= k
               for index, a in enumerate(curves) for b in curves[index + 1:])


@dataclass(frozen=True)
class CurveSystem:
    """
    A k-system of curves on the torus.

    Attributes:
        curves: Pairwise distinct curves.
        k: Bound on pairwise intersection numbers.
    """

    curves: Tuple[TorusCurve, ...]
    k: int

    def __post_init__(self):
        if self.k < 0:
            raise CurveError(f'Negative intersection bound: {self.k}')
        if not is_k_system(self.curves, self.k):
            raise CurveError(f'Curves {[c.to_pair() for c in self.curves]} are not a '
                             f'{self.k}-system')

    def __len__(self) -> int:
        return len(self.curves)

    def to_json_text(self) -> str:
        """The curves as a JSON array of [p, q] pairs."""
        return json.dumps([c.to_pair() for c in self.curves]) + '\n'


def curves_up_to(height: int) -> List[TorusCurve]:
    """All curves of height at most `height`, ordered by height, then p, then |q|, positive q first."""
    curves = [TorusCurve.of(p, q)
              for p in range(0, height + 1) for q in range(-height, height + 1)
              if math.gcd(p, q) == 1 and (p > 0 or q == 1)]
    return sorted(curves, key=lambda c: (c.height, c.p, abs(c.q), c.q < 0))


def _compatibility(curves: List[TorusCurve], k: int) -> List[int]:
    """Neighbor bit-vectors of the graph joining curves that intersect at most k times."""
    p = np.array([c.p for c in curves], dtype=np.int64)
    q = np.array([c.q for c in curves], dtype=np.int64)
    numbers = np.abs(p[:, None] * q[None, :] - q[:, None] * p[None, :])
    compatible = numbers <= k
    np.fill_diagonal(compatible, False)
    packed = np.packbits(compatible, axis=1, bitorder='little')
    return [int.from_bytes(row.tobytes(), 'little') for row in packed]


def _color_bound(candidates: int, adjacency: List[int]) -> int:
    """Number of colors of a greedy coloring of `candidates`, an upper bound on any clique in it."""
    colors = 0
    uncolored = candidates
    while uncolored:
        colors += 1
        available = uncolored
        while available:
            low = available & -available
            v = low.bit_length() - 1
            uncolored &= ~low
            available &= ~low & ~adjacency[v]
    return colors


def _max_clique(adjacency: List[int]) -> List[int]:
    """Lexicographically least maximum clique, by branch and bound over bit-vectors.

    Vertices are branched on in increasing order, including before excluding,
    so cliques of equal size are reached in lexicographic order."""
    best: List[int] = []

    def expand(clique: List[int], candidates: int):
        nonlocal best
        if not candidates:
            if len(clique) > len(best):
                best = list(clique)
            return
        if len(clique) + _color_bound(candidates, adjacency) <= len(best):
            return
        while candidates:
            if len(clique) + candidates.bit_count() <= len(best):
                return
            low = candidates & -candidates
            v = low.bit_length() - 1
            clique.append(v)
            expand(clique, candidates & adjacency[v])
            clique.pop()
            candidates &= ~low

    expand([], (1 << len(adjacency)) - 1)
    return best


def max_k_system(height: int, k: int, cap: int = DEFAULT_HEIGHT_CAP) -> Tuple[int, CurveSystem]:
    """
    Largest k-system among the curves of height at most `height`, with its witness.

    Exact: a maximum clique of the graph joining curves that intersect at
    most k times. The witness is the lexicographically least maximum, as
    a tuple of positions in the order of `curves_up_to`.
    """
    logger = logging.getLogger(__name__)
    if height < 1:
        raise CurveError(f'Height must be at least 1, got {height}')
    if height > cap:
        raise CurveError(f'Height {height} exceeds the search cap {cap}')
    if k < 0:
        raise CurveError(f'Negative intersection bound: {k}')
    curves = curves_up_to(height)
    clique = _max_clique(_compatibility(curves, k))
    system = CurveSystem(curves=tuple(curves[v] for v in clique), k=k)
    logger.debug('Maximum %s-system of height <= %s among %s curves: %s', k, height,
                 len(curves), [c.to_pair() for c in system.curves])
    return len(system), system


def to_intersection_graph(system: CurveSystem) -> Graph:
    """Graph on the curves of `system`, in order, joining curves that intersect."""
    curves = system.curves
    return build_graph(len(curves), [(a, b) for a in range(len(curves))
                                     for b in range(a + 1, len(curves))
                                     if intersection_number(curves[a], curves[b]) >= 1])


def parse_curves(text: str, k: int) -> CurveSystem:
    """Parse a JSON array of [p, q] pairs as a k-system. Slopes are normalized by sign."""
    try:
        pairs = json.loads(text)
        curves = tuple(TorusCurve.of(int(p), int(q)) for p, q in pairs)
    except CurveError:
        raise
    except (json.JSONDecodeError, TypeError, ValueError) as e:
        raise CurveError(f'Expected a JSON array of [p, q] pairs: {e}') from e
    return CurveSystem(curves=curves, k=k)


def write_curves(system: CurveSystem, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, mode='w', encoding='utf-8', newline='\n') as filepointer:
        filepointer.write(system.to_json_text())


def read_curves(path: Path, k: int) -> CurveSystem:
    return parse_curves(Path(path).read_text(encoding='utf-8'), k)
