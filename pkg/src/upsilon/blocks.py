"""This module provides random regular blocks: d-regular bipartite graphs between two
t-sets, and d-regular graphs on one t-set."""

from dataclasses import dataclass
from typing import Tuple, Union
import logging

import numpy as np
import scipy.sparse as sp

from .graph import Graph
from .utils import stream

# Random transposition partners tried before a collision is declared unrepairable.
REPAIR_TRIES = 256


class BlockGenerationError(ValueError):
    """A regular block cannot be generated with the requested parameters."""


@dataclass(frozen=True)
class Block:
    """
    A d-regular block on t-sets.

    A bipartite block joins a row set and a column set of t vertices each,
    and `pairs` holds (row, column) entries. A diagonal block lives on a
    single t-set, and `pairs` holds its edges (u, v) with u < v.

    Attributes:
        t: Size of each side.
        d: Degree of every vertex.
        bipartite: Whether the block is bipartite.
        pairs: Array of shape (t*d, 2) if bipartite, (t*d/2, 2) otherwise.
        block_id: The (i, j) position of the block in an enemy graph, (0, 0) if standalone.
    """

    t: int
    d: int
    bipartite: bool
    pairs: np.ndarray
    block_id: Tuple[int, int] = (0, 0)

    def matrix(self) -> sp.csr_matrix:
        """t x t 0/1 matrix: the biadjacency of a bipartite block, the adjacency of a diagonal one."""
        rows, cols = self.pairs[:, 0], self.pairs[:, 1]
        if not self.bipartite:
            rows, cols = np.concatenate([rows, cols]), np.concatenate([cols, rows])
        data = np.ones(len(rows), dtype=np.float64)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.t, self.t))

    def is_regular(self) -> bool:
        """Does every vertex have degree exactly d, with no repeated entries?"""
        matrix = self.matrix()
        if matrix.data.max(initial=0) > 1:
            return False
        if not self.bipartite and np.any(matrix.diagonal() != 0):
            return False
        row_sums = np.asarray(matrix.sum(axis=1)).ravel()
        col_sums = np.asarray(matrix.sum(axis=0)).ravel()
        return bool(np.all(row_sums == self.d) and np.all(col_sums == self.d))

    def to_graph(self) -> Graph:
        """The block as a graph: rows 0..t-1 and columns t..2t-1 if bipartite, vertices 0..t-1 otherwise."""
        if self.bipartite:
            edges = self.pairs + np.array([0, self.t])
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            return Graph(2 * self.t, edges[order].astype(np.int64))
        edges = np.sort(self.pairs, axis=1)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        return Graph(self.t, edges[order].astype(np.int64))


def _generator(seed: Union[int, np.random.Generator]) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(seed)


def _matchings(t: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """d perfect matchings between two t-sets, pairwise disjoint: row u is
    matched to perms[m][u] in matching m. Each new matching starts as a
    uniform permutation, and every entry colliding with an earlier matching
    is repaired by a random transposition that keeps both entries free."""
    used = np.zeros((t, t), dtype=bool)
    perms = np.zeros((d, t), dtype=np.int64)
    for m in range(d):
        perm = rng.permutation(t)
        for u in np.flatnonzero(used[np.arange(t), perm]):
            if not used[u, perm[u]]:
                continue
            for w in rng.integers(0, t, size=REPAIR_TRIES):
                if w != u and not used[u, perm[w]] and not used[w, perm[u]]:
                    perm[u], perm[w] = perm[w], perm[u]
                    break
            else:
                raise BlockGenerationError(
                    f'Matching {m} of a {d}-regular bipartite block on t={t} '
                    f'could not be repaired at row {u}')
        used[np.arange(t), perm] = True
        perms[m] = perm
    return perms


def random_regular_bipartite(t: int, d: int, seed: Union[int, np.random.Generator],
                             block_id: Tuple[int, int] = (0, 0)) -> Block:
    """
    Random d-regular bipartite block between two t-sets: the union of d
    random perfect matchings, made simple by transposition repair.

    When d > t/2 the block is the bipartite complement of a random
    (t - d)-regular one, which keeps the repair sparse. Deterministic given `seed`.
    """
    logger = logging.getLogger(__name__)
    if t < 1 or not 0 <= d <= t:
        raise BlockGenerationError(f'Need 0 <= d <= t and t >= 1, got t={t}, d={d}')
    rng = _generator(seed)
    complement = d > t - d
    degree = t - d if complement else d
    perms = _matchings(t, degree, rng)
    rows = np.tile(np.arange(t), degree)
    if complement:
        taken = np.zeros((t, t), dtype=bool)
        taken[rows, perms.ravel()] = True
        pairs = np.argwhere(~taken)
    else:
        pairs = np.stack([rows, perms.ravel()], axis=1)
    logger.debug('Bipartite block %s: t=%s, d=%s, complement=%s', block_id, t, d, complement)
    return Block(t=t, d=d, bipartite=True, pairs=pairs.astype(np.int64), block_id=block_id)


def _pair_key(a: int, b: int, t: int) -> int:
    return a * t + b if a < b else b * t + a


def _configuration(t: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Configuration-model pairing of t*d stubs, with loops and multi-edges
    removed by random switchings (a, b), (c, e) -> (a, c), (b, e)."""
    stubs = np.repeat(np.arange(t), d)
    rng.shuffle(stubs)
    pairs = stubs.reshape(-1, 2).tolist()
    count = {}
    bad = []
    for index, (a, b) in enumerate(pairs):
        key = _pair_key(a, b, t)
        count[key] = count.get(key, 0) + 1
        if a == b or count[key] > 1:
            bad.append(index)
    size = len(pairs)
    for index in bad:
        a, b = pairs[index]
        for j in rng.integers(0, size, size=REPAIR_TRIES).tolist():
            c, e = pairs[j]
            if j == index or c == e or count[_pair_key(c, e, t)] > 1:
                continue
            if rng.random() < 0.5:
                c, e = e, c
            if a == c or b == e:
                continue
            new_1, new_2 = _pair_key(a, c, t), _pair_key(b, e, t)
            if new_1 == new_2 or new_1 in count or new_2 in count:
                continue
            old = _pair_key(a, b, t)
            count[old] -= 1
            if count[old] == 0:
                del count[old]
            del count[_pair_key(c, e, t)]
            count[new_1] = 1
            count[new_2] = 1
            pairs[index], pairs[j] = [a, c], [b, e]
            break
        else:
            raise BlockGenerationError(
                f'Could not switch away a loop or multi-edge of a {d}-regular graph on t={t}')
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def random_regular(t: int, d: int, seed: Union[int, np.random.Generator],
                   block_id: Tuple[int, int] = (0, 0)) -> Block:
    """
    Random simple d-regular graph on t vertices: configuration model with
    switching repair.

    When d > (t - 1)/2 the graph is the complement of a random
    (t - 1 - d)-regular one. Deterministic given `seed`.
    """
    logger = logging.getLogger(__name__)
    if not 0 <= d < t:
        raise BlockGenerationError(f'Need 0 <= d < t, got t={t}, d={d}')
    if t * d % 2 != 0:
        raise BlockGenerationError(f'No {d}-regular graph on {t} vertices: t*d={t * d} is odd')
    rng = _generator(seed)
    complement = d > t - 1 - d
    degree = t - 1 - d if complement else d
    pairs = _configuration(t, degree, rng) if degree > 0 else np.zeros((0, 2), dtype=np.int64)
    if complement:
        taken = np.eye(t, dtype=bool)
        taken[pairs[:, 0], pairs[:, 1]] = True
        taken[pairs[:, 1], pairs[:, 0]] = True
        pairs = np.argwhere(np.triu(~taken))
    else:
        pairs = np.sort(pairs, axis=1)
    logger.debug('Diagonal block %s: t=%s, d=%s, complement=%s', block_id, t, d, complement)
    return Block(t=t, d=d, bipartite=False, pairs=pairs.astype(np.int64), block_id=block_id)
