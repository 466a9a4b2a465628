"""This module provides immutable simple graphs, vertex subsets, and the degree and
unique-neighbor primitives that the rest of the package is built on."""

from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple
from pathlib import Path
import json
import logging

import numpy as np
import scipy.sparse as sp
import networkx as nx

from .constants import BITSET_MAX_N


class GraphError(ValueError):
    """Malformed graph input: self-loop, duplicate edge, out-of-range index, or bad file."""

    def __init__(self, message: str, pair: Optional[Tuple[int, int]] = None):
        super().__init__(message)
        self.pair = pair


class VertexSubset:
    """
    A set of vertices of a graph with `n` vertices, with bit-vector semantics.

    Subsets are immutable: operations that change membership return new subsets.

    Attributes:
        n: The number of vertices of the underlying graph.
    """

    n: int
    _mask: np.ndarray

    def __init__(self, n: int, members: Iterable[int] = ()):
        """Subset of `range(n)` with the given `members`. Fail on
        out-of-range or repeated indices."""
        if n < 0:
            raise GraphError(f'Invalid vertex count: {n}')
        self.n = n
        mask = np.zeros(n, dtype=bool)
        for v in members:
            try:
                v = int(v)
            except (TypeError, ValueError) as e:
                raise GraphError(f'Vertex {v!r} is not an integer') from e
            if not 0 <= v < n:
                raise GraphError(f'Vertex {v} out of range for n={n}')
            if mask[v]:
                raise GraphError(f'Vertex {v} listed twice')
            mask[v] = True
        mask.flags.writeable = False
        self._mask = mask

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> 'VertexSubset':
        """Subset whose members are the True entries of boolean `mask`."""
        subset = cls.__new__(cls)
        subset.n = len(mask)
        subset._mask = np.array(mask, dtype=bool)
        subset._mask.flags.writeable = False
        return subset

    @classmethod
    def from_bits(cls, n: int, bits: int) -> 'VertexSubset':
        """Subset whose members are the set bits of integer `bits`."""
        if bits < 0 or bits >> n:
            raise GraphError(f'Bit-vector {bits:#x} does not fit n={n}')
        return cls(n, [v for v in range(n) if bits >> v & 1])

    @classmethod
    def full(cls, n: int) -> 'VertexSubset':
        """The subset of all `n` vertices."""
        return cls.from_mask(np.ones(n, dtype=bool))

    @property
    def mask(self) -> np.ndarray:
        """Read-only boolean membership vector."""
        return self._mask

    def members(self) -> List[int]:
        """Sorted list of member indices."""
        return [int(v) for v in np.flatnonzero(self._mask)]

    def to_bits(self) -> int:
        """Members as the set bits of an integer."""
        bits = 0
        for v in np.flatnonzero(self._mask):
            bits |= 1 << int(v)
        return bits

    def toggle(self, v: int) -> 'VertexSubset':
        """Subset with the membership of `v` flipped."""
        if not 0 <= v < self.n:
            raise GraphError(f'Vertex {v} out of range for n={self.n}')
        mask = self._mask.copy()
        mask[v] = not mask[v]
        return VertexSubset.from_mask(mask)

    def issubset(self, other: 'VertexSubset') -> bool:
        """Is every member of `self` a member of `other`?"""
        self._check_compatible(other)
        return not np.any(self._mask & ~other._mask)

    def _check_compatible(self, other: 'VertexSubset'):
        if self.n != other.n:
            raise GraphError(f'Subsets over different graphs: n={self.n} and n={other.n}')

    def __or__(self, other: 'VertexSubset') -> 'VertexSubset':
        self._check_compatible(other)
        return VertexSubset.from_mask(self._mask | other._mask)

    def __and__(self, other: 'VertexSubset') -> 'VertexSubset':
        self._check_compatible(other)
        return VertexSubset.from_mask(self._mask & other._mask)

    def __sub__(self, other: 'VertexSubset') -> 'VertexSubset':
        self._check_compatible(other)
        return VertexSubset.from_mask(self._mask & ~other._mask)

    def __len__(self) -> int:
        return int(np.count_nonzero(self._mask))

    def __contains__(self, v: int) -> bool:
        return 0 <= v < self.n and bool(self._mask[v])

    def __iter__(self) -> Iterator[int]:
        return iter(self.members())

    def __eq__(self, other) -> bool:
        if not isinstance(other, VertexSubset):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._mask, other._mask)

    def __hash__(self) -> int:
        return hash((self.n, self._mask.tobytes()))

    def __repr__(self) -> str:
        return f'VertexSubset(n={self.n}, members={self.members()})'


class Graph:
    """
    An immutable finite simple undirected graph on vertices 0..n-1.

    Edges are kept as a lexicographically sorted array of pairs (u, v)
    with u < v, together with a CSR adjacency (sorted neighbor lists) and,
    for graphs with at most BITSET_MAX_N vertices, per-vertex neighbor
    bit-vectors.

    Attributes:
        n: The number of vertices.
        edges: Array of shape (m, 2) of the edges, sorted, each with u < v.
        degrees: Array with the degree of each vertex.
    """

    n: int
    edges: np.ndarray
    degrees: np.ndarray

    _indptr: np.ndarray
    _indices: np.ndarray
    _matrix: Optional[sp.csr_matrix]
    _bits: Optional[List[int]]

    def __init__(self, n: int, edges: np.ndarray):
        """Wrap already validated, normalized and sorted `edges`. Use
        `build_graph` to construct graphs from untrusted input."""
        self.n = n
        self.edges = edges
        self.edges.flags.writeable = False
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        self._indices = dst[order].astype(np.int32)
        self.degrees = np.bincount(src, minlength=n).astype(np.int64)
        self._indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(self.degrees, out=self._indptr[1:])
        self._matrix = None
        self._bits = None

    @property
    def m(self) -> int:
        """The number of edges."""
        return len(self.edges)

    def degree(self, v: int) -> int:
        """Degree d(v)."""
        return int(self.degrees[v])

    def neighbors(self, v: int) -> np.ndarray:
        """Sorted array of the neighbors of `v`."""
        return self._indices[self._indptr[v]:self._indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        """Are `u` and `v` adjacent?"""
        nbrs = self.neighbors(u)
        pos = np.searchsorted(nbrs, v)
        return bool(pos < len(nbrs) and nbrs[pos] == v)

    def matrix(self) -> sp.csr_matrix:
        """Symmetric sparse 0/1 adjacency matrix (cached)."""
        if self._matrix is None:
            data = np.ones(len(self._indices), dtype=np.int32)
            self._matrix = sp.csr_matrix((data, self._indices, self._indptr),
                                         shape=(self.n, self.n))
        return self._matrix

    def neighbor_bits(self) -> List[int]:
        """Per-vertex neighbor bit-vectors; only for graphs with at most BITSET_MAX_N vertices."""
        if self.n > BITSET_MAX_N:
            raise GraphError(
                f'Bit-vectors are kept only for n <= {BITSET_MAX_N}, got n={self.n}')
        if self._bits is None:
            bits = []
            for v in range(self.n):
                word = 0
                for u in self.neighbors(v):
                    word |= 1 << int(u)
                bits.append(word)
            self._bits = bits
        return self._bits

    def edge_list(self) -> List[Tuple[int, int]]:
        """Sorted list of edges (u, v) with u < v."""
        return [(int(u), int(v)) for u, v in self.edges]

    def selected_counts(self, sel: VertexSubset) -> np.ndarray:
        """Number of neighbors in `sel` of every vertex."""
        return self.matrix() @ sel.mask.astype(np.int32)

    def to_networkx(self) -> nx.Graph:
        """The same graph as a networkx.Graph."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edge_list())
        return graph

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self) -> int:
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self) -> str:
        return f'Graph(n={self.n}, m={self.m})'


@dataclass
class DegreeProfile:
    """
    Partition of the vertices into dyadic degree buckets.

    Bucket j holds the vertices v with 2**(j-1) <= d(v) <= 2**j; a degree
    of exactly 2**j goes to bucket j, so the buckets are disjoint.

    Attributes:
        buckets: Bucket j is buckets[j - 1], for j = 1..ceil(log2 Delta) (one bucket when Delta <= 2).
        isolated: The vertices of degree 0.
        max_degree: Delta, the largest degree (0 for edgeless graphs).
    """

    buckets: List[VertexSubset]
    isolated: VertexSubset
    max_degree: int = 0

    def bucket(self, j: int) -> VertexSubset:
        """Bucket V_j, for 1-based index j."""
        if not 1 <= j <= len(self.buckets):
            raise IndexError(f'Bucket index {j} out of range 1..{len(self.buckets)}')
        return self.buckets[j - 1]

    def sizes(self) -> List[int]:
        """Cardinalities |V_1|, |V_2|, ..."""
        return [len(b) for b in self.buckets]


@dataclass
class DegreeStats:
    """
    Degree summary of a graph.

    Attributes:
        max_degree: Delta(G).
        has_isolated: Whether some vertex has degree 0.
        profile: The dyadic degree buckets.
    """

    max_degree: int
    has_isolated: bool
    profile: DegreeProfile


def bucket_index(degree: int) -> int:
    """Dyadic bucket j of a positive `degree`: smallest j >= 1 with degree <= 2**j."""
    if degree < 1:
        raise ValueError(f'Isolated vertices have no bucket (degree {degree})')
    return max(1, (degree - 1).bit_length())


def build_graph(n: int, edge_list: Sequence[Tuple[int, int]]) -> Graph:
    """
    Validate `edge_list` over vertices 0..n-1 and build the graph.

    Fail with a GraphError naming the offending pair on a self-loop,
    a duplicate edge (in either orientation), or an out-of-range index.
    """
    if n < 0:
        raise GraphError(f'Invalid vertex count: {n}')
    try:
        pairs = np.asarray(list(edge_list), dtype=np.int64).reshape(-1, 2)
    except (TypeError, ValueError) as e:
        raise GraphError(f'Edge endpoints must be integer pairs: {e}') from e
    if len(pairs) == 0:
        return Graph(n, np.zeros((0, 2), dtype=np.int64))
    bad = np.flatnonzero((pairs < 0).any(axis=1) | (pairs >= n).any(axis=1))
    if len(bad) > 0:
        pair = tuple(int(x) for x in pairs[bad[0]])
        raise GraphError(f'Edge {pair} has an endpoint out of range 0..{n - 1}', pair)
    bad = np.flatnonzero(pairs[:, 0] == pairs[:, 1])
    if len(bad) > 0:
        pair = tuple(int(x) for x in pairs[bad[0]])
        raise GraphError(f'Edge {pair} is a self-loop', pair)
    normalized = np.sort(pairs, axis=1)
    keys = normalized[:, 0] * n + normalized[:, 1]
    order = np.argsort(keys, kind='stable')
    sorted_keys = keys[order]
    dup = np.flatnonzero(sorted_keys[1:] == sorted_keys[:-1])
    if len(dup) > 0:
        pair = tuple(int(x) for x in pairs[order[dup[0] + 1]])
        raise GraphError(f'Edge {pair} is a duplicate', pair)
    return Graph(n, normalized[order])


def degree_stats(g: Graph) -> DegreeStats:
    """Maximum degree, presence of isolated vertices, and dyadic degree profile of `g`."""
    max_degree = int(g.degrees.max()) if g.n > 0 else 0
    isolated = VertexSubset.from_mask(g.degrees == 0)
    count = bucket_index(max_degree) if max_degree > 0 else 0
    index = np.array([bucket_index(int(d)) if d > 0 else 0 for d in g.degrees],
                     dtype=np.int64)
    buckets = [VertexSubset.from_mask(index == j) for j in range(1, count + 1)]
    return DegreeStats(max_degree=max_degree, has_isolated=len(isolated) > 0,
                       profile=DegreeProfile(buckets=buckets, isolated=isolated,
                                             max_degree=max_degree))


def unique_neighbors(g: Graph, sel: VertexSubset) -> VertexSubset:
    """U(sel): the vertices with exactly one neighbor in `sel` (whether or not they lie in `sel`)."""
    _check_subset(g, sel)
    return VertexSubset.from_mask(g.selected_counts(sel) == 1)


def unique_count(g: Graph, mask: np.ndarray) -> int:
    """|U(V')| for the boolean membership vector `mask` of V'."""
    counts = g.matrix() @ mask.astype(np.int32)
    return int(np.count_nonzero(counts == 1))


def edges_between(g: Graph, a: VertexSubset, b: VertexSubset) -> int:
    """
    |E(A, B)| counted as ordered pairs (u, v) with u in `a`, v in `b` and u ~ v.

    For disjoint `a` and `b` this is the number of edges with one endpoint
    in each; an edge with both endpoints in the overlap counts twice.
    """
    _check_subset(g, a)
    _check_subset(g, b)
    counts = g.matrix() @ b.mask.astype(np.int64)
    return int(counts[a.mask].sum())


def _check_subset(g: Graph, sel: VertexSubset):
    if sel.n != g.n:
        raise GraphError(f'Subset over n={sel.n} used with a graph of n={g.n}')


def random_graph(n: int, m: int, seed: int, strip_isolated: bool = False) -> Graph:
    """Uniform simple graph with `n` vertices and `m` edges. If
    `strip_isolated`, drop isolated vertices and relabel the rest in order."""
    if m > n * (n - 1) // 2:
        raise GraphError(f'A simple graph on {n} vertices has at most {n * (n - 1) // 2} edges')
    sample = nx.gnm_random_graph(n, m, seed=seed)
    if strip_isolated:
        sample.remove_nodes_from([v for v, d in sample.degree() if d == 0])
    return from_networkx(sample)


def from_networkx(graph: nx.Graph) -> Graph:
    """Convert a networkx graph, relabelling its nodes 0..n-1 in sorted order."""
    nodes = sorted(graph.nodes())
    label = {node: i for i, node in enumerate(nodes)}
    return build_graph(len(nodes), [(label[u], label[v]) for u, v in graph.edges()])


def to_edge_list_text(g: Graph) -> str:
    """Edge-list text: a header "n m", then one sorted edge "u v" per line."""
    lines = [f'{g.n} {g.m}']
    lines += [f'{u} {v}' for u, v in g.edges]
    return '\n'.join(lines) + '\n'


def parse_edge_list(text: str) -> Graph:
    """Parse edge-list text; blank lines and lines starting with '#' are ignored."""
    logger = logging.getLogger(__name__)
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        fields = stripped.split()
        if len(fields) != 2:
            raise GraphError(f'Line {lineno}: expected two integers, got {stripped!r}')
        try:
            rows.append((int(fields[0]), int(fields[1])))
        except ValueError as e:
            raise GraphError(f'Line {lineno}: expected two integers, got {stripped!r}') from e
    if not rows:
        raise GraphError('Missing header line "n m"')
    (n, m), edge_rows = rows[0], rows[1:]
    if len(edge_rows) != m:
        raise GraphError(f'Header announces {m} edges, found {len(edge_rows)}')
    logger.debug('Parsed edge list with n=%s, m=%s', n, m)
    return build_graph(n, edge_rows)


def to_json_dict(g: Graph) -> Dict:
    """JSON-ready form {"n": ..., "edges": [[u, v], ...]}."""
    return {'n': g.n, 'edges': [[u, v] for u, v in g.edge_list()]}


def from_json_dict(data: Dict) -> Graph:
    """Inverse of `to_json_dict`."""
    try:
        n, edges = int(data['n']), data['edges']
    except (KeyError, TypeError, ValueError) as e:
        raise GraphError(f'JSON graph needs fields "n" and "edges": {e}') from e
    try:
        pairs = [tuple(pair) for pair in edges]
    except TypeError as e:
        raise GraphError(f'JSON graph edges must be pairs: {e}') from e
    if any(len(pair) != 2 for pair in pairs):
        raise GraphError('JSON graph edges must be pairs')
    return build_graph(n, pairs)


def read_graph(path: Path) -> Graph:
    """Read a graph from `path`: JSON if it ends in .json, edge-list text otherwise."""
    path = Path(path)
    text = path.read_text(encoding='utf-8')
    if path.suffix == '.json':
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise GraphError(f'{path}: invalid JSON: {e}') from e
        return from_json_dict(data)
    return parse_edge_list(text)


def write_graph(g: Graph, path: Path):
    """Write `g` to `path` in the format chosen by its suffix (see `read_graph`)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == '.json':
        text = json.dumps(to_json_dict(g)) + '\n'
    else:
        text = to_edge_list_text(g)
    with open(path, mode='w', encoding='utf-8', newline='\n') as filepointer:
        filepointer.write(text)
