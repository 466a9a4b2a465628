"""This module builds the enemy graphs, unions of certified random regular blocks on
k parts of equal size whose degrees double from part to part, and traces the
upper bound argument on concrete vertex subsets."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Tuple
import json
import logging
import math
import multiprocessing

import numpy as np
import scipy.sparse as sp

from .blocks import Block, BlockGenerationError, random_regular, random_regular_bipartite
from .constants import (BUNDLE_GRAPH_FILE, BUNDLE_SIDECAR_FILE, DEFAULT_MAX_ATTEMPTS,
                        DEFAULT_SLACK, DEFAULT_SPECTRAL_MAX_ITER, DEFAULT_SPECTRAL_TOL,
                        SCHEMA_VERSION)
from .graph import Graph, GraphError, VertexSubset, read_graph, write_graph
from .spectral import SpectralCertificate, certify, mixing_bounds, second_eigenvalue
from .utils import ceil_pow2, floor_log2, stream


class InfeasibleParams(ValueError):
    """No enemy graph exists for the requested size and degree."""


class CertificationError(ValueError):
    """A block stayed uncertified after the allowed number of attempts."""

    def __init__(self, message: str, block: Tuple[int, int], best_lambda2: float):
        super().__init__(message)
        self.block = block
        self.best_lambda2 = best_lambda2


@dataclass(frozen=True)
class EnemyParams:
    """
    Shape of an enemy graph: k parts V_1..V_k of t vertices, where every
    vertex of V_i has d_ij = 2**(i + j) neighbors in V_j.

    Attributes:
        n_target: Requested number of vertices.
        delta_target: Requested maximum degree.
        k: Number of parts, floor(floor(log2 delta_target) / 2).
        t: Part size, a power of 2.
        t_nominal: Smallest power of 2 >= n_target / 2k. Equals `t` unless the
            largest diagonal degree would fill a whole part, in which case t is doubled.
    """

    n_target: int
    delta_target: int
    k: int
    t: int
    t_nominal: int

    @property
    def n(self) -> int:
        """Number of vertices k t."""
        return self.k * self.t

    def degree(self, i: int, j: int) -> int:
        """d_ij for 1-based part indices."""
        if not (1 <= i <= self.k and 1 <= j <= self.k):
            raise IndexError(f'Part indices ({i}, {j}) out of range 1..{self.k}')
        return 1 << (i + j)

    def degrees(self) -> np.ndarray:
        """The k x k matrix of d_ij (0-based positions)."""
        index = np.arange(1, self.k + 1)
        return np.left_shift(1, index[:, None] + index[None, :]).astype(np.int64)

    def max_degree(self) -> int:
        """Degree of the vertices of V_k, the largest in the graph."""
        return int(self.degrees()[-1].sum())

    def block_ids(self) -> List[Tuple[int, int]]:
        """The blocks (i, j) with i <= j, row by row."""
        return [(i, j) for i in range(1, self.k + 1) for j in range(i, self.k + 1)]

    def to_dict(self) -> Dict:
        return {'n_target': self.n_target, 'delta_target': self.delta_target,
                'k': self.k, 't': self.t, 't_nominal': self.t_nominal}


def derive_params(n_target: int, delta_target: int) -> EnemyParams:
    """
    Parameters of the enemy graph for `n_target` vertices and maximum degree `delta_target`.

    Fail with InfeasibleParams unless k >= 1 and t >= d_kk = 2**2k. If t
    equals d_kk, it is doubled, since a part cannot carry a simple
    d-regular graph with d equal to its size.
    """
    logger = logging.getLogger(__name__)
    if n_target < 1 or delta_target < 1:
        raise InfeasibleParams(f'Need positive n and Delta, got n={n_target}, Delta={delta_target}')
    k = floor_log2(delta_target) // 2
    if k < 1:
        raise InfeasibleParams(f'Delta={delta_target} gives k=0 parts; need Delta >= 4')
    t_nominal = ceil_pow2(n_target / (2 * k))
    largest = 1 << (2 * k)
    if t_nominal < largest:
        raise InfeasibleParams(
            f'n={n_target} too small for Delta={delta_target}: '
            f't={t_nominal} < d[{k}][{k}]={largest}')
    t = 2 * t_nominal if t_nominal == largest else t_nominal
    logger.debug('Enemy parameters for n=%s, Delta=%s: k=%s, t=%s (t_nominal=%s)',
                 n_target, delta_target, k, t, t_nominal)
    return EnemyParams(n_target=n_target, delta_target=delta_target, k=k, t=t,
                        t_nominal=t_nominal)


@dataclass
class EnemyGraphBundle:
    """
    An enemy graph with its parts and block certificates.

    Attributes:
        graph: The union of all blocks, on vertices 0..kt-1; V_i is (i-1)t..it-1.
        params: Its parameters.
        parts: V_1..V_k.
        certificates: The certificate of every block (i, j) with i <= j.
        slack: The slack the blocks were certified with.
    """

    graph: Graph
    params: EnemyParams
    parts: List[VertexSubset]
    certificates: Dict[Tuple[int, int], SpectralCertificate]
    slack: float = DEFAULT_SLACK
    _blocks: Dict[Tuple[int, int], sp.csr_matrix] = field(default_factory=dict, repr=False,
                                                          compare=False)

    def part(self, i: int) -> VertexSubset:
        """V_i, for 1-based i."""
        return self.parts[i - 1]

    def certificate(self, i: int, j: int) -> SpectralCertificate:
        """Certificate of block (i, j) in either order."""
        return self.certificates[(min(i, j), max(i, j))]

    def block_matrix(self, i: int, j: int) -> sp.csr_matrix:
        """t x t submatrix of the adjacency with rows in V_i and columns in V_j."""
        if (i, j) not in self._blocks:
            t = self.params.t
            rows = slice((i - 1) * t, i * t)
            cols = slice((j - 1) * t, j * t)
            self._blocks[(i, j)] = self.graph.matrix()[rows, cols].tocsr()
        return self._blocks[(i, j)]

    def is_block_regular(self) -> bool:
        """Does every vertex of V_i have exactly d_ij neighbors in V_j, for all i and j?"""
        for i in range(1, self.params.k + 1):
            for j in range(1, self.params.k + 1):
                sums = np.asarray(self.block_matrix(i, j).sum(axis=1)).ravel()
                if not np.all(sums == self.params.degree(i, j)):
                    return False
        return True

    def is_certified(self) -> bool:
        return all(cert.certified for cert in self.certificates.values())


def _certified_block(job: Tuple) -> Tuple[Block, SpectralCertificate]:
    """Sample block (i, j) from streams (seed, i, j, attempt) until one is certified."""
    logger = logging.getLogger(__name__)
    t, d, i, j, seed, slack, max_attempts, tol, max_iter, method = job
    best = math.inf
    for attempt in range(max_attempts):
        rng = stream(seed, i, j, attempt)
        try:
            if i == j:
                block = random_regular(t, d, rng, block_id=(i, j))
            else:
                block = random_regular_bipartite(t, d, rng, block_id=(i, j))
        except BlockGenerationError as e:
            logger.debug('Block (%s, %s) attempt %s: %s', i, j, attempt + 1, e)
            continue
        lambda2 = second_eigenvalue(block, tol=tol, max_iter=max_iter, seed=seed, method=method)
        certificate = certify(block, d, lambda2, slack=slack, attempts=attempt + 1)
        logger.debug('Block (%s, %s) attempt %s: lambda2=%.4f, threshold=%.4f, certified=%s',
                     i, j, attempt + 1, lambda2, certificate.threshold, certificate.certified)
        if certificate.certified:
            return block, certificate
        best = min(best, lambda2)
    raise CertificationError(
        f'Block ({i}, {j}) with t={t}, d={d} not certified in {max_attempts} attempts '
        f'(best lambda2 {best:.6g}, allowed {2 * math.sqrt(d - 1) * (1 + slack):.6g})',
        block=(i, j), best_lambda2=best)


def assemble_enemy_graph(params: EnemyParams, slack: float = DEFAULT_SLACK,
                         max_attempts: int = DEFAULT_MAX_ATTEMPTS, seed: int = 0,
                         tol: float = DEFAULT_SPECTRAL_TOL,
                         max_iter: int = DEFAULT_SPECTRAL_MAX_ITER,
                         workers: int = 1, method: str = 'power') -> EnemyGraphBundle:
    """
    Generate and certify all k(k+1)/2 blocks and take their union.

    Block (i, j) is d_ij-regular bipartite between V_i and V_j for i < j,
    and d_ii-regular on V_i for i = j. Each block draws from its own seed
    streams, so the result is the same for any number of `workers`.
    """
    logger = logging.getLogger(__name__)
    t = params.t
    jobs = [(t, params.degree(i, j), i, j, seed, slack, max_attempts, tol, max_iter, method)
            for i, j in params.block_ids()]
    if workers > 1:
        with multiprocessing.Pool(processes=workers) as pool:
            results = pool.map(_certified_block, jobs)
    else:
        results = [_certified_block(job) for job in jobs]
    pieces = []
    certificates = {}
    for block, certificate in results:
        i, j = block.block_id
        pieces.append(block.pairs + np.array([(i - 1) * t, (j - 1) * t]))
        certificates[(i, j)] = certificate
    edges = np.concatenate(pieces).astype(np.int64)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    graph = Graph(params.n, edges)
    parts = [VertexSubset.from_mask((np.arange(params.n) // t) == i) for i in range(params.k)]
    bundle = EnemyGraphBundle(graph=graph, params=params, parts=parts,
                              certificates=certificates, slack=slack)
    assert bundle.is_block_regular(), 'Assembled enemy graph is not block regular'
    logger.info('Enemy graph: n=%s, m=%s, k=%s, t=%s, max degree %s', graph.n, graph.m,
                params.k, t, int(graph.degrees.max()))
    return bundle


def extract_block(bundle: EnemyGraphBundle, i: int, j: int) -> Block:
    """Block (i, j), i <= j, read back from the graph."""
    if i > j:
        i, j = j, i
    pairs = np.argwhere(bundle.block_matrix(i, j).toarray() > 0)
    if i == j:
        pairs = pairs[pairs[:, 0] < pairs[:, 1]]
    return Block(t=bundle.params.t, d=bundle.params.degree(i, j), bipartite=i != j,
                 pairs=pairs.astype(np.int64), block_id=(i, j))


class MixingCheck(NamedTuple):
    """Edge count deviation of one pair of subsets against the two mixing bounds."""

    deviation: float
    bound_ramanujan: float
    bound_certified: float
    passed: bool


def _local(bundle: EnemyGraphBundle, i: int, sel: VertexSubset) -> np.ndarray:
    if not sel.issubset(bundle.part(i)):
        raise GraphError(f'Subset is not contained in part V_{i}')
    t = bundle.params.t
    return sel.mask[(i - 1) * t:i * t]


def mixing_check(bundle: EnemyGraphBundle, i: int, j: int, a: VertexSubset,
                 b: VertexSubset) -> MixingCheck:
    """
    Compare |E(A, B)| for A in V_i and B in V_j with d_ij |A| |B| / t.

    Passes iff the deviation is within lambda2 sqrt(|A| |B|), lambda2 being
    the certified value of block (i, j).
    """
    a_local, b_local = _local(bundle, i, a), _local(bundle, j, b)
    d = bundle.params.degree(i, j)
    a_size, b_size = int(a_local.sum()), int(b_local.sum())
    edges = int((bundle.block_matrix(i, j) @ b_local.astype(np.int64))[a_local].sum())
    deviation = abs(edges - d * a_size * b_size / bundle.params.t)
    bound_ramanujan, bound_certified = mixing_bounds(d, bundle.certificate(i, j).lambda2,
                                                 a_size, b_size)
    return MixingCheck(deviation=deviation, bound_ramanujan=bound_ramanujan,
                       bound_certified=bound_certified, passed=deviation <= bound_certified)


@dataclass
class MixingSummary:
    """
    Sampled mixing checks of one block.

    Attributes:
        block: (i, j).
        checks: Number of sampled pairs (A, B).
        failures: Number of pairs exceeding the certified bound.
        worst: Largest deviation / certified bound seen (0 when all bounds are 0).
    """

    block: Tuple[int, int]
    checks: int
    failures: int
    worst: float

    def to_dict(self) -> Dict:
        return {'i': self.block[0], 'j': self.block[1], 'checks': self.checks,
                'failures': self.failures, 'worst': self.worst}


def sample_mixing(bundle: EnemyGraphBundle, samples: int, seed: int = 0) -> List[MixingSummary]:
    """Run `samples` mixing checks per block on uniform random A in V_i, B in V_j,
    with |A| = |B| cycling through t/16, t/4 and t/2."""
    t = bundle.params.t
    sizes = [max(1, t // 16), max(1, t // 4), max(1, t // 2)]
    summaries = []
    for i, j in bundle.params.block_ids():
        failures, worst = 0, 0.0
        for s in range(samples):
            rng = stream(seed, i, j, s)
            size = sizes[s % len(sizes)]
            a = VertexSubset(bundle.graph.n, (i - 1) * t + rng.choice(t, size, replace=False))
            b = VertexSubset(bundle.graph.n, (j - 1) * t + rng.choice(t, size, replace=False))
            check = mixing_check(bundle, i, j, a, b)
            failures += not check.passed
            if check.bound_certified > 0:
                worst = max(worst, check.deviation / check.bound_certified)
        summaries.append(MixingSummary(block=(i, j), checks=samples, failures=failures,
                                       worst=worst))
    return summaries


@dataclass
class Violation:
    """
    A witness of a failed inequality in a proof trace.

    Attributes:
        name: Which inequality failed: 'geometric', 'partition', 'pigeonhole', 'head', 'middle', 'tail' or 'total'.
        bucket: The part index involved, if any.
        lhs: The measured side.
        rhs: The bound it should not exceed.
    """

    name: str
    bucket: Optional[int]
    lhs: float
    rhs: float

    def __bool__(self):
        return False


@dataclass
class TailBucket:
    """
    One tail bucket j of a proof trace.

    Attributes:
        j: Bucket index.
        unique: |U_j|.
        c: lambda2 / sqrt(d) of block (i*, j).
        bound: 4 c**2 t k 2**(j0 - j).
        mixing_regime: Whether lambda2 sqrt(|V_i*'| |U_j|) >= d |V_i*'| |U_j| / 2t, the case of
            the argument where the deviation term dominates.
    """

    j: int
    unique: int
    c: float
    bound: float
    mixing_regime: bool


@dataclass
class ProofTrace:
    """
    The upper bound argument evaluated on one selection V'.

    Buckets are the parts V_1..V_k. Head buckets are j < j0, middle
    buckets j0..j0 + ceil(log2 k), tail buckets the rest.

    Attributes:
        selection: V'.
        t: Part size.
        k: Number of parts.
        part_sizes: |V_i'| for every part.
        edge_counts: |E(V', V_j)| for every bucket.
        unique_counts: |U_j| for every bucket.
        unique_total: |U(V')| counted directly.
        j0: Smallest j with |E(V', V_j)| >= t, or None.
        i_star: A part with |E(V_i*', V_j0)| >= t / k, or None.
        head: Sum of |U_j| over head buckets.
        head_edges: Sum of |E(V', V_j)| over head buckets.
        middle: Sum of |U_j| over middle buckets.
        middle_bound: t (ceil(log2 k) + 1).
        tail: Sum of |U_j| over tail buckets.
        tail_buckets: Per-bucket tail data.
        total_bound: 2t + middle_bound + the sum of the tail bounds (2t alone without j0).
        violations: Failed inequalities; empty when the argument goes through.
    """

    selection: VertexSubset
    t: int
    k: int
    part_sizes: List[int]
    edge_counts: List[int]
    unique_counts: List[int]
    unique_total: int
    j0: Optional[int]
    i_star: Optional[int]
    head: int
    head_edges: int
    middle: int
    middle_bound: int
    tail: int
    tail_buckets: List[TailBucket]
    total_bound: float
    violations: List[Violation]

    def holds(self) -> bool:
        """Does every inequality of the argument hold?"""
        return not self.violations

    def to_dict(self) -> Dict:
        return {
            'selection_size': len(self.selection),
            'part_sizes': self.part_sizes,
            'edge_counts': self.edge_counts,
            'unique_counts': self.unique_counts,
            'unique_total': self.unique_total,
            'j0': self.j0,
            'i_star': self.i_star,
            'head': self.head,
            'head_edges': self.head_edges,
            'middle': self.middle,
            'middle_bound': self.middle_bound,
            'tail': self.tail,
            'tail_buckets': [{'j': b.j, 'unique': b.unique, 'c': b.c, 'bound': b.bound,
                              'mixing_regime': b.mixing_regime} for b in self.tail_buckets],
            'total_bound': self.total_bound,
            'holds': self.holds(),
            'violations': [{'name': v.name, 'bucket': v.bucket, 'lhs': v.lhs, 'rhs': v.rhs}
                           for v in self.violations],
        }


def middle_width(k: int) -> int:
    """ceil(log2 k): the middle buckets are j0..j0 + middle_width(k)."""
    return (k - 1).bit_length()


def proof_trace(bundle: EnemyGraphBundle, sel: VertexSubset) -> ProofTrace:
    """
    Evaluate the bucket decomposition of |U(V')| for `sel` and check each step.

    All checks are exact integer comparisons except the tail bounds, which
    involve the measured lambda2 of the blocks.
    """
    logger = logging.getLogger(__name__)
    params = bundle.params
    k, t = params.k, params.t
    if sel.n != bundle.graph.n:
        raise GraphError(f'Subset over n={sel.n} used with a graph of n={bundle.graph.n}')
    violations = []
    counts = bundle.graph.selected_counts(sel)
    part_of = np.arange(bundle.graph.n) // t
    part_sizes = np.bincount(part_of[sel.mask], minlength=k).astype(np.int64)
    edge_counts = np.bincount(part_of, weights=counts, minlength=k).astype(np.int64)
    unique_counts = np.bincount(part_of[counts == 1], minlength=k).astype(np.int64)
    unique_total = int(np.count_nonzero(counts == 1))

    # |E(V_i', V_j)| = d_ij |V_i'|
    per_part = params.degrees() * part_sizes[:, None]
    expected = per_part.sum(axis=0)
    for j in np.flatnonzero(expected != edge_counts):
        violations.append(Violation('geometric', int(j) + 1, int(edge_counts[j]),
                                    int(expected[j])))
    if int(unique_counts.sum()) != unique_total:
        violations.append(Violation('partition', None, int(unique_counts.sum()), unique_total))

    reached = np.flatnonzero(edge_counts >= t)
    j0 = int(reached[0]) + 1 if len(reached) > 0 else None
    stop = j0 - 1 if j0 is not None else k
    head = int(unique_counts[:stop].sum())
    head_edges = int(edge_counts[:stop].sum())
    if head > head_edges:
        violations.append(Violation('head', None, head, head_edges))
    if head_edges >= 2 * t:
        violations.append(Violation('head', None, head_edges, 2 * t - 1))

    i_star = None
    middle, tail = 0, 0
    width = middle_width(k)
    middle_bound = t * (width + 1)
    tail_buckets = []
    total_bound = 2.0 * t
    if j0 is not None:
        column = per_part[:, j0 - 1]
        i_star = int(np.argmax(column)) + 1
        if column[i_star - 1] * k < t:
            violations.append(Violation('pigeonhole', j0, int(column[i_star - 1]), t / k))
        middle_stop = min(k, j0 + width)
        middle = int(unique_counts[j0 - 1:middle_stop].sum())
        if middle > middle_bound:
            violations.append(Violation('middle', None, middle, middle_bound))
        total_bound += middle_bound
        a_size = int(part_sizes[i_star - 1])
        for j in range(middle_stop + 1, k + 1):
            certificate = bundle.certificate(i_star, j)
            d = params.degree(i_star, j)
            c = certificate.c
            bound = 4.0 * c * c * t * k * 2.0 ** (j0 - j)
            unique = int(unique_counts[j - 1])
            regime = certificate.lambda2 * math.sqrt(a_size * unique) >= d * a_size * unique / (2 * t)
            tail_buckets.append(TailBucket(j=j, unique=unique, c=c, bound=bound,
                                           mixing_regime=regime))
            tail += unique
            total_bound += bound
            if unique > bound:
                violations.append(Violation('tail', j, unique, bound))
    if unique_total > total_bound:
        violations.append(Violation('total', None, unique_total, total_bound))
    trace = ProofTrace(selection=sel, t=t, k=k, part_sizes=part_sizes.tolist(),
                       edge_counts=edge_counts.tolist(), unique_counts=unique_counts.tolist(),
                       unique_total=unique_total, j0=j0, i_star=i_star, head=head,
                       head_edges=head_edges, middle=middle, middle_bound=middle_bound, tail=tail,
                       tail_buckets=tail_buckets, total_bound=total_bound, violations=violations)
    logger.debug('Proof trace: |V\'|=%s, |U|=%s, j0=%s, i*=%s, violations=%s', len(sel),
                 unique_total, j0, i_star, len(violations))
    return trace


def _sidecar(bundle: EnemyGraphBundle) -> Dict:
    return {
        'schema_version': SCHEMA_VERSION,
        **bundle.params.to_dict(),
        'slack': bundle.slack,
        'parts': [part.members() for part in bundle.parts],
        'certificates': [bundle.certificates[key].to_dict() for key in sorted(bundle.certificates)],
    }


def save_bundle(bundle: EnemyGraphBundle, directory: Path):
    """Write the graph as an edge list and parts and certificates as a JSON sidecar into `directory`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_graph(bundle.graph, directory / BUNDLE_GRAPH_FILE)
    with open(directory / BUNDLE_SIDECAR_FILE, mode='w', encoding='utf-8',
              newline='\n') as filepointer:
        filepointer.write(json.dumps(_sidecar(bundle)) + '\n')


def load_bundle(directory: Path) -> EnemyGraphBundle:
    """Read a bundle written by `save_bundle`. Fail with GraphError on inconsistent files."""
    directory = Path(directory)
    graph = read_graph(directory / BUNDLE_GRAPH_FILE)
    try:
        data = json.loads((directory / BUNDLE_SIDECAR_FILE).read_text(encoding='utf-8'))
        params = EnemyParams(n_target=int(data['n_target']),
                             delta_target=int(data['delta_target']), k=int(data['k']),
                             t=int(data['t']), t_nominal=int(data['t_nominal']))
        slack = float(data['slack'])
        parts = [VertexSubset(graph.n, members) for members in data['parts']]
        certificates = {}
        for entry in data['certificates']:
            lambda2, threshold = float(entry['lambda2']), float(entry['threshold'])
            certificate = SpectralCertificate(
                i=int(entry['i']), j=int(entry['j']), d=int(entry['d']), lambda2=lambda2,
                threshold=threshold, slack=slack, attempts=int(entry['attempts']),
                certified=lambda2 <= threshold * (1.0 + slack))
            certificates[(certificate.i, certificate.j)] = certificate
    except (KeyError, TypeError, ValueError) as e:
        raise GraphError(f'{directory}: malformed bundle sidecar: {e}') from e
    if graph.n != params.n or len(parts) != params.k:
        raise GraphError(f'{directory}: graph with n={graph.n} does not match k={params.k}, '
                         f't={params.t}')
    for i, part in enumerate(parts, start=1):
        if part.members() != list(range((i - 1) * params.t, i * params.t)):
            raise GraphError(f'{directory}: part {i} is not vertices '
                             f'{(i - 1) * params.t}..{i * params.t - 1}')
    if sorted(certificates) != params.block_ids():
        raise GraphError(f'{directory}: certificates do not cover the blocks of k={params.k}')
    bundle = EnemyGraphBundle(graph=graph, params=params, parts=parts,
                              certificates=certificates, slack=slack)
    if not bundle.is_block_regular():
        raise GraphError(f'{directory}: graph is not block regular for k={params.k}, t={params.t}')
    return bundle


@dataclass
class Recertification:
    """
    Certificates recomputed from a loaded bundle.

    Attributes:
        certificates: Fresh certificates, one per block.
        mismatches: Blocks whose recomputed lambda2 differs from the stored one beyond tolerance.
    """

    certificates: Dict[Tuple[int, int], SpectralCertificate]
    mismatches: List[Tuple[int, int]]

    def ok(self) -> bool:
        return not self.mismatches and all(c.certified for c in self.certificates.values())


def recertify(bundle: EnemyGraphBundle, tol: float = DEFAULT_SPECTRAL_TOL,
              max_iter: int = DEFAULT_SPECTRAL_MAX_ITER, seed: int = 0,
              method: str = 'power') -> Recertification:
    """Recompute lambda2 of every block from the graph and compare with the stored certificates."""
    logger = logging.getLogger(__name__)
    fresh, mismatches = {}, []
    for i, j in bundle.params.block_ids():
        block = extract_block(bundle, i, j)
        stored = bundle.certificates[(i, j)]
        lambda2 = second_eigenvalue(block, tol=tol, max_iter=max_iter, seed=seed, method=method)
        fresh[(i, j)] = certify(block, block.d, lambda2, slack=bundle.slack,
                                attempts=stored.attempts)
        if abs(lambda2 - stored.lambda2) > 1e3 * tol * max(1.0, stored.lambda2):
            logger.warning('Block (%s, %s): stored lambda2 %s, recomputed %s', i, j,
                           stored.lambda2, lambda2)
            mismatches.append((i, j))
    return Recertification(certificates=fresh, mismatches=mismatches)

