"""This module computes the unique-neighbor invariant Upsilon(G): exactly on small
graphs, and as certified lower bounds on large ones via random dyadic
selection and greedy improvement."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple
import logging
import math

import numpy as np

from .constants import BITSET_MAX_N, DEFAULT_EXACT_CAP
from .graph import (DegreeProfile, Graph, VertexSubset, degree_stats,
                    unique_count, unique_neighbors)
from .utils import stream

# Subsets evaluated per vectorized batch in exact mode.
EXACT_CHUNK = 1 << 16
# Trials drawn per sparse matrix product in randomized mode.
TRIAL_BATCH = 256


class SearchError(ValueError):
    """A search was called outside its preconditions."""


class Mode(Enum):
    """How an Upsilon value was obtained."""

    EXACT = 'exact'
    RANDOMIZED = 'randomized'
    GREEDY = 'greedy'


@dataclass
class UpsilonResult:
    """
    The outcome of a search for a subset with many unique neighbors.

    Attributes:
        value: |U(witness)|.
        witness: The subset V' achieving `value`.
        mode: How the value was obtained.
        trials_used: Subsets drawn (randomized), toggles applied (greedy), or subsets enumerated (exact).
        p: Selection probability (randomized mode only).
        expectation_at_p: Closed-form E|U(V')| at `p` (randomized mode only).
        guarantee: n / (8 log2 Delta), the dyadic lower bound (randomized mode only).
        samples: |U| of every trial, in trial order (randomized mode only).
    """

    value: int
    witness: VertexSubset
    mode: Mode
    trials_used: int
    p: Optional[float] = None
    expectation_at_p: Optional[float] = None
    guarantee: Optional[float] = None
    samples: Optional[np.ndarray] = field(default=None, repr=False)

    def is_sound(self, g: Graph) -> bool:
        """Does `value` equal |U(witness)| on `g`?"""
        return len(unique_neighbors(g, self.witness)) == self.value

    def sample_mean(self) -> float:
        """Mean |U| over the trials."""
        return float(np.mean(self.samples))

    def standard_error(self) -> float:
        """Sample standard deviation of |U| divided by the square root of the number of trials."""
        if self.samples is None or len(self.samples) < 2:
            return math.inf
        return float(np.std(self.samples, ddof=1) / math.sqrt(len(self.samples)))

    def to_dict(self) -> Dict:
        """JSON-ready report fields."""
        return {
            'mode': self.mode.value,
            'value': self.value,
            'witness': self.witness.members(),
            'trials_used': self.trials_used,
            'p': self.p,
            'expectation_at_p': self.expectation_at_p,
            'guarantee': self.guarantee,
        }


@dataclass
class DyadicChoice:
    """
    The bucket and probability picked by the dyadic pigeonhole argument.

    Attributes:
        j_star: Index of a largest bucket (the smallest such index).
        p: 2**-j_star.
        guarantee: n / (8 log2 Delta), with log2 Delta taken as at least 1.
        bucket_size: |V_j_star|.
    """

    j_star: int
    p: float
    guarantee: float
    bucket_size: int


def power_floor(x: float) -> float:
    """(1 - 1/x)**x, which is at least 1/4 for all x >= 2."""
    return (1.0 - 1.0 / x) ** x


def bucket_floor(y: float) -> float:
    """y 4**-y / 2, which is at least 1/8 on [1/2, 1]."""
    return 0.5 * y * 4.0 ** (-y)


def term_lower_bound(d: int, p: float) -> float:
    """Lower bound d p 4**(-d p) / 2 on the selection term d p (1 - p)**(d - 1), for p <= 1/2."""
    return bucket_floor(d * p)


def exact_subset_count(n: int) -> int:
    """Number of subsets enumerated by an exact search on `n` vertices."""
    return 1 << n


def _check_exact(g: Graph, cap: int):
    if g.n > cap:
        raise SearchError(f'Exact search limited to n <= {cap}, got n={g.n}')
    if g.n > BITSET_MAX_N:
        raise SearchError(f'Exact search needs n <= {BITSET_MAX_N}, got n={g.n}')


def _gray_codes(start: int, stop: int) -> np.ndarray:
    index = np.arange(start, stop, dtype=np.uint64)
    return index ^ (index >> np.uint64(1))


def _toggled_vertices(index: np.ndarray) -> np.ndarray:
    """Vertex toggled between Gray codes index - 1 and index: the lowest set bit of index."""
    lowest = index & (~index + np.uint64(1))
    return np.log2(lowest.astype(np.float64)).astype(np.int64)


def upsilon_exact(g: Graph, cap: int = DEFAULT_EXACT_CAP) -> UpsilonResult:
    """
    Exact Upsilon(G) by enumerating all 2**n subsets in reflected Gray-code order.

    Consecutive subsets differ in one vertex, so the selected-neighbor
    counts of all vertices are kept incrementally: each step adds or
    subtracts the adjacency row of the toggled vertex. A batch of steps
    is one cumulative sum. The witness is the first maximum in Gray-code
    order.
    """
    logger = logging.getLogger(__name__)
    _check_exact(g, cap)
    total = exact_subset_count(g.n)
    if g.m == 0:
        return UpsilonResult(value=0, witness=VertexSubset(g.n), mode=Mode.EXACT,
                             trials_used=total)
    adjacency = g.matrix().toarray().astype(np.int32)
    one = np.uint64(1)
    # Counts for the empty subset, Gray code 0; with m > 0 it is never the witness.
    counts = np.zeros(g.n, dtype=np.int32)
    best_value, best_bits = -1, 0
    for start in range(1, total, EXACT_CHUNK):
        index = np.arange(start, min(start + EXACT_CHUNK, total), dtype=np.uint64)
        codes = index ^ (index >> one)
        toggled = _toggled_vertices(index)
        added = ((codes >> toggled.astype(np.uint64)) & one).astype(np.int32)
        steps = adjacency[toggled] * (2 * added - 1)[:, None]
        chunk = counts + np.cumsum(steps, axis=0, dtype=np.int32)
        ones = np.count_nonzero(chunk == 1, axis=1)
        arg = int(np.argmax(ones))
        if ones[arg] > best_value:
            best_value, best_bits = int(ones[arg]), int(codes[arg])
        counts = chunk[-1]
        logger.debug('Exact search: %s of %s subsets, best %s', start + len(index), total,
                     best_value)
    assert np.array_equal(counts, adjacency[g.n - 1]), 'Gray walk must end at the last vertex alone'
    assert sum((best_bits & word).bit_count() == 1 for word in g.neighbor_bits()) == best_value, \
        'witness value disagrees with its neighbor bit-vectors'
    result = UpsilonResult(value=best_value, witness=VertexSubset.from_bits(g.n, best_bits),
                           mode=Mode.EXACT, trials_used=total)
    assert result.value >= int(g.degrees.max()), 'Upsilon(G) >= Delta(G) violated'
    return result


def upsilon_naive(g: Graph, cap: int = DEFAULT_EXACT_CAP) -> UpsilonResult:
    """Exact Upsilon(G) recounting selected neighbors of every vertex for every subset,
    through the dense adjacency matrix. Slow; the oracle for `upsilon_exact`."""
    _check_exact(g, cap)
    total = exact_subset_count(g.n)
    adjacency = g.matrix().toarray().astype(np.int64)
    vertex_bits = np.arange(g.n, dtype=np.uint64)
    best_value, best_bits = -1, 0
    for start in range(0, total, EXACT_CHUNK):
        masks = _gray_codes(start, min(start + EXACT_CHUNK, total))
        indicator = ((masks[:, None] >> vertex_bits[None, :]) & np.uint64(1)).astype(np.int64)
        counts = indicator @ adjacency
        values = np.count_nonzero(counts == 1, axis=1)
        arg = int(np.argmax(values))
        if values[arg] > best_value:
            best_value, best_bits = int(values[arg]), int(masks[arg])
    return UpsilonResult(value=best_value, witness=VertexSubset.from_bits(g.n, best_bits),
                         mode=Mode.EXACT, trials_used=total)


def expected_unique(g: Graph, p: float) -> float:
    """E|U(V')| = sum over v of d(v) p (1 - p)**(d(v) - 1), for V' drawn by
    selecting each vertex independently with probability `p`."""
    if not 0.0 <= p <= 1.0:
        raise SearchError(f'Probability out of range: {p}')
    degrees = g.degrees[g.degrees > 0].astype(np.float64)
    terms = degrees * p * np.power(1.0 - p, degrees - 1.0)
    return math.fsum(terms.tolist())


def dyadic_probability(profile: DegreeProfile, n: int) -> DyadicChoice:
    """Pick a largest degree bucket V_j (smallest j on ties) and p = 2**-j.

    The guarantee n / (8 log2 Delta) bounds E|U(V')| at this p from below
    for every graph without isolated vertices."""
    if len(profile.isolated) > 0:
        raise SearchError(
            f'Dyadic selection needs a graph without isolated vertices, '
            f'found {len(profile.isolated)}')
    sizes = profile.sizes()
    if not sizes:
        raise SearchError('Dyadic selection needs at least one edge')
    j_star = 1 + sizes.index(max(sizes))
    log_delta = max(1.0, math.log2(profile.max_degree)) if profile.max_degree else 1.0
    return DyadicChoice(j_star=j_star, p=2.0 ** -j_star, guarantee=n / (8.0 * log_delta),
                        bucket_size=sizes[j_star - 1])


def best_probability(g: Graph) -> Tuple[float, float]:
    """The p in {1/2, 1/4, ..., 2**-ceil(log2 Delta)} maximizing E|U(V')|, with its expectation.
    Ties go to the larger p."""
    max_degree = int(g.degrees.max()) if g.n > 0 else 0
    steps = max(1, (max_degree - 1).bit_length()) if max_degree > 0 else 1
    best_p, best_expectation = 0.5, -1.0
    for j in range(1, steps + 1):
        p = 2.0 ** -j
        expectation = expected_unique(g, p)
        if expectation > best_expectation:
            best_p, best_expectation = p, expectation
    return best_p, best_expectation


def sample_selection(g: Graph, p: float, seed: int, trial: int = 0) -> VertexSubset:
    """V' with each vertex included independently with probability `p`,
    drawn from stream `trial` of `seed`."""
    if not 0.0 <= p <= 1.0:
        raise SearchError(f'Probability out of range: {p}')
    return VertexSubset.from_mask(stream(seed, trial).random(g.n) < p)


def randomized_lower_bound(g: Graph, trials: int, seed: int,
                           grid: bool = False) -> UpsilonResult:
    """
    Lower bound on Upsilon(G) from `trials` random dyadic selections.

    Trial i draws its subset from stream i of `seed` (see `sample_selection`),
    so the outcome does not depend on evaluation order. The best trial wins,
    ties going to the earliest. If `grid`, p is the best dyadic probability
    by closed form instead of the pigeonhole choice.
    """
    logger = logging.getLogger(__name__)
    if trials < 1:
        raise SearchError(f'At least one trial is needed, got {trials}')
    stats = degree_stats(g)
    choice = dyadic_probability(stats.profile, g.n)
    p = best_probability(g)[0] if grid else choice.p
    logger.debug('Randomized search: n=%s, Delta=%s, j*=%s, p=%s, trials=%s',
                 g.n, stats.max_degree, choice.j_star, p, trials)
    matrix = g.matrix()
    samples = np.zeros(trials, dtype=np.int64)
    best_value, best_mask = -1, None
    for start in range(0, trials, TRIAL_BATCH):
        stop = min(start + TRIAL_BATCH, trials)
        masks = np.stack([stream(seed, i).random(g.n) < p for i in range(start, stop)], axis=1)
        counts = matrix @ masks.astype(np.int32)
        values = np.count_nonzero(counts == 1, axis=0)
        samples[start:stop] = values
        arg = int(np.argmax(values))
        if values[arg] > best_value:
            best_value, best_mask = int(values[arg]), masks[:, arg]
    result = UpsilonResult(value=best_value, witness=VertexSubset.from_mask(best_mask),
                           mode=Mode.RANDOMIZED, trials_used=trials, p=p,
                           expectation_at_p=expected_unique(g, p),
                           guarantee=choice.guarantee, samples=samples)
    logger.info('Randomized search: best %s, mean %.3f, expectation %.3f, guarantee %.3f',
                best_value, result.sample_mean(), result.expectation_at_p, result.guarantee)
    return result


def toggle_gains(g: Graph, mask: np.ndarray) -> np.ndarray:
    """Change of |U(V')| caused by toggling each vertex in or out of V'."""
    matrix = g.matrix()
    counts = matrix @ mask.astype(np.int32)
    at_zero = matrix @ (counts == 0).astype(np.int32)
    at_one = matrix @ (counts == 1).astype(np.int32)
    at_two = matrix @ (counts == 2).astype(np.int32)
    return np.where(mask, at_two - at_one, at_zero - at_one)


def greedy_improve(g: Graph, start: VertexSubset, budget: int) -> UpsilonResult:
    """
    Hill-climb from `start` by single-vertex toggles.

    Each step applies the toggle with the largest strictly positive gain
    (smallest vertex on ties); stop after `budget` toggles or at a local
    maximum.
    """
    logger = logging.getLogger(__name__)
    if start.n != g.n:
        raise SearchError(f'Start subset over n={start.n} used with a graph of n={g.n}')
    if budget < 0:
        raise SearchError(f'Negative toggle budget: {budget}')
    mask = start.mask.copy()
    value = unique_count(g, mask)
    used = 0
    while used < budget:
        gains = toggle_gains(g, mask)
        v = int(np.argmax(gains))
        if gains[v] <= 0:
            break
        mask[v] = not mask[v]
        value += int(gains[v])
        used += 1
    logger.debug('Greedy search: %s toggles, value %s', used, value)
    result = UpsilonResult(value=value, witness=VertexSubset.from_mask(mask), mode=Mode.GREEDY,
                           trials_used=used)
    assert result.is_sound(g), 'Greedy value out of sync with its witness'
    return result


def search(g: Graph, mode: Mode, seed: int, trials: int, budget: int,
           cap: int = DEFAULT_EXACT_CAP, grid: bool = False) -> UpsilonResult:
    """Dispatch on `mode`. Greedy mode climbs from the best randomized
    selection (or from the empty set when `g` has isolated vertices)."""
    if mode == Mode.EXACT:
        return upsilon_exact(g, cap=cap)
    if mode == Mode.RANDOMIZED:
        return randomized_lower_bound(g, trials=trials, seed=seed, grid=grid)
    if degree_stats(g).has_isolated:
        start = VertexSubset(g.n)
    else:
        start = randomized_lower_bound(g, trials=trials, seed=seed, grid=grid).witness
    return greedy_improve(g, start, budget)
