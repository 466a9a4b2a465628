"""This module computes the second singular value of regular blocks and certifies them
as near-Ramanujan, together with the expander mixing bounds the certificates buy."""

from dataclasses import dataclass
from typing import Dict, Tuple
import logging
import math

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .blocks import Block
from .constants import DEFAULT_SLACK, DEFAULT_SPECTRAL_MAX_ITER, DEFAULT_SPECTRAL_TOL
from .utils import stream

METHODS = ('power', 'dense', 'lanczos')
# Images shorter than this fraction of the degree are rounding noise of a zero image.
ZERO_RTOL = 1e-12


class SpectralError(ValueError):
    """The second eigenvalue could not be computed to the requested tolerance."""


def ramanujan_threshold(d: int) -> float:
    """2 sqrt(d - 1), or 0 for d <= 1."""
    return 2.0 * math.sqrt(d - 1) if d > 1 else 0.0


def _deflate(x: np.ndarray) -> np.ndarray:
    return x - x.mean()


def _power(matrix: sp.csr_matrix, tol: float, max_iter: int, seed: int) -> float:
    transpose = matrix.T.tocsr()
    floor = ZERO_RTOL * max(1.0, float(np.asarray(abs(matrix).sum(axis=1)).max(initial=0)))
    x = _deflate(stream(seed).standard_normal(matrix.shape[1]))
    norm = np.linalg.norm(x)
    if norm == 0.0:
        return 0.0
    x /= norm
    rayleigh = 0.0
    for iteration in range(1, max_iter + 1):
        image = matrix @ x
        value = float(np.linalg.norm(image))
        if value <= floor:
            return 0.0
        rayleigh = value * value
        y = _deflate(transpose @ image)
        # A small residual puts rayleigh within tol of lambda2^2, approached from below.
        residual = float(np.linalg.norm(y - rayleigh * x))
        if residual <= tol * rayleigh:
            logging.getLogger(__name__).debug('Power iteration converged after %s steps', iteration)
            return value
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        x = y / norm
    raise SpectralError(
        f'Power iteration did not converge within {max_iter} steps '
        f'(last estimate {math.sqrt(rayleigh):.6g})')


def _dense(matrix: sp.csr_matrix) -> float:
    singular = np.linalg.svd(matrix.toarray(), compute_uv=False)
    return float(singular[1]) if len(singular) > 1 else 0.0


def _lanczos(matrix: sp.csr_matrix, tol: float, max_iter: int, seed: int) -> float:
    size = matrix.shape[1]
    if size < 3:
        return _dense(matrix)
    transpose = matrix.T.tocsr()
    operator = LinearOperator((size, size), dtype=np.float64,
                              matvec=lambda x: _deflate(transpose @ (matrix @ _deflate(x))))
    start = _deflate(stream(seed).standard_normal(size))
    try:
        values = eigsh(operator, k=1, which='LA', tol=tol, maxiter=max_iter, v0=start,
                       return_eigenvectors=False)
    except ArpackNoConvergence as e:
        raise SpectralError(f'Lanczos iteration did not converge within {max_iter} steps') from e
    return math.sqrt(max(0.0, float(values[0])))


def second_eigenvalue(block: Block, tol: float = DEFAULT_SPECTRAL_TOL,
                      max_iter: int = DEFAULT_SPECTRAL_MAX_ITER, seed: int = 0,
                      method: str = 'power') -> float:
    """
    Second largest singular value lambda2 of a regular block.

    The top singular value of a d-regular block is d, with the all-ones
    vector as its singular vector on both sides; lambda2 is the largest
    ||Mx|| over unit x orthogonal to it. For a diagonal block this is
    the largest |eigenvalue| other than d, so the bottom of the spectrum
    counts as well.

    `method` is 'power' (power iteration on M^T M with the all-ones
    direction deflated at every step, stopping once the residual
    ||M^T M x - lambda^2 x|| is at most `tol` lambda^2), 'lanczos'
    (scipy's eigsh on the same deflated operator), or 'dense' (full SVD,
    exact up to rounding).
    """
    if method not in METHODS:
        raise SpectralError(f'Unknown method {method!r}, expected one of {METHODS}')
    matrix = block.matrix()
    if method == 'dense':
        return _dense(matrix)
    if method == 'lanczos':
        return _lanczos(matrix, tol, max_iter, seed)
    return _power(matrix, tol, max_iter, seed)


@dataclass(frozen=True)
class SpectralCertificate:
    """
    Near-Ramanujan certificate of one block.

    Attributes:
        i: Row part of the block (1-based).
        j: Column part of the block (1-based).
        d: Degree of the block.
        lambda2: Its second singular value.
        threshold: 2 sqrt(d - 1).
        slack: Multiplier allowed over the threshold.
        attempts: Samples drawn until this one (1 if the first sample was kept).
        certified: Whether lambda2 <= threshold (1 + slack).
    """

    i: int
    j: int
    d: int
    lambda2: float
    threshold: float
    slack: float
    attempts: int
    certified: bool

    @property
    def c(self) -> float:
        """lambda2 / sqrt(d), the constant the block actually mixes with."""
        return self.lambda2 / math.sqrt(self.d) if self.d > 0 else 0.0

    def to_dict(self) -> Dict:
        return {'i': self.i, 'j': self.j, 'd': self.d, 'lambda2': self.lambda2,
                'threshold': self.threshold, 'attempts': self.attempts}


def certify(block: Block, d: int, lambda2: float, slack: float = DEFAULT_SLACK,
            attempts: int = 1) -> SpectralCertificate:
    """Certificate for `block`: certified iff lambda2 <= 2 sqrt(d - 1) (1 + slack), boundary included."""
    if lambda2 < 0:
        raise SpectralError(f'Negative singular value {lambda2}')
    if slack < 0:
        raise SpectralError(f'Negative slack {slack}')
    threshold = ramanujan_threshold(d)
    i, j = block.block_id
    return SpectralCertificate(i=i, j=j, d=d, lambda2=lambda2, threshold=threshold, slack=slack,
                               attempts=attempts, certified=lambda2 <= threshold * (1.0 + slack))


def mixing_bounds(d: int, lambda2: float, a_size: int, b_size: int) -> Tuple[float, float]:
    """The mixing bounds for |A| = `a_size`, |B| = `b_size`: 2 sqrt(d |A| |B|)
    with the Ramanujan constant, and lambda2 sqrt(|A| |B|) with the measured one."""
    return 2.0 * math.sqrt(d * a_size * b_size), lambda2 * math.sqrt(a_size * b_size)
