import sys
import os
import math
import pytest
sys.path.append(os.path.dirname(os.path.realpath(__file__)) + '/../src')

from upsilon.blocks import random_regular, random_regular_bipartite
from upsilon.spectral import (SpectralError, certify, mixing_bounds, ramanujan_threshold,
                              second_eigenvalue)


class TestSecondEigenvalue:

    def test_complete_bipartite(self):
        for t in [2, 4]:
            block = random_regular_bipartite(t, t, seed=0)
            assert second_eigenvalue(block) == 0.0
            assert second_eigenvalue(block, method='dense') == pytest.approx(0.0, abs=1e-9)

    def test_cycle(self):
        # C4 has eigenvalues 2, 0, 0, -2; the bottom one counts
        block = random_regular(4, 2, seed=0)
        assert second_eigenvalue(block) == pytest.approx(2.0, rel=1e-6)
        assert second_eigenvalue(block, method='dense') == pytest.approx(2.0)

    def test_matching(self):
        block = random_regular_bipartite(8, 1, seed=5)
        assert second_eigenvalue(block) == pytest.approx(1.0)
        assert second_eigenvalue(block, method='dense') == pytest.approx(1.0)

    @pytest.mark.parametrize('bipartite', [True, False])
    def test_methods_agree(self, bipartite):
        if bipartite:
            block = random_regular_bipartite(32, 4, seed=1)
        else:
            block = random_regular(32, 4, seed=1)
        dense = second_eigenvalue(block, method='dense')
        power = second_eigenvalue(block, tol=1e-12, max_iter=100_000)
        lanczos = second_eigenvalue(block, tol=1e-10, max_iter=100_000, method='lanczos')
        assert power == pytest.approx(dense, rel=1e-5)
        assert power <= dense + 1e-9
        assert lanczos == pytest.approx(dense, rel=1e-6)

    @pytest.mark.parametrize('t, d, bipartite',
                             [(256, 16, True), (256, 16, False), (512, 64, True)])
    def test_default_tolerance(self, t, d, bipartite):
        if bipartite:
            block = random_regular_bipartite(t, d, seed=11)
        else:
            block = random_regular(t, d, seed=11)
        dense = second_eigenvalue(block, method='dense')
        assert second_eigenvalue(block) == pytest.approx(dense, rel=1e-6)
        assert second_eigenvalue(block, method='lanczos') == pytest.approx(dense, rel=1e-6)

    def test_deterministic(self):
        block = random_regular(64, 6, seed=3)
        assert second_eigenvalue(block, seed=2) == second_eigenvalue(block, seed=2)

    def test_errors(self):
        block = random_regular_bipartite(8, 1, seed=5)
        with pytest.raises(SpectralError):
            second_eigenvalue(block, method='qr')
        with pytest.raises(SpectralError):
            second_eigenvalue(random_regular(32, 4, seed=1), max_iter=1)


class TestCertify:

    def test_threshold(self):
        assert ramanujan_threshold(1) == 0.0
        assert ramanujan_threshold(0) == 0.0
        assert ramanujan_threshold(5) == 4.0

    def test_certify(self):
        block = random_regular_bipartite(32, 16, seed=0, block_id=(2, 3))
        certificate = certify(block, 16, 7.0, slack=0.1)
        assert certificate.certified
        assert (certificate.i, certificate.j) == (2, 3)
        assert certificate.threshold == pytest.approx(2 * math.sqrt(15))
        assert certificate.c == pytest.approx(7.0 / 4)
        assert certificate.to_dict() == {'i': 2, 'j': 3, 'd': 16, 'lambda2': 7.0,
                                         'threshold': certificate.threshold, 'attempts': 1}

    def test_boundary(self):
        block = random_regular(4, 2, seed=0)
        assert certify(block, 2, 2.0, slack=0.0).certified
        assert not certify(block, 4, 4.0, slack=0.1).certified

    def test_errors(self):
        block = random_regular(4, 2, seed=0)
        with pytest.raises(SpectralError):
            certify(block, 2, -1.0)
        with pytest.raises(SpectralError):
            certify(block, 2, 1.0, slack=-0.5)

    def test_mixing_bounds(self):
        assert mixing_bounds(4, 3.0, 4, 9) == pytest.approx((24.0, 18.0))
