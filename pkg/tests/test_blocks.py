import sys
import os
import pytest
sys.path.append(os.path.dirname(os.path.realpath(__file__)) + '/../src')

import numpy as np
import networkx as nx

from upsilon.blocks import BlockGenerationError, random_regular, random_regular_bipartite
from upsilon.utils import stream


class TestBipartite:

    def test_complete(self):
        block = random_regular_bipartite(4, 4, seed=0)
        assert block.is_regular()
        assert block.matrix().toarray().tolist() == [[1.0] * 4] * 4

    def test_matching(self):
        block = random_regular_bipartite(8, 1, seed=3)
        assert block.is_regular()
        assert len(block.pairs) == 8
        assert sorted(block.pairs[:, 1].tolist()) == list(range(8))

    def test_deterministic(self):
        first = random_regular_bipartite(256, 16, seed=11)
        second = random_regular_bipartite(256, 16, seed=11)
        assert np.array_equal(first.pairs, second.pairs)
        assert first.is_regular()
        other = random_regular_bipartite(256, 16, seed=12)
        assert not np.array_equal(first.pairs, other.pairs)

    def test_generator_seed(self):
        first = random_regular_bipartite(32, 5, seed=stream(4, 1, 2, 0))
        second = random_regular_bipartite(32, 5, seed=stream(4, 1, 2, 0))
        assert np.array_equal(first.pairs, second.pairs)

    def test_errors(self):
        with pytest.raises(BlockGenerationError):
            random_regular_bipartite(4, 5, seed=0)
        with pytest.raises(BlockGenerationError):
            random_regular_bipartite(0, 0, seed=0)
        with pytest.raises(BlockGenerationError):
            random_regular_bipartite(4, -1, seed=0)

    def test_to_graph(self):
        block = random_regular_bipartite(16, 3, seed=2, block_id=(1, 2))
        g = block.to_graph()
        assert g.n == 32 and g.m == 48
        assert list(g.degrees) == [3] * 32
        assert nx.is_bipartite(g.to_networkx())
        assert block.block_id == (1, 2)


class TestDiagonal:

    def test_cycle(self):
        block = random_regular(4, 2, seed=0)
        assert block.is_regular()
        assert nx.is_isomorphic(block.to_graph().to_networkx(), nx.cycle_graph(4))

    def test_matching(self):
        block = random_regular(6, 1, seed=1)
        assert block.is_regular()
        assert len(block.pairs) == 3
        assert sorted(block.pairs.ravel().tolist()) == list(range(6))

    def test_parity(self):
        with pytest.raises(BlockGenerationError):
            random_regular(5, 3, seed=0)

    def test_errors(self):
        with pytest.raises(BlockGenerationError):
            random_regular(4, 4, seed=0)
        with pytest.raises(BlockGenerationError):
            random_regular(4, -2, seed=0)

    def test_empty(self):
        block = random_regular(5, 0, seed=0)
        assert block.is_regular()
        assert len(block.pairs) == 0

    @pytest.mark.parametrize('t,d', [(8, 3), (16, 4), (32, 16), (64, 31), (64, 63), (128, 8)])
    def test_regular(self, t, d):
        block = random_regular(t, d, seed=t + d)
        assert block.is_regular()
        assert len(block.pairs) == t * d // 2
        assert np.all(block.pairs[:, 0] < block.pairs[:, 1])
        assert list(block.to_graph().degrees) == [d] * t

    @pytest.mark.parametrize('t,d', [(8, 3), (16, 9), (32, 16), (64, 60), (128, 8)])
    def test_regular_bipartite(self, t, d):
        block = random_regular_bipartite(t, d, seed=t + d)
        assert block.is_regular()
        assert len(block.pairs) == t * d
