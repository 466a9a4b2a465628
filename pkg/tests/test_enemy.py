import sys
import os
import json
import pytest
sys.path.append(os.path.dirname(os.path.realpath(__file__)) + '/../src')

import numpy as np

from upsilon.constants import BUNDLE_GRAPH_FILE, BUNDLE_SIDECAR_FILE
from upsilon.enemy import (CertificationError, InfeasibleParams, assemble_enemy_graph,
                           derive_params, extract_block, load_bundle, middle_width, mixing_check,
                           proof_trace, recertify, sample_mixing, save_bundle)
from upsilon.graph import GraphError, VertexSubset
from upsilon.search import greedy_improve, randomized_lower_bound, sample_selection
from upsilon.spectral import second_eigenvalue
from upsilon.utils import ceil_pow2, stream


@pytest.fixture(scope='module')
def bundle():
    return assemble_enemy_graph(derive_params(64, 16), seed=7)


@pytest.fixture(scope='module')
def large_bundle():
    return assemble_enemy_graph(derive_params(2048, 256), seed=1)


def random_subsets(n, count, seed):
    for s in range(count):
        rng = stream(seed, s)
        yield VertexSubset.from_mask(rng.random(n) < rng.choice([0.01, 0.05, 0.2, 0.5]))


class TestParams:

    def test_derive(self):
        params = derive_params(2048, 256)
        assert (params.k, params.t, params.t_nominal, params.n) == (4, 512, 256, 2048)
        params = derive_params(8192, 1024)
        assert (params.k, params.t, params.t_nominal) == (5, 2048, 1024)
        params = derive_params(2049, 256)
        assert (params.k, params.t, params.t_nominal) == (4, 512, 512)
        params = derive_params(64, 16)
        assert (params.k, params.t, params.n) == (2, 32, 64)

    def test_part_size(self):
        for n_target in [1025, 1500, 2047, 2048, 2049, 3000, 4096]:
            params = derive_params(n_target, 256)
            assert params.t_nominal * 2 * params.k >= n_target
            assert params.t_nominal * params.k < n_target
            assert params.t_nominal == ceil_pow2(n_target / 8)
        assert [ceil_pow2(x) for x in [0, 1, 1.5, 2, 3, 256, 256.125]] == [1, 1, 2, 2, 4, 256, 512]

    def test_infeasible(self):
        with pytest.raises(InfeasibleParams):
            derive_params(64, 256)
        with pytest.raises(InfeasibleParams):
            derive_params(1024, 3)
        with pytest.raises(InfeasibleParams):
            derive_params(0, 16)

    def test_degrees(self):
        params = derive_params(2048, 256)
        assert params.degree(1, 1) == 4
        assert params.degree(2, 4) == params.degree(4, 2) == 64
        assert params.degrees()[3, 3] == 256
        assert params.max_degree() == 480
        assert len(params.block_ids()) == 10
        with pytest.raises(IndexError):
            params.degree(0, 1)
        with pytest.raises(IndexError):
            params.degree(1, 5)

    def test_middle_width(self):
        assert [middle_width(k) for k in [1, 2, 3, 4, 5, 8, 9]] == [0, 1, 2, 2, 3, 3, 4]


class TestAssemble:

    def test_shape(self, bundle):
        assert bundle.graph.n == 64
        assert [len(part) for part in bundle.parts] == [32, 32]
        assert bundle.part(2).members() == list(range(32, 64))
        # V_1: 4 + 8 neighbors, V_2: 8 + 16
        assert sorted(set(bundle.graph.degrees.tolist())) == [12, 24]
        assert bundle.is_block_regular()

    def test_certified(self, bundle):
        assert bundle.is_certified()
        assert sorted(bundle.certificates) == [(1, 1), (1, 2), (2, 2)]
        assert bundle.certificate(2, 1) is bundle.certificate(1, 2)
        for (i, j), certificate in bundle.certificates.items():
            assert certificate.d == bundle.params.degree(i, j)
            assert 1 <= certificate.attempts <= 10

    def test_extract_block(self, bundle):
        for i, j in bundle.params.block_ids():
            block = extract_block(bundle, i, j)
            assert block.is_regular()
            assert block.bipartite == (i != j)
            stored = bundle.certificate(i, j).lambda2
            assert second_eigenvalue(block, seed=7) == pytest.approx(stored, rel=1e-4)

    def test_workers(self, bundle):
        parallel = assemble_enemy_graph(derive_params(64, 16), seed=7, workers=2)
        assert parallel.graph == bundle.graph
        assert parallel.certificates == bundle.certificates

    def test_seed(self, bundle):
        assert assemble_enemy_graph(derive_params(64, 16), seed=8).graph != bundle.graph

    def test_certification_error(self):
        with pytest.raises(CertificationError) as ex:
            assemble_enemy_graph(derive_params(64, 16), seed=7, max_attempts=0)
        assert ex.value.block == (1, 1)


class TestMixing:

    def test_whole_parts(self, bundle):
        check = mixing_check(bundle, 1, 2, bundle.part(1), bundle.part(2))
        assert check.deviation == 0.0
        assert check.passed

    def test_neighborhood(self, bundle):
        v = 0
        neighbors = VertexSubset(64, [u for u in bundle.graph.neighbors(v) if u >= 32])
        check = mixing_check(bundle, 1, 2, VertexSubset(64, [v]), neighbors)
        # all 8 edges land in B, against 8 * 8 / 32 expected
        assert check.deviation == pytest.approx(8 - 2)
        assert check.bound_ramanujan == pytest.approx(2 * np.sqrt(8 * 8))
        assert check.passed

    def test_outside_part(self, bundle):
        with pytest.raises(GraphError):
            mixing_check(bundle, 1, 2, VertexSubset(64, [40]), bundle.part(2))

    def test_sampled(self, bundle):
        summaries = sample_mixing(bundle, samples=60, seed=3)
        assert [s.block for s in summaries] == [(1, 1), (1, 2), (2, 2)]
        assert all(s.checks == 60 and s.failures == 0 for s in summaries)
        assert all(0.0 <= s.worst <= 1.0 for s in summaries)


class TestProofTrace:

    def test_empty(self, bundle):
        trace = proof_trace(bundle, VertexSubset(64))
        assert trace.holds()
        assert trace.j0 is None and trace.i_star is None
        assert trace.unique_total == 0
        assert trace.total_bound == 64

    def test_last_part(self, bundle):
        trace = proof_trace(bundle, bundle.part(2))
        assert trace.holds()
        assert trace.edge_counts == [8 * 32, 16 * 32]
        assert (trace.j0, trace.i_star) == (1, 2)
        assert trace.unique_total == 0
        assert trace.tail_buckets == []

    def test_doubling(self, bundle):
        for sel in random_subsets(64, 100, seed=1):
            trace = proof_trace(bundle, sel)
            assert trace.edge_counts[1] == 2 * trace.edge_counts[0]
            assert sum(trace.unique_counts) == trace.unique_total
            assert trace.holds()

    def test_search_witnesses(self, bundle):
        result = randomized_lower_bound(bundle.graph, trials=100, seed=2)
        assert proof_trace(bundle, result.witness).holds()
        greedy = greedy_improve(bundle.graph, result.witness, budget=200)
        trace = proof_trace(bundle, greedy.witness)
        assert trace.holds()
        assert trace.unique_total == greedy.value

    def test_mismatched(self, bundle):
        with pytest.raises(GraphError):
            proof_trace(bundle, VertexSubset(10))

    def test_to_dict(self, bundle):
        data = proof_trace(bundle, bundle.part(1)).to_dict()
        assert data['selection_size'] == 32
        assert data['holds'] is True
        assert data['violations'] == []

    def test_tail(self, large_bundle):
        assert large_bundle.is_certified()
        assert large_bundle.is_block_regular()
        assert 256 <= int(large_bundle.graph.degrees.max()) < 2 * 256
        trace = proof_trace(large_bundle, large_bundle.part(4))
        assert (trace.j0, trace.i_star) == (1, 4)
        assert [b.j for b in trace.tail_buckets] == [4]
        assert trace.holds()
        for sel in random_subsets(2048, 20, seed=5):
            trace = proof_trace(large_bundle, sel)
            assert trace.holds()
            assert trace.head_edges < 2 * large_bundle.params.t
            for b in trace.tail_buckets:
                assert b.unique <= b.bound

    @pytest.mark.slow
    def test_doubling_all_parts(self, large_bundle):
        k = large_bundle.params.k
        for sel in random_subsets(2048, 100, seed=9):
            trace = proof_trace(large_bundle, sel)
            for j in range(1, k):
                assert trace.edge_counts[j] == 2 * trace.edge_counts[j - 1]
            assert trace.holds()

    @pytest.mark.slow
    def test_mixing_all_blocks(self, large_bundle):
        summaries = sample_mixing(large_bundle, samples=1000, seed=0)
        assert len(summaries) == len(large_bundle.params.block_ids())
        assert all(s.checks == 1000 and s.failures == 0 for s in summaries)

    @pytest.mark.slow
    def test_every_trial(self, large_bundle):
        g = large_bundle.graph
        result = randomized_lower_bound(g, trials=1000, seed=0)
        for trial in range(1000):
            sel = sample_selection(g, result.p, seed=0, trial=trial)
            trace = proof_trace(large_bundle, sel)
            assert trace.unique_total == result.samples[trial]
            assert trace.holds()
        greedy = greedy_improve(g, result.witness, budget=1000)
        trace = proof_trace(large_bundle, greedy.witness)
        assert trace.unique_total == greedy.value
        assert trace.holds()

    @pytest.mark.slow
    def test_largest(self):
        large = assemble_enemy_graph(derive_params(8192, 1024), seed=0, workers=4)
        assert large.is_certified()
        assert all(s.failures == 0 for s in sample_mixing(large, samples=1000, seed=0))
        result = randomized_lower_bound(large.graph, trials=50, seed=0)
        assert proof_trace(large, result.witness).holds()
        greedy = greedy_improve(large.graph, result.witness, budget=500)
        assert proof_trace(large, greedy.witness).holds()


class TestBundleFiles:

    def test_round_trip(self, bundle, tmp_path):
        save_bundle(bundle, tmp_path / 'first')
        loaded = load_bundle(tmp_path / 'first')
        assert loaded.graph == bundle.graph
        assert loaded.certificates == bundle.certificates
        assert loaded.params == bundle.params
        save_bundle(loaded, tmp_path / 'second')
        for name in [BUNDLE_GRAPH_FILE, BUNDLE_SIDECAR_FILE]:
            assert (tmp_path / 'first' / name).read_bytes() == \
                (tmp_path / 'second' / name).read_bytes()

    def test_malformed(self, bundle, tmp_path):
        save_bundle(bundle, tmp_path)
        (tmp_path / BUNDLE_SIDECAR_FILE).write_text('{"k": 2}\n')
        with pytest.raises(GraphError):
            load_bundle(tmp_path)

    def test_shuffled_parts(self, bundle, tmp_path):
        save_bundle(bundle, tmp_path)
        path = tmp_path / BUNDLE_SIDECAR_FILE
        data = json.loads(path.read_text())
        first, second = data['parts']
        first[0], second[0] = second[0], first[0]
        path.write_text(json.dumps(data))
        with pytest.raises(GraphError, match='part 1'):
            load_bundle(tmp_path)

    def test_mismatched_graph(self, bundle, tmp_path):
        save_bundle(bundle, tmp_path)
        (tmp_path / BUNDLE_GRAPH_FILE).write_text('64 1\n0 1\n')
        with pytest.raises(GraphError):
            load_bundle(tmp_path)

    def test_recertify(self, bundle, tmp_path):
        save_bundle(bundle, tmp_path)
        recertification = recertify(load_bundle(tmp_path), seed=7)
        assert recertification.ok()
        assert recertification.mismatches == []
