import sys
import os
import json
import pytest
sys.path.append(os.path.dirname(os.path.realpath(__file__)) + '/../src')

from upsilon.constants import (BUNDLE_GRAPH_FILE, BUNDLE_SIDECAR_FILE, ENV_SEED, EXIT_INFEASIBLE,
                               EXIT_OK, EXIT_USAGE)
from upsilon.report import strip_timing
from upsilon.upsilon import main

C4 = '4 4\n0 1\n0 3\n1 2\n2 3\n'


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv(ENV_SEED, raising=False)


@pytest.fixture(scope='module')
def bundle_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp('bundle')
    assert main(['--nolog', '--seed', '7', 'gen-enemy', '64', '16',
                 '--bundle', str(directory)]) == EXIT_OK
    return directory


class TestCommands:

    def run(self, capsys, argv):
        """Run the command line and return its exit status and parsed JSON output."""
        capsys.readouterr()
        status = main(['--nolog'] + argv)
        return status, json.loads(capsys.readouterr().out)

    def test_gen_random(self, capsys, tmp_path):
        outputs = []
        for name in ['a.edges', 'b.edges']:
            status, report = self.run(capsys, ['--seed', '3', 'gen-random', '30', '60',
                                               '--graph', str(tmp_path / name)])
            assert status == EXIT_OK
            assert report['results']['graph']['m'] == 60
            assert report['config']['seed'] == 3
            outputs.append((tmp_path / name).read_bytes())
        assert outputs[0] == outputs[1]

    def test_upsilon_exact(self, capsys, tmp_path):
        (tmp_path / 'c4.edges').write_text(C4)
        status, report = self.run(capsys, ['upsilon', str(tmp_path / 'c4.edges')])
        assert status == EXIT_OK
        assert report['command'] == 'upsilon'
        assert report['results']['value'] == 4
        assert report['results']['mode'] == 'exact'
        assert 'total' in report['timing']

    def test_upsilon_random(self, capsys, tmp_path):
        (tmp_path / 'c4.edges').write_text(C4)
        argv = ['--trials', '20', 'upsilon', str(tmp_path / 'c4.edges'), '--mode', 'random']
        status, first = self.run(capsys, argv)
        assert status == EXIT_OK
        assert first['results']['p'] == 0.5
        assert len(first['results']['witness']) <= 4
        status, second = self.run(capsys, argv)
        assert strip_timing(first) == strip_timing(second)

    def test_gen_torus(self, capsys, tmp_path):
        status, report = self.run(capsys, ['gen-torus', '8', '1', '--graph',
                                           str(tmp_path / 't.edges'), '--curves',
                                           str(tmp_path / 't.json')])
        assert status == EXIT_OK
        assert report['results']['size'] == 3
        assert json.loads((tmp_path / 't.json').read_text()) == [[0, 1], [1, 0], [1, 1]]
        status, report = self.run(capsys, ['upsilon', str(tmp_path / 't.edges')])
        assert report['results']['value'] == 2

    def test_gen_enemy(self, capsys, tmp_path, bundle_dir):
        status, report = self.run(capsys, ['--seed', '7', 'gen-enemy', '64', '16',
                                           '--bundle', str(tmp_path)])
        assert status == EXIT_OK
        for name in [BUNDLE_GRAPH_FILE, BUNDLE_SIDECAR_FILE]:
            assert (tmp_path / name).read_bytes() == (bundle_dir / name).read_bytes()
        results = report['results']
        assert results['params']['t'] == 32
        assert results['certified'] is True
        assert results['part_sizes'] == [32, 32]
        assert [(c['i'], c['j']) for c in results['certificates']] == [(1, 1), (1, 2), (2, 2)]

    def test_upsilon_bundle(self, capsys, bundle_dir):
        status, report = self.run(capsys, ['upsilon', str(bundle_dir), '--mode', 'greedy'])
        assert status == EXIT_OK
        assert report['results']['graph']['n'] == 64

    def test_certify(self, capsys, bundle_dir):
        status, report = self.run(capsys, ['--seed', '7', '--mixing-samples', '50', 'certify',
                                           str(bundle_dir)])
        assert status == EXIT_OK
        assert report['results']['certified'] is True
        assert report['results']['mismatches'] == []
        assert all(row['checks'] == 50 and row['failures'] == 0 for row in report['rows'])

    def test_trace_subset(self, capsys, tmp_path, bundle_dir):
        (tmp_path / 'subset.json').write_text('[0, 1, 40]')
        status, report = self.run(capsys, ['trace', str(bundle_dir), '--subset',
                                           str(tmp_path / 'subset.json')])
        assert status == EXIT_OK
        assert report['results']['traced'] == 1
        assert report['results']['trace']['holds'] is True
        assert report['results']['violations'] == []

    def test_trace_witness(self, capsys, tmp_path, bundle_dir):
        assert main(['--nolog', '--out', str(tmp_path / 'r.json'), 'upsilon', str(bundle_dir),
                     '--mode', 'random']) == EXIT_OK
        value = json.loads((tmp_path / 'r.json').read_text())['results']['value']
        status, report = self.run(capsys, ['trace', str(bundle_dir), '--subset',
                                           str(tmp_path / 'r.json')])
        assert status == EXIT_OK
        assert report['results']['trace']['unique_total'] == value

    def test_trace_random(self, capsys, bundle_dir):
        status, report = self.run(capsys, ['--trials', '20', 'trace', str(bundle_dir),
                                           '--mode', 'random'])
        assert status == EXIT_OK
        assert report['results']['traced'] == 20
        assert report['results']['holding'] == 20

    def test_report_csv(self, capsys, tmp_path):
        capsys.readouterr()
        status = main(['--nolog', '--trials', '20', '--report-format', 'csv', 'report', '64:16'])
        assert status == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        header = lines[0].split(',')
        assert header[:4] == ['n_target', 'delta_target', 'k', 't']
        assert 'ratio' in header
        assert len(lines) == 2


class TestErrors:

    def run(self, capsys, argv):
        capsys.readouterr()
        status = main(['--nolog'] + argv)
        return status, json.loads(capsys.readouterr().out)

    def test_infeasible(self, capsys, tmp_path):
        status, report = self.run(capsys, ['gen-enemy', '64', '256', '--bundle', str(tmp_path)])
        assert status == EXIT_INFEASIBLE
        assert report['error']['type'] == 'InfeasibleParams'
        assert report['config']['arguments']['n'] == 64

    def test_malformed_graph(self, capsys, tmp_path):
        (tmp_path / 'bad.edges').write_text('3 2\n0 1\n1 0\n')
        status, report = self.run(capsys, ['upsilon', str(tmp_path / 'bad.edges')])
        assert status == EXIT_USAGE
        assert report['error']['type'] == 'GraphError'

    def test_missing_file(self, capsys, tmp_path):
        status, report = self.run(capsys, ['upsilon', str(tmp_path / 'none.edges')])
        assert status == EXIT_USAGE

    def test_exact_too_large(self, capsys, tmp_path):
        assert main(['--nolog', 'gen-random', '30', '40', '--graph',
                     str(tmp_path / 'g.edges')]) == EXIT_OK
        status, report = self.run(capsys, ['upsilon', str(tmp_path / 'g.edges')])
        assert status == EXIT_INFEASIBLE
        assert report['error']['type'] == 'SearchError'

    def test_invalid_option(self, capsys):
        status, report = self.run(capsys, ['--trials', '0', 'upsilon', 'g.edges'])
        assert status == EXIT_USAGE
        assert report['error']['type'] == 'ValueError'
        assert report['config'] is None

    def test_bad_sweep_point(self, capsys):
        status, report = self.run(capsys, ['report', '64-16'])
        assert status == EXIT_USAGE
        assert report['error']['type'] == 'UsageError'
        assert 'N:DELTA' in report['error']['message']
        assert report['config'] is None

    def test_unparsable_arguments(self, capsys, tmp_path):
        status, report = self.run(capsys, ['gen-enemy', 'abc', '256', '--bundle',
                                           str(tmp_path)])
        assert status == EXIT_USAGE
        assert report['error']['type'] == 'UsageError'
        assert 'abc' in report['error']['message']
        status, report = self.run(capsys, ['upsilon'])
        assert status == EXIT_USAGE
        status, report = self.run(capsys, ['certify', str(tmp_path), '--mode', 'exact'])
        assert status == EXIT_USAGE

    def test_malformed_json_graph(self, capsys, tmp_path):
        for text in ['{"n": 3, "edges": [1, 2]}', '{"n": 3, "edges": [[0, {}]]}',
                     '{"n": 3, "edges": 5}', '{"n": "x", "edges": []}', '[0, 1]']:
            (tmp_path / 'g.json').write_text(text)
            status, report = self.run(capsys, ['upsilon', str(tmp_path / 'g.json')])
            assert status == EXIT_USAGE
            assert report['error']['type'] == 'GraphError'

    def test_malformed_subset(self, capsys, tmp_path, bundle_dir):
        for text in ['[0, {}]', '[0, "a"]', '[[0, 1]]']:
            (tmp_path / 'subset.json').write_text(text)
            status, report = self.run(capsys, ['trace', str(bundle_dir), '--subset',
                                               str(tmp_path / 'subset.json')])
            assert status == EXIT_USAGE
            assert report['error']['type'] == 'GraphError'
