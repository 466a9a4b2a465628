import sys
import os
import dataclasses
import pytest
sys.path.append(os.path.dirname(os.path.realpath(__file__)) + '/../src')

from upsilon.constants import DEFAULT_SLACK, ENV_SEED
from upsilon.options import Option, Options, RunConfig


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv(ENV_SEED, raising=False)


class TestOption:

    def test_set(self):
        opt = Option(name='option', description='', choices=[1, 2, 3], value=1)
        opt.set(2)
        assert opt.value == 2
        opt.set('3')
        assert opt.value == 3
        with pytest.raises(ValueError) as ex:
            opt.set(7)
        with pytest.raises(ValueError) as ex:
            opt.set(False)
        with pytest.raises(ValueError) as ex:
            opt.set(True)
        with pytest.raises(ValueError) as ex:
            opt.set('7')

    def test_set_bool(self):
        opt = Option(name='option', description='', choices=[False, True], value=False)
        opt.set('True')
        assert opt.value is True
        opt.set(False)
        assert opt.value is False
        with pytest.raises(ValueError) as ex:
            opt.set(1)

    def test_set_range(self):
        opt = Option(name='option', description='', choices=None, value=5, kind=int, low=1)
        opt.set('8')
        assert opt.value == 8
        opt.set(2.0)
        assert opt.value == 2 and isinstance(opt.value, int)
        with pytest.raises(ValueError) as ex:
            opt.set(2.5)
        with pytest.raises(ValueError) as ex:
            opt.set(0)
        with pytest.raises(ValueError) as ex:
            opt.set(True)
        with pytest.raises(ValueError) as ex:
            opt.set('x')

    def test_set_float(self):
        opt = Option(name='option', description='', choices=None, value=0.1, kind=float,
                     low=0.0, high=1.0)
        opt.set('0.5')
        assert opt.value == 0.5
        opt.set(1)
        assert opt.value == 1.0
        with pytest.raises(ValueError) as ex:
            opt.set(2)
        assert 'maximum' in str(ex.value)


class TestOptions:

    def test_getitem(self):
        opts = Options()
        assert opts['seed'] == 0
        assert opts['slack'] == DEFAULT_SLACK
        assert opts['spectral method'] == 'power'
        with pytest.raises(KeyError) as ex:
            opts['####']

    def test_get_option(self):
        opts = Options()
        assert opts.get_option('trials').value == 400
        with pytest.raises(KeyError) as ex:
            opts.get_option('####')

    def test_set_option(self):
        opts = Options()
        opts.set_option('trials', 8)
        assert opts.trials() == 8
        opts.set_option('trials', '9')
        assert opts.trials() == 9
        opts.set_option('report format', 'csv')
        assert opts.report_format() == 'csv'
        opts.set_option('grid p', 'True')
        assert opts.grid_p() is True
        with pytest.raises(ValueError) as ex:
            opts.set_option('trials', 0)
        with pytest.raises(ValueError) as ex:
            opts.set_option('spectral method', 'qr')
        with pytest.raises(ValueError) as ex:
            opts.set_option('exact cap', 65)

    def test_independent(self):
        first, second = Options(), Options()
        first.set_option('workers', 4)
        assert second.workers() == 1
        assert Options.DEFAULTS['workers'].value == 1

    def test_items(self):
        opts = Options()
        n = 0
        for option_name, option in opts.items():
            n += 1
        assert n == len(opts._OPTIONS)

    def test_env_seed(self, monkeypatch):
        monkeypatch.setenv(ENV_SEED, '42')
        assert Options().seed() == 42
        monkeypatch.setenv(ENV_SEED, 'abc')
        with pytest.raises(ValueError) as ex:
            Options()

    def test_spectral(self):
        opts = Options()
        opts.set_option('spectral tol', '1e-8')
        opts.set_option('spectral method', 'lanczos')
        assert opts.spectral() == (1e-8, opts['spectral max iter'], 'lanczos')

    def test_str(self):
        assert "'seed': 0" in str(Options())


class TestRunConfig:

    def config(self):
        opts = Options()
        opts.set_option('seed', 7)
        return RunConfig.from_options('upsilon', opts, mode='exact', input='g.edges')

    def test_from_options(self):
        config = self.config()
        assert config.command == 'upsilon'
        assert config.seed == 7
        assert config.arguments == (('input', 'g.edges'), ('mode', 'exact'))
        assert config.argument('mode') == 'exact'
        assert config.argument('missing', 3) == 3

    def test_as_dict(self):
        data = self.config().as_dict()
        assert data['arguments'] == {'input': 'g.edges', 'mode': 'exact'}
        assert data['seed'] == 7
        assert data['spectral_method'] == 'power'

    def test_frozen(self):
        with pytest.raises(dataclasses.FrozenInstanceError):
            self.config().seed = 8
        assert self.config() == self.config()
