"""This module provides support for run options and the run configuration echoed in reports."""

from dataclasses import dataclass, fields
from typing import Any, Dict, List, Optional, Tuple
import copy
import os

from .constants import (DEFAULT_EXACT_CAP, DEFAULT_HEIGHT_CAP, DEFAULT_MAX_ATTEMPTS,
                        DEFAULT_SLACK, DEFAULT_SPECTRAL_MAX_ITER, DEFAULT_SPECTRAL_TOL,
                        ENV_SEED)


@dataclass
class Option:
    """
    An option whose value ranges over a set of choices, or over a numeric range.

    Attributes:
        name: The displayed name of the option.
        description: A textual description of the option.
        choices: A list of possible values for the option, or None for a numeric range.
        value: The current value of the option.
        kind: Type of the values when `choices` is None.
        low: Smallest allowed value when `choices` is None.
        high: Largest allowed value when `choices` is None (no limit if None).
    """
    name: str
    description: str
    choices: Optional[List]
    value: Any
    kind: type = int
    low: Optional[float] = None
    high: Optional[float] = None

    def set(self, value: Any):
        """Set option to `value`. If `value` is a string, convert it to
        the matching choice, or to `kind` for range options."""
        if self.choices is not None:
            self._set_choice(value)
            return
        if isinstance(value, str):
            try:
                value = self.kind(value)
            except ValueError as e:
                raise ValueError(f"{value} is not a valid {self.kind.__name__} "
                                 f"for option {self.name}") from e
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{value} is not a valid value for option {self.name}")
        if self.kind is int and value != int(value):
            raise ValueError(f"{value} is not an integer value for option {self.name}")
        self.check(value)
        self.value = self.kind(value)

    def _set_choice(self, value: Any):
        bool_choices = any(isinstance(c, bool) for c in self.choices)
        if value in self.choices and isinstance(value, bool) == bool_choices:
            self.value = value
        elif isinstance(value, str) and value in [str(o) for o in self.choices]:
            self.value = self.choices[[str(o) for o in self.choices].index(value)]
        else:
            raise ValueError(
                f"{value} is not a valid choice for option {self.name}")

    def check(self, value: Any):
        """Fail unless `value` lies within [low, high]."""
        if self.low is not None and value < self.low:
            raise ValueError(f"{value} is below the minimum {self.low} of option {self.name}")
        if self.high is not None and value > self.high:
            raise ValueError(f"{value} is above the maximum {self.high} of option {self.name}")

    def get(self) -> str:
        """Get currently selected option value as a string."""
        return str(self.value)


class Options:
    """A dictionary of run options, whose keys are option tags."""

    DEFAULTS = {
        'seed': Option(
            name='Seed', description='Seed of all random streams (default from $UPSILON_SEED).',
            choices=None, value=0, kind=int, low=0, high=2 ** 64 - 1
        ),
        'trials': Option(
            name='Trials', description='Random selections drawn in randomized mode.',
            choices=None, value=400, kind=int, low=1
        ),
        'slack': Option(
            name='Slack', description='Multiplier allowed over the Ramanujan bound 2 sqrt(d - 1).',
            choices=None, value=DEFAULT_SLACK, kind=float, low=0.0
        ),
        'max attempts': Option(
            name='Max attempts', description='Samples per block before certification fails.',
            choices=None, value=DEFAULT_MAX_ATTEMPTS, kind=int, low=1
        ),
        'exact cap': Option(
            name='Exact cap', description='Largest number of vertices searched exhaustively.',
            choices=None, value=DEFAULT_EXACT_CAP, kind=int, low=0, high=64
        ),
        'height cap': Option(
            name='Height cap', description='Largest curve height searched for k-systems.',
            choices=None, value=DEFAULT_HEIGHT_CAP, kind=int, low=1
        ),
        'spectral tol': Option(
            name='Spectral tolerance', description='Relative tolerance of the eigenvalue solver.',
            choices=None, value=DEFAULT_SPECTRAL_TOL, kind=float, low=1e-15, high=1.0
        ),
        'spectral max iter': Option(
            name='Spectral iterations', description='Iterations before the solver gives up.',
            choices=None, value=DEFAULT_SPECTRAL_MAX_ITER, kind=int, low=1
        ),
        'spectral method': Option(
            name='Spectral method', description='How second eigenvalues are computed.',
            choices=['power', 'lanczos', 'dense'], value='power'
        ),
        'greedy budget': Option(
            name='Greedy budget', description='Largest number of toggles in greedy mode.',
            choices=None, value=1000, kind=int, low=0
        ),
        'grid p': Option(
            name='Grid probability',
            description='Pick the best dyadic p by closed form instead of the largest bucket.',
            choices=[False, True], value=False
        ),
        'mixing samples': Option(
            name='Mixing samples', description='Sampled mixing checks per block when certifying.',
            choices=None, value=1000, kind=int, low=0
        ),
        'report format': Option(
            name='Report format', description='Format of reports.',
            choices=['json', 'csv'], value='json'
        ),
        'workers': Option(
            name='Workers', description='Processes generating enemy graph blocks.',
            choices=None, value=1, kind=int, low=1
        ),
    }

    def __init__(self):
        self._OPTIONS = copy.deepcopy(self.DEFAULTS)
        if os.environ.get(ENV_SEED):
            self.set_option('seed', os.environ[ENV_SEED])

    def __getitem__(self, option_tag: str) -> Any:
        """Get value of option with given tag."""
        return self.get_option(option_tag).value

    def get_option(self, option_tag: str) -> Option:
        """Get option object with given tag."""
        return self._OPTIONS[option_tag]

    def set_option(self, option_tag: str, value: Any):
        """Set option with given tag to given value."""
        self._OPTIONS[option_tag].set(value)

    def items(self):
        """Return iterator over (option_tag, option) pairs."""
        return self._OPTIONS.items()

    def seed(self) -> int:
        return self['seed']

    def trials(self) -> int:
        return self['trials']

    def slack(self) -> float:
        return self['slack']

    def max_attempts(self) -> int:
        return self['max attempts']

    def exact_cap(self) -> int:
        return self['exact cap']

    def height_cap(self) -> int:
        return self['height cap']

    def spectral(self) -> Tuple[float, int, str]:
        """Tolerance, iteration limit and method of the eigenvalue solver."""
        return self['spectral tol'], self['spectral max iter'], self['spectral method']

    def greedy_budget(self) -> int:
        return self['greedy budget']

    def grid_p(self) -> bool:
        return self['grid p']

    def mixing_samples(self) -> int:
        return self['mixing samples']

    def report_format(self) -> str:
        return self['report format']

    def workers(self) -> int:
        return self['workers']

    def __str__(self) -> str:
        options = [f"'{name}': {option.value}" for name,
                   option in self.items()]
        return ", ".join(options)


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a run depends on; a run is reproducible from its configuration.

    Attributes:
        command: The subcommand.
        arguments: Subcommand arguments (sizes, paths, mode) as sorted (name, value) pairs.
        seed: Seed of all random streams.
        trials: Random selections in randomized mode.
        slack: Certification slack.
        max_attempts: Samples per block.
        exact_cap: Largest n searched exhaustively.
        height_cap: Largest curve height searched.
        spectral_tol: Eigenvalue solver tolerance.
        spectral_max_iter: Eigenvalue solver iteration limit.
        spectral_method: Eigenvalue solver.
        greedy_budget: Toggle budget in greedy mode.
        grid_p: Whether randomized mode picks p by closed form.
        mixing_samples: Sampled mixing checks per block.
        report_format: json or csv.
        workers: Processes generating blocks.
    """

    command: str
    arguments: Tuple[Tuple[str, Any], ...]
    seed: int
    trials: int
    slack: float
    max_attempts: int
    exact_cap: int
    height_cap: int
    spectral_tol: float
    spectral_max_iter: int
    spectral_method: str
    greedy_budget: int
    grid_p: bool
    mixing_samples: int
    report_format: str
    workers: int

    @classmethod
    def from_options(cls, command: str, options: Options, **arguments) -> 'RunConfig':
        """Configuration of `command` with the current values of `options`."""
        tol, max_iter, method = options.spectral()
        return cls(command=command, arguments=tuple(sorted(arguments.items())),
                   seed=options.seed(), trials=options.trials(), slack=options.slack(),
                   max_attempts=options.max_attempts(), exact_cap=options.exact_cap(),
                   height_cap=options.height_cap(), spectral_tol=tol,
                   spectral_max_iter=max_iter, spectral_method=method,
                   greedy_budget=options.greedy_budget(), grid_p=options.grid_p(),
                   mixing_samples=options.mixing_samples(),
                   report_format=options.report_format(), workers=options.workers())

    def argument(self, name: str, default: Any = None) -> Any:
        """Value of subcommand argument `name`."""
        return dict(self.arguments).get(name, default)

    def as_dict(self) -> Dict:
        """JSON-ready echo of the configuration."""
        result = {f.name: getattr(self, f.name) for f in fields(self) if f.name != 'arguments'}
        result['arguments'] = {name: value for name, value in self.arguments}
        return result
