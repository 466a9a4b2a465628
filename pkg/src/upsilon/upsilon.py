"""This module provides the command line entry point tying generation, search,
certification, proof tracing and reporting into reproducible runs."""

from pathlib import Path
from typing import List, Optional, Tuple
import sys
import json
import logging
import logging.handlers
import argparse
import platformdirs

from .constants import (APP_NAME, EXIT_CERTIFICATION, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE)
from .blocks import BlockGenerationError
from .enemy import (CertificationError, InfeasibleParams, assemble_enemy_graph, derive_params,
                    load_bundle, proof_trace, recertify, sample_mixing, save_bundle)
from .graph import (Graph, GraphError, VertexSubset, degree_stats, random_graph, read_graph,
                    write_graph)
from .options import Options, RunConfig
from .report import Report, error_object, ratio_row, to_json_text, write_report
from .search import (Mode, SearchError, greedy_improve, randomized_lower_bound,
                     sample_selection, search)
from .spectral import SpectralError
from .torus import CurveError, max_k_system, to_intersection_graph, write_curves
from .utils import Timer

MODES = {'exact': Mode.EXACT, 'random': Mode.RANDOMIZED, 'greedy': Mode.GREEDY}

# Checked in order; the first matching class decides the exit status.
EXIT_STATUS = [
    (CertificationError, EXIT_CERTIFICATION),
    (SpectralError, EXIT_CERTIFICATION),
    (InfeasibleParams, EXIT_INFEASIBLE),
    (SearchError, EXIT_INFEASIBLE),
    (BlockGenerationError, EXIT_INFEASIBLE),
    (CurveError, EXIT_INFEASIBLE),
    (GraphError, EXIT_USAGE),
    (ValueError, EXIT_USAGE),
    (OSError, EXIT_USAGE),
]


def handle_exception(exc_type, exc_value, exc_traceback):
    """Log uncaught exceptions."""
    # Ignore keyboard interrupts, so that users can terminate with Ctrl-C as usual.
    if issubclass(exc_type, KeyboardInterrupt):
        sys.__excepthook__(exc_type, exc_value, exc_traceback)
        return
    logging.getLogger('').error("Uncaught exception",
                                exc_info=(exc_type, exc_value, exc_traceback))


def log_setup(nolog=False, logdir=None, verbose=False):
    """Set up logger for the whole application."""
    sys.excepthook = handle_exception
    # Remove handlers of previous runs in the same process.
    logging.getLogger('').handlers.clear()
    if nolog:
        logging.disable()
        return
    logging.disable(logging.NOTSET)
    logging.getLogger('').setLevel(logging.DEBUG)
    if logdir is None:
        log_dir = Path(platformdirs.user_log_dir(APP_NAME))
    else:
        log_dir = Path(logdir)
    log_dir.mkdir(parents=True, exist_ok=True)
    log_file = Path(log_dir, f'{APP_NAME}.log')
    # Log handler that writes messages to rotating log files.
    handler = logging.handlers.RotatingFileHandler(log_file, backupCount=5)
    handler.setLevel(logging.DEBUG)
    # Create message formatter.
    formatter = logging.Formatter(
        '%(asctime)s %(name)-12s %(funcName)-25s %(lineno)d %(levelname)-8s MESSAGE: %(message)s')
    handler.setFormatter(formatter)
    logging.getLogger('').addHandler(handler)
    logging.handlers.RotatingFileHandler.doRollover(handler)
    if verbose:
        console = logging.StreamHandler(sys.stderr)
        console.setLevel(logging.INFO)
        console.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))
        logging.getLogger('').addHandler(console)


def _graph_summary(g: Graph) -> dict:
    return {'n': g.n, 'm': g.m, 'max_degree': int(g.degrees.max()) if g.n > 0 else 0}


def _read_input_graph(path: str) -> Graph:
    """A graph file, or the graph of a bundle directory."""
    if Path(path).is_dir():
        return load_bundle(Path(path)).graph
    return read_graph(Path(path))


def _read_subset(path: str, n: int) -> VertexSubset:
    """A JSON list of vertices, or a report whose results carry a witness."""
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise GraphError(f'{path}: invalid JSON: {e}') from e
    if isinstance(data, dict):
        try:
            data = data['results']['witness']
        except (KeyError, TypeError) as e:
            raise GraphError(f'{path}: report without a witness') from e
    if not isinstance(data, list):
        raise GraphError(f'{path}: expected a list of vertices')
    return VertexSubset(n, data)


def gen_enemy(config: RunConfig, timer: Timer) -> Tuple[Report, int]:
    params = derive_params(config.argument('n'), config.argument('delta'))
    bundle = assemble_enemy_graph(params, slack=config.slack, max_attempts=config.max_attempts,
                                  seed=config.seed, tol=config.spectral_tol,
                                  max_iter=config.spectral_max_iter, workers=config.workers,
                                  method=config.spectral_method)
    timer.lap('assemble')
    save_bundle(bundle, Path(config.argument('bundle')))
    timer.lap('write')
    certificates = [bundle.certificates[key].to_dict() for key in sorted(bundle.certificates)]
    results = {
        'params': params.to_dict(),
        'graph': _graph_summary(bundle.graph),
        'degree_ratio': int(bundle.graph.degrees.max()) / params.delta_target,
        'bucket_sizes': degree_stats(bundle.graph).profile.sizes(),
        'part_sizes': [len(part) for part in bundle.parts],
        'certified': bundle.is_certified(),
        'certificates': certificates,
    }
    return Report(config=config, results=results, rows=certificates), EXIT_OK


def gen_random(config: RunConfig, timer: Timer) -> Tuple[Report, int]:
    g = random_graph(config.argument('n'), config.argument('m'), seed=config.seed,
                     strip_isolated=config.argument('strip_isolated', False))
    timer.lap('generate')
    write_graph(g, Path(config.argument('graph')))
    timer.lap('write')
    results = {'graph': _graph_summary(g),
               'isolated': len(degree_stats(g).profile.isolated)}
    return Report(config=config, results=results), EXIT_OK


def gen_torus(config: RunConfig, timer: Timer) -> Tuple[Report, int]:
    size, system = max_k_system(config.argument('height'), config.argument('k'),
                                cap=config.height_cap)
    timer.lap('search')
    g = to_intersection_graph(system)
    write_graph(g, Path(config.argument('graph')))
    if config.argument('curves'):
        write_curves(system, Path(config.argument('curves')))
    timer.lap('write')
    results = {'size': size, 'curves': [c.to_pair() for c in system.curves],
               'graph': _graph_summary(g)}
    return Report(config=config, results=results), EXIT_OK


def compute_upsilon(config: RunConfig, timer: Timer) -> Tuple[Report, int]:
    g = _read_input_graph(config.argument('input'))
    timer.lap('read')
    result = search(g, MODES[config.argument('mode')], seed=config.seed, trials=config.trials,
                    budget=config.greedy_budget, cap=config.exact_cap, grid=config.grid_p)
    timer.lap('search')
    results = {'graph': _graph_summary(g), **result.to_dict()}
    if result.samples is not None:
        results['sample_mean'] = result.sample_mean()
        results['standard_error'] = result.standard_error()
    return Report(config=config, results=results), EXIT_OK


def certify_bundle(config: RunConfig, timer: Timer) -> Tuple[Report, int]:
    bundle = load_bundle(Path(config.argument('bundle')))
    timer.lap('read')
    recertification = recertify(bundle, tol=config.spectral_tol,
                                max_iter=config.spectral_max_iter, seed=config.seed,
                                method=config.spectral_method)
    timer.lap('spectral')
    mixing = sample_mixing(bundle, config.mixing_samples, seed=config.seed)
    timer.lap('mixing')
    ok = recertification.ok() and all(summary.failures == 0 for summary in mixing)
    rows = []
    for summary in mixing:
        certificate = recertification.certificates[summary.block]
        rows.append({**summary.to_dict(), 'lambda2': certificate.lambda2,
                     'stored_lambda2': bundle.certificates[summary.block].lambda2,
                     'threshold': certificate.threshold, 'certified': certificate.certified})
    results = {'certified': ok, 'mismatches': [list(b) for b in recertification.mismatches],
               'blocks': rows}
    return Report(config=config, results=results, rows=rows), \
        EXIT_OK if ok else EXIT_CERTIFICATION


def trace(config: RunConfig, timer: Timer) -> Tuple[Report, int]:
    bundle = load_bundle(Path(config.argument('bundle')))
    g = bundle.graph
    timer.lap('read')
    if config.argument('subset'):
        selections = [('subset', _read_subset(config.argument('subset'), g.n))]
    elif config.argument('mode') == 'random':
        p = randomized_lower_bound(g, trials=config.trials, seed=config.seed,
                                   grid=config.grid_p).p
        selections = [(f'trial {i}', sample_selection(g, p, config.seed, i))
                      for i in range(config.trials)]
    else:
        start = randomized_lower_bound(g, trials=config.trials, seed=config.seed,
                                       grid=config.grid_p).witness
        selections = [('greedy', greedy_improve(g, start, config.greedy_budget).witness)]
    timer.lap('search')
    rows, violations = [], []
    for label, sel in selections:
        result = proof_trace(bundle, sel)
        rows.append({'selection': label, 'size': len(sel), 'unique': result.unique_total,
                     'j0': result.j0, 'i_star': result.i_star, 'head': result.head,
                     'middle': result.middle, 'tail': result.tail,
                     'total_bound': result.total_bound, 'holds': result.holds()})
        violations += [{'selection': label, 'name': v.name, 'bucket': v.bucket, 'lhs': v.lhs,
                        'rhs': v.rhs} for v in result.violations]
        if len(selections) == 1:
            single = result.to_dict()
    timer.lap('trace')
    results = {'traced': len(rows), 'holding': sum(row['holds'] for row in rows),
               'violations': violations}
    if len(selections) == 1:
        results['trace'] = single
    return Report(config=config, results=results, rows=rows), EXIT_OK


def _sweep_point(text: str) -> Tuple[int, int]:
    try:
        n, delta = text.split(':')
        return int(n), int(delta)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f'Expected N:DELTA, got {text!r}') from e


def sweep(config: RunConfig, timer: Timer) -> Tuple[Report, int]:
    logger = logging.getLogger(__name__)
    rows = []
    for n_target, delta_target in config.argument('sweep'):
        params = derive_params(n_target, delta_target)
        bundle = assemble_enemy_graph(params, slack=config.slack,
                                      max_attempts=config.max_attempts, seed=config.seed,
                                      tol=config.spectral_tol,
                                      max_iter=config.spectral_max_iter,
                                      workers=config.workers, method=config.spectral_method)
        g = bundle.graph
        randomized = randomized_lower_bound(g, trials=config.trials, seed=config.seed,
                                            grid=config.grid_p)
        greedy = greedy_improve(g, randomized.witness, config.greedy_budget)
        best = max(randomized.value, greedy.value)
        holds = proof_trace(bundle, randomized.witness).holds() and \
            proof_trace(bundle, greedy.witness).holds()
        row = {'n_target': n_target, 'delta_target': delta_target, 'k': params.k,
               't': params.t,
               **ratio_row(g.n, int(g.degrees.max()), best),
               'randomized': randomized.value, 'greedy': greedy.value,
               'expectation': randomized.expectation_at_p,
               'bucket_sizes': degree_stats(g).profile.sizes(), 'traces_hold': holds}
        rows.append(row)
        logger.info('Sweep point n=%s, Delta=%s: best %s, ratio %s', n_target, delta_target,
                    best, row['ratio'])
        timer.lap(f'{n_target}:{delta_target}')
    return Report(config=config, results={'points': len(rows)}, rows=rows), EXIT_OK


COMMANDS = {
    'gen-enemy': gen_enemy,
    'gen-random': gen_random,
    'gen-torus': gen_torus,
    'upsilon': compute_upsilon,
    'certify': certify_bundle,
    'trace': trace,
    'report': sweep,
}


def run(config: RunConfig, output: Optional[str] = None) -> int:
    """
    Run `config` and write its report to `output` (standard output if None).

    Return the exit status. Failures are reported as JSON error objects
    with a nonzero status.
    """
    logger = logging.getLogger(__name__)
    logger.info('Running %s', config.as_dict())
    timer = Timer()
    timer.start()
    try:
        report, status = COMMANDS[config.command](config, timer)
    except (ValueError, OSError) as e:
        status = next(code for cls, code in EXIT_STATUS if isinstance(e, cls))
        logger.error('%s failed with %s: %s', config.command, type(e).__name__, e)
        text = to_json_text(error_object(e, config))
        if output is None:
            sys.stdout.write(text)
        else:
            Path(output).parent.mkdir(parents=True, exist_ok=True)
            Path(output).write_text(text, encoding='utf-8')
        return status
    report.timing = {**timer.laps, 'total': timer.total()}
    write_report(report, Path(output) if output else None, stream=sys.stdout)
    return status


class UsageError(ValueError):
    """The command line could not be parsed."""


class ArgumentParser(argparse.ArgumentParser):
    """Parser whose errors raise UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(f'{self.prog}: {message}')


def _parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(
        prog=APP_NAME,
        description="Unique-neighbor invariant of graphs: search, enemy graphs and curve systems."
    )
    parser.add_argument('--nolog', action='store_true',
                        help='Disable logging.')
    parser.add_argument('--logdir', default=None,
                        help='Set directory where log files are stored.')
    parser.add_argument('--verbose', action='store_true',
                        help='Also log progress to standard error.')
    parser.add_argument('--out', default=None,
                        help='Write the report to this file (default: standard output).')
    for tag, option in Options.DEFAULTS.items():
        flag = '--' + tag.replace(' ', '-')
        parser.add_argument(flag, dest=tag.replace(' ', '_'), default=None,
                            help=f'{option.description} (default: {option.value})')
    commands = parser.add_subparsers(dest='command', required=True)

    command = commands.add_parser('gen-enemy', help='Generate a certified enemy graph bundle.')
    command.add_argument('n', type=int)
    command.add_argument('delta', type=int)
    command.add_argument('--bundle', required=True, help='Output bundle directory.')

    command = commands.add_parser('gen-random', help='Generate a uniform random graph.')
    command.add_argument('n', type=int)
    command.add_argument('m', type=int)
    command.add_argument('--graph', required=True, help='Output graph file.')
    command.add_argument('--strip-isolated', action='store_true',
                         help='Drop isolated vertices.')

    command = commands.add_parser('gen-torus', help='Intersection graph of a maximum k-system.')
    command.add_argument('height', type=int)
    command.add_argument('k', type=int)
    command.add_argument('--graph', required=True, help='Output graph file.')
    command.add_argument('--curves', default=None, help='Output curve system file.')

    command = commands.add_parser('upsilon', help='Compute or bound Upsilon of a graph.')
    command.add_argument('input', help='Graph file or bundle directory.')
    command.add_argument('--mode', choices=list(MODES), default='exact')

    command = commands.add_parser('certify', help='Re-verify the certificates of a bundle.')
    command.add_argument('bundle')

    command = commands.add_parser('trace', help='Trace the upper bound argument on subsets.')
    command.add_argument('bundle')
    command.add_argument('--subset', default=None,
                         help='JSON list of vertices, or a report with a witness.')
    command.add_argument('--mode', choices=['random', 'greedy'], default='greedy')

    command = commands.add_parser('report', help='Sweep enemy graphs and tabulate ratios.')
    command.add_argument('sweep', type=_sweep_point, nargs='+', metavar='N:DELTA')
    return parser


GLOBAL_ARGUMENTS = {'nolog', 'logdir', 'verbose', 'out', 'command'}


def main(argv: Optional[List[str]] = None) -> int:
    """Application entry point, with CLI options."""
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stdout.write(to_json_text(error_object(e, None)))
        return EXIT_USAGE
    log_setup(nolog=args.nolog, logdir=args.logdir, verbose=args.verbose)
    options = Options()
    option_dests = {tag.replace(' ', '_'): tag for tag, _ in options.items()}
    arguments = {}
    config = None
    try:
        for dest, value in vars(args).items():
            if dest in option_dests:
                if value is not None:
                    options.set_option(option_dests[dest], value)
            elif dest not in GLOBAL_ARGUMENTS:
                arguments[dest] = value
        config = RunConfig.from_options(args.command, options, **arguments)
    except ValueError as e:
        sys.stdout.write(to_json_text(error_object(e, config)))
        return EXIT_USAGE
    return run(config, output=args.out)


if __name__ == "__main__":
    sys.exit(main())
