# src/pipeline/cli.py

"""
Command-line interface.

    generate   --config <path> --out <path> [--seed <u64>]
    fit        --edges <path> --out <path> [--solver exact|diag]
    experiment --config <path> --out <csv> [--workers <k>]
    diagnose   --edges <path> --fit <path> --out <path>

Exit status: 0 success, 2 input/format error, 3 solver error. Errors are
written to stderr as one JSON object.
"""

import argparse
import json
import logging
import sys

from src.pipeline.experiment import run_diagnose, run_experiment, run_fit, run_generate
from src.utils.config_loader import get_fit_options, load_config, load_experiment_config
from src.utils.errors import INPUT_EXIT_STATUS, ProbitNetworkError
from src.utils.utils import setup_logging, to_jsonable

logger = logging.getLogger(__name__)


def _seed(text):
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog='probit-network',
        description='Simulate and estimate probit network models',
    )
    parser.add_argument('--defaults', default=None, help='YAML defaults (default: config/config.yaml)')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('generate', help='draw one graph from a config')
    gen.add_argument('--config', required=True)
    gen.add_argument('--out', required=True)
    gen.add_argument('--seed', type=_seed, default=None)

    fit = sub.add_parser('fit', help='fit node parameters to an edge list')
    fit.add_argument('--edges', required=True)
    fit.add_argument('--out', required=True)
    fit.add_argument('--solver', choices=['exact', 'diag'], default=None)

    exp = sub.add_parser('experiment', help='run a Monte Carlo consistency study')
    exp.add_argument('--config', required=True)
    exp.add_argument('--out', required=True)
    exp.add_argument('--workers', type=int, default=None)

    diag = sub.add_parser('diagnose', help='theory diagnostics for a fitted graph')
    diag.add_argument('--edges', required=True)
    diag.add_argument('--fit', required=True)
    diag.add_argument('--out', required=True)
    return parser


def _dispatch(args, defaults):
    if args.command == 'generate':
        config = load_experiment_config(args.config, defaults)
        run_generate(config, args.out, seed=args.seed)
    elif args.command == 'fit':
        run_fit(args.edges, args.out, get_fit_options(defaults, solver=args.solver))
    elif args.command == 'experiment':
        config = load_experiment_config(args.config, defaults)
        run_experiment(config, args.out, workers=args.workers)
    elif args.command == 'diagnose':
        run_diagnose(args.edges, args.fit, args.out)


def _report_error(payload):
    sys.stderr.write(json.dumps(to_jsonable(payload), sort_keys=True) + '\n')


def main(argv=None):
    """
    Run one subcommand.

    Returns:
    --------
    int process exit status
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        defaults = load_config(args.defaults)
        log_section = defaults.get('logging', {})
        setup_logging('DEBUG' if args.verbose else log_section.get('level', 'INFO'),
                      log_section.get('format', '%(asctime)s %(levelname)s %(name)s: %(message)s'))
        _dispatch(args, defaults)
    except ProbitNetworkError as e:
        logger.error("%s failed: %s", args.command, e.message)
        _report_error(e.to_dict())
        return e.exit_status
    except OSError as e:
        logger.error("%s failed: %s", args.command, e)
        _report_error({'error': 'io', 'message': str(e)})
        return INPUT_EXIT_STATUS
    return 0


if __name__ == '__main__':
    sys.exit(main())
