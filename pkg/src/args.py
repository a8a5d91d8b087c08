import sys
import argparse
from typing import List, Optional

from .exceptions import UsageError

COMMANDS = ('check', 'run', 'ledger', 'compare', 'chain')
FORMATS = ('text', 'json', 'csv')


class RunnerArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors as exceptions instead of exiting with status 2."""
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def add_common_arguments(parser: argparse.ArgumentParser, needs_scenario: bool = True) -> None:
    if needs_scenario:
        parser.add_argument('scenario_file',
                            nargs='?',
                            default=None,
                            help='The scenario document (same as --scenario).')
        parser.add_argument('--scenario',
                            type=str,
                            default=None,
                            help='The scenario document (.json) to load.')
    parser.add_argument('--trials',
                        type=int,
                        default=100000,
                        help='The number of Monte Carlo trials.')
    parser.add_argument('--seed',
                        type=int,
                        default=42,
                        help='The 64-bit seed of the trial generator.')
    parser.add_argument('--format',
                        type=str,
                        choices=FORMATS,
                        default='text',
                        help='The report format: a) text (human-oriented), b) json, c) csv.')
    parser.add_argument('--out',
                        type=str,
                        default=None,
                        help='The file to write the report to (default: stdout).')
    parser.add_argument('--verbose',
                        action='store_true',
                        help='Log progress at DEBUG level.')


def get_runner_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = RunnerArgumentParser('Simulate transactions between an emitter and contingent absorbers.')
    subparsers = parser.add_subparsers(dest='command', metavar='{' + ','.join(COMMANDS) + '}')
    subparsers.required = True

    add_common_arguments(subparsers.add_parser('check', help='Classify a setup as well-posed or pathological.'))
    add_common_arguments(subparsers.add_parser('run', help='Run seeded Monte Carlo trials.'))
    add_common_arguments(subparsers.add_parser('ledger', help='Report the advanced-wave ledger of every history.'))
    chain = subparsers.add_parser('chain', help='Expand the detector chain of a scenario.')
    add_common_arguments(chain)
    chain.add_argument('--network',
                       type=str,
                       default=None,
                       help='The file to save the branch tree to, in node-link JSON format.')

    compare = subparsers.add_parser('compare', help='Compare big-space and many-spaces probabilities.')
    add_common_arguments(compare, needs_scenario=False)
    compare.add_argument('--ensemble',
                         type=str,
                         required=True,
                         help='The ensemble manifest (.json) listing cells and priors.')

    args = parser.parse_args(argv)
    return args
