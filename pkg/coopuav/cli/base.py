import sys
import argparse
from typing import Dict

from coopuav.logger import logger, set_level
from coopuav.pylab.errors import CoopUAVError, EXIT_RUNTIME, EXIT_SUCCESS


class CLIModule:
    def __init__(self, subcommand: str, docstring: str):
        self.subcommand = subcommand
        self.docstring = docstring

    def create_parser(self, parser: argparse.ArgumentParser):
        raise NotImplementedError()

    def main(self, args: argparse.Namespace) -> int:
        raise NotImplementedError()


def parse_seeds(tokens) -> list:
    '''`--seeds` values: a single integer N means seeds 0..N-1, anything
    else is a list (space or comma separated)
    '''
    values = []
    for token in tokens:
        values += [int(v) for v in str(token).split(',') if v.strip()]
    if len(tokens) == 1 and ',' not in str(tokens[0]):
        return list(range(values[0]))
    return values


def dispatch(cli_mapping: Dict[str, CLIModule], argv=None):
    parser = argparse.ArgumentParser(prog='coopuav')
    parser.add_argument('--log-level', type=str, dest='log_level', default='info',
                        choices=['debug', 'info', 'warning', 'error'],
                        help='Verbosity of the logger (debug, info, warning, error)')
    subparsers = parser.add_subparsers(dest='subcommand')

    for subcommand, cli_module in cli_mapping.items():
        cli_module.create_parser(subparsers.add_parser(subcommand,
            description=cli_module.docstring,
            formatter_class=argparse.RawDescriptionHelpFormatter))

    args = parser.parse_args(argv)

    try:
        cli_module = cli_mapping[args.subcommand]
    except KeyError:
        print("Supported commands: {cmds}".format(
            cmds=",".join(list(cli_mapping.keys()))
        ))
        sys.exit(1)

    set_level(args.log_level)
    try:
        code = cli_module.main(args)
    except CoopUAVError as e:
        logger.error('{}: {}'.format(type(e).__name__, e))
        sys.exit(e.exit_code)
    except Exception as e:
        logger.exception('Unexpected error: {}'.format(e))
        sys.exit(EXIT_RUNTIME)
    sys.exit(EXIT_SUCCESS if code is None else code)
