from .base import dispatch
from .run import RunCLI
from .replicate import ReplicateCLI
from .oracle import OracleCLI
from .plot import PlotCLI
from .make_scenario import MakeScenarioCLI


def main(argv=None):
    # ========= Mapping of subcommands to cli modules.
    clis = [
        RunCLI(subcommand="run"),
        ReplicateCLI(subcommand="replicate"),
        OracleCLI(subcommand="oracle"),
        PlotCLI(subcommand="plot"),
        MakeScenarioCLI(subcommand="make-scenario")
    ]

    dispatch({
        cli.subcommand: cli for cli in clis
    }, argv=argv)
