import logging

from argparse import ArgumentParser
from matmi import __version__

logger = logging.getLogger(__name__)


class ArgumentParserError(Exception):
    pass


class MyParser(ArgumentParser):

    def error(self, message):
        raise ArgumentParserError(message)


def _add_common(parser):
    """Logging and configuration options shared by all commands"""
    infos = parser.add_argument_group("Information")
    infos.add_argument("--debug", dest="debug", action="store_true",
                       help="Enable debug messages")
    infos.add_argument("-lf", "--logfile", dest="logfile", type=str,
                       metavar="",
                       help="""The name of resulting log file (with
                       preferred extension). If no file extension is
                       provided, a '.log' extension is appended. The
                       default log file name is matmi.log""",
                       default=None)
    infos.add_argument("-c", "--config", dest="config", type=str,
                       metavar="",
                       help="""Flat 'key = value' configuration file. Values
                       given on the command line take precedence.""",
                       default=None)


def _add_solver_options(parser):
    sconfig = parser.add_argument_group("Solver settings")
    sconfig.add_argument("-a", "--algorithm", dest="algorithm", type=str,
                         metavar="", choices=["landweber", "quasi-newton"],
                         help="""Reconstruction algorithm: landweber or
                         quasi-newton. Default is quasi-newton""",
                         default=None)
    sconfig.add_argument("--max-iter", dest="max_iter", type=int, metavar="",
                         help="Maximum number of iterations. Default is 50",
                         default=None)
    sconfig.add_argument("--mu", dest="mu", type=float, metavar="",
                         help="""Landweber step size. Estimated with a power
                         iteration if not given""",
                         default=None)
    sconfig.add_argument("--c-eps", dest="c_eps", type=float, metavar="",
                         help="""Scale of the artificial diffusion
                         c_eps * h * max|v| of the transport step.
                         Default is 0.5""",
                         default=None)
    sconfig.add_argument("--epsilon", dest="epsilon", type=float,
                         metavar="",
                         help="""Fixed artificial diffusion, overrides
                         --c-eps""",
                         default=None)
    sconfig.add_argument("--solver-tol", dest="solver_rel_tol", type=float,
                         metavar="",
                         help="""Relative tolerance of the Neumann solves
                         inside the iterations. Default is 1e-8""",
                         default=None)


def create_parser():
    """Create command line arguments for matmi

    Returns
    -------
    parser : :obj:`ArgumentParser()`
        Argument parser with one sub-parser per command
    """
    parser = MyParser(prog="matmi",
                      description="""Reconstruction of the cross-property
                      factor from MAT-MI internal data""")
    parser.add_argument("-v", "--version", action="version",
                        version=f"matmi {__version__}")

    commands = parser.add_subparsers(dest="command", metavar="command",
                                     parser_class=MyParser)
    commands.required = True

    # synth
    synth = commands.add_parser("synth", help="Synthesise internal data")
    _add_common(synth)
    required = synth.add_argument_group("Required arguments")
    required.add_argument("-o", "--out", dest="out", type=str, metavar="",
                          help="Output directory", required=True)
    dconfig = synth.add_argument_group("Data settings")
    dconfig.add_argument("-p", "--phantom", dest="phantom", type=str,
                         metavar="",
                         help="""Phantom name: inclusion, inclusion-isotropic or
                         smooth-bump. Default is inclusion""",
                         default=None)
    dconfig.add_argument("-n", "--cells", dest="n", type=int, metavar="",
                         help="Cells per direction. Default is 64",
                         default=None)
    dconfig.add_argument("-d", "--delta", dest="delta", type=float,
                         metavar="",
                         help="Relative noise level. Default is 0",
                         default=None)
    dconfig.add_argument("-s", "--seed", dest="seed", type=int, metavar="",
                         help="Noise seed. Default is 0", default=None)
    dconfig.add_argument("--oracle-mesh", dest="oracle_n", type=int,
                         metavar="",
                         help="""Synthesise on a mesh with this many cells
                         per direction and interpolate, avoiding the
                         inverse crime""",
                         default=None)
    dconfig.add_argument("--diagonal", dest="diagonal", type=str,
                         metavar="", choices=["right", "left"],
                         help="Diagonal of the mesh cells. Default is right",
                         default=None)
    dconfig.add_argument("--csv", dest="csv", action="store_true",
                         help="Also write CSV twins of the fields")

    # reconstruct
    recon = commands.add_parser("reconstruct",
                                help="Reconstruct sigma from internal data")
    _add_common(recon)
    required = recon.add_argument_group("Required arguments")
    required.add_argument("--data", dest="data", type=str, metavar="",
                          help="Directory written by 'matmi synth'",
                          required=True)
    required.add_argument("-o", "--out", dest="out", type=str, metavar="",
                          help="Output directory", required=True)
    _add_solver_options(recon)
    recon.add_argument("--clean", dest="clean", action="store_true",
                       help="Use the noise-free data even if noisy data "
                       "exists")
    recon.add_argument("--csv", dest="csv", action="store_true",
                       help="Also write a CSV twin of the result")

    # verify
    verify = commands.add_parser("verify",
                                 help="Run the property verification suite")
    _add_common(verify)
    verify.add_argument("-l", "--level", dest="level", type=str, metavar="",
                        choices=["quick", "full"],
                        help="Suite level: quick or full. Default is quick",
                        default="quick")
    verify.add_argument("-o", "--out", dest="out", type=str, metavar="",
                        help="JSON report file. Default is verify.json",
                        default="verify.json")
    verify.add_argument("-nc", "--num-cores", dest="n_cores", type=int,
                        metavar="",
                        help="Number of worker processes", default=None)

    # report
    report = commands.add_parser("report",
                                 help="Turn logs into plot-ready tables")
    _add_common(report)
    report.add_argument("--log", dest="log", type=str, metavar="",
                        help="Iteration log or sweep table CSV",
                        required=True)
    report.add_argument("-o", "--out", dest="out", type=str, metavar="",
                        help="Output CSV", required=True)

    # sweep
    sweep = commands.add_parser("sweep", help="Noise level sweep")
    _add_common(sweep)
    required = sweep.add_argument_group("Required arguments")
    required.add_argument("-o", "--out", dest="out", type=str, metavar="",
                          help="Output directory", required=True)
    sweep.add_argument("-p", "--phantom", dest="phantom", type=str,
                       metavar="", help="Phantom name. Default is inclusion",
                       default=None)
    sweep.add_argument("-n", "--cells", dest="n", type=int, metavar="",
                       help="Cells per direction. Default is 64",
                       default=None)
    sweep.add_argument("--deltas", dest="deltas", type=str, metavar="",
                       help="""Comma separated noise levels. Default is
                       0,0.06,0.12,0.24""",
                       default=None)
    sweep.add_argument("-s", "--seed", dest="seed", type=int, metavar="",
                       help="Noise seed used for every level. Default is 0",
                       default=None)
    sweep.add_argument("-nc", "--num-cores", dest="n_cores", type=int,
                       metavar="",
                       help="""Number of worker processes. Defaults to one
                       per physical core, limited by the available RAM""",
                       default=None)
    _add_solver_options(sweep)

    return parser
