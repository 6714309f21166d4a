"""
Command-line front end of the secrecy outage laboratory.

    run <experiment.json>          evaluate an experiment file
    preset <name>                  evaluate one of the figure presets
    oracle <term> <scenario.json>  one term by direct quadrature
    specfun eval <g.json>          one Meijer G-function
"""

import argparse
import json
import logging
import sys

import mpmath

import config
from analysis.exact_sop import TERM_NAMES
from analysis.oracle_quadrature import G_FUNCTIONS, QuadratureOracle, asymptotic_laws, exact_laws
from channel.scenario import load_scenario
from experiments.presets import get_preset, preset_names
from experiments.runner import load_experiment, run, summarize
from specfun.meijer import MeijerGSpec, meijer_g
from utils.errors import SecrecyLabError, ValidationError

logger = logging.getLogger(__name__)

ORACLE_TARGETS = TERM_NAMES + ("varrho", "sop") + G_FUNCTIONS


def _add_run_flags(parser):
    parser.add_argument("--seed", type=int, help="Monte-Carlo master seed")
    parser.add_argument("--samples", type=int, help="Monte-Carlo sample count")
    parser.add_argument("--workers", type=int, help="worker threads for grid points and MC batches")
    parser.add_argument("--out", help="CSV output path")
    parser.add_argument("--timing", action="store_true", help="fill the wall_time_ms column")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rf-fso-secrecy-lab",
        description="Secrecy outage probability of a dual-hop RF-FSO SWIPT relay link",
    )
    parser.add_argument("--log-level", default=config.LOG_DEFAULT_LEVEL,
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="evaluate an experiment file")
    run_parser.add_argument("experiment", help="experiment JSON")
    _add_run_flags(run_parser)

    preset_parser = commands.add_parser("preset", help="evaluate a figure preset")
    preset_parser.add_argument("name", choices=preset_names())
    _add_run_flags(preset_parser)

    oracle_parser = commands.add_parser("oracle", help="evaluate one term by direct quadrature")
    oracle_parser.add_argument("term", choices=ORACLE_TARGETS)
    oracle_parser.add_argument("scenario", help="scenario JSON")
    oracle_parser.add_argument("--args", type=float, nargs=2, metavar=("P1", "P2"),
                               help="parameters of G0..G3, psi1 and psi2")
    oracle_parser.add_argument("--form", default="auto",
                               help="H13/H23: auto, nested or reordered; varrho: min_law or expansion")
    oracle_parser.add_argument("--asymptotic", action="store_true",
                               help="use the high-SNR power laws for the S-R and R-D hops")

    specfun_parser = commands.add_parser("specfun", help="special-function utilities")
    specfun_commands = specfun_parser.add_subparsers(dest="specfun_command", required=True)
    eval_parser = specfun_commands.add_parser("eval", help="evaluate a Meijer G-function")
    eval_parser.add_argument("spec", help="JSON with m, n, a_params, b_params, argument")
    eval_parser.add_argument("--method", default="auto", choices=("auto", "contour", "residue", "identity"))
    eval_parser.add_argument("--reference", action="store_true", help="also print the mpmath value")
    return parser


def _run_spec(spec, args):
    spec = spec.with_mc(master_seed=args.seed, n_samples=args.samples, n_workers=args.workers)
    path, rows = run(spec, out=args.out, timing=args.timing)
    for line in summarize(spec, rows):
        print(line)
    print(f"wrote {path}")
    return config.EXIT_OK


def command_run(args):
    return _run_spec(load_experiment(args.experiment), args)


def command_preset(args):
    return _run_spec(get_preset(args.name), args)


def command_oracle(args):
    scenario = load_scenario(args.scenario)
    laws = asymptotic_laws(scenario) if args.asymptotic else exact_laws(scenario)
    oracle = QuadratureOracle(scenario, laws=laws)
    if args.term == "sop":
        breakdown = oracle.evaluate()
        print(f"sop {breakdown.sop:.12e} ± {breakdown.error_estimate:.2e}")
        for name, value in breakdown.terms().items():
            print(f"  {name:<7} {value:.12e}")
        return config.EXIT_OK
    if args.term in G_FUNCTIONS:
        if args.args is None:
            raise ValidationError(f"{args.term} needs --args P1 P2")
        value, error = oracle.g(args.term, *args.args)
    elif args.term == "varrho":
        value, error = oracle.varrho("min_law" if args.form == "auto" else args.form)
    else:
        value, error = oracle.h_term(args.term, args.form)
    print(f"{args.term} {value:.12e} ± {error:.2e}")
    return config.EXIT_OK


def _load_meijer_spec(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return MeijerGSpec.from_dict(json.load(handle))
    except (OSError, json.JSONDecodeError) as error:
        raise ValidationError(f"cannot read G-function description {path}: {error}") from error


def mpmath_reference(spec):
    """Independent value from mpmath.meijerg at 30 significant digits."""
    with mpmath.workdps(30):
        a_s = [list(spec.a_params[:spec.n]), list(spec.a_params[spec.n:])]
        b_s = [list(spec.b_params[:spec.m]), list(spec.b_params[spec.m:])]
        return float(mpmath.meijerg(a_s, b_s, spec.argument))


def command_specfun(args):
    spec = _load_meijer_spec(args.spec)
    result = meijer_g(spec, method=args.method)
    print(f"G = {result.value:.15e} ± {result.abs_error_estimate:.2e} ({result.method_used})")
    if args.reference:
        reference = mpmath_reference(spec)
        gap = abs(result.value - reference)
        print(f"mpmath {reference:.15e} (difference {gap:.2e})")
    return config.EXIT_OK


COMMANDS = {
    "run": command_run,
    "preset": command_preset,
    "oracle": command_oracle,
    "specfun": command_specfun,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=config.LOG_FORMAT)
    try:
        return COMMANDS[args.command](args)
    except SecrecyLabError as error:
        logger.error("%s", error)
        print(f"error: {error}", file=sys.stderr)
        return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
