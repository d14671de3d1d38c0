"""Command-line entry point: ``corrdiv <subcommand> [options]``.

Exit codes: 0 on success, 2 on configuration or domain errors, 3 on
numerical failures (non-convergence, quadrature, degenerate spectra).
"""

import argparse
import sys

from . import __version__
from .asymptotics import (
    BOUND_CSV_FIELDS,
    BoundPair,
    EigenvalueProfile,
    bound_row,
    highsnr_bounds,
    iid_highsnr,
    largeK_capacity,
)
from .capacity import CSV_FIELDS, SystemGeometry, db_to_linear, ergodic_sum_capacity, estimate_row
from .channel_models import (
    OneRingParams,
    OneRingPopulation,
    UnitaryEnsemble,
    one_ring_covariance,
    serialization,
    synthesize_unitary_ensemble,
)
from .errors import ConfigError, CorrDivError
from .experiments import PRESETS, ROW_FIELDS, ExperimentConfig, run_experiment
from .io import atomic_write_text, csv_text
from .pilot import PRELOG_CSV_FIELDS, prelog_iid, prelog_multiclass, prelog_row, prelog_tcd, system2_optimize

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _global_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS if suppress else 0)
    parser.add_argument("--trials", type=int, default=default)
    parser.add_argument("--out", default=default, help="output file (stdout if omitted)")
    parser.add_argument("--config", default=default, help="JSON file matching ExperimentConfig")


def _geometry_flags(parser):
    for name in ("M", "K", "G", "r"):
        parser.add_argument(f"--{name}", type=int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="corrdiv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cov", parents=[common], help="generate a covariance or unitary ensemble")
    p.add_argument("--kind", choices=("one_ring", "unitary"), default="one_ring")
    p.add_argument("--M", type=int, default=8)
    p.add_argument("--theta-deg", type=float, default=0.0)
    p.add_argument("--delta-deg", type=float, default=10.0)
    p.add_argument("--spacing", type=float, default=0.5)
    p.add_argument("--G", type=int, default=1)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--profile", type=_floats, default=None, help="eigenvalues per group, e.g. 4,4")

    p = sub.add_parser("capacity", parents=[common], help="Monte Carlo ergodic sum capacity")
    _geometry_flags(p)
    p.add_argument("--snr-db", type=_floats, default=[10.0])
    p.add_argument("--ensemble", choices=("iid", "unitary", "one_ring"), default="iid")
    p.add_argument("--profile", type=_floats, default=None)
    p.add_argument("--mode", choices=("full", "per_group"), default=None)
    p.add_argument("--theta-deg", type=_floats, default=[-60.0, 60.0])
    p.add_argument("--delta-deg", type=_floats, default=[5.0, 10.0])
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("bounds", parents=[common], help="analytic capacity bounds")
    _geometry_flags(p)
    p.add_argument("--snr-db", type=_floats, default=[30.0])
    p.add_argument("--profile", type=_floats, default=None)
    p.add_argument("--regime", choices=("highsnr", "iid", "largeK"), default="highsnr")

    p = sub.add_parser("pilot", parents=[common], help="pilot dimensioning and pre-log factors")
    _geometry_flags(p)
    p.add_argument("--Tc", type=int, default=None)
    p.add_argument("--T", type=int, default=1, help="number of classes sharing pilots")
    p.add_argument("--system2-snr-db", type=float, default=None,
                   help="also optimize system II eigenmodes at this power")

    p = sub.add_parser("figure", parents=[common], help="run a figure preset")
    p.add_argument("id", nargs="?", choices=sorted(PRESETS))
    p.add_argument("--workers", type=int, default=None)
    return parser


def _emit(text, out):
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _profile(args, G, r, M):
    if args.profile is None:
        return EigenvalueProfile.flat(G, r, M)
    if len(args.profile) != r:
        raise ConfigError(f"profile needs r = {r} values, got {len(args.profile)}")
    return EigenvalueProfile([args.profile] * G)


def _merge_config_geometry(args):
    """Fill geometry flags left unset from the ``geometry`` block of ``--config``."""
    geom = {}
    if args.config:
        geom = ExperimentConfig.from_json(args.config).geometry or {}
    for name in ("M", "K", "G", "r", "Tc"):
        if hasattr(args, name) and getattr(args, name) is None and name in geom:
            setattr(args, name, geom[name])
    if getattr(args, "G", 1) is None:
        args.G = 1
    for name in ("M", "K"):
        if getattr(args, name) is None:
            raise ConfigError(f"--{name} is required (or a config with geometry.{name})")


def _geometry(args, **extra):
    return SystemGeometry(args.M, args.K, args.G, args.r, **extra)


def cmd_cov(args):
    if args.kind == "one_ring":
        obj = one_ring_covariance(
            OneRingParams.from_degrees(args.theta_deg, args.delta_deg, args.spacing, args.M))
    else:
        r = args.r or args.M // args.G
        prof = args.profile or [args.M / r] * r
        obj = synthesize_unitary_ensemble(args.M, args.G, r, prof, args.seed)
    _emit(serialization.dumps(obj, indent=1) + "\n", args.out)


def cmd_capacity(args):
    geom = _geometry(args)
    trials = 2000 if args.trials is None else args.trials
    if trials < 1:
        raise ConfigError("capacity needs trials >= 1")
    if args.ensemble == "iid":
        if geom.G != 1:
            raise ConfigError("iid ensemble needs G = 1")
        source, mode = UnitaryEnsemble.iid(geom.M), "full"
    elif args.ensemble == "unitary":
        prof = args.profile or [geom.M / geom.r] * geom.r
        source, mode = synthesize_unitary_ensemble(geom.M, geom.G, geom.r, prof, args.seed), "per_group"
    else:
        if len(args.theta_deg) != 2 or len(args.delta_deg) != 2:
            raise ConfigError("--theta-deg and --delta-deg take lo,hi")
        source = OneRingPopulation.from_degrees(geom.M, tuple(args.theta_deg), tuple(args.delta_deg))
        mode = "full"
    mode = args.mode or mode
    rows = []
    for snr in args.snr_db:
        est = ergodic_sum_capacity(geom, source, snr, trials, args.seed, mode, workers=args.workers)
        rows.append(estimate_row(geom, est, mode, args.seed))
    _emit(csv_text(rows, CSV_FIELDS), args.out)


def cmd_bounds(args):
    geom = _geometry(args)
    profile = _profile(args, geom.G, geom.r, geom.M)
    rows = []
    for snr in args.snr_db:
        P = float(db_to_linear(snr))
        if args.regime == "highsnr":
            pair = highsnr_bounds(geom, profile, P)
        elif args.regime == "iid":
            v = iid_highsnr(geom.M, geom.K, P)
            pair = BoundPair(v, v, v, "iid")
        else:
            v = largeK_capacity(geom, profile, P)
            pair = BoundPair(v, v, v, "largeK")
        rows.append(bound_row(pair, M=geom.M, K=geom.K, G=geom.G, r=geom.r, snr_db=snr))
    _emit(csv_text(rows, BOUND_CSV_FIELDS), args.out)


def cmd_pilot(args):
    if args.Tc is None:
        raise ConfigError("--Tc is required")
    if args.T > 1:
        res = prelog_multiclass(args.M, args.K, args.G, args.T, args.Tc)
    elif args.G > 1:
        res = prelog_tcd(args.M, args.K, args.G, args.Tc)
    else:
        res = prelog_iid(args.M, args.K, args.Tc)
    text = csv_text([prelog_row(args.M, args.K, args.G, args.T, args.Tc, res)], PRELOG_CSV_FIELDS)
    if args.system2_snr_db is not None:
        geom = _geometry(args, Tc=args.Tc)
        s2 = system2_optimize(geom, float(db_to_linear(args.system2_snr_db)))
        rows = [{"q": q, "modes": q * geom.G, "f": f, "argmax": int(q == s2.q_opt)}
                for q, f in s2.f_values.items()]
        text += "\n" + csv_text(rows, ("q", "modes", "f", "argmax"))
    _emit(text, args.out)


def cmd_figure(args):
    overrides = {"seed": args.seed}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.config:
        config = ExperimentConfig.from_json(args.config)
        if args.id and args.id != config.experiment:
            raise ConfigError(f"figure {args.id!r} does not match config experiment {config.experiment!r}")
        data = config.to_dict()
        data.update(overrides)
        config = ExperimentConfig.from_dict(data)
    elif args.id:
        config = ExperimentConfig.preset(args.id, **overrides)
    else:
        raise ConfigError("figure needs an id or --config")
    if args.out:
        config.out = args.out
    table = run_experiment(config)
    if not args.out:
        sys.stdout.write(csv_text(table.rows, ROW_FIELDS))


COMMANDS = {
    "cov": cmd_cov,
    "capacity": cmd_capacity,
    "bounds": cmd_bounds,
    "pilot": cmd_pilot,
    "figure": cmd_figure,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("capacity", "bounds", "pilot"):
            _merge_config_geometry(args)
        COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"corrdiv: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, CorrDivError) as exc:
        print(f"corrdiv: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
