"""Command-line entry point: ``scitv simulate|reconstruct|bench|denoise``.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
3 numeric failure (NaN/Inf in an iterate).
"""
import argparse
import logging
import os
import sys

import numpy as np

from . import bench as bench_mod
from .config import read_key_values
from .data import SCENE_KINDS
from .errors import NumericalError, SciError, TensorFormatError
from .images import FORMATS, export_frames, snapshot_callback
from .io import load_tensor, save_tensor
from .metrics import psnr
from .solvers import FRAMEWORKS, SolveConfig, reconstruct
from .tv import VARIANTS, DenoiseConfig, TvVariant, denoise

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("scitv")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_solver_flags(p):
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.add_argument("--rho", type=float, default=0.01)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--in-iter", type=int, default=None,
                   help="inner TV iterations (default: 2 for FGP, 5 otherwise)")
    p.add_argument("--twist-xi1", type=float, default=1e-4)
    p.add_argument("--warm-start", action=argparse.BooleanOptionalAction, default=True,
                   help="carry TV duals across outer iterations")
    p.add_argument("--projection-rule", choices=("max-one", "additive"), default="max-one")


def build_parser():
    parser = _Parser(prog="scitv", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value file of flag defaults (CLI wins)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a synthetic dataset directory")
    p.add_argument("--nx", type=int, default=64)
    p.add_argument("--ny", type=int, default=64)
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--scene", choices=SCENE_KINDS, default="moving-square")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("reconstruct", help="reconstruct a video cube from one snapshot")
    p.add_argument("--measurement", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--solver", choices=FRAMEWORKS, default="gap")
    p.add_argument("--tv", choices=[v.tag for v in VARIANTS], default="atv-fgp")
    _add_solver_flags(p)
    p.add_argument("--reference", help="ground-truth cube for PSNR tracing")
    p.add_argument("--peak", type=float, default=1.0,
                   help="divide measurement and reference by this value")
    p.add_argument("--trace-out", help="trace CSV path; a PNG plot is written beside it")
    p.add_argument("--out", required=True)
    p.add_argument("--frames-dir", help="also export the result as images here")
    p.add_argument("--format", choices=FORMATS, default="pgm")
    p.add_argument("--snapshot-every", type=int, default=0,
                   help="export the estimate every N iterations to --frames-dir")

    p = sub.add_parser("bench", help="run the framework x TV-variant grid")
    p.add_argument("--datasets-dir",
                   help="dataset directory or directory of datasets (default: synthetic suite)")
    p.add_argument("--synthetic-size", type=int, default=32)
    p.add_argument("--grid", default="full", help="'full' or e.g. gap:atv-clip,admm:itv3d-fgp")
    _add_solver_flags(p)
    p.add_argument("--lambda-grid", help="comma list of lambdas searched per cell")
    p.add_argument("--report-out", required=True,
                   help="long-format CSV; <stem>_table.csv and <stem>.png go beside it")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("denoise", help="TV-denoise a frame or cube")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--tv", choices=[v.tag for v in VARIANTS], default="atv-fgp")
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.add_argument("--in-iter", type=int, default=50)
    p.add_argument("--projection-rule", choices=("max-one", "additive"), default="max-one")
    p.add_argument("--out", required=True)
    return parser


def _config_tokens(parser, argv):
    """Turn ``--config`` file entries into flags placed before the CLI ones."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return argv
    values = read_key_values(known.config)
    command = next((a for a in argv if a in ("simulate", "reconstruct", "bench", "denoise")), None)
    if command is None:
        return argv
    sub = parser._subparsers._group_actions[0].choices[command]
    flags = {}
    for action in sub._actions:
        for opt in action.option_strings:
            if opt.startswith("--") and not opt.startswith("--no-"):
                flags[opt[2:]] = action
    tokens = []
    for key, value in values.items():
        name = key.replace("_", "-")
        if name == "lam":
            name = "lambda"
        action = flags.get(name)
        if action is None:
            raise UsageError(f"{known.config}: unknown key {key!r} for {command}")
        if isinstance(action, argparse.BooleanOptionalAction):
            on = value.lower() in ("1", "true", "yes", "on")
            tokens.append(f"--{name}" if on else f"--no-{name}")
        else:
            tokens += [f"--{name}", value]
    i = argv.index(command) + 1
    return argv[:i] + tokens + argv[i:]


def _solve_config(args, framework, tv):
    return SolveConfig(
        framework=framework, tv=TvVariant.parse(tv), lam=args.lam, rho=args.rho,
        max_iter=args.max_iter, in_iter=args.in_iter, twist_xi1=args.twist_xi1,
        warm_start=args.warm_start, projection_rule=args.projection_rule,
    )


def cmd_simulate(args):
    ds = bench_mod.simulate_dataset(
        f"{args.scene}-seed{args.seed}", args.nx, args.ny, args.frames, seed=args.seed,
        density=args.density, noise_std=args.noise_std, kind=args.scene,
    )
    bench_mod.save_dataset(ds, args.out_dir)
    print(f"wrote {args.out_dir} ({args.nx}x{args.ny}x{args.frames}, scene={args.scene})")


def cmd_reconstruct(args):
    if not args.peak > 0:
        raise UsageError("--peak must be positive")
    y = load_tensor(args.measurement) / args.peak
    masks = load_tensor(args.masks)
    if y.ndim != 2 or masks.ndim != 3:
        raise UsageError("measurement must be rank 2 and masks rank 3")
    ref = load_tensor(args.reference) / args.peak if args.reference else None
    cfg = _solve_config(args, args.solver, args.tv)
    callback = None
    if args.snapshot_every:
        if not args.frames_dir:
            raise UsageError("--snapshot-every needs --frames-dir")
        callback = snapshot_callback(os.path.join(args.frames_dir, "snapshots"),
                                     args.snapshot_every, args.format)
    est, trace = reconstruct(y, masks, cfg, reference=ref, callback=callback)
    save_tensor(args.out, est)
    if args.frames_dir:
        export_frames(est, args.frames_dir, args.format)
    if args.trace_out:
        trace.to_csv(args.trace_out)
        if ref is not None:
            from .plotting import plot_psnr_traces

            plot_psnr_traces({f"{args.solver.upper()}-{args.tv.upper()}": trace},
                             os.path.splitext(args.trace_out)[0] + ".png")
    msg = f"{args.solver}/{args.tv}: {len(trace)} iterations -> {args.out}"
    if ref is not None:
        msg += f" (PSNR {psnr(ref, est):.2f} dB)"
    print(msg)


def cmd_bench(args):
    if args.datasets_dir:
        datasets = bench_mod.load_datasets(args.datasets_dir)
    else:
        datasets = bench_mod.synthetic_suite(size=args.synthetic_size)
    grid = bench_mod.parse_grid(args.grid)
    lam_grid = None
    if args.lambda_grid:
        try:
            lam_grid = [float(v) for v in args.lambda_grid.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"bad --lambda-grid {args.lambda_grid!r}") from None
    defaults = _solve_config(args, "gap", "atv-fgp")
    report = bench_mod.run_benchmark(datasets, grid, defaults, workers=max(1, args.workers),
                                     lam_grid=lam_grid)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if not report.datasets:
        raise UsageError("no dataset with ground truth; nothing to benchmark")
    stem = os.path.splitext(args.report_out)[0]
    os.makedirs(os.path.dirname(os.path.abspath(args.report_out)), exist_ok=True)
    report.write_csv(args.report_out)
    report.write_table(stem + "_table.csv")
    from .plotting import plot_report

    plot_report(report, stem + ".png")
    print(f"{len(report.grid)} cells x {len(report.datasets)} datasets -> {args.report_out}")


def cmd_denoise(args):
    z = load_tensor(args.inp)
    frame = z.ndim == 2
    cube = z[None] if frame else z
    cfg = DenoiseConfig(lam=args.lam, in_iter=args.in_iter, projection_rule=args.projection_rule)
    out = denoise(cube, TvVariant.parse(args.tv), cfg)
    if not np.all(np.isfinite(out)):
        raise NumericalError("denoised output is not finite")
    save_tensor(args.out, out[0] if frame else out)
    print(f"{args.tv} (lambda={args.lam}, {args.in_iter} iterations) -> {args.out}")


COMMANDS = {
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "bench": cmd_bench,
    "denoise": cmd_denoise,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_config_tokens(parser, argv))
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, TensorFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SciError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
