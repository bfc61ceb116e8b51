"""Command-line interface: ``breakseg {simulate,error,segment,sweep}``.

Exit codes: 0 on success, 2 for usage or input validation problems, 1 for
unexpected internal errors. Every file written embeds the seed and the
parameters that produced it as ``#`` comment lines (JSON files carry them
as keys).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .annotation import (
    incomplete_error,
    negative_regions,
    read_annotations,
    zero_one_error,
)
from .breakpoint_error import breakpoint_error, check_breaks
from .segmentation import flsa_solve, model_breaks, segment_least_squares
from .signals import SCHEMES, Signal, make_true_signal, sample_signal

log = logging.getLogger("breakseg")

MAX_SEED = 2**64 - 1


class UsageError(Exception):
    """Invalid user input; reported with exit code 2."""


# ---------------------------------------------------------------- parsing helpers

def _float_list(text: str) -> tuple[float, ...]:
    """Comma-separated floats, or ``lo:hi:step`` for an inclusive arithmetic grid."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, step = (float(x) for x in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return tuple(round(lo + i * step, 10) for i in range(n))
        values = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers or lo:hi:step, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("grid is empty")
    return values


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def read_integers(path) -> list[tuple[int, int]]:
    """``(line_number, value)`` pairs from a one-integer-per-line file.

    Blank lines and lines starting with ``#`` are skipped.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            out.append((lineno, int(line)))
        except ValueError:
            raise UsageError(f"{path}:{lineno}: expected one integer per line, got {line!r}") from None
    return out


def _guesses(path, P: int | None) -> list[int]:
    """Validated, de-duplicated guesses; out-of-range entries name their line."""
    seen, out = set(), []
    for lineno, g in read_integers(path):
        if g < 1 or (P is not None and g > P - 1):
            upper = "P-1" if P is None else str(P - 1)
            raise UsageError(f"{path}:{lineno}: guess {g} outside 1..{upper}")
        if g in seen:
            log.warning("%s:%d: duplicate guess %d ignored", path, lineno, g)
            continue
        seen.add(g)
        out.append(g)
    return sorted(out)


def _writable_file(path) -> Path:
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir():
        raise UsageError(f"output directory {parent} does not exist")
    if not os.access(parent, os.W_OK):
        raise UsageError(f"output directory {parent} is not writable")
    return path


def _writable_dir(path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create directory {path}: {exc.strerror}") from None
    if not os.access(path, os.W_OK):
        raise UsageError(f"directory {path} is not writable")
    return path


def _emit(payload) -> None:
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")


# ---------------------------------------------------------------- subcommands

def cmd_simulate(args) -> int:
    if args.d < 1:
        raise UsageError(f"--d must be >= 1, got {args.d}")
    if args.d > args.P:
        raise UsageError(f"--d ({args.d}) cannot exceed --P ({args.P})")
    out_dir = _writable_dir(args.out_dir)
    try:
        model = make_true_signal(args.P, args.spacing, args.means, args.sd)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    signal = sample_signal(model, args.d, seed=args.seed, scheme=args.scheme)
    params = {"P": args.P, "spacing": args.spacing, "d": args.d, "means": list(args.means),
              "sd": args.sd, "scheme": args.scheme}
    header = [f"seed={args.seed}", "params=" + json.dumps(params, sort_keys=True)]
    signal_path = out_dir / f"{args.name}.csv"
    truth_path = out_dir / f"{args.name}.truth.json"
    signal.to_csv(signal_path, header_lines=header)
    model.to_json(truth_path, seed=args.seed, params=params, breaks=model.breaks)
    print(f"wrote {signal_path} ({signal.d} samples) and {truth_path} ({len(model.breaks)} breaks)")
    return 0


def cmd_error_exact(args) -> int:
    P = args.positions
    entries = read_integers(args.breaks)
    for lineno, b in entries:
        if not 1 <= b <= P - 1:
            raise UsageError(f"{args.breaks}:{lineno}: breakpoint {b} outside 1..{P - 1}")
    breaks = [b for _, b in entries]
    try:
        check_breaks(breaks, P)
    except ValueError as exc:
        raise UsageError(f"{args.breaks}: {exc}") from None
    guesses = _guesses(args.guesses, P)
    _emit(breakpoint_error(breaks, P, guesses).as_dict())
    return 0


def cmd_error_annotation(args) -> int:
    try:
        annotations = read_annotations(args.annotations)
    except OSError as exc:
        raise UsageError(f"cannot read {args.annotations}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    guesses = _guesses(args.guesses, args.with_negatives)
    if args.with_negatives is not None:
        try:
            annotations = annotations + negative_regions(annotations, args.with_negatives)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    err = incomplete_error(annotations, guesses)
    payload = {"fp": err.fp, "fn": err.fn, "total": err.total}
    if args.zero_one:
        payload["zero_one"] = zero_one_error(annotations, guesses)
    _emit(payload)
    return 0


def cmd_segment(args) -> int:
    try:
        signal = Signal.from_csv(args.input)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    p = signal.positions
    if args.flsa is not None:
        if args.flsa < 0:
            raise UsageError("--flsa penalty must be >= 0")
        smooth = flsa_solve(signal.values, args.flsa)
        _emit({"lambda2": args.flsa, "smoothed": smooth.values.tolist(),
               "breaks": model_breaks(smooth, p)})
        return 0
    k_max = min(args.kmax, signal.d)
    if k_max < args.kmax:
        log.warning("--kmax %d exceeds the %d samples; using %d", args.kmax, signal.d, k_max)
    fit = segment_least_squares(signal.values, k_max)
    models = []
    for k in range(1, k_max + 1):
        models.append({
            "k": k,
            "changes": [int(c) for c in fit.changes[k - 1]],
            "means": [float(m) for m in fit.means[k - 1]],
            "sse": float(fit.sse[k - 1]),
            "sigma2": float(fit.sigma2(k)),
            "breaks": model_breaks(fit, p, k=k),
        })
    _emit(models)
    return 0


def _dump_curves(curves_dir: Path, result, layout, header) -> int:
    count = 0
    for r, table in enumerate(result.tables, start=1):
        for row in table.rows:
            for i, (curve, (d, length)) in enumerate(zip(row.curves, layout), start=1):
                name = f"{result.name}_rep{r}_alpha{row.alpha:g}_beta{row.beta:g}_signal{i}.csv"
                with open(curves_dir / name, "w", newline="") as fh:
                    for line in header:
                        fh.write(f"# {line}\n")
                    fh.write(f"# replicate={r} alpha={row.alpha!r} beta={row.beta!r} "
                             f"signal={i} d={d} length={length}\n")
                    writer = csv.writer(fh, lineterminator="\n")
                    writer.writerow(["lambda_lo", "lambda_hi", "k", "error"])
                    for lo, hi, k, err in curve.intervals():
                        writer.writerow([repr(lo), repr(hi), "" if k is None else k, repr(err)])
                count += 1
    return count


def cmd_sweep(args) -> int:
    spec = experiments.EXPERIMENTS.get(args.experiment)
    if spec is None:
        raise UsageError(f"unknown experiment {args.experiment!r}; "
                         f"expected one of {', '.join(sorted(experiments.EXPERIMENTS))}")
    if spec.flsa and args.beta_grid is not None and args.beta_grid != (0.0,):
        raise UsageError("the flsa experiment has no length exponent; drop --beta-grid")
    if spec.flsa and args.variance_term:
        raise UsageError("the flsa experiment has no variance term")
    if args.replicates < 1:
        raise UsageError("--replicates must be >= 1")
    out = _writable_file(args.out)
    curves_dir = _writable_dir(args.curves_dir) if args.curves_dir else None
    try:
        experiments.worker_count()
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    result = experiments.run_experiment(
        args.experiment, seed=args.seed, replicates=args.replicates,
        alpha_grid=args.alpha_grid, beta_grid=args.beta_grid,
        variance_term=args.variance_term, keep_curves=curves_dir is not None)

    gamma = spec.variance_term if args.variance_term is None else args.variance_term
    params = {
        "experiment": args.experiment, "replicates": args.replicates,
        "densities": list(spec.densities), "lengths": list(spec.lengths),
        "alpha_grid": [float(a) for a in sorted(set(result.alpha))],
        "beta_grid": [float(b) for b in sorted(set(result.beta))],
        "variance_term": bool(gamma), "k_max": spec.k_max,
    }
    header = [f"seed={args.seed}", "params=" + json.dumps(params, sort_keys=True)]
    with open(out, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["alpha", "beta", "train_error", "test_error", "sd_test"])
        for row in result.rows():
            writer.writerow([repr(float(x)) for x in row])
    if curves_dir is not None:
        n = _dump_curves(curves_dir, result, experiments.database_layout(spec), header)
        log.info("wrote %d curve files to %s", n, curves_dir)

    alpha, beta = result.argmin()
    i = int(np.flatnonzero((result.alpha == alpha) & (result.beta == beta))[0])
    print(f"{args.experiment}: argmin alpha={alpha:g} beta={beta:g} "
          f"test_error={result.test_error[i]:.6g} sd_test={result.sd_test[i]:.3g} "
          f"train_error={result.train_error[i]:.6g} ({len(result.alpha)} grid points, "
          f"{args.replicates} replicates) -> {out}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="breakseg",
        description="Simulate piecewise-constant signals, segment them, score breakpoint "
                    "guesses and sweep penalty exponents.",
        epilog="Environment: BREAKSEG_THREADS caps sweep worker processes "
               "(0 or unset = all cores, 1 = serial).")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    sim = sub.add_parser("simulate", help="sample a noisy signal and write it with its true model",
                         description="Write NAME.csv (position,value) and NAME.truth.json.")
    sim.add_argument("--P", type=_positive_int, required=True,
                     help="signal length in base positions (>= 2)")
    sim.add_argument("--spacing", type=_positive_int, required=True,
                     help="distance between consecutive true breakpoints")
    sim.add_argument("--d", type=int, required=True, help="number of sampled positions, 1..P")
    sim.add_argument("--seed", type=_seed, required=True, help="64-bit random seed")
    sim.add_argument("--means", type=_float_list, default=experiments.MEANS,
                     help="segment means, cycled (comma-separated; default -1,0,1,0)")
    sim.add_argument("--sd", type=_float_list, default=(1.0,),
                     help="noise standard deviations, cycled (default 1)")
    sim.add_argument("--scheme", choices=SCHEMES, default="uniform-spaced",
                     help="how sampled positions are chosen (default uniform-spaced)")
    sim.add_argument("--out-dir", default=".", help="output directory (created if missing)")
    sim.add_argument("--name", default="signal", help="output file stem (default 'signal')")
    sim.set_defaults(func=cmd_simulate)

    err = sub.add_parser("error", help="score breakpoint guesses",
                         description="Score guesses against true breakpoints or annotated regions.")
    err_sub = err.add_subparsers(dest="mode", metavar="MODE", required=True)
    exact = err_sub.add_parser("exact", help="exact breakpoint error against known breakpoints",
                               description="Print {fp, fn, imprecision, total} as JSON.")
    exact.add_argument("--breaks", required=True, help="true breakpoints, one integer per line")
    exact.add_argument("--guesses", required=True,
                       help="guessed breakpoints, one integer per line (duplicates are ignored)")
    exact.add_argument("--positions", type=_positive_int, required=True, metavar="P",
                       help="signal length P; breakpoints and guesses lie in 1..P-1")
    exact.set_defaults(func=cmd_error_exact)

    ann = err_sub.add_parser("annotation", help="annotation error against labelled regions",
                             description="Print {fp, fn, total} (and zero_one) as JSON.")
    ann.add_argument("--annotations", required=True,
                     help="CSV with header lower,upper,min_breaks,max_breaks (blank max = unbounded)")
    ann.add_argument("--guesses", required=True,
                     help="guessed breakpoints, one integer per line (duplicates are ignored)")
    ann.add_argument("--zero-one", action="store_true",
                     help="also report the number of regions with a disallowed count")
    ann.add_argument("--with-negatives", type=_positive_int, metavar="P",
                     help="add zero-break regions covering every gap of 1..P-1 between annotations")
    ann.set_defaults(func=cmd_error_annotation)

    seg = sub.add_parser("segment", help="segment a signal CSV",
                         description="Print every least-squares model k=1..K, or the FLSA fit, as JSON.")
    seg.add_argument("--input", required=True, help="signal CSV with header position,value")
    how = seg.add_mutually_exclusive_group(required=True)
    how.add_argument("--kmax", type=_positive_int, help="largest number of segments K")
    how.add_argument("--flsa", type=float, metavar="LAMBDA",
                     help="fit the fused lasso with this total-variation penalty instead")
    seg.set_defaults(func=cmd_segment)

    sw = sub.add_parser("sweep", help="run a penalty-exponent sweep",
                        description="Write one row per grid point: alpha,beta,train_error,test_error,sd_test.")
    sw.add_argument("--experiment", required=True, metavar="{" + "|".join(experiments.EXPERIMENTS) + "}",
                    help="named experiment")
    sw.add_argument("--out", required=True, help="results CSV path")
    sw.add_argument("--seed", type=_seed, default=1, help="64-bit random seed (default 1)")
    sw.add_argument("--alpha-grid", type=_float_list,
                    help="sample-count exponents: a,b,c or lo:hi:step (default per experiment); "
                         "use the --alpha-grid=... form when the grid starts negative")
    sw.add_argument("--beta-grid", type=_float_list,
                    help="length exponents: a,b,c or lo:hi:step (default per experiment); "
                         "write --beta-grid=-1:0:0.25 when the grid starts negative")
    sw.add_argument("--replicates", type=int, default=3,
                    help="independent signal databases to average over (default 3)")
    sw.add_argument("--variance-term", action=argparse.BooleanOptionalAction, default=None,
                    help="multiply the penalty by a difference-based noise variance estimate "
                         "(default per experiment)")
    sw.add_argument("--curves-dir",
                    help="also write every error curve as lambda_lo,lambda_hi,k,error CSV here")
    sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"breakseg: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort report with exit code 1
        log.debug("internal error", exc_info=True)
        print(f"breakseg: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
