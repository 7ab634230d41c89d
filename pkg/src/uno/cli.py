"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
inconsistent inputs), 3 solver non-convergence.  All file outputs are
written atomically (temp file + rename) so an interrupted run never leaves a
partial artifact.
"""

import argparse
import json
import os
import re
import sys

import numpy as np

from . import imaging, onebit, rate_theory, rka, unwrap as unwrap_mod
from ._util import atomic_write_text
from .modulo import ModuloSampleVector, modulo_sample
from .rka import SolverConfig
from .splines import make_interpolator

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NO_CONVERGENCE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; our contract says 1
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_vector(path) -> np.ndarray:
    """Read a numeric vector from a text file (comma or whitespace separated)."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    tokens = [t for t in re.split(r"[,\s]+", text.strip()) if t]
    if not tokens:
        raise ValueError(f"{path}: no numeric data")
    try:
        return np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def _write_vector(path, values) -> None:
    atomic_write_text(path, "\n".join(repr(float(v)) for v in values) + "\n")


def _write_trace_csv(path, trace) -> None:
    lines = ["iteration,violation,sqerr_to_reference"]
    for rec in trace.recorded:
        sq = "" if rec.sqerr_to_reference is None else repr(rec.sqerr_to_reference)
        lines.append(f"{rec.iteration},{rec.violation!r},{sq}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def _parse_anchor(text):
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"anchor must be lo:hi, got {text!r}")
    lo, hi = float(parts[0]), float(parts[1])
    if not hi > lo:
        raise ValueError(f"anchor range [{lo}, {hi}] is empty")
    return lo, hi


def _threads_from(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("UNO_THREADS")
    return max(1, int(env)) if env else 1


def build_parser() -> _Parser:
    parser = _Parser(prog="uno", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rate", help="evaluate the sampling-rate certificate")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--beta-g", dest="beta_g", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--n-order", dest="n_order", type=int, required=True)
    p.add_argument("--t", type=float, required=True)

    p = sub.add_parser("capture", help="one-bit quantize a row of modulo samples")
    p.add_argument("--input", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--row-index", type=int, default=0)
    p.add_argument("--image-id", default="")
    p.add_argument("--out", required=True)

    p = sub.add_parser("solve", help="recover modulo samples from a capture")
    p.add_argument("--capture", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=None,
                   help="iteration budget (default: 50 epochs)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=["zero", "midpoint_of_interval"],
                   default="midpoint_of_interval")
    p.add_argument("--trace", default=None)
    p.add_argument("--reference", default=None,
                   help="optional true-sample CSV; adds sqerr telemetry")
    p.add_argument("--out", default=None)

    p = sub.add_parser("unwrap", help="unfold modulo samples by differencing")
    p.add_argument("--modulo", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--l", type=int, default=2)
    p.add_argument("--beta-g", dest="beta_g", type=float, required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--anchor", default=None, help="lo:hi pixel range")
    p.add_argument("--out", required=True)

    p = sub.add_parser("encode", help="pixel row -> spline -> fold -> capture")
    p.add_argument("--input", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--n-order", dest="n_order", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--row-index", type=int, default=0)
    p.add_argument("--image-id", default="")
    p.add_argument("--out", required=True)

    p = sub.add_parser("decode", help="capture -> solver -> unwrap -> pixel row")
    p.add_argument("--capture", required=True)
    p.add_argument("--n-order", dest="n_order", type=int, default=3)
    p.add_argument("--l", type=int, default=2)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--anchor", default="0:255")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--init", choices=["zero", "midpoint_of_interval"],
                   default="midpoint_of_interval")
    p.add_argument("--out", required=True)

    p = sub.add_parser("experiment", help="NMSE sweep over threshold-sequence counts")
    p.add_argument("--image", required=True)
    p.add_argument("--m", default="5,10,20,40", help="comma-separated list")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--n-order", dest="n_order", type=int, default=3)
    p.add_argument("--l", type=int, default=2)
    p.add_argument("--t", type=float, default=0.005)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--crop", default=None, help="x:y:w:h")
    p.add_argument("--out-csv", default=None)
    p.add_argument("--out-json", default=None)
    p.add_argument("--save-image", default=None,
                   help="write the largest-m trial-0 reconstruction as PGM")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--paper-protocol", action="store_true",
                   help="full-scale preset: no crop, 1000 trials")
    return parser


def _cmd_rate(args) -> int:
    cert = rate_theory.certify(args.lam, args.beta_g, args.h, args.l,
                               args.n_order, args.t)
    print(json.dumps(cert.to_dict(), indent=2))
    return EXIT_OK


def _cmd_capture(args) -> int:
    values = _read_vector(args.input)
    if np.any(values < -args.lam) or np.any(values >= args.lam):
        raise ValueError(
            f"{args.input}: samples outside [-lambda, lambda); fold them first"
        )
    y = ModuloSampleVector(values, args.lam, args.t)
    plan = onebit.DitherPlan(n=len(values), m=args.m, lam=args.lam, seed=args.seed)
    meta = onebit.RowMeta(row_index=args.row_index, row_length=len(values),
                          image_id=args.image_id)
    cap = onebit.quantize(y, onebit.generate_dithers(plan), plan=plan, row_meta=meta)
    onebit.write_capture(cap, args.out)
    print(json.dumps({"n": cap.n, "m": cap.m, "out": args.out}))
    return EXIT_OK


def _solve_capture(cap, tol, max_iters, seed, init, reference=None):
    if max_iters is None:
        max_iters = 50 * cap.n * cap.m
    config = SolverConfig(max_iterations=max_iters, feasibility_tol=tol,
                          trace_stride=max(1, cap.n * cap.m), rng_seed=seed, init=init)
    return rka.solve(cap, config, reference=reference)


def _cmd_solve(args) -> int:
    cap = onebit.read_capture(args.capture)
    reference = _read_vector(args.reference) if args.reference else None
    if reference is not None and len(reference) != cap.n:
        raise ValueError(
            f"reference length {len(reference)} does not match capture n={cap.n}"
        )
    y_hat, trace = _solve_capture(cap, args.tol, args.max_iters, args.seed,
                                  args.init, reference)
    if args.out:
        _write_vector(args.out, y_hat)
    if args.trace:
        _write_trace_csv(args.trace, trace)
    print(json.dumps({
        "iterations": trace.iterations_run,
        "converged": trace.converged,
        "final_violation": trace.recorded[-1].violation,
    }))
    return EXIT_OK if trace.converged else EXIT_NO_CONVERGENCE


def _cmd_unwrap(args) -> int:
    values = _read_vector(args.modulo)
    y = ModuloSampleVector(values, args.lam, args.t)
    result = unwrap_mod.unwrap(y, l=args.l, beta_g=args.beta_g)
    if args.anchor:
        lo, hi = _parse_anchor(args.anchor)
        unwrap_mod.anchor_to_range(result, lo, hi)
    _write_vector(args.out, result.gamma_hat)
    d = result.diagnostics
    print(json.dumps({
        "offset_multiple": result.offset_multiple,
        "folded_diff_max": d.folded_diff_max,
        "budget_violated": d.budget_violated,
        "reduced_confidence": d.reduced_confidence,
        "anchoring": d.anchoring,
    }))
    return EXIT_OK


def _cmd_encode(args) -> int:
    row = _read_vector(args.input)
    model = make_interpolator(row, args.n_order, args.h)
    y = modulo_sample(model, args.t, args.lam)
    plan = onebit.DitherPlan(n=len(y), m=args.m, lam=args.lam, seed=args.seed)
    meta = onebit.RowMeta(row_index=args.row_index, row_length=len(row),
                          image_id=args.image_id)
    cap = onebit.quantize(y, onebit.generate_dithers(plan), plan=plan, row_meta=meta)
    onebit.write_capture(cap, args.out)
    print(json.dumps({"n": cap.n, "m": cap.m, "out": args.out}))
    return EXIT_OK


def _cmd_decode(args) -> int:
    cap = onebit.read_capture(args.capture)
    lo, hi = _parse_anchor(args.anchor)
    max_iters = args.max_iters or 50 * cap.n * cap.m
    spec = imaging.ExperimentSpec(
        lam=cap.lam, N=args.n_order, l=args.l, T=cap.period_T, h=args.h,
        m_values=(cap.m,), master_seed=args.seed,
        solver=SolverConfig(max_iterations=max_iters, feasibility_tol=args.tol,
                            trace_stride=max(1, cap.n * cap.m),
                            rng_seed=args.seed, init=args.init),
    )
    pixels, diag = imaging.decode_row(cap, spec, anchor=(lo, hi))
    _write_vector(args.out, pixels)
    print(json.dumps({
        "row_index": diag.row_index,
        "solver_iterations": diag.solver_iterations,
        "converged": diag.solver_converged,
        "budget_violated": diag.budget_violated,
    }))
    return EXIT_OK if diag.solver_converged else EXIT_NO_CONVERGENCE


def _cmd_experiment(args) -> int:
    image = imaging.load_image(args.image)
    try:
        m_values = tuple(int(tok) for tok in args.m.split(",") if tok)
    except ValueError:
        raise ValueError(f"bad --m list {args.m!r}") from None
    crop = imaging.parse_crop(args.crop) if args.crop else None
    trials = args.trials
    if args.paper_protocol:
        crop = None
        trials = 1000
    spec = imaging.ExperimentSpec(
        lam=args.lam, N=args.n_order, l=args.l, T=args.t, h=args.h,
        m_values=m_values, trials=trials, master_seed=args.seed, crop=crop,
        image_id=os.path.basename(args.image),
    )
    report = imaging.run_experiment(image, spec, threads=_threads_from(args))
    if args.out_csv:
        report.write_csv(args.out_csv)
    if args.out_json:
        report.write_summary(args.out_json)
    if args.save_image:
        best_m = max(m_values)
        estimate, _ = imaging.reconstruct_image(image, spec, m=best_m, trial_index=0)
        imaging.save_image(estimate, args.save_image)
    print(report.summary_json())
    return EXIT_OK


_COMMANDS = {
    "rate": _cmd_rate,
    "capture": _cmd_capture,
    "solve": _cmd_solve,
    "unwrap": _cmd_unwrap,
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, onebit.CaptureFormatError) as exc:
        print(f"uno {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
