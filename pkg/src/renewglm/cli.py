"""
Command-line entry point: ``renewglm {fit,resume,simulate,report}``.

Exit codes: 0 success, 1 runtime or numeric failure, 2 usage, configuration
or input error. On failure every output file written by the command is removed.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from .exceptions import (BatchParseError, CheckpointError, ContractViolation, RenewGLMError)
from .glm import Family
from .penalty import PenaltyConfig, PenaltyKind
from .persistence import load_checkpoint, read_batch, save_checkpoint
from .simulation import ExperimentConfig, metrics_rows, run_experiment
from .solver import init_first_batch, process_batch
from .state import SolverConfig

logger = logging.getLogger("renewglm")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
METRIC_COLUMNS = ["Size", "Method", "NV", "IN", "CS", "I", "II"]
RECORD_COLUMNS = ["method", "replication", "batch", "N", "NV", "IN", "CS", "I", "II", "l2_sq"]


class UsageError(Exception):
    """Bad flags or inputs detected before or during a command."""


class Outputs:
    """Tracks files written by a command so they can be removed on failure."""

    def __init__(self):
        self.paths: list[Path] = []

    def path(self, p) -> Path:
        p = Path(p)
        p.parent.mkdir(parents=True, exist_ok=True)
        self.paths.append(p)
        return p

    def write_tsv(self, p, header, rows):
        with open(self.path(p), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter="\t", lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    def cleanup(self):
        for p in self.paths:
            p.unlink(missing_ok=True)
            Path(str(p) + ".tmp").unlink(missing_ok=True)


def _fmt(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_solver_flags(ap):
    d = SolverConfig()
    ap.add_argument("--family", default="gaussian",
                    help="gaussian or binomial (aliases: logit, logistic)")
    ap.add_argument("--penalty", default="lasso", help="lasso, scad or mcp")
    ap.add_argument("--r", type=float, default=None, help="SCAD/MCP shape (defaults 3.7 / 3)")
    ap.add_argument("--grid-size", type=int, default=d.lambda_grid_size)
    ap.add_argument("--min-ratio", type=float, default=d.lambda_min_ratio)
    ap.add_argument("--cd-tol", type=float, default=d.cd_tol)
    ap.add_argument("--cd-max-passes", type=int, default=d.cd_max_passes)
    ap.add_argument("--refit-steps", type=int, default=d.refit_max_steps)
    ap.add_argument("--no-penalize-intercept", action="store_true",
                    help="leave column 0 unpenalized")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="renewglm", description="Online penalized GLM estimation.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a stream of CSV batches, in the given order")
    fit.add_argument("files", nargs="+", help="batch CSV files (response first, then covariates)")
    _add_solver_flags(fit)
    fit.add_argument("--output", "-o", required=True, help="output directory")
    fit.add_argument("--checkpoint", help="write the final state here")

    res = sub.add_parser("resume", help="continue a stream from a checkpoint")
    res.add_argument("files", nargs="+")
    res.add_argument("--from", dest="source", required=True, help="checkpoint to resume from")
    res.add_argument("--output", "-o", required=True)
    res.add_argument("--checkpoint", help="write the final state here")

    sim = sub.add_parser("simulate", help="run a simulation grid and write metrics")
    sim.add_argument("--family", default="gaussian")
    sim.add_argument("--penalty", default="all", help="comma list of lasso,scad,mcp or 'all'")
    sim.add_argument("--r", type=float, default=None)
    sim.add_argument("--p", type=int, default=10)
    sim.add_argument("--n", type=int, default=100)
    sim.add_argument("--B", type=int, default=50)
    sim.add_argument("--rho", type=float, default=0.5)
    sim.add_argument("--reps", type=int, default=20)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--noise-sd", type=float, default=1.0)
    sim.add_argument("--warm-start", type=int, default=1000,
                     help="observations pooled into the starting fit")
    sim.add_argument("--offline", action="store_true", help="also fit the pooled data")
    sim.add_argument("--output", "-o", required=True)

    rep = sub.add_parser("report", help="l2-error series (and a figure) from a records file")
    rep.add_argument("records")
    rep.add_argument("--output", "-o", required=True)
    rep.add_argument("--no-plot", action="store_true")
    return ap


def _penalty(name, r) -> PenaltyConfig:
    try:
        kind = PenaltyKind(name.lower())
    except ValueError:
        raise UsageError(f"penalty: unknown penalty {name!r}") from None
    return PenaltyConfig(kind, r)


def _family(name) -> Family:
    try:
        return Family.from_name(name)
    except (ValueError, KeyError):
        raise UsageError(f"family: unknown family {name!r}") from None


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        penalty=_penalty(args.penalty, args.r),
        lambda_grid_size=args.grid_size,
        lambda_min_ratio=args.min_ratio,
        cd_tol=args.cd_tol,
        cd_max_passes=args.cd_max_passes,
        refit_max_steps=args.refit_steps,
        penalize_intercept=not args.no_penalize_intercept,
    )


def _check_files(paths):
    for p in paths:
        if not Path(p).is_file():
            raise UsageError(f"no such file: {p}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _trace_rows(batch_index, trace):
    for i, (lam, val, s) in enumerate(zip(trace.lambdas, trace.bic_values, trace.s_hat_per_lambda)):
        yield [batch_index, i, _fmt(lam), _fmt(val), int(s), int(i == trace.chosen_index)]


def _run_stream(state, paths, config, family, p):
    traces = []
    for path in paths:
        index = 1 if state is None else state.b + 1
        try:
            batch = read_batch(path, schema=p, batch_index=index)
        except BatchParseError as err:
            raise BatchParseError(f"{path}: {err}") from None
        p = batch.p
        if state is None:
            state, trace = init_first_batch(batch, config, family, return_trace=True)
        else:
            state, trace = process_batch(state, batch, config)
        traces.append((index, trace))
        logger.info("batch %d (%s): N=%d, |S|=%d", index, path, state.N, len(state.active))
    return state, traces


def _write_fit_outputs(out: Outputs, args, state, traces):
    d = Path(args.output)
    active = set(int(j) for j in state.active)
    out.write_tsv(d / "coefficients.tsv", ["index", "value", "active"],
                  ([j, _fmt(v), int(j in active)] for j, v in enumerate(state.beta)))
    out.write_tsv(d / "bic_trace.tsv", ["batch", "grid_index", "lambda", "bic", "s_hat", "chosen"],
                  (row for b, tr in traces for row in _trace_rows(b, tr)))
    out.write_tsv(d / "lambda_history.tsv", ["batch", "lambda"],
                  ([b + 1, _fmt(lam)] for b, lam in enumerate(state.lambda_history)))
    if args.checkpoint:
        save_checkpoint(state, out.path(args.checkpoint))


def cmd_fit(args, out: Outputs) -> int:
    config = _solver_config(args)
    family = _family(args.family)
    _check_files(args.files)
    state, traces = _run_stream(None, args.files, config, family, None)
    _write_fit_outputs(out, args, state, traces)
    return EXIT_OK


def cmd_resume(args, out: Outputs) -> int:
    _check_files([args.source, *args.files])
    state = load_checkpoint(args.source)
    state, traces = _run_stream(state, args.files, state.config, state.family, state.p)
    _write_fit_outputs(out, args, state, traces)
    return EXIT_OK


def _penalties(arg, r):
    names = ["lasso", "scad", "mcp"] if arg.lower() == "all" else [s.strip() for s in arg.split(",")]
    return [_penalty(name, r) for name in names if name]


def cmd_simulate(args, out: Outputs) -> int:
    family = _family(args.family)
    configs = [ExperimentConfig(family=family, p=args.p, n=args.n, B=args.B, rho=args.rho,
                                replications=args.reps, seed=args.seed, penalty=pen,
                                noise_sd=args.noise_sd, warm_start_size=args.warm_start,
                                offline_reference=args.offline)
               for pen in _penalties(args.penalty, args.r)]
    if not configs:
        raise UsageError("penalty: empty penalty list")
    metrics, records = [], []
    for cfg in configs:
        result = run_experiment(cfg)
        if not result.finals[cfg.method]:
            raise RuntimeError(f"{cfg.method}: every replication failed")
        metrics.extend(metrics_rows(result))
        records.extend(result.records)
        for name, finals in result.finals.items():
            if name != cfg.method:
                records.extend(finals)
    d = Path(args.output)
    out.write_tsv(d / "metrics.tsv", METRIC_COLUMNS,
                  ([m["Size"], m["Method"], f"{m['NV']:.2f}", f"{m['IN']:.2f}", f"{m['CS']:.2f}",
                    f"{m['I']:.3f}", f"{m['II']:.3f}"] for m in metrics))
    out.write_tsv(d / "records.tsv", RECORD_COLUMNS,
                  ([r.method, r.replication, r.batch, r.N, r.NV, r.IN, r.CS, _fmt(r.I), _fmt(r.II),
                    _fmt(r.l2_sq)] for r in records))
    return EXIT_OK


def read_records(path) -> list[dict]:
    """Parse a records TSV; raises UsageError on any malformed content."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    if not rows:
        raise UsageError(f"{path}: empty records file")
    header, body = rows[0], [r for r in rows[1:] if r]
    missing = [c for c in ("method", "N", "l2_sq") if c not in header]
    if missing:
        raise UsageError(f"{path}: missing columns {missing}")
    if not body:
        raise UsageError(f"{path}: no records")
    out = []
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise UsageError(f"{path}: row {lineno}: expected {len(header)} fields")
        rec = dict(zip(header, row))
        try:
            rec["N"] = int(rec["N"])
            rec["l2_sq"] = float(rec["l2_sq"])
        except ValueError:
            raise UsageError(f"{path}: row {lineno}: non-numeric N or l2_sq") from None
        if not math.isfinite(rec["l2_sq"]) or rec["N"] < 1:
            raise UsageError(f"{path}: row {lineno}: invalid N or l2_sq")
        out.append(rec)
    return out


def l2_series(records) -> dict[str, list[tuple[int, float, int]]]:
    """Per method, sorted (N, mean squared l2 error, count) points."""
    groups = defaultdict(list)
    for rec in records:
        groups[(rec["method"], rec["N"])].append(rec["l2_sq"])
    series = defaultdict(list)
    for (method, N), vals in sorted(groups.items()):
        series[method].append((N, math.fsum(vals) / len(vals), len(vals)))
    return dict(series)


def cmd_report(args, out: Outputs) -> int:
    _check_files([args.records])
    series = l2_series(read_records(args.records))
    d = Path(args.output)
    out.write_tsv(d / "l2_series.tsv", ["method", "N", "mean_l2_sq", "count"],
                  ([m, N, _fmt(v), c] for m, pts in series.items() for N, v, c in pts))
    if not args.no_plot:
        from .plotting import plot_l2_curves

        plot_l2_curves({m: [(N, v) for N, v, _ in pts] for m, pts in series.items()},
                       out.path(d / "l2_curves.png"))
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "resume": cmd_resume, "simulate": cmd_simulate, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Outputs()
    try:
        return COMMANDS[args.command](args, out)
    except (UsageError, ContractViolation, BatchParseError, CheckpointError,
            FileNotFoundError, IsADirectoryError) as err:
        code, msg = EXIT_USAGE, str(err)
    except (RenewGLMError, FloatingPointError, np.linalg.LinAlgError, RuntimeError) as err:
        code, msg = EXIT_RUNTIME, str(err)
    out.cleanup()
    print(f"renewglm {args.command}: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
