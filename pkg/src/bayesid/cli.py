"""Command-line interface.

Subcommands: decompose (run one method on one matrix), benchmark (compare
the Gibbs sampler against the randomized baseline over several ranks),
synth (generate a synthetic instance with known structure), diagnose
(convergence and mixing report for a saved trace).

Exit codes: 0 success, 2 configuration problem, 3 input problem,
4 numerical problem. Errors print as a single machine-parsable line
"error: <category>: <message>" on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import diagnostics
from .diagnostics import build_run_report, iterations_to_plateau, mixing_verdict
from .errors import BayesidError, ConfigurationError, InputError, NumericalError
from .io import (
    PreprocessConfig,
    load_matrix,
    preprocess,
    read_trace_csv,
    save_matrix,
    save_result,
    write_trace_csv,
)
from .model import Hyperparameters, ObservedMatrix
from .postprocess import extract_canonical
from .rid import max_magnitude_excess, randomized_id
from .sampler import run_gibbs, run_gibbs_aggressive
from .errors import ParseError  # noqa: F401  (re-exported for callers of read_trace_csv)

METHOD_GBT = "gbt"
METHOD_GBTN = "gbtn"
METHOD_GBT_AGGRESSIVE = "gbt-aggressive"
METHOD_RID = "rid"
METHODS = (METHOD_GBT, METHOD_GBTN, METHOD_GBT_AGGRESSIVE, METHOD_RID)

_EXIT_CODES = ((ConfigurationError, 2, "config"), (InputError, 3, "input"), (NumericalError, 4, "numerical"))


@dataclass
class RunConfig:
    """Validated settings for one decomposition run."""

    input_path: Path
    out_dir: Path
    method: str
    k: int
    seed: int
    iterations: int
    burn_in: int
    thinning: int
    oversample: float | None
    fmt: str | None
    has_header: bool
    prep: PreprocessConfig

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.oversample is not None and self.method != METHOD_RID:
            raise ConfigurationError("--oversample applies only to the rid method")


def _add_preprocess_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cap", type=float, default=100.0, metavar="VALUE",
                        help="cap observed values at VALUE (default 100)")
    parser.add_argument("--no-cap", action="store_true", help="disable value capping")
    parser.add_argument("--undo-log", action="store_true",
                        help="exponentiate observed values first (undo a log transform)")
    parser.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True,
                        help="per-column standardization over observed entries")
    parser.add_argument("--duplicate-columns", action=argparse.BooleanOptionalAction, default=False,
                        help="append a copy of every column after cleaning")
    parser.add_argument("--min-observed", type=int, default=3, metavar="COUNT",
                        help="drop rows/columns with fewer observed entries (default 3)")


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=("csv", "matrix_market"), default=None,
                        help="input format (default: by file extension)")
    parser.add_argument("--has-header", action="store_true", help="skip the first CSV row")


def _add_sampler_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--iterations", type=int, default=500)
    parser.add_argument("--burn-in", type=int, default=100)
    parser.add_argument("--thinning", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayesid",
        description="Magnitude-bounded interpolative matrix decomposition",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="decompose one matrix with one method")
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path, nargs="?", default=None,
                   help="output directory (alternative to --out)")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--method", choices=METHODS, default=METHOD_GBT)
    p.add_argument("--k", type=int, required=True, help="number of columns to keep")
    p.add_argument("--aggressive", action="store_true",
                   help="use the aggressive sampler (gbt only)")
    p.add_argument("--oversample", type=float, default=None,
                   help="rid oversampling factor (default 1.2)")
    _add_sampler_flags(p)
    _add_input_flags(p)
    _add_preprocess_flags(p)

    p = sub.add_parser("benchmark", help="compare gbt and rid over several ranks")
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path, nargs="?", default=None)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--k", type=int, action="append", required=True,
                   help="rank to evaluate; repeat for several")
    p.add_argument("--oversample", type=float, default=None)
    _add_sampler_flags(p)
    _add_input_flags(p)
    _add_preprocess_flags(p)

    p = sub.add_parser("synth", help="generate a synthetic instance with known basis")
    p.add_argument("--out", type=Path, required=True, help="output CSV path")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True,
                   help="columns before duplication (the file gets twice as many)")
    p.add_argument("--rank", type=int, required=True, help="number of true basis columns")
    p.add_argument("--noise", type=float, default=0.0, help="noise standard deviation")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("diagnose", help="convergence/mixing report for a trace.csv")
    p.add_argument("trace", type=Path)
    p.add_argument("--out", type=Path, default=None, help="directory for report files")
    p.add_argument("--burn-in", type=int, default=0,
                   help="iterations to drop before autocorrelation (default 0)")
    p.add_argument("--max-lag", type=int, default=20)
    return parser


def _resolve_out(args) -> Path:
    given = [p for p in (args.output, args.out) if p is not None]
    if len(given) != 1:
        raise ConfigurationError("give exactly one output directory (positional or --out)")
    return given[0]


def _prep_from_args(args) -> PreprocessConfig:
    if args.min_observed < 0:
        raise ConfigurationError(f"--min-observed must be nonnegative, got {args.min_observed}")
    return PreprocessConfig(
        cap_value=None if args.no_cap else args.cap,
        undo_log=args.undo_log,
        standardize=args.standardize,
        duplicate_columns=args.duplicate_columns,
        min_observed_per_vector=args.min_observed,
    )


def _prep_metadata(prep: PreprocessConfig, before, after) -> dict:
    return {
        "prep_cap": prep.cap_value if prep.cap_value is not None else "none",
        "prep_undo_log": prep.undo_log,
        "prep_standardize": prep.standardize,
        "prep_duplicate_columns": prep.duplicate_columns,
        "prep_min_observed": prep.min_observed_per_vector,
        "rows_loaded": before[0],
        "cols_loaded": before[1],
        "rows_used": after[0],
        "cols_used": after[1],
    }


def _hyperparameters(cfg: RunConfig) -> Hyperparameters:
    return Hyperparameters(
        k=cfg.k,
        iterations=cfg.iterations,
        burn_in=cfg.burn_in,
        thinning=cfg.thinning,
        variant=METHOD_GBTN if cfg.method == METHOD_GBTN else METHOD_GBT,
        aggressive=cfg.method == METHOD_GBT_AGGRESSIVE,
    )


def cmd_decompose(args) -> int:
    method = args.method
    if args.aggressive:
        if method == METHOD_GBT:
            method = METHOD_GBT_AGGRESSIVE
        elif method != METHOD_GBT_AGGRESSIVE:
            raise ConfigurationError("--aggressive applies only to the gbt method")
    cfg = RunConfig(
        input_path=args.input,
        out_dir=_resolve_out(args),
        method=method,
        k=args.k,
        seed=args.seed,
        iterations=args.iterations,
        burn_in=args.burn_in,
        thinning=args.thinning,
        oversample=args.oversample,
        fmt=args.format,
        has_header=args.has_header,
        prep=_prep_from_args(args),
    )
    raw = load_matrix(cfg.input_path, fmt=cfg.fmt, has_header=cfg.has_header)
    data = preprocess(raw, cfg.prep)
    rng = np.random.default_rng(cfg.seed)
    meta = {
        "command": "decompose",
        "method": cfg.method,
        "k": cfg.k,
        "seed": cfg.seed,
        **_prep_metadata(cfg.prep, raw.shape, data.shape),
    }

    if cfg.method == METHOD_RID:
        oversample = 1.2 if cfg.oversample is None else cfg.oversample
        result = randomized_id(data.values, cfg.k, rng, oversample=oversample)
        final_mse = diagnostics.mse(data.values, result.c, result.w)
        meta.update({
            "oversample": oversample,
            "j_set": [int(j) for j in result.j_set],
            "mse": final_mse,
            "mse_observed": diagnostics.mse_observed(data, result.c, result.w),
            "max_abs_w": result.max_abs_w,
            "magnitude_excess": max_magnitude_excess(result.w),
        })
        save_result(cfg.out_dir, result.c, result.w, meta)
        print(f"method=rid k={cfg.k} mse={final_mse:.6g} max_abs_w={result.max_abs_w:.6g}")
        return 0

    hp = _hyperparameters(cfg)
    runner = run_gibbs_aggressive if hp.aggressive else run_gibbs
    state, trace = runner(data, hp, rng)
    report = build_run_report(trace, hp.burn_in, hp.thinning)
    canonical = extract_canonical(state, data)
    meta.update({
        "iterations": hp.iterations,
        "burn_in": hp.burn_in,
        "thinning": hp.thinning,
        "j_set": [int(j) for j in canonical.j_set],
        "mse": report.mse_final,
        "mse_observed": report.mse_observed_final,
        "mse_posterior_mean": report.mse_posterior_mean,
        "mse_canonical": diagnostics.mse(data.values, canonical.c, canonical.w),
        "sigma2_final": report.sigma2_final,
        "accepted_swaps": report.accepted_swaps,
        "iterations_to_plateau": report.iterations_to_plateau,
        "max_abs_w": float(np.max(np.abs(canonical.w))),
        "magnitude_excess": max_magnitude_excess(canonical.w),
        "mixing": report.mixing,
    })
    save_result(cfg.out_dir, canonical.c, canonical.w, meta)
    write_trace_csv(cfg.out_dir / "trace.csv", trace)
    print(
        f"method={cfg.method} k={cfg.k} mse={report.mse_final:.6g} "
        f"posterior_mean_mse={report.mse_posterior_mean:.6g} mixing={report.mixing}"
    )
    return 0


def cmd_benchmark(args) -> int:
    out_dir = _resolve_out(args)
    prep = _prep_from_args(args)
    ks = list(args.k)
    for k in ks:
        if k < 1:
            raise ConfigurationError(f"k must be at least 1, got {k}")
    raw = load_matrix(args.input, fmt=args.format, has_header=args.has_header)
    data = preprocess(raw, prep)

    rows = []
    timings = []
    for k in ks:
        for method in (METHOD_GBT, METHOD_RID):
            started = time.perf_counter()
            rng = np.random.default_rng(args.seed)
            try:
                if method == METHOD_RID:
                    oversample = 1.2 if args.oversample is None else args.oversample
                    result = randomized_id(data.values, k, rng, oversample=oversample)
                    cell = {
                        "mse": diagnostics.mse(data.values, result.c, result.w),
                        "mse_observed": diagnostics.mse_observed(data, result.c, result.w),
                        "max_abs_w": result.max_abs_w,
                        "magnitude_excess": max_magnitude_excess(result.w),
                    }
                else:
                    hp = Hyperparameters(
                        k=k, iterations=args.iterations, burn_in=args.burn_in,
                        thinning=args.thinning,
                    )
                    state, trace = run_gibbs(data, hp, rng)
                    canonical = extract_canonical(state, data)
                    cell = {
                        "mse": diagnostics.posterior_mean_mse(
                            trace.mse_per_iter, hp.burn_in, hp.thinning
                        ),
                        "mse_observed": float(np.mean(
                            trace.mse_observed_per_iter[
                                diagnostics.kept_iterations(hp.iterations, hp.burn_in, hp.thinning)
                            ]
                        )),
                        "max_abs_w": float(np.max(np.abs(canonical.w))),
                        "magnitude_excess": max_magnitude_excess(canonical.w),
                    }
                status = "ok"
            except BayesidError as exc:
                cell = {"mse": "", "mse_observed": "", "max_abs_w": "", "magnitude_excess": ""}
                status = f"{_category(exc)}: {exc}"
            timings.append((k, method, time.perf_counter() - started))
            rows.append({"k": k, "method": method, **cell, "status": status})

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "benchmark.csv", "w") as fh:
        cols = ["k", "method", "mse", "mse_observed", "max_abs_w", "magnitude_excess", "status"]
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_cell(row[c]) for c in cols) + "\n")
    # wall times are inherently nondeterministic, so they live apart from
    # the reproducible artifacts
    with open(out_dir / "timings.csv", "w") as fh:
        fh.write("k,method,seconds\n")
        for k, method, seconds in timings:
            fh.write(f"{k},{method},{seconds:.3f}\n")
    for row in rows:
        loss = row["mse"] if row["mse"] == "" else f"{row['mse']:.6g}"
        print(f"k={row['k']} method={row['method']} mse={loss} status={row['status']}")
    return 0


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def cmd_synth(args) -> int:
    m, n, rank = args.rows, args.cols, args.rank
    if m < 1 or n < 1:
        raise ConfigurationError(f"rows and cols must be positive, got {m} x {n}")
    if not 1 <= rank <= n:
        raise ConfigurationError(f"rank must lie in [1, {n}], got {rank}")
    if args.noise < 0:
        raise ConfigurationError(f"noise must be nonnegative, got {args.noise}")
    rng = np.random.default_rng(args.seed)
    basis = rng.normal(size=(m, rank))
    weights = rng.uniform(-1.0, 1.0, size=(rank, n - rank))
    full = np.concatenate([basis, basis @ weights], axis=1)
    full = np.concatenate([full, full], axis=1)
    if args.noise > 0:
        full = full + rng.normal(0.0, args.noise, size=full.shape)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    save_matrix(out, ObservedMatrix.fully_observed(full))
    truth = {
        "rows": m,
        "cols_before_duplication": n,
        "cols": 2 * n,
        "true_rank": rank,
        "basis_indices": list(range(rank)),
        "twin_offset": n,
        "noise_sigma": args.noise,
        "seed": args.seed,
    }
    truth_path = out.with_name(out.name + ".truth.json")
    with open(truth_path, "w") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out} ({m} x {2 * n}) and {truth_path}")
    return 0


def cmd_diagnose(args) -> int:
    if args.burn_in < 0:
        raise ConfigurationError(f"--burn-in must be nonnegative, got {args.burn_in}")
    if args.max_lag < 1:
        raise ConfigurationError(f"--max-lag must be at least 1, got {args.max_lag}")
    trace = read_trace_csv(args.trace)
    iters = trace["mse"].size
    plateau = iterations_to_plateau(trace["mse"])

    autocorrs = {}
    for pos, chain in sorted(trace["probes"].items()):
        kept = chain[min(args.burn_in, iters - 1):]
        lag = min(args.max_lag, kept.size - 1)
        if lag < 1:
            autocorrs[pos] = None
            continue
        try:
            autocorrs[pos] = diagnostics.autocorrelation(kept, lag)
        except BayesidError:
            autocorrs[pos] = None
    verdict = mixing_verdict(autocorrs)

    lines = [
        f"iterations={iters}",
        f"mse_final={trace['mse'][-1]:.17g}",
        f"iterations_to_plateau={plateau if plateau is not None else 'none'}",
        f"mixing={verdict}",
    ]
    for pos, rho in sorted(autocorrs.items()):
        name = f"y_r{pos[0]}_c{pos[1]}"
        if rho is None:
            lines.append(f"probe_{name}=degenerate")
        else:
            tail = np.abs(rho[diagnostics.MIXING_LAG_THRESHOLD + 1:])
            worst = float(tail.max()) if tail.size else 0.0
            lines.append(f"probe_{name}=max_abs_autocorr_beyond_lag10:{worst:.17g}")

    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.txt", "w") as fh:
            fh.write("\n".join(lines) + "\n")
        max_len = max((rho.size for rho in autocorrs.values() if rho is not None), default=0)
        with open(out / "autocorrelation.csv", "w") as fh:
            names = [f"y_r{p[0]}_c{p[1]}" for p in sorted(autocorrs)]
            fh.write("lag," + ",".join(names) + "\n")
            for lag in range(max_len):
                cells = []
                for pos in sorted(autocorrs):
                    rho = autocorrs[pos]
                    cells.append("%.17g" % rho[lag] if rho is not None and lag < rho.size else "")
                fh.write(f"{lag}," + ",".join(cells) + "\n")
    for line in lines:
        print(line)
    return 0


def _category(exc: BayesidError) -> str:
    for klass, _, name in _EXIT_CODES:
        if isinstance(exc, klass):
            return name
    return "error"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "decompose": cmd_decompose,
        "benchmark": cmd_benchmark,
        "synth": cmd_synth,
        "diagnose": cmd_diagnose,
    }
    try:
        return handlers[args.command](args)
    except BayesidError as exc:
        for klass, code, name in _EXIT_CODES:
            if isinstance(exc, klass):
                print(f"error: {name}: {exc}", file=sys.stderr)
                return code
        print(f"error: internal: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
