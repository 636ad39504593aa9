"""Command-line entry points.

`adapt` runs one private adaptation over CSV samples and writes a result
JSON plus an iteration trace; `experiment` drives the synthetic sweep
from a TOML/JSON config.  Every run writes a manifest capturing the full
configuration and seed before any computation starts.

Exit codes: 0 success, 2 invalid input, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import experiments, optimizers as opt, pipeline
from .errors import (InvalidInputError, InvalidParameterError,
                     ProxConvergenceError, RankDeficientError)
from .mechanisms import PrivacyBudget, RandomStream

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

# fallback iteration count when eps=inf disables the closed-form calibration
NOISELESS_DEFAULT_K = 1000


class CLIError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _parse_epsilon(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "infinity"):
        return math.inf
    try:
        eps = float(t)
    except ValueError:
        raise CLIError(f"invalid --epsilon value {text!r}")
    if eps <= 0:
        raise CLIError(f"--epsilon must be positive, got {text}")
    return eps


def read_sample_csv(path, expect_labels: bool):
    """Read a sample CSV with header x1,...,xd and optionally a final y
    column.  Errors carry the offending line number."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise CLIError(f"{path}: {e.strerror or e}")
    if not lines:
        raise CLIError(f"{path}:1: empty file, expected a header row")
    header = [c.strip() for c in lines[0].split(",")]
    has_y = header[-1] == "y"
    xcols = header[:-1] if has_y else header
    if xcols != [f"x{i + 1}" for i in range(len(xcols))] or not xcols:
        raise CLIError(
            f"{path}:1: header must be x1,...,xd" +
            (",y" if expect_labels else "[,y]") + f"; got {lines[0]!r}")
    if expect_labels and not has_y:
        raise CLIError(f"{path}:1: missing required y column")
    d = len(xcols)
    rows, labels = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise CLIError(f"{path}:{lineno}: expected {len(header)} fields, "
                           f"got {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError as e:
            raise CLIError(f"{path}:{lineno}: {e}")
        if not all(math.isfinite(v) for v in vals):
            raise CLIError(f"{path}:{lineno}: non-finite value")
        rows.append(vals[:d])
        if has_y:
            labels.append(vals[d])
    if not rows:
        raise CLIError(f"{path}:2: no data rows")
    X = np.array(rows, dtype=float)
    y = np.array(labels, dtype=float) if has_y else None
    return X, y


def write_manifest(out_dir: Path, command: str, config: dict, seed: int) -> None:
    rec = {
        "command": command,
        "config": config,
        "seed": seed,
        "output_directory": str(out_dir),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(rec, indent=2, sort_keys=True, default=str) + "\n",
        encoding="utf-8")


def cmd_adapt(args) -> int:
    budget = PrivacyBudget(epsilon=args.epsilon, delta=args.delta)
    source_X, source_y = read_sample_csv(args.source, expect_labels=True)
    target_X, target_y = read_sample_csv(args.target, expect_labels=False)
    if target_y is not None:
        raise CLIError(f"{args.target}: target file must not carry a y column")
    if target_X.shape[1] != source_X.shape[1]:
        raise CLIError("source and target dimensions differ "
                       f"({source_X.shape[1]} vs {target_X.shape[1]})")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(out_dir, "adapt", {
        "source": str(args.source), "target": str(args.target),
        "method": args.method, "epsilon": args.epsilon, "delta": args.delta,
        "lambda_cap": args.lambda_cap, "mu": args.mu, "k": args.k,
    }, args.seed)

    rng = RandomStream(args.seed)
    K = args.k
    if K is None and budget.noiseless:
        K = NOISELESS_DEFAULT_K
    sigma_override = 0.0 if budget.noiseless else None
    try:
        if args.method in ("two-stage-fw", "two-stage-md"):
            result = pipeline.two_stage(
                source_X, source_y, target_X,
                method=args.method.rsplit("-", 1)[-1],
                Lambda=args.lambda_cap, budget=budget, rng=rng,
                K=K, mu=args.mu, sigma_override=sigma_override)
        else:
            result = pipeline.single_stage(
                source_X, source_y, target_X, Lambda=args.lambda_cap,
                budget=budget, rng=rng, mu=args.mu, K=K)
    except (RankDeficientError, ProxConvergenceError,
            np.linalg.LinAlgError, FloatingPointError) as e:
        raise CLIError(f"numeric failure: {e}", code=EXIT_NUMERIC)

    trace_path = out_dir / "trace.csv"
    opt.write_trace_csv(result.trace, trace_path)
    (out_dir / "result.json").write_text(
        result.to_json(trace_path=trace_path.name) + "\n", encoding="utf-8")
    return EXIT_OK


def load_experiment_config(path) -> experiments.ExperimentConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise CLIError(f"{path}: {e.strerror or e}")
    try:
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(raw.decode("utf-8"))
        else:
            data = json.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as e:
        raise CLIError(f"{path}: TOML parse error: {e}")
    except json.JSONDecodeError as e:
        raise CLIError(f"{path}:{e.lineno}:{e.colno}: JSON parse error: {e.msg}")
    if not isinstance(data, dict):
        raise CLIError(f"{path}: config must be a table/object")
    # config keys mirror the dataclass fields; "lambda" is a keyword in
    # Python so the dataclass field is lam
    if "lambda" in data:
        data["lam"] = data.pop("lambda")
    known = {f.name for f in dataclasses.fields(experiments.ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise CLIError(f"{path}: unknown config keys: {', '.join(unknown)}")
    for key in ("n_grid", "epsilons"):
        if key in data:
            data[key] = tuple(
                math.inf if isinstance(v, str) and v.lower() == "inf"
                else float(v) if key == "epsilons" else int(v)
                for v in data[key])
    try:
        return experiments.ExperimentConfig(**data)
    except (InvalidParameterError, TypeError) as e:
        raise CLIError(f"{path}: {e}")


def cmd_experiment(args) -> int:
    cfg = load_experiment_config(args.config)
    if args.jobs < 1:
        raise CLIError(f"--jobs must be >= 1, got {args.jobs}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(out_dir, "experiment", dataclasses.asdict(cfg),
                   cfg.base_seed)
    records = experiments.run_sweep(cfg, jobs=args.jobs)
    experiments.write_raw_csv(records, out_dir / "raw.csv")
    experiments.write_aggregate_csv(experiments.aggregate(records),
                                    out_dir / "aggregate.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpadapt",
        description="Differentially private domain adaptation by "
                    "discrepancy minimization.")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("adapt", help="run one adaptation over CSV samples")
    pa.add_argument("--source", required=True, help="labeled source CSV (x1..xd,y)")
    pa.add_argument("--target", required=True, help="unlabeled target CSV (x1..xd)")
    pa.add_argument("--method", required=True,
                    choices=["two-stage-fw", "two-stage-md", "single-stage"])
    pa.add_argument("--epsilon", required=True, type=_parse_epsilon,
                    help="privacy budget; 'inf' runs noiselessly")
    pa.add_argument("--delta", type=float, default=1.0 / 8000.0)
    pa.add_argument("--lambda-cap", dest="lambda_cap", type=float, required=True,
                    help="radius of the hypothesis ball")
    pa.add_argument("--mu", type=float, default=None,
                    help="smoothing level (default: closed-form calibration)")
    pa.add_argument("--k", type=int, default=None,
                    help="iteration count (default: closed-form calibration)")
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--out", required=True, help="output directory")
    pa.set_defaults(func=cmd_adapt)

    pe = sub.add_parser("experiment", help="run the synthetic sweep")
    pe.add_argument("--config", required=True, help="TOML or JSON config file")
    pe.add_argument("--out", required=True, help="output directory")
    pe.add_argument("--jobs", type=int, default=1)
    pe.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors, matching our input-error code
        return int(e.code or 0)
    try:
        return args.func(args)
    except CLIError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (InvalidInputError, InvalidParameterError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (RankDeficientError, ProxConvergenceError,
            np.linalg.LinAlgError, FloatingPointError) as e:
        print(f"error: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
