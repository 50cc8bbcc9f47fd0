"""Experiment runner: one binary, one subcommand per pipeline stage.

Exit codes: 0 success, 1 config/IO/validation problems, 2 numerical
non-convergence, 3 a verification assertion failed.  Failures emit a
machine-readable JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import ensembles, qve, spectra, verify
from .errors import (
    AssertionFailure,
    NoConvergence,
    NonConvergence,
    SpecLawError,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_ASSERTION = 3

COMMANDS = (
    "qve-solve",
    "density",
    "sample",
    "spectrum",
    "verify-local-law",
    "verify-stieltjes",
    "verify-deloc",
    "test-projection",
    "test-interlacing",
)


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    out: str | None = None
    overrides: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract wants 1 with usage text
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def _grid_spec(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:count, got {text!r}")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 2 or not lo < hi:
        raise argparse.ArgumentTypeError(f"grid needs lo < hi and count >= 2, got {text!r}")
    return np.linspace(lo, hi, count)


def _eta_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok]


def build_parser() -> _Parser:
    parser = _Parser(prog="speclaw", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qve-solve", help="solve the vector equation at one spectral point")
    p.add_argument("--profile", required=True)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--eta", type=float, default=0.01)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("density", help="tabulate the predicted spectral density")
    p.add_argument("--profile", required=True)
    p.add_argument("--grid", type=_grid_spec, default=qve.default_grid())
    p.add_argument("--eta", type=float, default=qve.DEFAULT_ETA)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sample", help="draw one matrix from an ensemble spec")
    p.add_argument("--ensemble", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=("bin", "mm"), default="bin")
    p.add_argument("--out", required=True)

    p = sub.add_parser("spectrum", help="eigendecompose one normalized sample")
    p.add_argument("--ensemble", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--vectors", action="store_true")
    p.add_argument("--out", required=True)

    for name in ("verify-local-law", "verify-stieltjes", "verify-deloc"):
        p = sub.add_parser(name, help=f"run the {name.removeprefix('verify-')} campaign")
        p.add_argument("--config", required=True)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--csv", default=None)
        if name == "verify-stieltjes":
            p.add_argument("--eta", type=_eta_list, required=True, help="comma-separated eta grid")

    p = sub.add_parser("test-projection", help="projection-concentration failure rates")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("test-interlacing", help="interval-count stability under low-rank updates")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    return parser


def _threads(args) -> int:
    value = getattr(args, "threads", None)
    if value is None:
        value = int(os.environ.get("SPECLAW_THREADS", "1"))
    return max(1, value)


def _load_campaign(args) -> verify.LocalLawConfig:
    cfg = verify.load_local_law_config(args.config)
    updates = {}
    if args.trials is not None:
        updates["trials"] = args.trials
    if args.seed is not None:
        updates["base_seed"] = args.seed
    if args.eps is not None:
        updates["eps"] = args.eps
    if args.delta is not None:
        updates["delta"] = args.delta
    if updates:
        data = cfg.to_dict()
        data.update(updates)
        cfg = verify.LocalLawConfig.from_dict(data)
    return cfg


def _write_json(payload: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(verify.report_json_bytes(payload).decode())


def run(config: RunConfig) -> int:
    """Execute one parsed invocation; returns the process exit status."""
    args = argparse.Namespace(**config.inputs, **config.overrides, out=config.out)
    command = config.command

    if command == "qve-solve":
        profile = qve.load_profile(args.profile)
        opts = qve.SolverOptions(tol=args.tol) if args.tol else None
        sol = qve.solve_qve_continuation(profile, args.x, max(1.0, args.eta), args.eta, 40, opts)
        payload = {
            "x": args.x,
            "eta": args.eta,
            "m": [sol.m.real, sol.m.imag],
            "g": [[v.real, v.imag] for v in sol.g],
            "residual": sol.residual,
            "iterations": sol.iterations,
        }
        if args.out:
            _write_json(payload, args.out)
        print(f"m={sol.m.real:.12g}{sol.m.imag:+.12g}i residual={sol.residual:.3g}")
        return EXIT_OK

    if command == "density":
        profile = qve.load_profile(args.profile)
        curve = qve.extract_density(profile, args.grid, eta=args.eta)
        qve.density_to_csv(curve, args.out)
        print(f"rows={curve.grid.size} mass={curve.mass():.6f} out={args.out}")
        return EXIT_OK

    if command == "sample":
        spec = ensembles.load_ensemble(args.ensemble)
        if args.seed is not None:
            spec = ensembles.with_seed(spec, args.seed)
        matrix = ensembles.sample(spec)
        if args.format == "mm":
            ensembles.save_matrix_market(matrix, args.out)
        else:
            ensembles.save_matrix_binary(matrix, args.out)
        nnz = int(np.count_nonzero(matrix.data))
        print(f"n={matrix.n} nnz={nnz} scaling={matrix.scaling:.6g} out={args.out}")
        return EXIT_OK

    if command == "spectrum":
        spec = ensembles.load_ensemble(args.ensemble)
        if args.seed is not None:
            spec = ensembles.with_seed(spec, args.seed)
        summary = spectra.eigen_full(ensembles.normalized_sample(spec), want_vectors=args.vectors)
        spectra.spectrum_to_csv(summary, args.out)
        lam = summary.eigenvalues
        print(f"n={summary.n} lambda_min={lam[0]:.6g} lambda_max={lam[-1]:.6g} out={args.out}")
        return EXIT_OK

    if command == "verify-local-law":
        cfg = _load_campaign(args)
        report = verify.verify_local_law(cfg, threads=_threads(args))
        if args.out:
            report.to_json(args.out)
        if args.csv:
            report.to_csv(args.csv)
        print(f"pass_fraction={report.pass_fraction:.4f} max_deviation={report.max_deviation:.6g}")
        return EXIT_OK

    if command == "verify-stieltjes":
        cfg = _load_campaign(args)
        report = verify.verify_stieltjes_closeness(cfg, args.eta, threads=_threads(args))
        if args.out:
            report.to_json(args.out)
        print(f"max_discrepancy={report.max_discrepancy:.6g} median_sup={report.median_sup:.6g}")
        return EXIT_OK

    if command == "verify-deloc":
        cfg = _load_campaign(args)
        report = verify.verify_delocalization(cfg, threads=_threads(args))
        if args.out:
            report.to_json(args.out)
        if args.csv:
            report.to_csv(args.csv)
        q = report.ratio_quantiles
        print(f"max_ratio={report.max_ratio:.6g} q99={q.get('q99', float('nan')):.6g}")
        return EXIT_OK

    if command == "test-projection":
        with open(args.config, encoding="utf-8") as fh:
            spec = verify.ProjectionTestSpec.from_dict(json.load(fh))
        report = verify.projection_concentration_test(spec)
        if args.out:
            report.to_json(args.out)
        rates = report.rates()
        print(f"failure_rate_first={rates[0]:.4f} failure_rate_last={rates[-1]:.4f}")
        return EXIT_OK

    if command == "test-interlacing":
        report = verify.interlacing_test(args.trials, args.n, args.seed)
        if args.out:
            report.to_json(args.out)
        print(f"violations=0 trials={report.trials} max_rank1_shift={report.max_shift_rank1}")
        return EXIT_OK

    raise SpecLawError(f"unknown command {command!r}")


def _to_run_config(args: argparse.Namespace) -> RunConfig:
    fields = dict(vars(args))
    command = fields.pop("command")
    out = fields.pop("out", None)
    return RunConfig(command=command, inputs=fields, out=out, overrides={})


def _error_record(kind: str, exc: Exception) -> str:
    return json.dumps({"error": kind, "message": str(exc)}, sort_keys=True)


def _merge_negative_values(argv: list[str]) -> list[str]:
    # argparse mistakes values like "-3:3:600" for flags; fold them into --flag=value
    merged = []
    skip = False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        if tok in ("--grid", "--x") and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            merged.append(f"{tok}={argv[i + 1]}")
            skip = True
        else:
            merged.append(tok)
    return merged


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(_merge_negative_values(list(argv)))
    try:
        return run(_to_run_config(args))
    except (NonConvergence, NoConvergence) as exc:
        print(_error_record("non_convergence", exc), file=sys.stderr)
        return EXIT_NUMERICAL
    except AssertionFailure as exc:
        record = {"error": "assertion_failure", "message": str(exc), "counterexample": exc.counterexample}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return EXIT_ASSERTION
    except (SpecLawError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(_error_record("config", exc), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
