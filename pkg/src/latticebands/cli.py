"""Command-line front end.

Usage examples::

    latticebands bands --period 5x4 --resolution 65 --out bands.csv
    latticebands quilt --period 8x10 --energy -0.01 --resolution 201
    latticebands counterexample --delta 0.5

Exit codes: 0 success, 1 analysis failure (e.g. an uncertified energy),
2 input error.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import bands as bands_mod
from . import verify
from .core import Period, Potential, PotentialFormatError, load_potential
from .floquet import EigensolverError

log = logging.getLogger("latticebands")

COMMANDS = ("bands", "spectrum", "quilt", "verify", "counterexample", "threshold")
FAMILIES = ("checkerboard", "random")
SIG_DIGITS = 12
EXIT_OK, EXIT_ANALYSIS, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


class AnalysisFailure(RuntimeError):
    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class RunConfig:
    command: str
    period: Period | None = None
    potential_path: Path | None = None
    energy: float | None = None
    resolution: int = bands_mod.DEFAULT_RESOLUTION
    tolerance: float = 1e-9
    out: Path | None = None
    format: str = "json"
    threads: int = 1
    seed: int = 0
    samples: int = 200
    exceptional: str = "all"
    delta: float | None = None
    lambdas: tuple[float, ...] = ()
    family: str = "random"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.resolution < 2:
            raise InputError("resolution must be at least 2")
        if not 0 < self.tolerance <= 1e-3:
            raise InputError("tolerance must lie in (0, 1e-3]")
        if (self.energy is not None) != (self.command == "quilt"):
            raise InputError("--energy is required for quilt and only accepted there")
        if self.energy is not None and not math.isfinite(self.energy):
            raise InputError("energy must be finite")
        if self.format not in ("csv", "json"):
            raise InputError(f"unknown format {self.format!r}")
        if self.threads < 1:
            raise InputError("threads must be positive")
        if self.command == "counterexample" and (self.delta is None or not self.delta > 0):
            raise InputError("counterexample needs --delta > 0")
        if self.command == "threshold":
            if not self.lambdas:
                raise InputError("threshold needs --lambdas")
            if any(b < a for a, b in zip(self.lambdas, self.lambdas[1:])) or any(x < 0 for x in self.lambdas):
                raise InputError("--lambdas must be nonnegative and ascending")
        if self.command == "verify" and self.samples < 1:
            raise InputError("--samples must be positive")


# ---------------------------------------------------------------- formatting


def _round(value: Any) -> Any:
    """Recursively round floats to the report precision."""
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if not math.isfinite(value) else float(f"{value:.{SIG_DIGITS}g}")
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, dict):
        return {str(k): _round(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v) for v in value]
    return value


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{SIG_DIGITS}g}"
    return str(value)


def to_json(result: dict) -> str:
    return json.dumps(_round(result), sort_keys=True, indent=2) + "\n"


def _csv(header: Sequence[str], rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _bands_csv(result: dict) -> str:
    return _csv(("j", "lo", "hi", "grid_error"), [(b["j"], b["lo"], b["hi"], b["grid_error"]) for b in result["bands"]])


def _spectrum_csv(result: dict) -> str:
    eb = result["error_bound"]
    return _csv(("component", "lo", "hi", "error_bound"),
                [(k + 1, lo, hi, eb) for k, (lo, hi) in enumerate(result["intervals"])])


def _quilt_csv(result: dict) -> str:
    buf = io.StringIO()
    buf.write("# theta_resolution phi_resolution E\n")
    buf.write(f"# {result['theta_resolution']} {result['phi_resolution']} {_fmt(result['E'])}\n")
    for row in result["counts"]:
        buf.write(",".join(_fmt(c) for c in row) + "\n")
    return buf.getvalue()


def _verify_csv(result: dict) -> str:
    rows = []
    for rec in result["energies"]:
        cert = rec.get("certificate") or {}
        rows.append((rec["E"], rec["kind"], rec["status"], cert.get("strategy"), cert.get("count_a"),
                     cert.get("count_b"), cert.get("witness_band")))
    return _csv(("E", "kind", "status", "strategy", "count_a", "count_b", "witness_band"), rows)


def _threshold_csv(result: dict) -> str:
    rows = [(r["lambda"], r["counts"][0], r["counts"][1], r["allowed"], int(r["compliant"])) for r in result["records"]]
    return _csv(("lambda", "components_coarse", "components_fine", "allowed", "compliant"), rows)


_CSV_WRITERS = {
    "bands": _bands_csv,
    "spectrum": _spectrum_csv,
    "counterexample": _spectrum_csv,
    "quilt": _quilt_csv,
    "verify": _verify_csv,
    "threshold": _threshold_csv,
}


def render(kind: str, result: dict, fmt: str) -> str:
    if fmt == "json":
        return to_json(result)
    return _CSV_WRITERS[kind](result)


def emit_report(kind: str, result: dict, fmt: str, path: Path | None = None) -> str:
    """Serialize ``result`` with 12 significant digits and write it to ``path`` (or stdout)."""
    text = render(kind, result, fmt)
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
    return text


# ---------------------------------------------------------------- commands


def _resolve_potential(cfg: RunConfig) -> Potential:
    if cfg.potential_path is not None:
        try:
            pot = load_potential(cfg.potential_path)
        except OSError as exc:
            raise InputError(f"cannot read potential: {exc}") from exc
        except (PotentialFormatError, ValueError) as exc:
            raise InputError(str(exc)) from exc
        if cfg.period is not None and cfg.period != pot.period:
            raise InputError(f"--period {cfg.period} disagrees with potential file period {pot.period}")
        return pot
    if cfg.period is None:
        raise InputError("need --period or --potential")
    return Potential.zero(cfg.period)


def _check_residual(residual: float, tolerance: float) -> None:
    if residual > tolerance:
        raise AnalysisFailure(f"eigensolver error bound {residual:.3g} exceeds tolerance {tolerance:g}")


def _header(potential: Potential, cfg: RunConfig) -> dict:
    return {"period": [potential.period.p, potential.period.q], "resolution": cfg.resolution}


def run_bands(cfg: RunConfig) -> dict:
    pot = _resolve_potential(cfg)
    bands = bands_mod.compute_bands(pot, cfg.resolution, cfg.threads)
    _check_residual(max(b.residual_bound for b in bands), cfg.tolerance)
    union = bands_mod.spectrum_from_bands(bands)
    return {**_header(pot, cfg), "bands": [b.to_dict() for b in bands], "spectrum": union.to_dict()}


def run_spectrum(cfg: RunConfig) -> dict:
    pot = _resolve_potential(cfg)
    bands = bands_mod.compute_bands(pot, cfg.resolution, cfg.threads)
    _check_residual(max(b.residual_bound for b in bands), cfg.tolerance)
    spec = bands_mod.spectrum_from_bands(bands)
    gaps = bands_mod.find_gaps(spec, pot)
    return {**_header(pot, cfg), **spec.to_dict(), "gaps": [[g.lo, g.hi] for g in gaps]}


def run_quilt(cfg: RunConfig) -> dict:
    pot = _resolve_potential(cfg)
    q = bands_mod.quilt(pot, cfg.energy, cfg.resolution, threads=cfg.threads)
    return {"period": [pot.period.p, pot.period.q], **q.to_dict()}


def run_verify(cfg: RunConfig) -> dict:
    if cfg.potential_path is not None:
        raise InputError("verify certifies the free Laplacian; --potential is not accepted")
    if cfg.period is None:
        raise InputError("verify needs --period")
    exceptional: str | int = cfg.exceptional
    if exceptional != "all":
        try:
            exceptional = int(exceptional)
        except ValueError as exc:
            raise InputError("--exceptional must be 'all' or a positive integer") from exc
        if exceptional < 1:
            raise InputError("--exceptional must be 'all' or a positive integer")
    report = verify.verify_theorem_sweep(cfg.period, cfg.samples, exceptional)
    result = report.to_dict()
    if report.failures:
        raise AnalysisFailure(f"{len(report.failures)} energies could not be certified", result)
    return result


def run_counterexample(cfg: RunConfig) -> dict:
    try:
        spec = verify.kruger_gap(cfg.delta, cfg.resolution)
    except verify.ResolutionTooCoarse as exc:
        raise InputError(str(exc)) from exc
    except verify.CertificationError as exc:
        raise AnalysisFailure(str(exc)) from exc
    return {"delta": cfg.delta, "period": [2, 2], "resolution": cfg.resolution, **spec.to_dict()}


def _family(name: str, seed: int):
    if name == "checkerboard":
        return lambda period: Potential.checkerboard(1.0).retile(period)
    rng = np.random.default_rng(seed)
    return lambda period: Potential.random(period, 1.0, rng)


def run_threshold(cfg: RunConfig) -> dict:
    if cfg.period is None:
        raise InputError("threshold needs --period")
    if cfg.family == "checkerboard" and (cfg.period.p % 2 or cfg.period.q % 2):
        raise InputError("the checkerboard family needs even periods")
    res = verify.estimate_threshold(cfg.period, _family(cfg.family, cfg.seed), cfg.lambdas,
                                    cfg.resolution, cfg.threads)
    return {"period": [cfg.period.p, cfg.period.q], "family": cfg.family, "seed": cfg.seed,
            "resolution": cfg.resolution, **res.to_dict()}


_RUNNERS = {
    "bands": run_bands,
    "spectrum": run_spectrum,
    "quilt": run_quilt,
    "verify": run_verify,
    "counterexample": run_counterexample,
    "threshold": run_threshold,
}


def run(cfg: RunConfig) -> int:
    """Execute one command and write its report; returns the exit status."""
    try:
        result = _RUNNERS[cfg.command](cfg)
    except InputError as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    except (AnalysisFailure, EigensolverError) as exc:
        log.error("analysis failure: %s", exc)
        report = getattr(exc, "report", None)
        if report is not None:
            emit_report(cfg.command, report, cfg.format, cfg.out)
        return EXIT_ANALYSIS
    emit_report(cfg.command, result, cfg.format, cfg.out)
    return EXIT_OK


# ---------------------------------------------------------------- argument parsing


def _period_arg(text: str) -> Period:
    try:
        return Period.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _lambdas_arg(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad lambda list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--period", type=_period_arg, help="period as PxQ, e.g. 5x4")
    common.add_argument("--potential", type=Path, help="potential file (.json or .csv)")
    common.add_argument("--resolution", type=int, default=bands_mod.DEFAULT_RESOLUTION,
                        help="phase grid points per axis (default: %(default)s)")
    common.add_argument("--tolerance", type=float, default=1e-9,
                        help="largest accepted eigensolver error bound (default: %(default)s)")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format (default: from --out suffix, else json)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0, help="seed for random potential families")

    parser = argparse.ArgumentParser(prog="latticebands",
                                     description="Band spectra of periodic Schrodinger operators on Z^2.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("bands", parents=[common], help="certified band enclosures")
    sub.add_parser("spectrum", parents=[common], help="spectrum as a union of components")
    p = sub.add_parser("quilt", parents=[common], help="eigenvalue-count grid at an energy")
    p.add_argument("--energy", type=float)
    p = sub.add_parser("verify", parents=[common], help="certify band-interior energies of the free Laplacian")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--exceptional", default="all", help="'all' or number of exceptional energies to spot-check")
    p = sub.add_parser("counterexample", parents=[common], help="checkerboard potential with a gap at zero")
    p.add_argument("--delta", type=float)
    p = sub.add_parser("threshold", parents=[common], help="scan coupling strengths for compliant spectra")
    p.add_argument("--lambdas", type=_lambdas_arg, default=())
    p.add_argument("--family", choices=FAMILIES, default="random")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fmt = args.format
    if fmt is None:
        fmt = "csv" if args.out is not None and args.out.suffix.lower() == ".csv" else "json"
    return RunConfig(
        command=args.command,
        period=args.period,
        potential_path=args.potential,
        energy=getattr(args, "energy", None),
        resolution=args.resolution,
        tolerance=args.tolerance,
        out=args.out,
        format=fmt,
        threads=args.threads,
        seed=args.seed,
        samples=getattr(args, "samples", 200),
        exceptional=getattr(args, "exceptional", "all"),
        delta=getattr(args, "delta", None),
        lambdas=getattr(args, "lambdas", ()),
        family=getattr(args, "family", "random"),
    )


def _configure_logging() -> None:
    level = os.environ.get("LATTICEBANDS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        cfg = config_from_args(args)
    except InputError as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
