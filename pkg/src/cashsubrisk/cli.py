"""Command-line front end.

    cashsubrisk eval        --spec S --data D
    cashsubrisk check       --spec S [--data D | --dim N] --trials K --tol T --box B --seed S
    cashsubrisk penalty     --spec S --grid-step H --box B --mode {paper,conjugate} --out R
    cashsubrisk reconstruct --spec S --data PROBES --grid-step H --box B --mode M [--table T]
    cashsubrisk lift-check  --spec S [--data D | --dim N] --trials K --tol T --box B --seed S

Exit codes: 0 completed and every check passed, 1 completed with a violation
or a gap beyond tolerance, 2 usage or format error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .axioms import check_axioms
from .core import AXIOM_IDS, RiskStatisticSpec, SpecError
from .duality import (
    MODES,
    PenaltySearchError,
    PenaltySurface,
    SearchConfig,
    penalty_surface,
    reconstruct,
)
from .embedding import verify_lift

__all__ = ["RunConfig", "UsageError", "load_scenarios", "load_spec", "emit_report", "run", "main"]

COMMANDS = ("eval", "check", "penalty", "reconstruct", "lift-check")
DEFAULT_AXIOMS = ("A1", "A2", "A3", "A5")
EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    spec_path: str | None = None
    data_path: str | None = None
    trials: int = 10_000
    tol: float | None = None
    box: float = 10.0
    grid_step: float = 0.05
    mode: str = "paper"
    seed: int = 0
    out_path: str | None = None
    dim: int | None = None
    table_path: str | None = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.spec_path is None:
            raise UsageError("--spec is required")
        if self.trials < 1:
            raise UsageError("--trials must be >= 1")
        if self.tol is not None and not self.tol > 0:
            raise UsageError("--tol must be positive")
        if not self.box > 0:
            raise UsageError("--box must be positive")
        if not 0 < self.grid_step <= 1:
            raise UsageError("--grid-step must lie in (0, 1]")
        if self.mode not in MODES:
            raise UsageError(f"--mode must be one of {MODES}")
        if self.dim is not None and self.dim < 1:
            raise UsageError("--dim must be >= 1")


def load_scenarios(path) -> np.ndarray:
    """Read a ``s1,...,sN`` CSV file; one row of N scenario values per position."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [(k, row) for k, row in enumerate(csv.reader(fh), start=1) if row]
    if not rows:
        raise UsageError(f"{path}: empty file")
    header = [h.strip() for h in rows[0][1]]
    n = len(header)
    if header != [f"s{i + 1}" for i in range(n)]:
        raise UsageError(f"{path}: header must read s1,...,sN, got {','.join(header)}")
    data = []
    for lineno, row in rows[1:]:
        if len(row) != n:
            raise UsageError(f"{path}: ragged row {lineno}")
        try:
            values = [float(field) for field in row]
        except ValueError:
            raise UsageError(f"{path}: non-numeric field in row {lineno}") from None
        if not all(np.isfinite(values)):
            raise UsageError(f"{path}: non-finite value in row {lineno}")
        data.append(values)
    if not data:
        raise UsageError(f"{path}: no data rows")
    return np.asarray(data, dtype=float)


def load_spec(path) -> RiskStatisticSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None
    return RiskStatisticSpec.from_dict(doc)


def emit_report(report: dict, out_path=None) -> str:
    """Serialize with a fixed key order; writes to ``out_path`` or returns the text."""
    text = json.dumps(report, indent=2, allow_nan=True) + "\n"
    if out_path is not None:
        Path(out_path).write_text(text)
    return text


def _dimension(config: RunConfig, spec: RiskStatisticSpec, data) -> int:
    for n in (spec.dimension, config.dim, None if data is None else data.shape[1]):
        if n is not None:
            return int(n)
    raise UsageError("cannot infer N: spec has no weights or discount; pass --data or --dim")


def _sidecar(out_path: str) -> Path:
    out = Path(out_path)
    return out.with_name(out.stem + ".penalty.csv")


def _cmd_eval(config, spec, data):
    if data is None:
        raise UsageError("eval needs --data")
    risk = np.asarray(spec(data)).reshape(-1)
    records = [{"row": k + 1, "values": x.tolist(), "risk": float(r)}
               for k, (x, r) in enumerate(zip(data, risk))]
    return EXIT_OK, {"records": records}


def _cmd_check(config, spec, data):
    n = _dimension(config, spec, data)
    axioms = sorted(spec.claimed_axioms) or list(DEFAULT_AXIOMS)
    reports = check_axioms(spec, axioms, config.trials, config.box, dim=n, seed=config.seed,
                           tol=config.tol)
    failed = [r.axiom for r in reports if not r.passed]
    results = {"dimension": n, "axioms": axioms, "failed": failed,
               "reports": [r.to_dict() for r in reports]}
    return (EXIT_VIOLATION if failed else EXIT_OK), results


def _cmd_lift_check(config, spec, data):
    n = _dimension(config, spec, data)
    tol = 1e-9 if config.tol is None else config.tol
    group = verify_lift(spec, config.trials, tol, config.box, dim=n, seed=config.seed)
    return (EXIT_OK if group.passed else EXIT_VIOLATION), {"dimension": n, **group.to_dict()}


def _surface(config, spec, n) -> PenaltySurface:
    if config.table_path is not None:
        surface = PenaltySurface.from_csv(config.table_path)
        if surface.dim != n:
            raise UsageError(f"table has dimension {surface.dim}, expected {n}")
        return surface
    return penalty_surface(spec, config.grid_step, SearchConfig(box=config.box), config.mode, dim=n)


def _cmd_penalty(config, spec, data):
    if config.out_path is None:
        raise UsageError("penalty needs --out for the report and its table")
    n = _dimension(config, spec, data)
    surface = _surface(config, spec, n)
    table = surface.to_csv(_sidecar(config.out_path))
    results = {
        "dimension": n,
        "table": table.name,
        "weight_set": surface.weight_set,
        "points": len(surface),
        "boundary_points": int(surface.boundary.sum()),
        "min_value": float(surface.values.min()),
    }
    return EXIT_OK, results


def _cmd_reconstruct(config, spec, data):
    if data is None:
        raise UsageError("reconstruct needs --data with probe vectors")
    n = _dimension(config, spec, data)
    surface = _surface(config, spec, n)
    risk = np.asarray(spec(data)).reshape(-1)
    rec = np.asarray(reconstruct(surface, data)).reshape(-1)
    gaps = np.abs(rec - risk)
    # default tolerance: lattice spacing times the l1 size of the probe
    if config.tol is None:
        tols = surface.grid_step * np.abs(data).sum(axis=1) + 1e-6
    else:
        tols = np.full(len(data), config.tol)
    records = [
        {"row": k + 1, "probe": x.tolist(), "risk": float(r), "reconstructed": float(q),
         "gap": float(g), "tolerance": float(t), "within": bool(g <= t)}
        for k, (x, r, q, g, t) in enumerate(zip(data, risk, rec, gaps, tols))
    ]
    results = {"dimension": n, "mode": surface.mode, "max_gap": float(gaps.max()),
               "records": records}
    if config.out_path is not None and config.table_path is None:
        results["table"] = surface.to_csv(_sidecar(config.out_path)).name
    return (EXIT_OK if np.all(gaps <= tols) else EXIT_VIOLATION), results


_HANDLERS = {
    "eval": _cmd_eval,
    "check": _cmd_check,
    "penalty": _cmd_penalty,
    "reconstruct": _cmd_reconstruct,
    "lift-check": _cmd_lift_check,
}


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    """Execute one command and write its report; returns the exit code."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        config.validate()
        spec = load_spec(config.spec_path)
        data = None if config.data_path is None else load_scenarios(config.data_path)
        code, results = _HANDLERS[config.command](config, spec, data)
        report = {
            "tool": "cashsubrisk",
            "version": __version__,
            "command": config.command,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "seed": config.seed,
            "config": asdict(config),
            "spec": spec.to_dict(),
            "status": "pass" if code == EXIT_OK else "fail",
            "results": results,
        }
        text = emit_report(report, config.out_path)
        if config.out_path is None:
            stdout.write(text)
        return code
    except (UsageError, SpecError, PenaltySearchError, ValueError, OSError) as exc:
        print(f"cashsubrisk: error: {exc}", file=stderr)
        return EXIT_USAGE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cashsubrisk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--spec", dest="spec_path", required=True)
        p.add_argument("--data", dest="data_path")
        p.add_argument("--trials", type=int, default=10_000)
        p.add_argument("--tol", type=float)
        p.add_argument("--box", type=float, default=10.0)
        p.add_argument("--grid-step", dest="grid_step", type=float, default=0.05)
        p.add_argument("--mode", choices=MODES, default="paper")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", dest="out_path")
        p.add_argument("--dim", type=int)
        p.add_argument("--table", dest="table_path")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return run(RunConfig(**vars(args)))


if __name__ == "__main__":
    sys.exit(main())
