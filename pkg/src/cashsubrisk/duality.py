"""Penalty functions over sub-probability weights and the sup-representation.

A cash sub-additive statistic is recovered from its penalty function as

    R(X) = sup_{P in T} { sum_i P_i (-X_i) - alpha(P) },
    T = { P >= 0, sum_i P_i <= 1 }.

Outcomes enter the pairing with a minus sign so that the representation is
antitone in ``X``, as a risk statistic must be.  Two penalty variants are
computed numerically on a box ``[-B, B]^N``:

``paper``
    ``sup { pairing(P, X) - R(X) : R(X) <= 0 }``, the supremum over the
    acceptance set.
``conjugate``
    ``sup { pairing(P, X) - R(X) }`` over the whole box, the convex conjugate.

Suprema approached only at the edge of the box are returned as finite lower
bounds with ``boundary = True``; the true value may be ``+inf``.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .axioms import apply_statistic
from .core import as_scenario

__all__ = [
    "ACCEPT_TOL",
    "MODES",
    "WEIGHT_SETS",
    "MAX_SURFACE_DIM",
    "SearchConfig",
    "PenaltySurface",
    "GapTable",
    "PenaltySearchError",
    "as_subprobability",
    "pairing",
    "acceptance_membership",
    "acceptance_sample",
    "lattice_count",
    "weight_grid",
    "penalty_min",
    "conjugate_unconstrained",
    "penalty_surface",
    "reconstruct",
    "reconstruct_argmax",
    "duality_gap_report",
]

ACCEPT_TOL = 1e-12
WEIGHT_TOL = 1e-12
MODES = ("paper", "conjugate")
WEIGHT_SETS = ("T", "simplex")
MAX_SURFACE_DIM = 6


class PenaltySearchError(RuntimeError):
    """The box search found no admissible point."""


@dataclass(frozen=True)
class SearchConfig:
    """Box search: a coarse uniform grid followed by coordinate refinement.

    ``points_per_axis`` is lowered (kept odd, so the origin stays on the
    grid) when the full grid would exceed ``max_grid_points``.  Each
    refinement round walks to a local maximum at the current step, then
    multiplies the step by ``shrink``.
    """

    box: float = 10.0
    points_per_axis: int = 41
    rounds: int = 10
    shrink: float = 0.1
    max_grid_points: int = 250_000
    max_moves: int = 2_000

    def __post_init__(self) -> None:
        if not self.box > 0:
            raise ValueError(f"search box must be positive, got {self.box}")
        if self.points_per_axis < 3:
            raise ValueError("need at least 3 grid points per axis")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink factor must lie in (0, 1)")
        if self.rounds < 0:
            raise ValueError("rounds must be non-negative")

    def axis_points(self, dim: int) -> int:
        m = self.points_per_axis
        while m > 3 and m ** dim > self.max_grid_points:
            m -= 1
        return m if m % 2 == 1 else m - 1


def as_subprobability(p, cash_additive: bool = False) -> np.ndarray:
    """Validate a weight vector in T (or in the simplex when ``cash_additive``)."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("weights must be a non-empty vector")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise ValueError(f"weights must be non-negative, got {arr.tolist()}")
    total = arr.sum()
    if total > 1.0 + WEIGHT_TOL:
        raise ValueError(f"weights sum to {total!r} > 1")
    if cash_additive and abs(total - 1.0) > WEIGHT_TOL:
        raise ValueError(f"weights must sum to 1, got {total!r}")
    return arr


def pairing(p, x) -> float | np.ndarray:
    """``sum_i P_i * (-X_i)``; vectorized over leading axes of ``x``."""
    out = -(np.asarray(x, dtype=float) @ np.asarray(p, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def acceptance_membership(stat: Callable, x) -> bool:
    return bool(float(stat(as_scenario(x))) <= ACCEPT_TOL)


def acceptance_sample(stat: Callable, points) -> np.ndarray:
    """Rows of ``points`` that lie in the acceptance set of ``stat``."""
    points = as_scenario(np.atleast_2d(points))
    return points[apply_statistic(stat, points) <= ACCEPT_TOL]


def lattice_count(dim: int, step: float, weight_set: str = "T") -> int:
    n = _divisions(step)
    if weight_set == "T":
        return math.comb(n + dim, dim)
    if weight_set == "simplex":
        return math.comb(n + dim - 1, dim - 1)
    raise ValueError(f"unknown weight set {weight_set!r}")


def _divisions(step: float) -> int:
    if not 0 < step <= 1:
        raise ValueError(f"grid step must lie in (0, 1], got {step!r}")
    n = round(1.0 / step)
    if abs(n * step - 1.0) > 1e-12:
        raise ValueError(f"grid step {step!r} does not divide 1")
    return n


def _compositions(dim: int, total: int, exact: bool) -> np.ndarray:
    """Integer vectors ``k >= 0`` with ``sum k <= total`` (``== total`` if exact), lexicographic."""
    if dim == 1:
        lo = total if exact else 0
        return np.arange(lo, total + 1, dtype=np.int64)[:, None]
    blocks = []
    for k in range(total + 1):
        tail = _compositions(dim - 1, total - k, exact)
        blocks.append(np.hstack([np.full((len(tail), 1), k, dtype=np.int64), tail]))
    return np.vstack(blocks)


def weight_grid(dim: int, step: float, weight_set: str = "T") -> np.ndarray:
    """Lattice points of T (or of the simplex) with spacing ``step``, one per row."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if weight_set not in WEIGHT_SETS:
        raise ValueError(f"unknown weight set {weight_set!r}")
    n = _divisions(step)
    return _compositions(dim, n, weight_set == "simplex") / n


def _coarse_grid(dim: int, cfg: SearchConfig) -> tuple[np.ndarray, float]:
    m = cfg.axis_points(dim)
    axis = np.linspace(-cfg.box, cfg.box, m)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1), axis[1] - axis[0]


def _box_search(stat: Callable, p: np.ndarray, cfg: SearchConfig,
                constrained: bool) -> tuple[float, bool, np.ndarray]:
    dim = p.size

    def objective(xs: np.ndarray) -> np.ndarray:
        r = apply_statistic(stat, xs)
        f = -(xs @ p) - r
        if constrained:
            f = np.where(r <= ACCEPT_TOL, f, -np.inf)
        return np.where(np.isnan(f), -np.inf, f)

    grid, h = _coarse_grid(dim, cfg)
    values = objective(grid)
    best = values.max()
    if not np.isfinite(best):
        raise PenaltySearchError("no admissible point in the search box")

    # among near-ties prefer the most central point, then the lexicographically smallest
    near = np.flatnonzero(values >= best - 1e-12 * (1.0 + abs(best)))
    radius = np.max(np.abs(grid[near]), axis=1)
    order = np.lexsort((*grid[near].T[::-1], radius))
    x = grid[near[order[0]]].copy()
    fx = float(values[near[order[0]]])

    directions = np.vstack([np.eye(dim), -np.eye(dim)])
    for _ in range(cfg.rounds):
        for _ in range(cfg.max_moves):
            cand = np.clip(x + h * directions, -cfg.box, cfg.box)
            vals = objective(cand)
            j = int(np.argmax(vals))
            if not vals[j] > fx:
                break
            x, fx = cand[j], float(vals[j])
        h *= cfg.shrink

    on_edge = bool(np.any(np.abs(x) >= cfg.box * (1.0 - 1e-12)))
    return fx, on_edge, x


def penalty_min(stat: Callable, p, cfg: SearchConfig = SearchConfig()) -> tuple[float, bool]:
    """Penalty at ``p`` as a supremum over the acceptance set.

    Returns ``(value, boundary)``; when ``boundary`` is set the value is only
    a lower bound for the supremum.
    """
    value, edge, _ = _box_search(stat, as_subprobability(p), cfg, constrained=True)
    return value, edge


def conjugate_unconstrained(stat: Callable, p,
                            cfg: SearchConfig = SearchConfig()) -> tuple[float, bool]:
    """Convex conjugate ``sup_X {pairing(P, X) - R(X)}`` over the search box."""
    value, edge, _ = _box_search(stat, as_subprobability(p), cfg, constrained=False)
    return value, edge


def _penalty_point(args) -> tuple[float, bool]:
    stat, p, cfg, mode = args
    value, edge, _ = _box_search(stat, p, cfg, constrained=(mode == "paper"))
    return value, edge


@dataclass
class PenaltySurface:
    """Penalty values on a weight lattice.

    ``boundary[k]`` marks values that are lower bounds only.  ``values`` may
    hold ``inf`` for surfaces read back from a table.
    """

    weights: np.ndarray
    values: np.ndarray
    boundary: np.ndarray
    mode: str
    grid_step: float
    search_box: float
    weight_set: str = "T"

    def __post_init__(self) -> None:
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        self.boundary = np.asarray(self.boundary, dtype=bool).reshape(-1)
        if not (len(self.weights) == len(self.values) == len(self.boundary)):
            raise ValueError("weights, values and boundary flags differ in length")
        if self.mode not in MODES:
            raise ValueError(f"unknown penalty mode {self.mode!r}")

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def __len__(self) -> int:
        return len(self.values)

    def rows(self) -> list[dict]:
        return [
            {"weights": w.tolist(), "value": float(v), "boundary": bool(b)}
            for w, v, b in zip(self.weights, self.values, self.boundary)
        ]

    def to_csv(self, path) -> Path:
        """Write ``P1..PN,value,boundary_flag,mode`` with ``#`` metadata lines on top."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            fh.write(f"# grid_step={self.grid_step!r}\n")
            fh.write(f"# search_box={self.search_box!r}\n")
            fh.write(f"# weight_set={self.weight_set}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"P{i + 1}" for i in range(self.dim)] + ["value", "boundary_flag", "mode"])
            for w, v, b in zip(self.weights, self.values, self.boundary):
                writer.writerow([repr(float(c)) for c in w] + [repr(float(v)), int(b), self.mode])
        return path

    @classmethod
    def from_csv(cls, path) -> "PenaltySurface":
        meta = {"grid_step": "nan", "search_box": "nan", "weight_set": "T"}
        body = []
        with Path(path).open(newline="") as fh:
            for line in fh:
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    meta[key.strip()] = value.strip()
                elif line.strip():
                    body.append(line)
        reader = csv.reader(body)
        header = next(reader, None)
        if header is None or header[-3:] != ["value", "boundary_flag", "mode"]:
            raise ValueError(f"{path}: not a penalty table")
        dim = len(header) - 3
        weights, values, flags, modes = [], [], [], set()
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dim + 3:
                raise ValueError(f"{path}: ragged row {lineno}")
            weights.append([float(c) for c in row[:dim]])
            values.append(float(row[dim]))
            flags.append(row[dim + 1].strip() in ("1", "true", "True"))
            modes.add(row[dim + 2].strip())
        if len(modes) != 1:
            raise ValueError(f"{path}: expected a single mode, got {sorted(modes)}")
        return cls(np.asarray(weights).reshape(-1, dim), values, flags, modes.pop(),
                   float(meta["grid_step"]), float(meta["search_box"]), meta["weight_set"])


def penalty_surface(stat: Callable, grid_step: float, cfg: SearchConfig = SearchConfig(),
                    mode: str = "paper", *, weight_set: str = "T", dim: int | None = None,
                    workers: int = 1) -> PenaltySurface:
    """Evaluate the penalty on every lattice point of T (or the simplex).

    With ``workers > 1`` the lattice is spread over worker processes; results
    come back in lattice order either way.
    """
    if mode not in MODES:
        raise ValueError(f"unknown penalty mode {mode!r}")
    n = dim if dim is not None else getattr(stat, "dimension", None)
    if n is None:
        raise ValueError("statistic has no intrinsic dimension; pass dim=")
    if not 1 <= n <= MAX_SURFACE_DIM:
        raise ValueError(f"penalty surfaces support 1 <= N <= {MAX_SURFACE_DIM}, got {n}")
    weights = weight_grid(n, grid_step, weight_set)
    jobs = [(stat, p, cfg, mode) for p in weights]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_penalty_point, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_penalty_point(job) for job in jobs]
    values = np.array([v for v, _ in results])
    flags = np.array([b for _, b in results], dtype=bool)
    return PenaltySurface(weights, values, flags, mode, grid_step, cfg.box, weight_set)


def _dual_terms(surface: PenaltySurface, x) -> np.ndarray:
    x = as_scenario(x, surface.dim)
    if not np.any(np.isfinite(surface.values)):
        raise ValueError("penalty surface has no finite entry")
    with np.errstate(invalid="ignore"):
        return -(x @ surface.weights.T) - surface.values


def reconstruct(surface: PenaltySurface, x) -> float | np.ndarray:
    """``max_k { pairing(P_k, X) - alpha(P_k) }`` over the surface lattice.

    Boundary-flagged entries take part with their lower-bound value.
    """
    out = np.max(_dual_terms(surface, x), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def reconstruct_argmax(surface: PenaltySurface, x) -> tuple[float, np.ndarray]:
    """Maximizing lattice weight for one vector; ties go to the smallest ``P``."""
    terms = _dual_terms(surface, np.asarray(x, dtype=float).reshape(-1))
    best = terms.max()
    top = np.flatnonzero(terms == best)
    pick = top[np.lexsort(surface.weights[top].T[::-1])[0]]
    return float(best), surface.weights[pick].copy()


@dataclass
class GapTable:
    """Risk values against their reconstructions on a set of probes."""

    probes: np.ndarray
    risk: np.ndarray
    reconstructed: dict = field(default_factory=dict)
    surfaces: dict = field(default_factory=dict)

    def gap(self, mode: str) -> np.ndarray:
        return np.abs(self.reconstructed[mode] - self.risk)

    def max_gap(self, mode: str) -> float:
        return float(self.gap(mode).max())

    def rows(self) -> list[dict]:
        out = []
        for k, x in enumerate(self.probes):
            row = {"probe": x.tolist(), "risk": float(self.risk[k])}
            for mode in sorted(self.reconstructed):
                row[f"reconstructed_{mode}"] = float(self.reconstructed[mode][k])
                row[f"gap_{mode}"] = float(abs(self.reconstructed[mode][k] - self.risk[k]))
            out.append(row)
        return out


def duality_gap_report(stat: Callable, grid_step: float, cfg: SearchConfig = SearchConfig(),
                       probe_count: int = 100, *, probes=None, dim: int | None = None,
                       seed: int = 0, probe_box: float = 3.0, weight_set: str = "T",
                       modes: Sequence[str] = MODES, workers: int = 1) -> GapTable:
    """Compare ``R(X)`` with its reconstruction from penalty surfaces in each mode.

    Probes are drawn uniformly from ``[-probe_box, probe_box]^N`` unless
    given explicitly.
    """
    n = dim if dim is not None else getattr(stat, "dimension", None)
    if probes is None:
        if n is None:
            raise ValueError("statistic has no intrinsic dimension; pass dim=")
        rng = np.random.default_rng(seed)
        probes = rng.uniform(-probe_box, probe_box, size=(probe_count, n))
    probes = as_scenario(np.atleast_2d(probes), n)
    n = probes.shape[1]
    table = GapTable(probes, apply_statistic(stat, probes))
    for mode in modes:
        surface = penalty_surface(stat, grid_step, cfg, mode, weight_set=weight_set, dim=n,
                                  workers=workers)
        table.surfaces[mode] = surface
        table.reconstructed[mode] = np.asarray(reconstruct(surface, probes)).reshape(-1)
    return table
