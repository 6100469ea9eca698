"""Randomized verification of risk-statistic axioms.

Each check draws a seeded batch of inputs, evaluates both sides of the axiom
in one vectorized pass and reports the worst violation.  A failing report
carries a counterexample whose inputs can be fed back through :func:`replay`
to reproduce the violation.

Axiom identifiers::

    A1        cash additivity          R(X + b1) = R(X) - b
    A2        monotonicity             X >= Y  =>  R(X) <= R(Y)
    A3        convexity
    A4-proxy  Lipschitz probe on the sampling box (stands in for closedness)
    A5        cash sub-additivity      z1 <= z2 => R(X+z1 1)+z1 <= R(X+z2 1)+z2
    A5-left   R(X + z1) >= R(X) - z,  z >= 0
    A5-right  R(X - z1) <= R(X) + z,  z >= 0
    B1..B4    loss-based axioms
    LB=>CSA   rho((1-eps)X - z1) <= (1-eps) rho(X) + z, eps in EPS_SEQUENCE and eps = 0
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Mapping, Sequence, Union

import numpy as np

__all__ = [
    "AxiomReport",
    "Counterexample",
    "ReportGroup",
    "EPS_SEQUENCE",
    "check_cash_additivity",
    "check_monotonicity",
    "check_convexity",
    "check_closedness_proxy",
    "check_cash_subadditivity",
    "check_loss_based",
    "check_axioms",
    "register_relation",
    "replay",
    "apply_statistic",
]

IDENTITY_TOL = 1e-9
INEQUALITY_SLACK = 1e-12
EPS_SEQUENCE = (0.5, 0.1, 0.01, 0.001)
B1_GRID = tuple(np.arange(0.0, 10.0 + 0.25, 0.5))

Box = Union[float, Sequence[float]]
Relation = Callable[[Callable, Mapping[str, np.ndarray]], tuple]


def apply_statistic(stat: Callable, x: np.ndarray) -> np.ndarray:
    """Evaluate ``stat`` row-wise on a stack ``(..., N)``.

    Vectorized statistics are called once; scalar-only callables fall back to
    a per-row loop.
    """
    x = np.asarray(x, dtype=float)
    try:
        out = np.asarray(stat(x), dtype=float)
    except (TypeError, ValueError):
        if x.ndim < 2:
            raise
        out = None
    if out is None or out.shape != x.shape[:-1]:
        out = np.apply_along_axis(lambda row: float(stat(row)), -1, x)
    return out


@dataclass
class Counterexample:
    inputs: dict
    lhs: float
    rhs: float
    violation: float

    def to_dict(self) -> dict:
        return {
            "inputs": self.inputs,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "violation": self.violation,
        }


@dataclass
class AxiomReport:
    axiom: str
    verdict: str
    trials: int
    tolerance: float
    seed: int
    max_violation: float
    counterexample: Counterexample | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "axiom": self.axiom,
            "verdict": self.verdict,
            "trials": self.trials,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "max_violation": self.max_violation,
            "counterexample": None if self.counterexample is None else self.counterexample.to_dict(),
        }


@dataclass
class ReportGroup:
    """Several related reports, e.g. the three forms of cash sub-additivity."""

    name: str
    reports: list = field(default_factory=list)

    def __iter__(self) -> Iterator[AxiomReport]:
        return iter(self.reports)

    def __len__(self) -> int:
        return len(self.reports)

    def __getitem__(self, axiom: str) -> AxiomReport:
        for report in self.reports:
            if report.axiom == axiom:
                return report
        raise KeyError(axiom)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def consistent(self) -> bool:
        """Pair form of A5 agrees with the conjunction of its one-sided forms."""
        try:
            pair, left, right = self["A5"], self["A5-left"], self["A5-right"]
        except KeyError:
            return True
        return pair.passed == (left.passed and right.passed)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "consistent": self.consistent,
            "reports": [r.to_dict() for r in self.reports],
        }


# --- relations: (stat, batched inputs) -> (lhs, rhs); "le" means lhs <= rhs

_RELATIONS: dict[str, tuple[Relation, str]] = {}


def register_relation(axiom: str, kind: str) -> Callable[[Relation], Relation]:
    if kind not in ("eq", "le"):
        raise ValueError(kind)

    def deco(fn: Relation) -> Relation:
        _RELATIONS[axiom] = (fn, kind)
        return fn

    return deco


def _col(v: np.ndarray) -> np.ndarray:
    return np.asarray(v, dtype=float)[..., None]


@register_relation("A1", "eq")
def _cash_additivity(stat, s):
    return apply_statistic(stat, s["X"] + _col(s["b"])), apply_statistic(stat, s["X"]) - s["b"]


@register_relation("A2", "le")
def _monotonicity(stat, s):
    return apply_statistic(stat, s["X"]), apply_statistic(stat, s["Y"])


@register_relation("A3", "le")
def _convexity(stat, s):
    lam = s["lam"]
    mix = _col(lam) * s["X"] + _col(1.0 - lam) * s["Y"]
    rhs = lam * apply_statistic(stat, s["X"]) + (1.0 - lam) * apply_statistic(stat, s["Y"])
    return apply_statistic(stat, mix), rhs


@register_relation("A4-proxy", "le")
def _lipschitz(stat, s):
    diff = np.abs(apply_statistic(stat, s["X"]) - apply_statistic(stat, s["Y"]))
    dist = np.max(np.abs(s["X"] - s["Y"]), axis=-1)
    return diff, s["L"] * dist


@register_relation("A5", "le")
def _cash_subadditivity_pair(stat, s):
    lhs = apply_statistic(stat, s["X"] + _col(s["z1"])) + s["z1"]
    rhs = apply_statistic(stat, s["X"] + _col(s["z2"])) + s["z2"]
    return lhs, rhs


@register_relation("A5-left", "le")
def _cash_subadditivity_left(stat, s):
    return apply_statistic(stat, s["X"]) - s["z"], apply_statistic(stat, s["X"] + _col(s["z"]))


@register_relation("A5-right", "le")
def _cash_subadditivity_right(stat, s):
    return apply_statistic(stat, s["X"] - _col(s["z"])), apply_statistic(stat, s["X"]) + s["z"]


@register_relation("B1", "eq")
def _normalization(stat, s):
    a = np.asarray(s["a"], dtype=float)
    ones = np.ones((a.size, int(np.asarray(s["N"]).reshape(-1)[0])))
    return apply_statistic(stat, -_col(a) * ones), a


register_relation("B2", "le")(_monotonicity)


@register_relation("B3", "eq")
def _loss_dependence(stat, s):
    return apply_statistic(stat, s["X"]), apply_statistic(stat, np.minimum(s["X"], 0.0))


register_relation("B4", "le")(_convexity)


@register_relation("LB=>CSA", "le")
def _loss_based_implication(stat, s):
    eps = s["eps"]
    lhs = apply_statistic(stat, _col(1.0 - eps) * s["X"] - _col(s["z"]))
    return lhs, (1.0 - eps) * apply_statistic(stat, s["X"]) + s["z"]


def _violations(lhs: np.ndarray, rhs: np.ndarray, kind: str) -> np.ndarray:
    v = np.abs(lhs - rhs) if kind == "eq" else lhs - rhs
    return np.where(np.isnan(v), np.inf, v)


def _worst_index(violation: np.ndarray, samples: Mapping[str, np.ndarray]) -> int:
    """Largest violation; ties go to the lexicographically smallest input."""
    top = np.flatnonzero(violation == violation.max())
    if top.size == 1:
        return int(top[0])
    rows = np.hstack([np.asarray(samples[k], dtype=float).reshape(len(violation), -1)[top]
                      for k in sorted(samples)])
    order = np.lexsort(rows.T[::-1])
    return int(top[order[0]])


def _run(axiom: str, stat: Callable, samples: dict, tol: float, seed: int) -> AxiomReport:
    relation, kind = _RELATIONS[axiom]
    lhs, rhs = relation(stat, samples)
    lhs = np.broadcast_to(np.asarray(lhs, dtype=float), np.shape(rhs))
    violation = _violations(lhs, np.asarray(rhs, dtype=float), kind)
    trials = violation.size
    worst = _worst_index(violation, samples)
    max_violation = float(violation[worst])
    report = AxiomReport(axiom, "pass", trials, tol, seed, max_violation)
    if max_violation > tol:
        report.verdict = "fail"
        inputs = {k: np.asarray(v)[worst].tolist() for k, v in sorted(samples.items())}
        report.counterexample = Counterexample(
            inputs, float(lhs[worst]), float(rhs[worst]), max_violation
        )
    return report


def replay(stat: Callable, axiom: str, inputs: Mapping[str, Any]) -> tuple[float, float, float]:
    """Re-evaluate one counterexample; returns ``(lhs, rhs, violation)``."""
    relation, kind = _RELATIONS[axiom]
    batch = {k: np.asarray([v], dtype=float) for k, v in inputs.items()}
    lhs, rhs = relation(stat, batch)
    lhs, rhs = np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float)
    v = _violations(lhs, rhs, kind)
    return float(lhs[0]), float(rhs[0]), float(v[0])


# --- sampling

def _bounds(box: Box) -> tuple[float, float]:
    if np.ndim(box) == 0:
        half = float(box)
        if not half > 0:
            raise ValueError(f"box half-width must be positive, got {box!r}")
        return -half, half
    lo, hi = (float(v) for v in box)
    if not hi > lo:
        raise ValueError(f"box bounds must satisfy lo < hi, got {box!r}")
    return lo, hi


def _span(box: Box) -> float:
    lo, hi = _bounds(box)
    return max(abs(lo), abs(hi))


def _dimension(stat: Callable, dim: int | None) -> int:
    n = dim if dim is not None else getattr(stat, "dimension", None)
    if n is None:
        raise ValueError("statistic has no intrinsic dimension; pass dim=")
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return int(n)


def _validate(trials: int, tol: float) -> None:
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")


def _points(rng: np.random.Generator, box: Box, trials: int, n: int) -> np.ndarray:
    lo, hi = _bounds(box)
    return rng.uniform(lo, hi, size=(trials, n))


def _dominating_pair(rng, box, trials, n):
    """Y uniform in the box, X = Y plus a non-negative bump (zero in about half the coordinates)."""
    lo, hi = _bounds(box)
    y = rng.uniform(lo, hi, size=(trials, n))
    bump = rng.uniform(0.0, hi - lo, size=(trials, n)) * (rng.random((trials, n)) < 0.5)
    return y + bump, y


def check_cash_additivity(stat, trials=10_000, tol=IDENTITY_TOL, box: Box = 10.0, *,
                          dim=None, seed=0) -> AxiomReport:
    _validate(trials, tol)
    n = _dimension(stat, dim)
    rng = np.random.default_rng(seed)
    span = _span(box)
    samples = {"X": _points(rng, box, trials, n), "b": rng.uniform(-span, span, trials)}
    return _run("A1", stat, samples, tol, seed)


def check_monotonicity(stat, trials=10_000, tol=INEQUALITY_SLACK, box: Box = 10.0, *,
                       dim=None, seed=0, axiom="A2") -> AxiomReport:
    _validate(trials, tol)
    n = _dimension(stat, dim)
    x, y = _dominating_pair(np.random.default_rng(seed), box, trials, n)
    return _run(axiom, stat, {"X": x, "Y": y}, tol, seed)


def check_convexity(stat, trials=10_000, tol=INEQUALITY_SLACK, box: Box = 10.0, *,
                    dim=None, seed=0, axiom="A3") -> AxiomReport:
    _validate(trials, tol)
    n = _dimension(stat, dim)
    rng = np.random.default_rng(seed)
    samples = {
        "X": _points(rng, box, trials, n),
        "Y": _points(rng, box, trials, n),
        "lam": rng.uniform(0.0, 1.0, trials),
    }
    return _run(axiom, stat, samples, tol, seed)


def check_closedness_proxy(stat, trials=10_000, tol=INEQUALITY_SLACK, box: Box = 10.0, *,
                           dim=None, seed=0, lipschitz_bound=1e6, halvings=40) -> AxiomReport:
    """Sampled Lipschitz probe standing in for closedness of the graph.

    A finite convex function on R^N is continuous, hence Lipschitz on compact
    boxes.  Each random segment is halved ``halvings`` times, keeping the half
    with the larger change in ``R``; a jump survives the halving and its
    difference quotient blows past ``lipschitz_bound``.
    """
    _validate(trials, tol)
    n = _dimension(stat, dim)
    rng = np.random.default_rng(seed)
    x, y = _points(rng, box, trials, n), _points(rng, box, trials, n)
    rx, ry = apply_statistic(stat, x), apply_statistic(stat, y)
    for _ in range(halvings):
        mid = 0.5 * (x + y)
        rm = apply_statistic(stat, mid)
        left = np.abs(rm - rx) >= np.abs(ry - rm)
        y = np.where(left[:, None], mid, y)
        ry = np.where(left, rm, ry)
        x = np.where(left[:, None], x, mid)
        rx = np.where(left, rx, rm)
    samples = {"X": x, "Y": y, "L": np.full(trials, float(lipschitz_bound))}
    return _run("A4-proxy", stat, samples, tol, seed)


def check_cash_subadditivity(stat, trials=10_000, tol=INEQUALITY_SLACK, box: Box = 10.0, *,
                             dim=None, seed=0) -> ReportGroup:
    """Pair form of cash sub-additivity plus both one-sided forms.

    The three verdicts must agree for any statistic; ``group.consistent``
    records whether they did on this sample.
    """
    _validate(trials, tol)
    n = _dimension(stat, dim)
    span = _span(box)
    rng = np.random.default_rng(seed)
    x = _points(rng, box, trials, n)
    z = np.sort(rng.uniform(-span, span, size=(trials, 2)), axis=1)
    pair = _run("A5", stat, {"X": x, "z1": z[:, 0], "z2": z[:, 1]}, tol, seed)
    x = _points(rng, box, trials, n)
    left = _run("A5-left", stat, {"X": x, "z": rng.uniform(0.0, span, trials)}, tol, seed)
    x = _points(rng, box, trials, n)
    right = _run("A5-right", stat, {"X": x, "z": rng.uniform(0.0, span, trials)}, tol, seed)
    return ReportGroup("cash_subadditivity", [pair, left, right])


def check_loss_based(stat, trials=10_000, tol=IDENTITY_TOL, box: Box = 10.0, *,
                     dim=None, seed=0, eps_sequence=EPS_SEQUENCE) -> ReportGroup:
    """Loss-based axioms B1-B4 and the implication loss-based => cash sub-additive.

    B1 runs on the fixed grid ``a in {0, 0.5, ..., 10}``.  The implication is
    tested at every ``eps`` in ``eps_sequence`` and directly (``eps = 0``) on
    a shared sample of ``(X, z)`` with ``z >= 0``.
    """
    _validate(trials, tol)
    n = _dimension(stat, dim)
    span = _span(box)
    rng = np.random.default_rng(seed)
    a = np.asarray(B1_GRID)
    b1 = _run("B1", stat, {"a": a, "N": np.full(a.size, n)}, tol, seed)
    b2 = check_monotonicity(stat, trials, tol, box, dim=n, seed=seed, axiom="B2")
    b3 = _run("B3", stat, {"X": _points(rng, box, trials, n)}, tol, seed)
    x, y = _points(rng, box, trials, n), _points(rng, box, trials, n)
    lam = rng.uniform(0.0, 1.0, trials)
    lam = np.where(lam == 0.0, 0.5, lam)
    b4 = _run("B4", stat, {"X": x, "Y": y, "lam": lam}, tol, seed)
    x = _points(rng, box, trials, n)
    z = rng.uniform(0.0, span, trials)
    eps = np.repeat(np.asarray((*eps_sequence, 0.0), dtype=float), trials)
    k = len(eps_sequence) + 1
    chain = _run("LB=>CSA", stat, {"X": np.tile(x, (k, 1)), "z": np.tile(z, k), "eps": eps},
                 tol, seed)
    return ReportGroup("loss_based", [b1, b2, b3, b4, chain])


def check_axioms(stat, axioms: Sequence[str], trials=10_000, box: Box = 10.0, *, dim=None,
                 seed=0, tol=None) -> list[AxiomReport]:
    """Run the named axiom checks with the default tolerance for each kind.

    Identities (A1, B1, B3, and the B-suite as a whole) use ``tol`` or
    1e-9; inequalities use ``tol`` or a 1e-12 floating-point slack.
    """
    ident = IDENTITY_TOL if tol is None else tol
    slack = INEQUALITY_SLACK if tol is None else tol
    reports: list[AxiomReport] = []
    wanted = set(axioms)
    kw = dict(dim=dim, seed=seed)
    if "A1" in wanted:
        reports.append(check_cash_additivity(stat, trials, ident, box, **kw))
    if "A2" in wanted:
        reports.append(check_monotonicity(stat, trials, slack, box, **kw))
    if "A3" in wanted:
        reports.append(check_convexity(stat, trials, slack, box, **kw))
    if "A4" in wanted:
        reports.append(check_closedness_proxy(stat, trials, slack, box, **kw))
    if "A5" in wanted:
        reports.extend(check_cash_subadditivity(stat, trials, slack, box, **kw))
    if wanted & {"B1", "B2", "B3", "B4"}:
        reports.extend(check_loss_based(stat, trials, ident, box, **kw))
    return reports
