"""Two-branch extended positions and the lift of a cash sub-additive statistic.

An extended position is a pair ``(X, a)``: the scenario vector ``X`` on one
branch and the sure amount ``a`` on the other.  Given a statistic ``R`` the
lift is

    lift(X, a) = R(X - a1) - a,

which is cash additive for any ``R`` and monotone and convex whenever ``R``
is monotone, convex and cash sub-additive.  ``lift(X, 0) = R(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .axioms import (
    ReportGroup,
    IDENTITY_TOL,
    _bounds,
    _dimension,
    _run,
    _span,
    _validate,
    apply_statistic,
    register_relation,
)
from .core import as_scenario

__all__ = [
    "ExtendedVector",
    "embed",
    "extended_shift",
    "dominates",
    "lift_eval",
    "verify_lift",
]

LIFT_A1_TOL = 1e-12


@dataclass(frozen=True)
class ExtendedVector:
    body: np.ndarray
    cash: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "body", as_scenario(self.body))
        if not np.isfinite(self.cash):
            raise ValueError("cash component must be finite")
        object.__setattr__(self, "cash", float(self.cash))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExtendedVector):
            return NotImplemented
        return self.cash == other.cash and np.array_equal(self.body, other.body)

    def __hash__(self) -> int:
        return hash((self.body.tobytes(), self.cash))

    def to_dict(self) -> dict:
        return {"body": self.body.tolist(), "cash": self.cash}

    @classmethod
    def from_dict(cls, doc: dict) -> "ExtendedVector":
        return cls(np.asarray(doc["body"], dtype=float), float(doc["cash"]))


def embed(x) -> ExtendedVector:
    """Place ``X`` on the scenario branch with zero cash."""
    return ExtendedVector(as_scenario(x), 0.0)


def extended_shift(xh: ExtendedVector, b: float) -> ExtendedVector:
    """Add the sure amount ``b`` on both branches."""
    return ExtendedVector(xh.body + b, xh.cash + b)


def dominates(xh: ExtendedVector, yh: ExtendedVector) -> bool:
    """Order on extended positions: both branches must dominate."""
    return bool(np.all(xh.body >= yh.body) and xh.cash >= yh.cash)


def _lift_batch(stat: Callable, body: np.ndarray, cash: np.ndarray) -> np.ndarray:
    cash = np.asarray(cash, dtype=float)
    return apply_statistic(stat, body - cash[..., None]) - cash


def lift_eval(stat: Callable, xh: ExtendedVector) -> float:
    return float(_lift_batch(stat, xh.body[None, :], np.asarray([xh.cash]))[0])


@register_relation("lift:A1", "eq")
def _lift_cash_additivity(stat, s):
    b = s["b"]
    shifted = _lift_batch(stat, s["X"] + b[..., None], s["a"] + b)
    return shifted, _lift_batch(stat, s["X"], s["a"]) - b


@register_relation("lift:A2", "le")
def _lift_monotonicity(stat, s):
    return _lift_batch(stat, s["X"], s["a1"]), _lift_batch(stat, s["Y"], s["a2"])


@register_relation("lift:A3", "le")
def _lift_convexity(stat, s):
    lam = s["lam"]
    mix_body = lam[..., None] * s["X"] + (1.0 - lam)[..., None] * s["Y"]
    mix_cash = lam * s["a1"] + (1.0 - lam) * s["a2"]
    rhs = lam * _lift_batch(stat, s["X"], s["a1"]) + (1.0 - lam) * _lift_batch(stat, s["Y"], s["a2"])
    return _lift_batch(stat, mix_body, mix_cash), rhs


@register_relation("lift:extension", "eq")
def _lift_extension(stat, s):
    x = s["X"]
    return _lift_batch(stat, x, np.zeros(x.shape[:-1])), apply_statistic(stat, x)


def verify_lift(stat, trials=10_000, tol=IDENTITY_TOL, box=10.0, *, dim=None, seed=0,
                a1_tol=LIFT_A1_TOL) -> ReportGroup:
    """Check that the lift of ``stat`` is a convex, cash additive statistic.

    Cash additivity of the lift is an algebraic identity and is held to
    ``a1_tol`` regardless of ``stat``.  Monotonicity of the lift needs ``stat``
    to be monotone and cash sub-additive; convexity needs ``stat`` convex.
    The extension identity ``lift(embed(X)) == R(X)`` is checked exactly.
    """
    _validate(trials, tol)
    n = _dimension(stat, dim)
    lo, hi = _bounds(box)
    span = _span(box)
    rng = np.random.default_rng(seed)

    def points():
        return rng.uniform(lo, hi, size=(trials, n))

    a1 = _run("lift:A1", stat, {"X": points(), "a": rng.uniform(-span, span, trials),
                                "b": rng.uniform(-span, span, trials)}, a1_tol, seed)

    # X^ >= Y^: bump each branch by a non-negative amount, zero about half the time
    y, a_y = points(), rng.uniform(-span, span, trials)
    bump = rng.uniform(0.0, hi - lo, size=(trials, n)) * (rng.random((trials, n)) < 0.5)
    cash_bump = rng.uniform(0.0, 2 * span, trials) * (rng.random(trials) < 0.5)
    a2 = _run("lift:A2", stat, {"X": y + bump, "a1": a_y + cash_bump, "Y": y, "a2": a_y},
              tol, seed)

    a3 = _run("lift:A3", stat, {"X": points(), "a1": rng.uniform(-span, span, trials),
                                "Y": points(), "a2": rng.uniform(-span, span, trials),
                                "lam": rng.uniform(0.0, 1.0, trials)}, tol, seed)

    # exact identity, so zero tolerance
    ext = _run("lift:extension", stat, {"X": points()}, 0.0, seed)
    return ReportGroup("lift", [a1, a2, a3, ext])
