"""Scenario vectors, discount vectors and the catalog of risk statistics.

A risk statistic maps a vector of N scenario outcomes to a real capital
requirement.  Every evaluator here is vectorized over leading axes: an input
of shape ``(..., N)`` returns an array of shape ``(...)`` (a Python float for
a single vector).  The axiom checkers rely on that to test thousands of
samples per call.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence, Union

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "KINDS",
    "AXIOM_IDS",
    "RiskStatisticSpec",
    "SpecError",
    "DimensionError",
    "as_scenario",
    "as_discount",
    "as_weights",
    "clip_losses",
    "eval_worst_case",
    "eval_neg_expectation",
    "eval_entropic",
    "eval_discounted",
    "eval_loss_based",
    "eval_scaled_worst_case",
    "evaluate",
    "worst_case",
    "neg_expectation",
    "entropic",
    "discounted",
    "loss_based",
    "scaled_worst_case",
]

KINDS = (
    "worst_case",
    "neg_expectation",
    "entropic",
    "discounted",
    "loss_based",
    "scaled_worst_case",
)
AXIOM_IDS = ("A1", "A2", "A3", "A4", "A5", "B1", "B2", "B3", "B4")

WEIGHT_SUM_TOL = 1e-9
MAX_NESTING = 32

ArrayLike = Union[Sequence[float], np.ndarray]
Statistic = Callable[[np.ndarray], Any]


class SpecError(ValueError):
    """Invalid statistic parameters or a malformed spec document."""


class DimensionError(ValueError):
    """Scenario vector length does not match the statistic's dimension."""


def as_scenario(x: ArrayLike, dim: int | None = None) -> np.ndarray:
    """Validate scenario data and return it as a float array.

    Accepts a single vector ``(N,)`` or a stack ``(..., N)``.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        raise DimensionError("scenario data must have at least one axis")
    if arr.shape[-1] < 1:
        raise DimensionError("scenario dimension N must be at least 1")
    if dim is not None and arr.shape[-1] != dim:
        raise DimensionError(f"expected {dim} scenarios, got {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("scenario values must be finite")
    return arr


def as_discount(d: ArrayLike) -> np.ndarray:
    arr = np.asarray(d, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise SpecError("discount factors must be a non-empty vector")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise SpecError(f"discount factors must lie in [0, 1], got {arr.tolist()}")
    return arr


def as_weights(w: ArrayLike) -> np.ndarray:
    arr = np.asarray(w, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise SpecError("weights must be a non-empty vector")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise SpecError(f"weights must be non-negative, got {arr.tolist()}")
    if abs(arr.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise SpecError(f"weights must sum to 1, got sum {arr.sum()!r}")
    return arr


def _scalar(out: np.ndarray) -> Any:
    return float(out) if np.ndim(out) == 0 else out


def clip_losses(x: ArrayLike) -> np.ndarray:
    """Componentwise ``min(x_i, 0)``, the loss part of a position."""
    return np.minimum(as_scenario(x), 0.0)


def eval_worst_case(x: ArrayLike) -> Any:
    """``R(X) = -min_i X_i``."""
    return _scalar(-np.min(as_scenario(x), axis=-1))


def eval_scaled_worst_case(c: float, x: ArrayLike) -> Any:
    """``R(X) = -c * min_i X_i``.  Not cash sub-additive for ``c > 1``."""
    return _scalar(-c * np.min(as_scenario(x), axis=-1))


def eval_neg_expectation(w: ArrayLike, x: ArrayLike) -> Any:
    """``R(X) = -sum_i w_i X_i``."""
    w = as_weights(w)
    return _scalar(-(as_scenario(x, w.size) @ w))


def eval_entropic(beta: float, w: ArrayLike, x: ArrayLike) -> Any:
    """Entropic statistic ``(1/beta) * log sum_i w_i exp(-beta X_i)``.

    Evaluated in log-sum-exp form so that ``|beta X_i|`` well beyond 700
    does not overflow.
    """
    if not beta > 0:
        raise SpecError(f"entropic rate must be positive, got {beta!r}")
    w = as_weights(w)
    x = as_scenario(x, w.size)
    return _scalar(logsumexp(-beta * x, b=w, axis=-1) / beta)


def eval_discounted(base: Statistic, d: ArrayLike, x: ArrayLike) -> Any:
    """Spot statistic: ``base`` applied to the discounted position ``D * X``.

    The product is componentwise, ``(D_1 X_1, ..., D_N X_N)``.
    """
    d = as_discount(d)
    return _scalar(np.asarray(base(d * as_scenario(x, d.size))))


def eval_loss_based(w: ArrayLike, x: ArrayLike) -> Any:
    """``rho(M) = -sum_i w_i min(M_i, 0)``; depends only on the losses of ``M``."""
    w = as_weights(w)
    return _scalar(-(np.minimum(as_scenario(x, w.size), 0.0) @ w))


def _freeze(value: Any) -> Any:
    if isinstance(value, RiskStatisticSpec):
        return value
    if isinstance(value, (list, tuple, np.ndarray)):
        return tuple(float(v) for v in value)
    return value


@dataclass(frozen=True)
class RiskStatisticSpec:
    """Immutable, serializable description of a catalog risk statistic.

    Instances are callable: ``spec(X)`` evaluates the statistic on a vector
    or a stack of vectors.
    """

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)
    claimed_axioms: frozenset = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", {k: _freeze(v) for k, v in dict(self.params).items()})
        object.__setattr__(self, "claimed_axioms", frozenset(self.claimed_axioms))
        self._validate()

    def _validate(self) -> None:
        p = self.params
        unknown = set(self.claimed_axioms) - set(AXIOM_IDS)
        if unknown:
            raise SpecError(f"unknown axiom ids {sorted(unknown)}")
        expected = {
            "worst_case": set(),
            "neg_expectation": {"weights"},
            "entropic": {"beta", "weights"},
            "discounted": {"base", "discount"},
            "loss_based": {"weights"},
            "scaled_worst_case": {"scale"},
        }
        if self.kind not in expected:
            raise SpecError(f"unknown statistic kind {self.kind!r}")
        if set(p) != expected[self.kind]:
            raise SpecError(
                f"{self.kind} takes parameters {sorted(expected[self.kind])}, got {sorted(p)}"
            )
        if "weights" in p:
            as_weights(p["weights"])
        if "beta" in p and not (np.isfinite(p["beta"]) and p["beta"] > 0):
            raise SpecError(f"entropic rate must be positive, got {p['beta']!r}")
        if "scale" in p and not (np.isfinite(p["scale"]) and p["scale"] > 0):
            raise SpecError(f"scale must be positive, got {p['scale']!r}")
        if self.kind == "discounted":
            if not isinstance(p["base"], RiskStatisticSpec):
                raise SpecError("discounted base must be a RiskStatisticSpec")
            d = as_discount(p["discount"])
            base_dim = p["base"].dimension
            if base_dim is not None and base_dim != d.size:
                raise SpecError(f"base has dimension {base_dim}, discount has {d.size}")

    @property
    def dimension(self) -> int | None:
        """Scenario count fixed by the parameters, or None if any N works."""
        if "weights" in self.params:
            return len(self.params["weights"])
        if "discount" in self.params:
            return len(self.params["discount"])
        return None

    @property
    def depth(self) -> int:
        if self.kind == "discounted":
            return 1 + self.params["base"].depth
        return 1

    def __call__(self, x: ArrayLike) -> Any:
        return evaluate(self, x)

    def to_dict(self) -> dict:
        params = {}
        for key in sorted(self.params):
            value = self.params[key]
            if isinstance(value, RiskStatisticSpec):
                params[key] = value.to_dict()
            elif isinstance(value, tuple):
                params[key] = list(value)
            else:
                params[key] = value
        return {
            "kind": self.kind,
            "params": params,
            "claimed_axioms": sorted(self.claimed_axioms),
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any], _depth: int = 0) -> "RiskStatisticSpec":
        if _depth >= MAX_NESTING:
            raise SpecError(f"spec nesting deeper than {MAX_NESTING}")
        if not isinstance(doc, Mapping) or "kind" not in doc:
            raise SpecError("spec document must be an object with a 'kind' field")
        extra = set(doc) - {"kind", "params", "claimed_axioms"}
        if extra:
            raise SpecError(f"unexpected spec fields {sorted(extra)}")
        params = dict(doc.get("params") or {})
        if "base" in params:
            params["base"] = cls.from_dict(params["base"], _depth + 1)
        return cls(doc["kind"], params, frozenset(doc.get("claimed_axioms") or ()))


def evaluate(spec: RiskStatisticSpec, x: ArrayLike) -> Any:
    """Evaluate ``spec`` on one scenario vector or a stack of them."""
    x = as_scenario(x, spec.dimension)
    p = spec.params
    if spec.kind == "worst_case":
        return eval_worst_case(x)
    if spec.kind == "neg_expectation":
        return eval_neg_expectation(p["weights"], x)
    if spec.kind == "entropic":
        return eval_entropic(p["beta"], p["weights"], x)
    if spec.kind == "discounted":
        return eval_discounted(p["base"], p["discount"], x)
    if spec.kind == "loss_based":
        return eval_loss_based(p["weights"], x)
    if spec.kind == "scaled_worst_case":
        return eval_scaled_worst_case(p["scale"], x)
    raise SpecError(f"unknown statistic kind {spec.kind!r}")


# Constructors with the axiom profile each statistic is known to satisfy.

def worst_case() -> RiskStatisticSpec:
    return RiskStatisticSpec("worst_case", {}, {"A1", "A2", "A3", "A5"})


def neg_expectation(weights: ArrayLike) -> RiskStatisticSpec:
    return RiskStatisticSpec("neg_expectation", {"weights": weights}, {"A1", "A2", "A3", "A5"})


def entropic(beta: float, weights: ArrayLike) -> RiskStatisticSpec:
    return RiskStatisticSpec(
        "entropic", {"beta": float(beta), "weights": weights}, {"A1", "A2", "A3", "A5"}
    )


def discounted(base: RiskStatisticSpec, discount: ArrayLike) -> RiskStatisticSpec:
    return RiskStatisticSpec("discounted", {"base": base, "discount": discount}, {"A2", "A3", "A5"})


def loss_based(weights: ArrayLike) -> RiskStatisticSpec:
    return RiskStatisticSpec(
        "loss_based", {"weights": weights}, {"A2", "A3", "A5", "B1", "B2", "B3", "B4"}
    )


def scaled_worst_case(scale: float) -> RiskStatisticSpec:
    # claims only what actually holds; A5 fails for scale > 1
    return RiskStatisticSpec("scaled_worst_case", {"scale": float(scale)}, {"A2", "A3"})
