"""Catalog of admissible damping and restoring nonlinearities.

The solver accepts a velocity nonlinearity F1 (must be nondecreasing with
F1(0) = 0) and a displacement nonlinearity F2 (must vanish at some anchor
s_bar and have a primitive bounded below by a non-positive floor c). Each
catalog entry carries a closed-form derivative and primitive so the estimate
auditors never have to differentiate numerically.

All functions are pure; entries are safe for unrestricted concurrent use.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class NonlinearFn:
    """A scalar C1 nonlinearity with derivative and primitive.

    Attributes:
        id: catalog name.
        params: numeric parameters the entry was built with.
        eval: s -> F(s), vectorized over ndarrays.
        deriv: s -> F'(s).
        primitive: s -> integral of F from anchor to s, or None if absent.
        anchor: the point s_bar where F is required to vanish (restoring role).
        floor: lower bound c <= 0 for the primitive, or None if unknown.
        floor_estimated: True when the floor came from grid minimization
            rather than a closed form.
    """

    id: str
    params: dict
    eval: Callable
    deriv: Callable
    primitive: Optional[Callable]
    anchor: float = 0.0
    floor: Optional[float] = None
    floor_estimated: bool = False

    @property
    def is_zero(self) -> bool:
        return self.id == "zero"


@dataclass
class HypothesisReport:
    """Outcome of sampling the solvability hypotheses on a grid.

    violations holds (sample point, quantity name, offending value) triples;
    passed is True exactly when the list is empty.
    """

    passed: bool
    violations: list = field(default_factory=list)


def _require_nonneg(params: dict, key: str, default: float, entry: str) -> float:
    value = float(params.get(key, default))
    if value < 0.0:
        raise ValueError(f"{entry} requires {key} >= 0, got {value}")
    return value


def make_nonlinearity(id: str, params: Optional[dict] = None) -> NonlinearFn:
    """Build a catalog nonlinearity.

    Known ids: zero; linear(m); cubic(alpha); cubic_minus_linear; sine;
    linear_damping(gamma); cubic_damping(gamma). Slope-like parameters must
    be nonnegative so the entry stays admissible in its intended role.
    """
    params = dict(params or {})

    if id == "zero":
        _reject_params(id, params, ())
        return NonlinearFn(
            id=id, params={},
            eval=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
            deriv=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
            primitive=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
            anchor=0.0, floor=0.0,
        )
    if id == "linear":
        _reject_params(id, params, ("m",))
        m = _require_nonneg(params, "m", 1.0, id)
        return NonlinearFn(
            id=id, params={"m": m},
            eval=lambda s, m=m: m * np.asarray(s, dtype=float),
            deriv=lambda s, m=m: np.full_like(np.asarray(s, dtype=float), m),
            primitive=lambda s, m=m: 0.5 * m * np.asarray(s, dtype=float) ** 2,
            anchor=0.0, floor=0.0,
        )
    if id == "cubic":
        _reject_params(id, params, ("alpha",))
        alpha = _require_nonneg(params, "alpha", 1.0, id)
        return NonlinearFn(
            id=id, params={"alpha": alpha},
            eval=lambda s, a=alpha: a * np.asarray(s, dtype=float) ** 3,
            deriv=lambda s, a=alpha: 3.0 * a * np.asarray(s, dtype=float) ** 2,
            primitive=lambda s, a=alpha: 0.25 * a * np.asarray(s, dtype=float) ** 4,
            anchor=0.0, floor=0.0,
        )
    if id == "cubic_minus_linear":
        _reject_params(id, params, ())
        # primitive s^4/4 - s^2/2 bottoms out at -1/4 at s = +-1
        return NonlinearFn(
            id=id, params={},
            eval=lambda s: np.asarray(s, dtype=float) ** 3 - np.asarray(s, dtype=float),
            deriv=lambda s: 3.0 * np.asarray(s, dtype=float) ** 2 - 1.0,
            primitive=lambda s: 0.25 * np.asarray(s, dtype=float) ** 4
            - 0.5 * np.asarray(s, dtype=float) ** 2,
            anchor=0.0, floor=-0.25,
        )
    if id == "sine":
        _reject_params(id, params, ())
        return NonlinearFn(
            id=id, params={},
            eval=lambda s: np.sin(np.asarray(s, dtype=float)),
            deriv=lambda s: np.cos(np.asarray(s, dtype=float)),
            primitive=lambda s: 1.0 - np.cos(np.asarray(s, dtype=float)),
            anchor=0.0, floor=0.0,
        )
    if id == "linear_damping":
        _reject_params(id, params, ("gamma",))
        gamma = _require_nonneg(params, "gamma", 1.0, id)
        return NonlinearFn(
            id=id, params={"gamma": gamma},
            eval=lambda s, g=gamma: g * np.asarray(s, dtype=float),
            deriv=lambda s, g=gamma: np.full_like(np.asarray(s, dtype=float), g),
            primitive=lambda s, g=gamma: 0.5 * g * np.asarray(s, dtype=float) ** 2,
            anchor=0.0, floor=0.0,
        )
    if id == "cubic_damping":
        _reject_params(id, params, ("gamma",))
        gamma = _require_nonneg(params, "gamma", 1.0, id)
        return NonlinearFn(
            id=id, params={"gamma": gamma},
            eval=lambda s, g=gamma: g * np.asarray(s, dtype=float) ** 3,
            deriv=lambda s, g=gamma: 3.0 * g * np.asarray(s, dtype=float) ** 2,
            primitive=lambda s, g=gamma: 0.25 * g * np.asarray(s, dtype=float) ** 4,
            anchor=0.0, floor=0.0,
        )
    raise ValueError(f"unknown nonlinearity id {id!r}")


def _reject_params(id: str, params: dict, allowed: tuple) -> None:
    unknown = set(params) - set(allowed)
    if unknown:
        raise ValueError(f"nonlinearity {id!r} does not accept parameters {sorted(unknown)}")


CATALOG_IDS = (
    "zero",
    "linear",
    "cubic",
    "cubic_minus_linear",
    "sine",
    "linear_damping",
    "cubic_damping",
)

# ids whose entries satisfy the nondecreasing / vanishing-at-zero damping role
F1_ELIGIBLE_IDS = ("zero", "linear", "cubic", "linear_damping", "cubic_damping")


def estimate_floor(fn: NonlinearFn, lo: float = -20.0, hi: float = 20.0, n: int = 20001) -> NonlinearFn:
    """Return a copy of fn with a grid-estimated primitive floor.

    Used when a restoring nonlinearity arrives without a declared floor; the
    estimate is clamped to be non-positive and flagged so downstream reports
    can tell it apart from a closed-form constant.
    """
    if fn.primitive is None:
        raise ValueError(f"nonlinearity {fn.id!r} has no primitive to minimize")
    grid = np.linspace(lo, hi, n)
    floor = min(0.0, float(np.min(fn.primitive(grid))))
    return dataclasses.replace(fn, floor=floor, floor_estimated=True)


def with_floor(fn: NonlinearFn, floor: float) -> NonlinearFn:
    """Return a copy of fn with an explicitly declared primitive floor."""
    if floor > 0.0:
        raise ValueError(f"floor must be non-positive, got {floor}")
    return dataclasses.replace(fn, floor=float(floor), floor_estimated=False)


def with_anchor(fn: NonlinearFn, anchor: float) -> NonlinearFn:
    """Return a copy of fn with a different declared anchor."""
    return dataclasses.replace(fn, anchor=float(anchor))


def validate_hypotheses(
    f1: NonlinearFn,
    f2: NonlinearFn,
    s_range: tuple = (-10.0, 10.0),
    n_samples: int = 1001,
) -> HypothesisReport:
    """Sample the solvability hypotheses for an (F1, F2) pair on a grid.

    Checks, each recorded as a named violation when it fails:
      * F1(0) = 0 and F1' >= -1e-12 on the grid;
      * F2(anchor) = 0, primitive >= floor - 1e-12 on the grid;
      * a central difference of the primitive matches F2 within
        max(1e-6, 1e-6*|F2|).

    Failures are reported, never raised, so callers can batch-audit catalogs.
    """
    lo, hi = float(s_range[0]), float(s_range[1])
    if not lo < hi:
        raise ValueError(f"s_range must satisfy lo < hi, got {s_range}")
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")

    grid = np.linspace(lo, hi, n_samples)
    violations: list = []

    f1_zero = float(np.asarray(f1.eval(0.0)))
    if abs(f1_zero) > 1e-12:
        violations.append((0.0, "F1(0)", f1_zero))

    slopes = np.asarray(f1.deriv(grid), dtype=float)
    for s, d in zip(grid[slopes < -1e-12], slopes[slopes < -1e-12]):
        violations.append((float(s), "F1_prime", float(d)))

    anchor_value = float(np.asarray(f2.eval(f2.anchor)))
    if abs(anchor_value) > 1e-12:
        violations.append((float(f2.anchor), "F2(anchor)", anchor_value))

    if f2.primitive is None:
        violations.append((float(f2.anchor), "primitive_missing", float("nan")))
    else:
        prim = np.asarray(f2.primitive(grid), dtype=float)
        floor = f2.floor if f2.floor is not None else 0.0
        bad = prim < floor - 1e-12
        for s, p in zip(grid[bad], prim[bad]):
            violations.append((float(s), "primitive_floor", float(p)))

        h = 1e-4 * np.maximum(1.0, np.abs(grid))
        diff = (np.asarray(f2.primitive(grid + h)) - np.asarray(f2.primitive(grid - h))) / (2.0 * h)
        target = np.asarray(f2.eval(grid), dtype=float)
        tol = np.maximum(1e-6, 1e-6 * np.abs(target))
        bad = np.abs(diff - target) > tol
        for s, d in zip(grid[bad], diff[bad]):
            violations.append((float(s), "primitive_derivative", float(d)))

    return HypothesisReport(passed=not violations, violations=violations)
