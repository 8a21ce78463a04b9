"""Modal ODE assembly and time integration for the hinged-beam equation.

Projecting u_tt + F1(u_t) + u_xxxx + F2(u) = f onto the first k sine modes
turns the PDE into

    g'' + Lam*g + Gamma1(g') + Gamma2(g) = G(t),

where Lam = diag(lambda_i**2), Gamma_j projects the pointwise nonlinearity
back onto the basis, and G holds the modal forcing. Gamma evaluation runs
through the synthesize -> pointwise -> analyze pipeline on a precomputed
node table (see basis.TransformPlan); that pipeline is the hot kernel.

Two integrators are provided. The default is Strang splitting with the exact
per-mode rotation for the linear part, which stays stable no matter how
stiff the retained modes are (lambda_k**2 grows like k**4). Classical RK4 is
kept as an independent cross-check behind an explicit stability guard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .basis import (
    EigenBasis,
    Interval,
    Quadrature,
    TransformPlan,
    default_quadrature,
)
from .nonlinearity import NonlinearFn


@dataclass(frozen=True)
class Forcing:
    """Pointwise forcing f(x, t) with an optional closed-form time derivative.

    time_deriv must be supplied for audits that differentiate the equation in
    time; when present it is expected to match central differences of eval.
    """

    id: str
    eval: Callable
    time_deriv: Optional[Callable] = None

    @property
    def is_zero(self) -> bool:
        return self.id == "zero"


def make_forcing(id: str, interval: Interval, params: Optional[dict] = None) -> Forcing:
    """Build a catalog forcing on the given interval.

    Known ids:
        zero
        mode_cos: amplitude * sin(mode*pi*(x-a)/L) * cos(omega*t), with
            params amplitude (default 1.0), mode (default 1), omega (default 1.0).
    """
    params = dict(params or {})
    if id == "zero":
        if params:
            raise ValueError(f"forcing 'zero' does not accept parameters {sorted(params)}")
        zero = lambda x, t: np.zeros_like(np.asarray(x, dtype=float))
        return Forcing(id=id, eval=zero, time_deriv=zero)
    if id == "mode_cos":
        unknown = set(params) - {"amplitude", "mode", "omega"}
        if unknown:
            raise ValueError(f"forcing 'mode_cos' does not accept parameters {sorted(unknown)}")
        amplitude = float(params.get("amplitude", 1.0))
        mode = int(params.get("mode", 1))
        omega = float(params.get("omega", 1.0))
        if mode < 1:
            raise ValueError(f"forcing 'mode_cos' requires mode >= 1, got {mode}")
        freq = mode * np.pi / interval.length
        a = interval.a

        def eval_fn(x, t, A=amplitude, w=omega, q=freq, a=a):
            return A * np.sin(q * (np.asarray(x, dtype=float) - a)) * math.cos(w * t)

        def time_deriv_fn(x, t, A=amplitude, w=omega, q=freq, a=a):
            return -A * w * np.sin(q * (np.asarray(x, dtype=float) - a)) * math.sin(w * t)

        return Forcing(id=id, eval=eval_fn, time_deriv=time_deriv_fn)
    raise ValueError(f"unknown forcing id {id!r}")


def make_profile(id: str, interval: Interval, params: Optional[dict] = None) -> Callable:
    """Build a catalog initial-data profile x -> values.

    Known ids:
        zero
        mode: amplitude times the L2-normalized eigenfunction e_mode.
        parabola: amplitude * (x - a) * (b - x).
    """
    params = dict(params or {})
    if id == "zero":
        if params:
            raise ValueError(f"profile 'zero' does not accept parameters {sorted(params)}")
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    if id == "mode":
        unknown = set(params) - {"amplitude", "mode"}
        if unknown:
            raise ValueError(f"profile 'mode' does not accept parameters {sorted(unknown)}")
        amplitude = float(params.get("amplitude", 1.0))
        mode = int(params.get("mode", 1))
        if mode < 1:
            raise ValueError(f"profile 'mode' requires mode >= 1, got {mode}")
        freq = mode * np.pi / interval.length
        scale = amplitude * math.sqrt(2.0 / interval.length)

        return lambda x, s=scale, q=freq, a=interval.a: s * np.sin(q * (np.asarray(x, dtype=float) - a))
    if id == "parabola":
        unknown = set(params) - {"amplitude"}
        if unknown:
            raise ValueError(f"profile 'parabola' does not accept parameters {sorted(unknown)}")
        amplitude = float(params.get("amplitude", 1.0))
        a, b = interval.a, interval.b

        def parabola(x, A=amplitude, a=a, b=b):
            x = np.asarray(x, dtype=float)
            return A * (x - a) * (b - x)

        return parabola
    raise ValueError(f"unknown initial profile id {id!r}")


class OdeSystem:
    """Assembled modal system: basis, nonlinearities, forcing, quadrature.

    Immutable after construction; a single system can back many concurrent
    solves because every method is a pure function of its arguments.
    """

    def __init__(
        self,
        basis: EigenBasis,
        f1: NonlinearFn,
        f2: NonlinearFn,
        forcing: Forcing,
        quad: Optional[Quadrature] = None,
    ) -> None:
        self.basis = basis
        self.f1 = f1
        self.f2 = f2
        self.forcing = forcing
        self.quad = quad if quad is not None else default_quadrature(basis)
        self.lam = basis.lambdas
        self.lam_sq = basis.lambdas**2
        self.plan = TransformPlan(basis, self.quad)
        self._zeros = np.zeros(basis.k)

    def forcing_coeffs(self, t: float) -> np.ndarray:
        """Modal forcing G(t), one inner product per retained mode."""
        if self.forcing.is_zero:
            return self._zeros
        return self.plan.coefficients(self.forcing.eval(self.quad.nodes, t))

    def nonlinear_coeffs(self, fn: NonlinearFn, coeffs: np.ndarray) -> np.ndarray:
        """Gamma(fn, coeffs): synthesize, apply fn pointwise, project back."""
        if fn.is_zero:
            return self._zeros
        return self.plan.coefficients(fn.eval(self.plan.values(coeffs)))


@dataclass(frozen=True)
class ModalState:
    """Time t together with modal positions g and velocities gdot."""

    t: float
    g: np.ndarray
    gdot: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """States of one solve at the output cadence, plus how they were made."""

    system: OdeSystem
    states: list
    dt: float
    method: str

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


def project_initial_data(y: Callable, z: Callable, system: OdeSystem) -> ModalState:
    """L2-project initial displacement y and velocity z onto the basis.

    Orthogonal projection, so no norm of the projected data can exceed the
    corresponding norm of the data itself.
    """
    return ModalState(t=0.0, g=system.plan.project(y), gdot=system.plan.project(z))


def modal_rhs(system: OdeSystem, state: ModalState) -> np.ndarray:
    """Modal accelerations g'' = G(t) - Lam*g - Gamma1(gdot) - Gamma2(g)."""
    return _accelerations(system, state.t, state.g, state.gdot)


def _accelerations(system: OdeSystem, t: float, g: np.ndarray, gdot: np.ndarray) -> np.ndarray:
    return (
        system.forcing_coeffs(t)
        - system.lam_sq * g
        - system.nonlinear_coeffs(system.f1, gdot)
        - system.nonlinear_coeffs(system.f2, g)
    )


def rk4_stability_limit(basis: EigenBasis) -> float:
    """Largest step the explicit RK4 path accepts: 2.5 / lambda_k."""
    return 2.5 / float(basis.lambdas[-1])


def _rotate(system: OdeSystem, g: np.ndarray, v: np.ndarray, dt: float):
    ang = system.lam * dt
    c = np.cos(ang)
    s = np.sin(ang)
    return g * c + v * (s / system.lam), -g * (system.lam * s) + v * c


def _step_splitting(system: OdeSystem, state: ModalState, dt: float) -> ModalState:
    # Strang: half kick at t, exact linear rotation over dt, half kick at t+dt,
    # so the step is exact (up to rounding) whenever F1 = F2 = 0 and f = 0
    v = _kick(system, state.g, state.gdot, state.t, 0.5 * dt)
    g, v = _rotate(system, state.g, v, dt)
    v = _kick(system, g, v, state.t + dt, 0.5 * dt)
    return ModalState(t=state.t + dt, g=g, gdot=v)


def _kick(system: OdeSystem, g: np.ndarray, v: np.ndarray, t_frozen: float, h: float) -> np.ndarray:
    # velocity-only flow with g and t frozen; two midpoint stages keep the
    # splitting second order even when F1 makes the flow state-dependent
    base = system.forcing_coeffs(t_frozen) - system.nonlinear_coeffs(system.f2, g)
    v_mid = v + 0.5 * h * (base - system.nonlinear_coeffs(system.f1, v))
    return v + h * (base - system.nonlinear_coeffs(system.f1, v_mid))


def _step_rk4(system: OdeSystem, state: ModalState, dt: float) -> ModalState:
    t, g, v = state.t, state.g, state.gdot
    a1 = _accelerations(system, t, g, v)
    g2 = g + 0.5 * dt * v
    v2 = v + 0.5 * dt * a1
    a2 = _accelerations(system, t + 0.5 * dt, g2, v2)
    g3 = g + 0.5 * dt * v2
    v3 = v + 0.5 * dt * a2
    a3 = _accelerations(system, t + 0.5 * dt, g3, v3)
    g4 = g + dt * v3
    v4 = v + dt * a3
    a4 = _accelerations(system, t + dt, g4, v4)
    g_new = g + (dt / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4)
    v_new = v + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    return ModalState(t=t + dt, g=g_new, gdot=v_new)


def step(system: OdeSystem, state: ModalState, dt: float, method: str = "splitting") -> ModalState:
    """Advance one time step with the requested integrator.

    splitting: Strang kick / exact rotation / kick, stable for any dt.
    rk4: classical four-stage scheme on the first-order form; rejects
        dt > 2.5/lambda_k, outside which the oscillatory modes blow up.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if method == "splitting":
        return _step_splitting(system, state, dt)
    if method == "rk4":
        limit = rk4_stability_limit(system.basis)
        if dt > limit:
            raise ValueError(
                f"rk4 stability guard requires dt <= 2.5/lambda_k = {limit:.6g}, got dt = {dt:.6g}"
            )
        return _step_rk4(system, state, dt)
    raise ValueError(f"unknown method {method!r}; expected 'splitting' or 'rk4'")


def default_dt(basis: EigenBasis) -> float:
    """Default step: min(1e-3, 0.1/lambda_k), >= 60 samples of the fastest mode."""
    return min(1e-3, 0.1 / float(basis.lambdas[-1]))


def solve(
    system: OdeSystem,
    initial: ModalState,
    T: float,
    dt: Optional[float] = None,
    method: str = "splitting",
    output_every: int = 1,
) -> Trajectory:
    """Integrate from the initial state to t = T, recording at a cadence.

    Every output_every-th state is kept, plus the state at exactly t = T
    (the final step is shortened if T is not a multiple of dt).
    """
    if T <= 0.0:
        raise ValueError(f"final time T must be positive, got {T}")
    if output_every < 1:
        raise ValueError(f"output_every must be >= 1, got {output_every}")
    if dt is None:
        dt = default_dt(system.basis)
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")

    n_full = int(math.floor(T / dt + 1e-9))
    remainder = T - n_full * dt
    if remainder <= 1e-12 * max(1.0, T):
        remainder = 0.0
        n_full = max(n_full, 1)

    state = ModalState(t=0.0, g=np.asarray(initial.g, dtype=float), gdot=np.asarray(initial.gdot, dtype=float))
    states = [state]
    for i in range(1, n_full + 1):
        state = step(system, state, dt, method)
        # pin the clock to i*dt so recorded times carry no accumulation drift
        state = ModalState(t=i * dt if (remainder > 0.0 or i < n_full) else T, g=state.g, gdot=state.gdot)
        if i % output_every == 0 or (remainder == 0.0 and i == n_full):
            _check_finite(state)
            if states[-1].t < state.t:
                states.append(state)
    if remainder > 0.0:
        state = step(system, state, remainder, method)
        state = ModalState(t=T, g=state.g, gdot=state.gdot)
        _check_finite(state)
        states.append(state)
    return Trajectory(system=system, states=states, dt=dt, method=method)


def _check_finite(state: ModalState) -> None:
    if not (np.all(np.isfinite(state.g)) and np.all(np.isfinite(state.gdot))):
        raise RuntimeError(f"non-finite modal state at t = {state.t:.6g}; aborting solve")
