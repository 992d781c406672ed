"""Fixed-step closed-loop integration.

Classical fourth-order Runge-Kutta on the closed loop g(x) = f(x, psi(x)):
the controller is re-evaluated at every stage state.  Steps are fixed and
deterministic; if the requested step does not divide the horizon it is
shrunk to the nearest exact divisor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import NonFiniteState, OracleFailure, StepInvalid
from .models import ControlSystemModel


@dataclass
class Trajectory:
    """Sampled closed-loop run: node times, states, and applied controls."""

    times: np.ndarray      # (S+1,)
    states: np.ndarray     # (S+1, n)
    controls: np.ndarray   # (S+1, m)

    @property
    def endpoint(self) -> np.ndarray:
        return self.states[-1]


def _as_controls(u, batch_shape, m) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    want = batch_shape + (m,)
    if u.shape == want:
        return u
    if u.shape == batch_shape and m == 1:
        return u[..., None]
    raise OracleFailure(f"controller returned shape {u.shape}, expected {want}")


def rk4_closed_loop(model: ControlSystemModel, controller, X0: np.ndarray,
                    tau: float, step: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batch RK4 over horizon tau.

    ``X0`` has shape (P, n); the controller maps (P, n) -> (P, m) (scalar
    outputs may come back as (P,)).  Returns (times, states, controls) with
    states of shape (S+1, P, n).  Raises ``NonFiniteState`` the moment any
    stage stops being finite, and ``StepInvalid`` for a bad step size.
    """
    if not (isinstance(tau, (int, float)) and math.isfinite(tau) and tau > 0):
        raise StepInvalid(f"horizon must be positive, got {tau!r}")
    if not (isinstance(step, (int, float)) and math.isfinite(step) and step > 0):
        raise StepInvalid(f"step must be positive, got {step!r}")
    steps = max(1, math.ceil(tau / step - 1e-12))
    h = tau / steps
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    if X0.ndim != 2 or X0.shape[1] != model.n:
        raise StepInvalid(f"initial states must have shape (P, {model.n}), got {X0.shape}")
    P, n = X0.shape

    def g(x):
        u = _as_controls(controller(x), x.shape[:-1], model.m)
        dx = model.field(x, u)
        if not np.isfinite(dx).all():
            raise NonFiniteState("field produced non-finite derivatives")
        return dx, u

    times = np.empty(steps + 1)
    states = np.empty((steps + 1, P, n))
    controls = np.empty((steps + 1, P, model.m))
    x = X0.copy()
    for k in range(steps):
        times[k] = k * h
        states[k] = x
        k1, u0 = g(x)
        controls[k] = u0
        k2, _ = g(x + 0.5 * h * k1)
        k3, _ = g(x + 0.5 * h * k2)
        k4, _ = g(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(x).all():
            raise NonFiniteState(f"state blew up at t={times[k] + h:.6g}")
    times[steps] = tau
    states[steps] = x
    _, u_last = g(x)
    controls[steps] = u_last
    return times, states, controls


def integrate_closed_loop(model: ControlSystemModel, controller, x0,
                          tau: float, step: float | None = None) -> Trajectory:
    """Integrate one initial state; default step is tau/100."""
    if step is None:
        step = tau / 100.0
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (model.n,):
        raise StepInvalid(f"initial state must have shape ({model.n},)")
    times, states, controls = rk4_closed_loop(model, controller, x0[None, :], tau, step)
    return Trajectory(times, states[:, 0, :], controls[:, 0, :])
