"""Benchmark control-affine plants with declared Lipschitz constants.

Each model carries an open-loop field f(x, u) vectorized over leading axes,
its state and input boxes, and constants k_x, k_u bounding the field's
sensitivity in the infinity norm:
|f(x,u) - f(x',u')| <= k_x |x - x'| + k_u |u - u'|.
The constants come from row-sum bounds on the Jacobian over the boxes and
are re-audited by sampled two-point quotients in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..geometry import Box


@dataclass(frozen=True)
class ControlSystemModel:
    """Plant description consumed by the integrators and audits."""

    name: str
    n: int
    m: int
    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    x_box: Box
    u_box: Box
    k_x: float
    k_u: float

    def field(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.f(np.asarray(x, dtype=float), np.asarray(u, dtype=float))


def pendulum() -> ControlSystemModel:
    """Damped pendulum with torque input.

    x1' = x2, x2' = -sin(x1) - 0.5 x2 + u on [-1,1]^2 with u in [-2,2].
    k_x = 1.5: max Jacobian row sum is max(1, |cos x1| + 0.5).  k_u = 1.
    """

    def f(x, u):
        return np.stack(
            [x[..., 1], -np.sin(x[..., 0]) - 0.5 * x[..., 1] + u[..., 0]], axis=-1
        )

    return ControlSystemModel(
        "pendulum", 2, 1, f,
        Box([-1.0, -1.0], [1.0, 1.0]), Box([-2.0], [2.0]),
        k_x=1.5, k_u=1.0,
    )


def van_der_pol(mu: float = 1.0) -> ControlSystemModel:
    """Controlled Van der Pol oscillator.

    x1' = x2, x2' = mu (1 - x1^2) x2 - x1 + u on [-1,1]^2, u in [-2,2].
    For mu = 1 the second Jacobian row sum |2 x1 x2 + 1| + |1 - x1^2| peaks
    at 3 on the box (at |x1| = 1 with aligned x2), so k_x = 3.  k_u = 1.
    """

    def f(x, u):
        return np.stack(
            [x[..., 1],
             mu * (1.0 - x[..., 0] ** 2) * x[..., 1] - x[..., 0] + u[..., 0]],
            axis=-1,
        )

    k_x = max(1.0, 2.0 * abs(mu) + 1.0)
    return ControlSystemModel(
        "van_der_pol", 2, 1, f,
        Box([-1.0, -1.0], [1.0, 1.0]), Box([-2.0], [2.0]),
        k_x=k_x, k_u=1.0,
    )


def linear_1d(a: float = -1.0, b: float = 1.0) -> ControlSystemModel:
    """Scalar linear plant x' = a x + b u with exact constants k_x = |a|,
    k_u = |b|.  Under linear feedback u = k x the flow is analytic,
    x(t) = exp((a + b k) t) x(0), which the tests use as an oracle."""

    def f(x, u):
        return a * x + b * u

    return ControlSystemModel(
        f"linear_1d(a={a},b={b})", 1, 1, f,
        Box([-1.0], [1.0]), Box([-1.0], [1.0]),
        k_x=abs(a), k_u=abs(b),
    )


def builtin_models() -> dict[str, ControlSystemModel]:
    """Catalog of the shipped plants under stable names."""
    return {
        "pendulum": pendulum(),
        "van_der_pol": van_der_pol(),
        "linear_1d": linear_1d(),
    }
