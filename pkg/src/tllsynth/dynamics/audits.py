"""Sampling-based closed-loop audits.

Three empirical checks over probe lattices — explicitly audits, not proofs:

* margin invariance: starts near the boundary must re-enter the shrunken
  core after one period, and core starts must never leave it;
* controller deviation: two closed loops from the same starts must stay
  within the disturbance-style bound derived from their pointwise gap;
* surrogate deviation: the same comparison between a plant and an
  identified stand-in field under one shared controller.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch, NonPositiveBudget
from ..geometry import Box
from ..sizing import gronwall_bound, sysid_budget
from .integrate import _as_controls, rk4_closed_loop
from .models import ControlSystemModel

_AUDIT_NOTE = "sampling-based audit on finite probe sets, not a proof"


def boundary_margin(box: Box, pts: np.ndarray) -> np.ndarray:
    """Signed distance (infinity-norm geometry) from each point to the
    complement of the box: positive inside, zero on a face, negative
    outside."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return np.minimum(pts - box.lower, box.upper - pts).min(axis=1)


@dataclass
class InvarianceReport:
    """Outcome of the margin-invariance audit."""

    holds: bool
    delta: float
    tau: float
    edge_consumed: bool
    num_edge_starts: int
    num_interior_starts: int
    worst_edge_margin: float | None      # min over edge starts of margin(x(tau)) - delta
    worst_interior_margin: float | None  # min over interior starts/nodes of margin - delta
    violations: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=lambda: [_AUDIT_NOTE])
    probe_spec: str | None = None

    def to_json(self) -> dict:
        return {
            "audit": "delta_tau_invariance",
            "holds": self.holds,
            "delta": self.delta,
            "tau": self.tau,
            "edge_consumed": self.edge_consumed,
            "num_edge_starts": self.num_edge_starts,
            "num_interior_starts": self.num_interior_starts,
            "worst_edge_margin": self.worst_edge_margin,
            "worst_interior_margin": self.worst_interior_margin,
            "violations": self.violations,
            "notes": self.notes,
            "probe_spec": self.probe_spec,
        }


def _edge_aware_axes(box: Box, delta: float, per_axis: int) -> list[np.ndarray]:
    """Per-axis probe coordinates: a uniform lattice over the axis plus
    insets at 0, delta/2, and just under delta from each face, so the edge
    band is sampled even when the lattice skips it."""
    insets = np.array([0.0, 0.5 * delta, delta * (1.0 - 1e-9)])
    axes = []
    for lo, hi in zip(box.lower, box.upper):
        base = np.linspace(lo, hi, max(2, per_axis))
        cand = np.concatenate([base, lo + insets, hi - insets])
        cand = cand[(cand >= lo) & (cand <= hi)]
        axes.append(np.unique(cand))
    return axes


def check_delta_tau_invariance(model: ControlSystemModel, controller, delta: float,
                               tau: float, per_axis: int = 5,
                               step: float | None = None,
                               tol: float = 1e-9,
                               max_violations: int = 10) -> InvarianceReport:
    """Audit margin invariance of the closed loop on the model's state box.

    The edge band collects points within ``delta`` of the boundary; the core
    is its complement.  The audit samples a lattice (densified inside the
    band) and verifies (a) every edge start reaches the core after ``tau``
    and (b) every core start stays in the core at all integration nodes.
    When some axis is narrower than 2*delta the core has no interior and
    the audit fails with an ``EdgeConsumesDomain`` note.
    """
    if delta < 0:
        raise NonPositiveBudget(f"delta must be nonnegative, got {delta}")
    if step is None:
        step = tau / 100.0
    box = model.x_box
    if bool((box.widths <= 2.0 * delta).any()):
        return InvarianceReport(
            holds=False, delta=delta, tau=tau, edge_consumed=True,
            num_edge_starts=0, num_interior_starts=0,
            worst_edge_margin=None, worst_interior_margin=None,
            notes=[_AUDIT_NOTE,
                   "EdgeConsumesDomain: some axis width <= 2*delta, core is empty"],
        )

    axes = _edge_aware_axes(box, delta, per_axis)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    margins = boundary_margin(box, pts)
    edge_pts = pts[margins < delta]
    core_pts = pts[margins >= delta]
    violations: list[dict] = []

    worst_edge = None
    if edge_pts.shape[0]:
        times, states, _ = rk4_closed_loop(model, controller, edge_pts, tau, step)
        end_margin = boundary_margin(box, states[-1]) - delta
        worst_edge = float(end_margin.min())
        for idx in np.argsort(end_margin):
            if end_margin[idx] >= -tol or len(violations) >= max_violations:
                break
            violations.append({
                "kind": "edge-endpoint",
                "start": edge_pts[idx].tolist(),
                "time": float(times[-1]),
                "state": states[-1, idx].tolist(),
                "shortfall": float(-end_margin[idx]),
            })

    worst_core = None
    if core_pts.shape[0]:
        times, states, _ = rk4_closed_loop(model, controller, core_pts, tau, step)
        node_margin = (
            np.minimum(states - box.lower, box.upper - states).min(axis=2) - delta
        )  # (S+1, P)
        worst_core = float(node_margin.min())
        bad = np.argwhere(node_margin < -tol)
        order = np.argsort(node_margin[bad[:, 0], bad[:, 1]]) if bad.size else []
        seen: set[int] = set()
        for k in order:
            s, p = map(int, bad[k])
            if p in seen or len(violations) >= max_violations:
                continue
            seen.add(p)
            violations.append({
                "kind": "core-node",
                "start": core_pts[p].tolist(),
                "time": float(times[s]),
                "state": states[s, p].tolist(),
                "shortfall": float(-node_margin[s, p]),
            })

    holds = (
        (worst_edge is None or worst_edge >= -tol)
        and (worst_core is None or worst_core >= -tol)
    )
    return InvarianceReport(
        holds=holds, delta=delta, tau=tau, edge_consumed=False,
        num_edge_starts=int(edge_pts.shape[0]),
        num_interior_starts=int(core_pts.shape[0]),
        worst_edge_margin=worst_edge, worst_interior_margin=worst_core,
        violations=violations,
        probe_spec=f"edge-aware lattice[{per_axis}^{box.dimension}]",
    )


@dataclass
class DeviationReport:
    """Outcome of a pairwise trajectory-deviation audit."""

    kind: str                    # "controller" or "field"
    max_deviation: float
    worst_start: list[float]
    mu: float
    mu_source: str               # "supplied" or "measured"
    bound: float
    bound_pass: bool
    delta: float | None
    delta_pass: bool | None
    tau: float
    num_probes: int
    notes: list[str] = field(default_factory=lambda: [_AUDIT_NOTE])
    probe_spec: str | None = None

    @property
    def holds(self) -> bool:
        return self.bound_pass and self.delta_pass is not False

    def to_json(self) -> dict:
        return {
            "audit": f"{self.kind}_deviation",
            "holds": self.holds,
            "max_deviation": self.max_deviation,
            "worst_start": self.worst_start,
            "mu": self.mu,
            "mu_source": self.mu_source,
            "bound": self.bound,
            "bound_pass": self.bound_pass,
            "delta": self.delta,
            "delta_pass": self.delta_pass,
            "tau": self.tau,
            "num_probes": self.num_probes,
            "notes": self.notes,
            "probe_spec": self.probe_spec,
        }


def _eval_controller(controller, pts: np.ndarray, m: int) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return _as_controls(controller(pts), pts.shape[:-1], m)


def _endpoint_gap(states_a: np.ndarray, states_b: np.ndarray) -> np.ndarray:
    return np.abs(states_a[-1] - states_b[-1]).max(axis=1)


def deviation_audit(model: ControlSystemModel, psi, upsilon, tau: float,
                    step: float, probes: np.ndarray, *, k_upsilon: float,
                    mu: float | None = None,
                    mu_probes: np.ndarray | None = None,
                    delta: float | None = None,
                    tol: float = 1e-7,
                    probe_spec: str | None = None) -> DeviationReport:
    """Compare the closed loops under two controllers from shared starts.

    Reports the worst endpoint gap (infinity norm) over the probes and
    checks it against the disturbance bound computed from ``mu`` — the
    controllers' pointwise gap, supplied or measured on ``mu_probes``
    (falling back to the trajectory probes) — with ``k_upsilon`` the
    Lipschitz constant of the second controller.  When ``delta`` is given
    the gap is additionally checked against it.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    mu_source = "supplied"
    if mu is None:
        pts = probes if mu_probes is None else np.atleast_2d(mu_probes)
        gap = np.abs(
            _eval_controller(psi, pts, model.m) - _eval_controller(upsilon, pts, model.m)
        )
        mu = float(gap.max())
        mu_source = "measured"
    _, states_a, _ = rk4_closed_loop(model, psi, probes, tau, step)
    _, states_b, _ = rk4_closed_loop(model, upsilon, probes, tau, step)
    dev = _endpoint_gap(states_a, states_b)
    worst = int(np.argmax(dev))
    bound = gronwall_bound(mu, model.k_x, model.k_u, k_upsilon, tau)
    max_dev = float(dev[worst])
    return DeviationReport(
        kind="controller",
        max_deviation=max_dev,
        worst_start=probes[worst].tolist(),
        mu=mu, mu_source=mu_source,
        bound=bound, bound_pass=bool(max_dev <= bound + tol),
        delta=delta,
        delta_pass=None if delta is None else bool(max_dev <= delta + tol),
        tau=float(tau), num_probes=int(probes.shape[0]),
        probe_spec=probe_spec,
    )


def sysid_deviation_audit(model_true: ControlSystemModel,
                          model_surrogate: ControlSystemModel, psi, tau: float,
                          step: float, probes: np.ndarray, *, k_psi: float,
                          mu: float | None = None,
                          mu_probes: np.ndarray | None = None,
                          delta: float | None = None,
                          tol: float = 1e-7,
                          probe_spec: str | None = None) -> DeviationReport:
    """Compare the true plant against an identified surrogate field under
    one shared controller.

    ``mu`` is the fields' pointwise gap, supplied or measured on state-input
    probes (``mu_probes`` of shape (P, n+m); defaults to the trajectory
    probes paired with the controller's own inputs).  The bound uses the
    true plant's constants and ``k_psi``, the controller's Lipschitz
    constant.
    """
    if (model_true.n, model_true.m) != (model_surrogate.n, model_surrogate.m):
        raise DimensionMismatch(
            "true and surrogate models must share state and input dimensions"
        )
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    n, m = model_true.n, model_true.m
    mu_source = "supplied"
    if mu is None:
        if mu_probes is None:
            xs = probes
            us = _eval_controller(psi, xs, m)
        else:
            mu_probes = np.atleast_2d(np.asarray(mu_probes, dtype=float))
            if mu_probes.shape[1] != n + m:
                raise DimensionMismatch(
                    f"mu_probes must have {n + m} columns, got {mu_probes.shape[1]}"
                )
            xs, us = mu_probes[:, :n], mu_probes[:, n:]
        gap = np.abs(model_true.field(xs, us) - model_surrogate.field(xs, us))
        mu = float(gap.max())
        mu_source = "measured"
    _, states_a, _ = rk4_closed_loop(model_true, psi, probes, tau, step)
    _, states_b, _ = rk4_closed_loop(model_surrogate, psi, probes, tau, step)
    dev = _endpoint_gap(states_a, states_b)
    worst = int(np.argmax(dev))
    bound = sysid_budget(mu, model_true.k_x, model_true.k_u, k_psi, tau)
    max_dev = float(dev[worst])
    return DeviationReport(
        kind="field",
        max_deviation=max_dev,
        worst_start=probes[worst].tolist(),
        mu=mu, mu_source=mu_source,
        bound=bound, bound_pass=bool(max_dev <= bound + tol),
        delta=delta,
        delta_pass=None if delta is None else bool(max_dev <= delta + tol),
        tau=float(tau), num_probes=int(probes.shape[0]),
        probe_spec=probe_spec,
    )
