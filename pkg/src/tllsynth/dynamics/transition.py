"""Finite labeled transition systems over metric state coordinates.

Closed loops are embedded by sampling initial states, integrating one
period, and snapping endpoints onto listed states; labels identify the
applied control segment.  Perturbation widens every transition's target to
all listed states within delta.  Simulation relations (ordinary and
approximate) are computed by greatest-fixpoint refinement.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch, SchemaError
from ..serialize import float_to_hex, hex_to_vec, require_keys
from .integrate import rk4_closed_loop
from .models import ControlSystemModel


@dataclass
class FiniteTransitionSystem:
    """States are indices into a coordinate array; transitions are labeled.

    ``coords`` has shape (K, d); the metric is the infinity norm on rows.
    Transitions are a set of (src, label, dst) triples and may be
    nondeterministic.
    """

    coords: np.ndarray
    transitions: set[tuple[int, str, int]] = field(default_factory=set)

    def __post_init__(self):
        self.coords = np.atleast_2d(np.asarray(self.coords, dtype=float))
        for (s, _, t) in self.transitions:
            if not (0 <= s < self.num_states and 0 <= t < self.num_states):
                raise ValueError(f"transition ({s},..,{t}) references unknown states")

    @property
    def num_states(self) -> int:
        return self.coords.shape[0]

    @property
    def labels(self) -> set[str]:
        return {u for (_, u, _) in self.transitions}

    def successors(self, state: int, label: str | None = None) -> list[tuple[str, int]]:
        return sorted(
            (u, t) for (s, u, t) in self.transitions
            if s == state and (label is None or u == label)
        )

    def distance(self, i: int, j: int) -> float:
        return float(np.abs(self.coords[i] - self.coords[j]).max())

    def relabeled(self, label: str = "*") -> "FiniteTransitionSystem":
        """Copy with all labels unified (erases control information)."""
        return FiniteTransitionSystem(
            self.coords.copy(), {(s, label, t) for (s, _, t) in self.transitions}
        )

    def to_json(self) -> dict:
        return {
            "states": [
                {"id": i, "coords": [float_to_hex(v) for v in self.coords[i]]}
                for i in range(self.num_states)
            ],
            "transitions": [
                {"src": s, "label": u, "dst": t}
                for (s, u, t) in sorted(self.transitions)
            ],
        }

    @staticmethod
    def from_json(obj: dict) -> "FiniteTransitionSystem":
        require_keys(obj, ("states", "transitions"), "transition system")
        states = obj["states"]
        if not isinstance(states, list) or not states:
            raise SchemaError("states must be a nonempty list")
        coords = np.empty((len(states), len(states[0]["coords"])))
        for k, st in enumerate(states):
            require_keys(st, ("id", "coords"), "state")
            if st["id"] != k:
                raise SchemaError("state ids must be 0..K-1 in order")
            coords[k] = hex_to_vec(st["coords"])
        trans = set()
        for tr in obj["transitions"]:
            require_keys(tr, ("src", "label", "dst"), "transition")
            trans.add((int(tr["src"]), str(tr["label"]), int(tr["dst"])))
        return FiniteTransitionSystem(coords, trans)


def _segment_label(controls: np.ndarray) -> str:
    """Identifier of a control segment: hash of the node samples rounded to
    1e-9.  Rounding makes label identity robust to sub-nanoscale float dust
    while keeping distinct segments distinct."""
    sig = np.round(np.asarray(controls, dtype=float), 9) + 0.0
    digest = hashlib.sha256(sig.tobytes()).hexdigest()[:16]
    return f"u#{digest}"


def embed_tau_sampled(model: ControlSystemModel, controller, samples: np.ndarray,
                      tau: float, step: float | None = None,
                      snap_tol: float = 1e-9,
                      extra_states: np.ndarray | None = None) -> FiniteTransitionSystem:
    """Embed one closed loop as a tau-period transition system.

    Every sample becomes a state; each is integrated for one period and the
    endpoint is snapped to the nearest listed state within ``snap_tol``
    (infinity norm) or appended as a new state.  The transition label hashes
    the control segment at the integration nodes.  ``extra_states`` are
    listed (and deduplicated) but not integrated, so a companion system can
    share another embedding's target states.
    """
    if step is None:
        step = tau / 100.0
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    state_list: list[np.ndarray] = []

    def lookup(x, tol) -> int | None:
        for i, s in enumerate(state_list):
            if np.abs(s - x).max() <= tol:
                return i
        return None

    def intern(x, tol) -> int:
        i = lookup(x, tol)
        if i is None:
            state_list.append(np.asarray(x, dtype=float).copy())
            return len(state_list) - 1
        return i

    sources = [intern(x, snap_tol) for x in samples]
    if extra_states is not None:
        for x in np.atleast_2d(np.asarray(extra_states, dtype=float)):
            intern(x, snap_tol)
    origins = np.array([state_list[i] for i in sources])
    _, states, controls = rk4_closed_loop(model, controller, origins, tau, step)
    transitions = set()
    for col, src in enumerate(sources):
        endpoint = states[-1, col]
        label = _segment_label(controls[:, col, :])
        transitions.add((src, label, intern(endpoint, snap_tol)))
    return FiniteTransitionSystem(np.array(state_list), transitions)


def perturb(ts: FiniteTransitionSystem, delta: float) -> FiniteTransitionSystem:
    """Delta-perturbed system: for every transition, add same-label copies
    to every listed state within delta of the original target.  Originals
    are retained (distance zero); delta = 0 is the identity."""
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    new = set(ts.transitions)
    for (s, u, t) in ts.transitions:
        near = np.flatnonzero(np.abs(ts.coords - ts.coords[t]).max(axis=1) <= delta)
        new.update((s, u, int(t2)) for t2 in near)
    return FiniteTransitionSystem(ts.coords.copy(), new)


@dataclass(frozen=True)
class SimulationRelation:
    """Witness relation between two systems' state indices."""

    pairs: frozenset[tuple[int, int]]
    mode: str                   # "ordinary" or "approximate"
    delta: float | None = None


@dataclass
class SimulationVerdict:
    """Outcome of a simulation check: the maximal relation found, whether it
    is total on the left system, and a counterexample state if not."""

    holds: bool
    relation: SimulationRelation
    counterexample: int | None

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "mode": self.relation.mode,
            "delta": None if self.relation.delta is None else float_to_hex(self.relation.delta),
            "pairs": sorted(map(list, self.relation.pairs)),
            "counterexample": self.counterexample,
        }


def _greatest_relation(trans_a: set, num_a: int, trans_b: set, num_b: int,
                       seed_pairs: set[tuple[int, int]], label_free: bool) -> set:
    """Greatest fixpoint of the transfer condition inside ``seed_pairs``:
    (x, y) survives while every left move from x has a right response from y
    (same label unless ``label_free``) into a surviving pair."""
    succ_a: dict[int, list[tuple[str, int]]] = {i: [] for i in range(num_a)}
    for (s, u, t) in trans_a:
        succ_a[s].append((u, t))
    succ_b: dict[tuple[int, str] | int, set[int]] = {}
    if label_free:
        for (s, _, t) in trans_b:
            succ_b.setdefault(s, set()).add(t)
    else:
        for (s, u, t) in trans_b:
            succ_b.setdefault((s, u), set()).add(t)
    rel = set(seed_pairs)
    changed = True
    while changed:
        changed = False
        for (x, y) in list(rel):
            ok = True
            for (u, x2) in succ_a[x]:
                resp = succ_b.get(y if label_free else (y, u), ())
                if not any((x2, y2) in rel for y2 in resp):
                    ok = False
                    break
            if not ok:
                rel.discard((x, y))
                changed = True
    return rel


def _verdict(rel: set, num_a: int, mode: str, delta: float | None) -> SimulationVerdict:
    covered = {x for (x, _) in rel}
    missing = sorted(set(range(num_a)) - covered)
    return SimulationVerdict(
        holds=not missing,
        relation=SimulationRelation(frozenset(rel), mode, delta),
        counterexample=missing[0] if missing else None,
    )


def check_simulation(ts_a: FiniteTransitionSystem, ts_b: FiniteTransitionSystem,
                     max_pair_distance: float | None = None) -> SimulationVerdict:
    """Greatest label-matched simulation of ``ts_a`` by ``ts_b``.

    Starts from all pairs (optionally distance-gated when both systems share
    a coordinate dimension) and refines to the greatest fixpoint.  The
    verdict holds when every left state has a partner; otherwise the
    smallest uncovered left state index is the counterexample.
    """
    seed = {
        (x, y)
        for x in range(ts_a.num_states)
        for y in range(ts_b.num_states)
    }
    if max_pair_distance is not None:
        if ts_a.coords.shape[1] != ts_b.coords.shape[1]:
            raise DimensionMismatch("distance gate needs matching coordinate dimensions")
        seed = {
            (x, y) for (x, y) in seed
            if np.abs(ts_a.coords[x] - ts_b.coords[y]).max() <= max_pair_distance
        }
    rel = _greatest_relation(ts_a.transitions, ts_a.num_states,
                             ts_b.transitions, ts_b.num_states, seed, label_free=False)
    return _verdict(rel, ts_a.num_states, "ordinary", max_pair_distance)


def check_ads(ts_a: FiniteTransitionSystem, ts_b: FiniteTransitionSystem,
              delta: float) -> SimulationVerdict:
    """Approximate delta-simulation of ``ts_a`` by ``ts_b``.

    Candidate pairs are those within delta (infinity norm).  Left moves are
    taken in the delta-perturbed left system; the right system may respond
    with any label.  The relation must be total on the left states.  With
    delta = 0 and unified labels this coincides with ordinary simulation
    gated to coincident states.
    """
    if ts_a.coords.shape[1] != ts_b.coords.shape[1]:
        raise DimensionMismatch("approximate simulation needs matching coordinates")
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    perturbed = perturb(ts_a, delta)
    seed = {
        (x, y)
        for x in range(ts_a.num_states)
        for y in range(ts_b.num_states)
        if np.abs(ts_a.coords[x] - ts_b.coords[y]).max() <= delta
    }
    rel = _greatest_relation(perturbed.transitions, perturbed.num_states,
                             ts_b.transitions, ts_b.num_states, seed, label_free=True)
    return _verdict(rel, ts_a.num_states, "approximate", delta)
