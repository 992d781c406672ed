"""Command-line orchestration over JSON configuration and report files.

Subcommands chain the library end to end: ``size`` (budget formulas),
``grid`` (eta grid construction), ``build`` (sample an oracle into an
interpolant), ``compile`` (interpolant to lattice network), ``verify``
(artifact audits), ``audit`` (closed-loop audits), ``ads-check``
(approximate simulation between transition-system files), ``sysid``
(field-surrogate pipeline), and ``export`` (network re-emission or
explicit ReLU layers).

Exit codes: 0 pass, 1 audit failure, 2 configuration error, 3 numerical
error.  Reports are deterministic for a fixed config and seed except for
the ``timing`` block.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import subprocess
import sys
import time

import numpy as np

from . import __version__
from .cpwa import (
    CpwaInterpolant,
    build_interpolant,
    continuity_audit,
    lipschitz_audit,
    region_count,
    sample_controller,
)
from .dynamics import (
    ControlSystemModel,
    FiniteTransitionSystem,
    builtin_models,
    check_ads,
    check_delta_tau_invariance,
    deviation_audit,
    sysid_deviation_audit,
)
from .errors import (
    BoundViolated,
    BudgetExceeded,
    ConfigError,
    CoverageInfeasible,
    DimensionMismatch,
    DimensionTooLarge,
    DiscontinuityDetected,
    EmptySelector,
    InvariantViolation,
    NonFiniteState,
    NonPositiveBudget,
    NonPositiveEta,
    OracleFailure,
    OrphanCorner,
    OutsideDomain,
    SchemaError,
    SingularSystem,
    StepInvalid,
    TllSynthError,
)
from .geometry import Box, build_eta_grid, extra_corners, interpolation_hypercubes
from .probes import build_probes
from .serialize import dump_json, float_to_hex, load_json, vec_to_hex
from .sizing import (
    SpecBudget,
    compute_sizing,
    controller_size,
    hypercube_count_bound,
    sysid_budget,
    sysid_size,
)
from .tll import (
    arch_descriptor,
    compile_tll,
    expand_relu_layers,
    export_network,
    import_network,
)

EXIT_PASS = 0
EXIT_AUDIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

_CONFIG_ERRORS = (
    ConfigError,
    SchemaError,
    NonPositiveBudget,
    NonPositiveEta,
    DimensionTooLarge,
    DimensionMismatch,
    StepInvalid,
    InvariantViolation,
    EmptySelector,
    OrphanCorner,
    CoverageInfeasible,
    FileNotFoundError,
    IsADirectoryError,
    json.JSONDecodeError,
)
_AUDIT_ERRORS = (BudgetExceeded, DiscontinuityDetected, BoundViolated)
_NUMERIC_ERRORS = (
    SingularSystem,
    NonFiniteState,
    OracleFailure,
    OutsideDomain,
    FloatingPointError,
    np.linalg.LinAlgError,
)


# -- configuration ------------------------------------------------------------


def _load_config(args) -> dict:
    if not args.config:
        raise ConfigError("this command needs --config <file.json>")
    obj = load_json(args.config)
    if not isinstance(obj, dict):
        raise ConfigError("config root must be a JSON object")
    return obj


def _budget_from(cfg: dict) -> SpecBudget:
    b = cfg.get("budget")
    if not isinstance(b, dict):
        raise ConfigError("config needs a 'budget' object")
    for key in ("k_x", "k_u", "k_cont", "tau", "delta"):
        if key not in b:
            raise ConfigError(f"budget is missing '{key}'")
    return SpecBudget(
        float(b["k_x"]), float(b["k_u"]), float(b["k_cont"]),
        float(b["tau"]), float(b["delta"]),
        int(b.get("exponent_multiplier", 3)),
    )


def _box_from(cfg: dict, key: str) -> Box:
    d = cfg.get(key)
    if not isinstance(d, dict) or "lower" not in d or "upper" not in d:
        raise ConfigError(f"config needs a '{key}' box with 'lower' and 'upper'")
    return Box(d["lower"], d["upper"])


def _model_from(cfg: dict) -> ControlSystemModel:
    name = cfg.get("model")
    if not isinstance(name, str):
        raise ConfigError("config needs a 'model' name")
    catalog = builtin_models()
    if name not in catalog:
        raise ConfigError(f"unknown model '{name}'; available: {sorted(catalog)}")
    return catalog[name]


def _resolve_eta(cfg: dict, domain: Box) -> float:
    """Explicit 'eta' wins; otherwise derive it from the budget chain."""
    if cfg.get("eta") is not None:
        eta = float(cfg["eta"])
        if not (eta > 0):
            raise ConfigError(f"eta must be strictly positive, got {eta}")
        return eta
    if "budget" not in cfg:
        raise ConfigError("config needs either 'eta' or a 'budget' to derive it")
    return compute_sizing(_budget_from(cfg), domain).eta


def _probe_settings(cfg: dict, args) -> tuple[int, int, int]:
    p = cfg.get("probes", {})
    if not isinstance(p, dict):
        raise ConfigError("'probes' must be an object")
    per_axis = int(p.get("per_axis", 5))
    random_count = int(p.get("random", 0))
    seed = args.seed if args.seed is not None else int(p.get("seed", 0))
    if per_axis < 1 or random_count < 0:
        raise ConfigError("probes need per_axis >= 1 and random >= 0")
    return per_axis, random_count, seed


def _tolerance(cfg: dict, name: str, default: float) -> float:
    tols = cfg.get("tolerances", {})
    val = float(tols.get(name, default))
    if not (val > 0):
        raise ConfigError(f"tolerance '{name}' must be positive")
    return val


# -- controller oracles --------------------------------------------------------


class _CsvOracle:
    """Lookup table from a CSV of rows x_1..x_n,u_1..u_m."""

    def __init__(self, path: str, n: int, m: int):
        self.n, self.m = n, m
        self.table: dict[tuple, np.ndarray] = {}
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                vals = [float(v) for v in row]
                if len(vals) != n + m:
                    raise ConfigError(
                        f"CSV oracle rows need {n + m} columns, got {len(vals)}"
                    )
                self.table[self._key(vals[:n])] = np.array(vals[n:])
        if not self.table:
            raise ConfigError(f"CSV oracle '{path}' holds no data rows")

    @staticmethod
    def _key(x) -> tuple:
        return tuple(round(float(v), 12) + 0.0 for v in x)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            hit = self.table.get(self._key(x))
            if hit is None:
                raise OracleFailure(f"CSV oracle has no row for point {x.tolist()}")
            return hit
        return np.stack([self(row) for row in x])


class _SubprocessOracle:
    """Child process evaluated per batch over line-delimited JSON.

    Request: one line ``{"points": [[...], ...]}``.  Response: one line
    ``{"controls": [[...], ...]}`` with matching row count.
    """

    def __init__(self, argv: list[str], m: int):
        if not argv:
            raise ConfigError("subprocess oracle needs a nonempty argv list")
        self.argv, self.m = list(argv), m
        self.proc: subprocess.Popen | None = None

    def _ensure(self) -> subprocess.Popen:
        if self.proc is None or self.proc.poll() is not None:
            self.proc = subprocess.Popen(
                self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True
            )
        return self.proc

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        batch = x[None, :] if single else x
        proc = self._ensure()
        try:
            proc.stdin.write(json.dumps({"points": batch.tolist()}) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise OracleFailure(f"subprocess oracle pipe failed: {exc}") from exc
        if not line:
            raise OracleFailure("subprocess oracle closed its output stream")
        try:
            reply = json.loads(line)
            controls = np.asarray(reply["controls"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise OracleFailure(f"subprocess oracle reply malformed: {exc}") from exc
        if controls.shape != (batch.shape[0], self.m):
            raise OracleFailure(
                f"subprocess oracle returned shape {controls.shape}, "
                f"expected ({batch.shape[0]}, {self.m})"
            )
        return controls[0] if single else controls

    def close(self) -> None:
        if self.proc is not None and self.proc.poll() is None:
            self.proc.stdin.close()
            self.proc.wait(timeout=10)


def _builtin_oracle(name: str, params: dict, n: int, m: int):
    if name == "zero":
        return lambda x: np.zeros(np.shape(x)[:-1] + (m,))
    if name == "affine":
        W = np.asarray(params.get("W"), dtype=float)
        b = np.asarray(params.get("b", np.zeros(W.shape[0] if W.ndim == 2 else 1)),
                       dtype=float)
        if W.ndim != 2 or W.shape != (m, n) or b.shape != (m,):
            raise ConfigError(f"affine oracle needs W of shape ({m}, {n}) and b of shape ({m},)")
        return lambda x: np.asarray(x, dtype=float) @ W.T + b
    if name == "pendulum_damping":
        # u = -0.5 (x1 + x2): the shipped stabilizing feedback for the pendulum
        return lambda x: np.asarray(x, dtype=float) @ np.array([[-0.5], [-0.5]]) \
            + np.zeros(1)
    raise ConfigError(f"unknown builtin oracle '{name}'")


def _resolve_oracle(cfg: dict, n: int, m: int):
    spec = cfg.get("oracle")
    if spec is None:
        raise ConfigError("config needs an 'oracle' (builtin | csv | subprocess)")
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("'oracle' must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "builtin":
        return _builtin_oracle(spec.get("name", ""), spec, n, m)
    if kind == "csv":
        if "path" not in spec:
            raise ConfigError("csv oracle needs a 'path'")
        return _CsvOracle(spec["path"], n, m)
    if kind == "subprocess":
        return _SubprocessOracle(spec.get("argv", []), m)
    raise ConfigError(f"unknown oracle kind '{kind}'")


# -- report plumbing -----------------------------------------------------------


def _emit(args, command: str, results: dict, passed: bool,
          config_echo: dict | None, started: float,
          filename: str | None = None) -> int:
    report = {
        "command": command,
        "version": __version__,
        "pass": bool(passed),
        "seed": args.seed,
        "workers": args.workers,
        "config": config_echo,
        "results": results,
        "timing": {"seconds": round(time.monotonic() - started, 6)},
    }
    os.makedirs(args.out, exist_ok=True)
    stem = filename or f"{command.replace('-', '_')}_report"
    path = os.path.join(args.out, f"{stem}.json")
    dump_json(report, path)
    status = "PASS" if passed else "FAIL"
    print(f"[{status}] {command}: report written to {path}")
    return EXIT_PASS if passed else EXIT_AUDIT_FAILURE


def _write_artifact(args, name: str, obj: dict) -> str:
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, name)
    dump_json(obj, path)
    return path


def _load_interpolant(path: str) -> CpwaInterpolant:
    return CpwaInterpolant.from_json(load_json(path))


# -- subcommands ----------------------------------------------------------------


def cmd_size(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    budget = _budget_from(cfg)
    domain = _box_from(cfg, "domain")
    sysid_box = _box_from(cfg, "input_box") if "input_box" in cfg else None
    eta_override = float(cfg["eta"]) if cfg.get("eta") is not None else None
    sizing = compute_sizing(budget, domain, sysid_box, eta_override)
    results = sizing.to_json()
    holds = all(entry.get("holds", True) for entry in sizing.audit)
    return _emit(args, "size", results, holds, cfg, t0)


def cmd_grid(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    domain = _box_from(cfg, "domain")
    eta = _resolve_eta(cfg, domain)
    grid = build_eta_grid(domain, eta)
    grid.validate()
    cubes = interpolation_hypercubes(grid)
    extras = extra_corners(grid)
    bound = hypercube_count_bound(grid.dimension, domain.extent(), eta)
    path = _write_artifact(args, "grid.json", grid.to_json())
    results = {
        "eta": float_to_hex(eta),
        "axis_counts": list(grid.axis_counts),
        "num_points": grid.num_points,
        "num_hypercubes": len(cubes),
        "hypercube_count_bound": bound,
        "num_extra_corners": len(extras),
        "grid_file": path,
    }
    return _emit(args, "grid", results, len(cubes) <= bound, cfg, t0)


def cmd_build(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    domain = _box_from(cfg, "domain")
    eta = _resolve_eta(cfg, domain)
    m = int(cfg.get("m", 1))
    k_cont = float(cfg["budget"]["k_cont"]) if "budget" in cfg else cfg.get("k_cont")
    if k_cont is not None:
        k_cont = float(k_cont)
    grid = build_eta_grid(domain, eta)
    oracle = _resolve_oracle(cfg, grid.dimension, m)
    try:
        omega = sample_controller(oracle, grid, m)
    finally:
        if isinstance(oracle, _SubprocessOracle):
            oracle.close()
    interp = build_interpolant(grid, omega, k_cont)
    path = _write_artifact(args, "interpolant.json", interp.to_json())
    results = {
        "eta": float_to_hex(eta),
        "num_grid_points": grid.num_points,
        "num_simplexes": interp.num_simplexes,
        "outputs": m,
        "region_counts": region_count(interp),
        "k_cont": None if k_cont is None else float_to_hex(k_cont),
        "interpolant_file": path,
    }
    return _emit(args, "build", results, True, cfg, t0)


def cmd_compile(args) -> int:
    t0 = time.monotonic()
    interp = _load_interpolant(args.artifact)
    bound_n = None
    cfg = None
    if args.config:
        cfg = _load_config(args)
        if cfg.get("bound_n") is not None:
            bound_n = int(cfg["bound_n"])
    try:
        net = compile_tll(interp, bound_n)
        desc = arch_descriptor(net)
    except _AUDIT_ERRORS as exc:
        return _emit(args, "compile", {"error": str(exc)}, False, cfg, t0)
    path = _write_artifact(args, "network.json", export_network(net))
    results = {
        "descriptor": desc.to_json(),
        "network_file": path,
        "provenance": {
            "eta": None if net.provenance.get("eta") is None
            else float_to_hex(net.provenance["eta"]),
            "k_cont": None if net.provenance.get("k_cont") is None
            else float_to_hex(net.provenance["k_cont"]),
            "bound_n": net.provenance.get("bound_n"),
        },
    }
    return _emit(args, "compile", results, True, cfg, t0)


def _verify_approx(args, cfg, interp) -> tuple[dict, bool]:
    mu = cfg.get("mu")
    if mu is None:
        if "budget" not in cfg:
            raise ConfigError("approx verification needs 'mu' or a 'budget'")
        mu = compute_sizing(_budget_from(cfg), interp.grid.domain).mu
    mu = float(mu)
    oracle = _resolve_oracle(cfg, interp.n, interp.m)
    per_axis, random_count, seed = _probe_settings(cfg, args)
    probes = build_probes(interp.grid.domain, per_axis, random_count, seed)
    try:
        want = np.atleast_2d(np.asarray(oracle(probes.points), dtype=float))
        if want.shape != (len(probes), interp.m):
            want = want.reshape(len(probes), interp.m)
    finally:
        if isinstance(oracle, _SubprocessOracle):
            oracle.close()
    got = interp.eval_batch(probes.points)
    value = float(np.abs(got - want).max())
    passed = value <= mu
    return {
        "metric": "sup-norm approximation error",
        "value": value,
        "bound": mu,
        "pass": passed,
        "probe_spec": probes.spec,
        "seed": probes.seed,
    }, passed


def cmd_verify(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args) if args.config else {}
    interp = _load_interpolant(args.artifact)
    which = args.which
    if which == "approx":
        results, passed = _verify_approx(args, cfg, interp)
    elif which == "lipschitz":
        bound = cfg.get("lipschitz_bound")
        try:
            rep = lipschitz_audit(interp, None if bound is None else float(bound))
            results = {"metric": "max piece gradient dual norm",
                       "value": rep.value, "bound": rep.bound, "pass": True}
            passed = True
        except BudgetExceeded as exc:
            results = {"metric": "max piece gradient dual norm",
                       "error": str(exc), "pass": False}
            passed = False
    elif which == "continuity":
        tol = _tolerance(cfg, "continuity", 1e-9)
        per_axis, _, seed = _probe_settings(cfg, args)
        try:
            jump = continuity_audit(interp, samples_per_face=per_axis, tol=tol, seed=seed)
            results = {"metric": "max face jump", "value": jump, "bound": tol,
                       "pass": True, "seed": seed}
            passed = True
        except DiscontinuityDetected as exc:
            results = {"metric": "max face jump", "error": str(exc),
                       "bound": tol, "pass": False, "seed": seed}
            passed = False
    elif which == "tll-equiv":
        if not args.network:
            raise ConfigError("tll-equiv verification needs --network <file>")
        net = import_network(load_json(args.network))
        tol = _tolerance(cfg, "eval", 1e-9)
        per_axis, random_count, seed = _probe_settings(cfg, args)
        probes = build_probes(interp.grid.domain, per_axis, random_count, seed)
        gap = float(np.abs(net.eval_batch(probes.points)
                           - interp.eval_batch(probes.points)).max())
        passed = gap <= tol
        results = {"metric": "max lattice-vs-interpolant gap", "value": gap,
                   "bound": tol, "pass": passed, "probe_spec": probes.spec,
                   "seed": probes.seed}
    elif which == "regions":
        counts = region_count(interp)
        if args.network:
            net = import_network(load_json(args.network))
            bound = net.provenance.get("bound_n")
            bank_sizes = [lat.size for lat in net.outputs]
        else:
            bound = controller_size(interp.n, interp.grid.domain.extent(), interp.grid.eta)
            bank_sizes = None
        passed = bound is None or all(c <= bound for c in counts)
        results = {"metric": "distinct affine regions per output",
                   "value": counts, "bank_sizes": bank_sizes,
                   "bound": bound, "pass": passed}
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown verification '{which}'")
    return _emit(args, "verify", {"which": which, **results}, passed,
                 cfg or None, t0, filename=f"verify_{which.replace('-', '_')}_report")


def _controller_from_args(args, cfg, model):
    """Controller for closed-loop audits: compiled network file if given,
    else the configured oracle."""
    if args.network:
        return import_network(load_json(args.network))
    if cfg.get("oracle") is not None:
        return _resolve_oracle(cfg, model.n, model.m)
    raise ConfigError("audit needs --network or an 'oracle' in the config")


def cmd_audit(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    model = _model_from(cfg)
    budget = _budget_from(cfg)
    per_axis, random_count, seed = _probe_settings(cfg, args)
    step = float(cfg.get("step", budget.tau / 100.0))
    if args.which == "invariance":
        controller = _controller_from_args(args, cfg, model)
        try:
            report = check_delta_tau_invariance(
                model, controller, budget.delta, budget.tau, per_axis, step
            )
        finally:
            if isinstance(controller, _SubprocessOracle):
                controller.close()
        return _emit(args, "audit", {"which": "invariance", **report.to_json()},
                     report.holds, cfg, t0, filename="audit_invariance_report")
    if args.which == "gronwall":
        if not args.network:
            raise ConfigError("gronwall audit needs --network (the compiled controller)")
        psi = _resolve_oracle(cfg, model.n, model.m)
        upsilon = import_network(load_json(args.network))
        k_upsilon = float(cfg.get("k_upsilon", 3.0 * budget.k_cont))
        box = _box_from(cfg, "domain") if "domain" in cfg else model.x_box
        probes = build_probes(box, per_axis, random_count, seed)
        try:
            report = deviation_audit(
                model, psi, upsilon, budget.tau, step, probes.points,
                k_upsilon=k_upsilon, delta=budget.delta, probe_spec=probes.spec,
            )
        finally:
            if isinstance(psi, _SubprocessOracle):
                psi.close()
        return _emit(args, "audit", {"which": "gronwall", **report.to_json()},
                     report.holds, cfg, t0, filename="audit_gronwall_report")
    if args.which == "sysid":
        if not args.network:
            raise ConfigError("sysid audit needs --network (the field surrogate)")
        net = import_network(load_json(args.network))
        if net.n != model.n + model.m or net.m != model.n:
            raise ConfigError(
                f"surrogate must map {model.n + model.m} -> {model.n}, "
                f"got {net.n} -> {net.m}"
            )

        def f_hat(x, u):
            z = np.concatenate([np.atleast_2d(x), np.atleast_2d(u)], axis=-1)
            return net.eval_batch(z)

        surrogate = ControlSystemModel(
            model.name + "+surrogate", model.n, model.m, f_hat,
            model.x_box, model.u_box, model.k_x, model.k_u,
        )
        psi = _resolve_oracle(cfg, model.n, model.m)
        k_psi = float(cfg.get("k_psi", budget.k_cont))
        box = _box_from(cfg, "domain") if "domain" in cfg else model.x_box
        probes = build_probes(box, per_axis, random_count, seed)
        mu_pts = build_probes(model.x_box.product(model.u_box), per_axis,
                              random_count, seed)
        try:
            report = sysid_deviation_audit(
                model, surrogate, psi, budget.tau, step, probes.points,
                k_psi=k_psi, mu_probes=mu_pts.points, delta=budget.delta,
                probe_spec=probes.spec,
            )
        finally:
            if isinstance(psi, _SubprocessOracle):
                psi.close()
        return _emit(args, "audit", {"which": "sysid", **report.to_json()},
                     report.holds, cfg, t0, filename="audit_sysid_report")
    raise ConfigError(f"unknown audit '{args.which}'")  # pragma: no cover


def cmd_ads_check(args) -> int:
    t0 = time.monotonic()
    ts_a = FiniteTransitionSystem.from_json(load_json(args.ts_a))
    ts_b = FiniteTransitionSystem.from_json(load_json(args.ts_b))
    if args.delta is None or args.delta < 0:
        raise ConfigError("ads-check needs --delta >= 0")
    verdict = check_ads(ts_a, ts_b, args.delta)
    results = verdict.to_json()
    results["num_states"] = [ts_a.num_states, ts_b.num_states]
    return _emit(args, "ads-check", results, verdict.holds, None, t0)


def cmd_sysid(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    model = _model_from(cfg)
    domain = cfg.get("domain")
    x_box = _box_from(cfg, "domain") if domain else model.x_box
    u_box = _box_from(cfg, "input_box") if "input_box" in cfg else model.u_box
    xu = x_box.product(u_box)
    eta = _resolve_eta(cfg, xu)
    k_field = float(cfg.get("k_field", model.k_x + model.k_u))
    grid = build_eta_grid(xu, eta)
    n, m = model.n, model.m

    def field_oracle(z):
        return model.field(z[:n], z[n:])

    omega = sample_controller(field_oracle, grid, n)
    interp = build_interpolant(grid, omega, k_field)
    bound = sysid_size(n, m, xu.extent(), eta)
    try:
        net = compile_tll(interp, bound)
        desc = arch_descriptor(net)
    except _AUDIT_ERRORS as exc:
        return _emit(args, "sysid", {"error": str(exc)}, False, cfg, t0)
    ipath = _write_artifact(args, "sysid_interpolant.json", interp.to_json())
    npath = _write_artifact(args, "sysid_network.json", export_network(net))
    budget = _budget_from(cfg) if "budget" in cfg else None
    results = {
        "model": model.name,
        "eta": float_to_hex(eta),
        "grid_points": grid.num_points,
        "size_bound": bound,
        "bank_sizes": [lat.size for lat in net.outputs],
        "descriptor": desc.to_json(),
        "interpolant_file": ipath,
        "network_file": npath,
    }
    if budget is not None:
        results["deviation_budget"] = float_to_hex(
            sysid_budget(compute_sizing(budget, xu).mu, budget.k_x, budget.k_u,
                         budget.k_cont, budget.tau)
        )
    passed = all(lat.size <= bound for lat in net.outputs)
    return _emit(args, "sysid", results, passed, cfg, t0)


def cmd_export(args) -> int:
    t0 = time.monotonic()
    net = import_network(load_json(args.artifact))
    if args.expanded:
        relu = expand_relu_layers(net)
        obj = {
            "kind": "relu-layers",
            "shape_convention": "pairwise-tree-v1",
            "layers": [
                {"W": [vec_to_hex(row) for row in W], "c": vec_to_hex(c)}
                for W, c in relu.layers
            ],
            "out_w": [vec_to_hex(row) for row in relu.out_w],
            "out_b": vec_to_hex(relu.out_b),
        }
        path = _write_artifact(args, "relu.json", obj)
        results = {
            "expanded": True,
            "shapes": relu.shapes(),
            "neurons": int(sum(W.shape[0] for W, _ in relu.layers)),
            "file": path,
        }
    else:
        path = _write_artifact(args, "network_canonical.json", export_network(net))
        results = {
            "expanded": False,
            "outputs": net.m,
            "bank_sizes": [lat.size for lat in net.outputs],
            "file": path,
        }
    return _emit(args, "export", results, True, None, t0)


# -- entry point ----------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON configuration file")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the probe seed from the config")
    sub.add_argument("--workers", type=int, default=1,
                     help="worker count for probe evaluation (recorded in reports)")
    sub.add_argument("--out", default=".", help="output directory for artifacts/reports")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tllsynth",
        description="Provably sized lattice network synthesis and audits.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("size", help="evaluate the budget and size formulas")
    _add_common(p)
    p.set_defaults(func=cmd_size)

    p = subs.add_parser("grid", help="construct the eta grid for a domain")
    _add_common(p)
    p.set_defaults(func=cmd_grid)

    p = subs.add_parser("build", help="sample an oracle into an interpolant")
    _add_common(p)
    p.set_defaults(func=cmd_build)

    p = subs.add_parser("compile", help="compile an interpolant into a lattice network")
    p.add_argument("artifact", help="interpolant JSON file")
    _add_common(p)
    p.set_defaults(func=cmd_compile)

    p = subs.add_parser("verify", help="audit a built artifact")
    p.add_argument("artifact", help="interpolant JSON file")
    p.add_argument("--which", required=True,
                   choices=["approx", "lipschitz", "continuity", "tll-equiv", "regions"])
    p.add_argument("--network", help="network JSON file (tll-equiv, regions)")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = subs.add_parser("audit", help="closed-loop audits on a model")
    p.add_argument("--which", required=True, choices=["invariance", "gronwall", "sysid"])
    p.add_argument("--network", help="compiled network JSON file")
    _add_common(p)
    p.set_defaults(func=cmd_audit)

    p = subs.add_parser("ads-check", help="approximate simulation between two systems")
    p.add_argument("ts_a", help="left transition-system JSON file")
    p.add_argument("ts_b", help="right transition-system JSON file")
    p.add_argument("--delta", type=float, required=True, help="disturbance bound")
    _add_common(p)
    p.set_defaults(func=cmd_ads_check)

    p = subs.add_parser("sysid", help="build a field surrogate over the state-input box")
    _add_common(p)
    p.set_defaults(func=cmd_sysid)

    p = subs.add_parser("export", help="re-emit a network, optionally as ReLU layers")
    p.add_argument("artifact", help="network JSON file")
    p.add_argument("--expanded", action="store_true",
                   help="materialize explicit ReLU layers")
    _add_common(p)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _AUDIT_ERRORS as exc:
        print(f"audit failure: {exc}", file=sys.stderr)
        return EXIT_AUDIT_FAILURE
    except _NUMERIC_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_ERROR
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except TllSynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_ERROR
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
