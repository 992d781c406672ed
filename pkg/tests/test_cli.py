"""End-to-end command-line tests: config plumbing, artifact chaining,
report determinism, and exit codes."""

import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from tllsynth.cli import main
from tllsynth.dynamics import FiniteTransitionSystem
from tllsynth.geometry import EtaGrid
from tllsynth.serialize import dump_json, load_json

AFFINE_W = [[0.5, -0.25]]
AFFINE_B = [0.1]


def _write_cfg(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh)
    return str(path)


def _report(out_dir, name):
    with open(out_dir / name) as fh:
        return json.load(fh)


def _size_cfg(**extra):
    cfg = {
        "budget": {"k_x": 1.0, "k_u": 1.0, "k_cont": 1.0, "tau": 0.1,
                   "delta": 0.05, "exponent_multiplier": 2},
        "domain": {"lower": [0.0, 0.0], "upper": [1.0, 1.0]},
    }
    cfg.update(extra)
    return cfg


def _affine_build_cfg(oracle):
    return {
        "domain": {"lower": [0.0, 0.0], "upper": [1.0, 1.0]},
        "eta": 0.5,
        "m": 1,
        "k_cont": 2.0,
        "oracle": oracle,
    }


# -- size ----------------------------------------------------------------------


def test_size_reference_chain(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json", _size_cfg(
        input_box={"lower": [0.0], "upper": [1.0]}))
    assert main(["size", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path, "size_report.json")
    assert rep["command"] == "size"
    assert rep["pass"] is True
    assert set(rep) >= {"command", "version", "pass", "seed", "workers",
                        "config", "results", "timing"}
    assert "seconds" in rep["timing"]
    res = rep["results"]
    assert res["controller_size"] == 242
    assert res["dimension"] == 2
    assert abs(float.fromhex(res["mu_max"]) - 0.37040911034085894) < 1e-12
    assert abs(float.fromhex(res["eta_max"]) - 0.12346970344695298) < 1e-12
    # joint box [0,1]^3 at the budgeted eta: 3! * ceil(1/eta + 2)^3
    assert res["sysid"]["size"] == 7986
    # every audit entry carries its formula alongside the value
    assert all("formula" in entry for entry in res["audit"])
    assert any(entry.get("quantity") == "defining_inequality"
               and entry["holds"] for entry in res["audit"])


def test_size_eta_override_small_instance(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json", {
        "budget": {"k_x": 1.0, "k_u": 1.0, "k_cont": 1.0, "tau": 0.1,
                   "delta": 0.05, "exponent_multiplier": 2},
        "domain": {"lower": [0.0], "upper": [1.0]},
        "eta": 0.5,
    })
    assert main(["size", "--config", cfg, "--out", str(tmp_path)]) == 0
    res = _report(tmp_path, "size_report.json")["results"]
    assert res["controller_size"] == 4
    assert float.fromhex(res["eta_max"]) == 0.5


def test_size_nonpositive_delta_is_config_error(tmp_path):
    bad = _size_cfg()
    bad["budget"]["delta"] = 0.0
    cfg = _write_cfg(tmp_path / "cfg.json", bad)
    assert main(["size", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert not (tmp_path / "size_report.json").exists()


def test_missing_and_malformed_config(tmp_path):
    assert main(["size", "--out", str(tmp_path)]) == 2
    assert main(["size", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path)]) == 2
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["size", "--config", str(broken), "--out", str(tmp_path)]) == 2


# -- grid ----------------------------------------------------------------------


def test_grid_writes_loadable_artifact(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json", {
        "domain": {"lower": [0.0], "upper": [1.0]}, "eta": 0.25})
    assert main(["grid", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path, "grid_report.json")
    assert rep["results"]["num_points"] == 4
    assert rep["results"]["num_hypercubes"] == 5
    assert rep["results"]["num_hypercubes"] <= rep["results"]["hypercube_count_bound"]
    grid = EtaGrid.from_json(load_json(str(tmp_path / "grid.json")))
    grid.validate()
    assert grid.num_points == 4


# -- build / compile / verify chain ---------------------------------------------


def _run_affine_chain(tmp_path, oracle):
    out = tmp_path / "out"
    cfg = _write_cfg(tmp_path / "build.json", _affine_build_cfg(oracle))
    assert main(["build", "--config", cfg, "--out", str(out)]) == 0
    assert main(["compile", str(out / "interpolant.json"), "--out", str(out)]) == 0
    return out


def test_constant_oracle_gives_one_region(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json",
                     _affine_build_cfg({"kind": "builtin", "name": "zero"}))
    assert main(["build", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path, "build_report.json")
    assert rep["results"]["region_counts"] == [1]
    assert rep["results"]["num_grid_points"] == 4


def test_build_without_oracle_is_config_error(tmp_path):
    cfg_obj = _affine_build_cfg({"kind": "builtin", "name": "zero"})
    del cfg_obj["oracle"]
    cfg = _write_cfg(tmp_path / "cfg.json", cfg_obj)
    assert main(["build", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_affine_chain_and_verifications(tmp_path):
    out = _run_affine_chain(
        tmp_path, {"kind": "builtin", "name": "affine", "W": AFFINE_W, "b": AFFINE_B})
    build = _report(out, "build_report.json")
    # boundary corners take the min over neighboring grid values, which sits
    # below a non-constant plane, so edge cells split off their own regions
    assert build["results"]["region_counts"] == [12]
    comp = _report(out, "compile_report.json")
    assert comp["pass"] is True
    assert (out / "network.json").exists()

    vcfg = _write_cfg(tmp_path / "verify.json", {
        "probes": {"per_axis": 7, "random": 50, "seed": 3},
        "tolerances": {"eval": 1e-9},
    })
    interp = str(out / "interpolant.json")
    net = str(out / "network.json")

    assert main(["verify", interp, "--which", "tll-equiv", "--network", net,
                 "--config", vcfg, "--out", str(out)]) == 0
    equiv = _report(out, "verify_tll_equiv_report.json")
    assert equiv["pass"] is True
    assert equiv["results"]["value"] <= 1e-9

    # without an explicit bound the audit certifies 3x the declared constant
    assert main(["verify", interp, "--which", "lipschitz",
                 "--config", vcfg, "--out", str(out)]) == 0
    lips = _report(out, "verify_lipschitz_report.json")
    assert 0.75 - 1e-12 <= lips["results"]["value"] <= 6.0

    assert main(["verify", interp, "--which", "continuity",
                 "--config", vcfg, "--out", str(out)]) == 0

    assert main(["verify", interp, "--which", "regions",
                 "--config", vcfg, "--out", str(out)]) == 0
    reg = _report(out, "verify_regions_report.json")
    assert reg["results"]["value"] == [12]
    assert reg["results"]["bound"] == 32  # 2! * ceil(1/0.5 + 2)^2


def test_constant_chain_approximates_exactly(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json",
                     _affine_build_cfg({"kind": "builtin", "name": "zero"}))
    assert main(["build", "--config", cfg, "--out", str(tmp_path)]) == 0
    vcfg = _write_cfg(tmp_path / "verify.json", {
        "mu": 1e-9,
        "oracle": {"kind": "builtin", "name": "zero"},
        "probes": {"per_axis": 6, "random": 40, "seed": 5},
    })
    assert main(["verify", str(tmp_path / "interpolant.json"), "--which",
                 "approx", "--config", vcfg, "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path, "verify_approx_report.json")
    assert rep["pass"] is True
    assert rep["results"]["value"] <= 1e-9


def test_verify_failures_exit_one(tmp_path):
    out = _run_affine_chain(
        tmp_path, {"kind": "builtin", "name": "affine", "W": AFFINE_W, "b": AFFINE_B})
    interp = str(out / "interpolant.json")
    # approximation gap against a different controller exceeds the budget
    mism = _write_cfg(tmp_path / "mismatch.json", {
        "mu": 1e-3,
        "oracle": {"kind": "builtin", "name": "affine",
                   "W": [[-1.0, 1.0]], "b": [0.0]},
    })
    assert main(["verify", interp, "--which", "approx",
                 "--config", mism, "--out", str(out)]) == 1
    rep = _report(out, "verify_approx_report.json")
    assert rep["pass"] is False and rep["results"]["value"] > 1e-3
    # gradient dual norm 0.75 exceeds a 0.5 budget
    tight = _write_cfg(tmp_path / "tight.json", {"lipschitz_bound": 0.5})
    assert main(["verify", interp, "--which", "lipschitz",
                 "--config", tight, "--out", str(out)]) == 1
    assert _report(out, "verify_lipschitz_report.json")["pass"] is False
    # tll-equiv without a network file is a config error
    assert main(["verify", interp, "--which", "tll-equiv",
                 "--out", str(out)]) == 2


def test_compile_bound_gate(tmp_path):
    out = _run_affine_chain(
        tmp_path, {"kind": "builtin", "name": "affine", "W": AFFINE_W, "b": AFFINE_B})
    interp = str(out / "interpolant.json")
    ok = _write_cfg(tmp_path / "bound32.json", {"bound_n": 32})
    assert main(["compile", interp, "--config", ok, "--out", str(out)]) == 0
    rep = _report(out, "compile_report.json")
    assert rep["results"]["provenance"]["bound_n"] == 32
    # a bank of one affine piece cannot satisfy a zero budget
    zero = _write_cfg(tmp_path / "bound0.json", {"bound_n": 0})
    assert main(["compile", interp, "--config", zero, "--out", str(out)]) == 1
    assert _report(out, "compile_report.json")["pass"] is False


# -- external oracles ------------------------------------------------------------


def _grid_points(tmp_path):
    cfg = _write_cfg(tmp_path / "grid.json", {
        "domain": {"lower": [0.0, 0.0], "upper": [1.0, 1.0]}, "eta": 0.5})
    gout = tmp_path / "gout"
    assert main(["grid", "--config", cfg, "--out", str(gout)]) == 0
    grid = EtaGrid.from_json(load_json(str(gout / "grid.json")))
    return grid.points


def test_csv_oracle_matches_builtin(tmp_path):
    ref = _run_affine_chain(
        tmp_path, {"kind": "builtin", "name": "affine", "W": AFFINE_W, "b": AFFINE_B})
    W, b = np.array(AFFINE_W), np.array(AFFINE_B)
    pts = _grid_points(tmp_path)
    csv_path = tmp_path / "table.csv"
    rows = ["# x1,x2,u"]
    for p in pts:
        u = p @ W.T + b
        rows.append(f"{float(p[0])!r},{float(p[1])!r},{float(u[0])!r}")
    csv_path.write_text("\n".join(rows) + "\n")

    out = tmp_path / "csv_out"
    cfg = _write_cfg(tmp_path / "csv_cfg.json",
                     _affine_build_cfg({"kind": "csv", "path": str(csv_path)}))
    assert main(["build", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "interpolant.json").read_bytes() == \
        (ref / "interpolant.json").read_bytes()


def test_csv_oracle_missing_row_is_numerical_error(tmp_path):
    pts = _grid_points(tmp_path)
    csv_path = tmp_path / "partial.csv"
    rows = [f"{float(p[0])!r},{float(p[1])!r},0.0" for p in pts[:-1]]
    csv_path.write_text("\n".join(rows) + "\n")
    cfg = _write_cfg(tmp_path / "cfg.json",
                     _affine_build_cfg({"kind": "csv", "path": str(csv_path)}))
    assert main(["build", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_subprocess_oracle_matches_builtin(tmp_path):
    ref = _run_affine_chain(
        tmp_path, {"kind": "builtin", "name": "affine", "W": AFFINE_W, "b": AFFINE_B})
    script = tmp_path / "oracle.py"
    script.write_text(
        "import sys, json\n"
        "import numpy as np\n"
        f"W = np.array({AFFINE_W!r}); b = np.array({AFFINE_B!r})\n"
        "for line in sys.stdin:\n"
        "    pts = np.asarray(json.loads(line)['points'], dtype=float)\n"
        "    out = pts @ W.T + b\n"
        "    sys.stdout.write(json.dumps({'controls': out.tolist()}) + '\\n')\n"
        "    sys.stdout.flush()\n"
    )
    out = tmp_path / "sub_out"
    cfg = _write_cfg(tmp_path / "sub_cfg.json", _affine_build_cfg(
        {"kind": "subprocess", "argv": [sys.executable, str(script)]}))
    assert main(["build", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "interpolant.json").read_bytes() == \
        (ref / "interpolant.json").read_bytes()


# -- determinism -------------------------------------------------------------------


def test_reports_and_artifacts_deterministic(tmp_path):
    oracle = {"kind": "builtin", "name": "affine", "W": AFFINE_W, "b": AFFINE_B}
    out = tmp_path / "out"
    stash = tmp_path / "stash"
    stash.mkdir()
    cfg = _write_cfg(tmp_path / "cfg.json", _affine_build_cfg(oracle))
    names = ("interpolant.json", "network.json", "build_report.json",
             "compile_report.json", "verify_tll_equiv_report.json")
    for round_two in (False, True):
        assert main(["build", "--config", cfg, "--seed", "11",
                     "--out", str(out)]) == 0
        assert main(["compile", str(out / "interpolant.json"),
                     "--seed", "11", "--out", str(out)]) == 0
        assert main(["verify", str(out / "interpolant.json"), "--which",
                     "tll-equiv", "--network", str(out / "network.json"),
                     "--seed", "11", "--out", str(out)]) == 0
        if not round_two:
            for name in names:
                shutil.copy(out / name, stash / name)
    for artifact in ("interpolant.json", "network.json"):
        assert (out / artifact).read_bytes() == (stash / artifact).read_bytes()
    for name in ("build_report.json", "compile_report.json",
                 "verify_tll_equiv_report.json"):
        ra, rb = _report(out, name), _report(stash, name)
        ra.pop("timing"), rb.pop("timing")
        assert ra == rb
        assert ra["seed"] == 11


# -- export -----------------------------------------------------------------------


def test_export_canonical_and_expanded(tmp_path):
    out = _run_affine_chain(
        tmp_path, {"kind": "builtin", "name": "affine", "W": AFFINE_W, "b": AFFINE_B})
    net = str(out / "network.json")
    assert main(["export", net, "--out", str(out)]) == 0
    assert (out / "network_canonical.json").read_bytes() == \
        (out / "network.json").read_bytes()
    assert main(["export", net, "--expanded", "--out", str(out)]) == 0
    rep = _report(out, "export_report.json")
    assert rep["results"]["expanded"] is True
    assert rep["results"]["neurons"] >= 1
    relu = load_json(str(out / "relu.json"))
    assert relu["kind"] == "relu-layers"
    assert relu["shape_convention"] == "pairwise-tree-v1"
    assert len(relu["layers"]) >= 1


# -- audits -------------------------------------------------------------------------


def test_audit_invariance_pass_and_fail(tmp_path):
    base = {
        "model": "linear_1d",
        "budget": {"k_x": 1.0, "k_u": 1.0, "k_cont": 1.0, "tau": 1.0, "delta": 0.1},
        "probes": {"per_axis": 5},
    }
    good = dict(base, oracle={"kind": "builtin", "name": "zero"})
    cfg = _write_cfg(tmp_path / "good.json", good)
    assert main(["audit", "--which", "invariance", "--config", cfg,
                 "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path, "audit_invariance_report.json")
    assert rep["pass"] is True
    assert any("not a proof" in note for note in rep["results"]["notes"])

    bad = dict(base, oracle={"kind": "builtin", "name": "affine",
                             "W": [[2.0]], "b": [0.0]})
    cfg = _write_cfg(tmp_path / "bad.json", bad)
    assert main(["audit", "--which", "invariance", "--config", cfg,
                 "--out", str(tmp_path)]) == 1
    rep = _report(tmp_path, "audit_invariance_report.json")
    assert rep["pass"] is False
    assert rep["results"]["violations"]


def _linear_controller_chain(tmp_path):
    """Build + compile u = -0.5 x over the scalar plant's state box."""
    out = tmp_path / "ctrl"
    cfg = _write_cfg(tmp_path / "ctrl.json", {
        "domain": {"lower": [-1.0], "upper": [1.0]},
        "eta": 0.25,
        "m": 1,
        "k_cont": 0.5,
        "oracle": {"kind": "builtin", "name": "affine", "W": [[-0.5]], "b": [0.0]},
    })
    assert main(["build", "--config", cfg, "--out", str(out)]) == 0
    assert main(["compile", str(out / "interpolant.json"), "--out", str(out)]) == 0
    return out / "network.json"


def test_audit_gronwall_exact_reproduction(tmp_path):
    net = _linear_controller_chain(tmp_path)
    cfg = _write_cfg(tmp_path / "aud.json", {
        "model": "linear_1d",
        "budget": {"k_x": 1.0, "k_u": 1.0, "k_cont": 0.5, "tau": 0.5, "delta": 0.5},
        "oracle": {"kind": "builtin", "name": "affine", "W": [[-0.5]], "b": [0.0]},
        "probes": {"per_axis": 9},
    })
    assert main(["audit", "--which", "gronwall", "--network", str(net),
                 "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path, "audit_gronwall_report.json")
    assert rep["pass"] is True
    res = rep["results"]
    # the compiled feedback droops near the box edges, so the gap is small
    # but nonzero; the measured controller gap must still dominate it
    assert res["mu_source"] == "measured"
    assert res["bound_pass"] is True and res["delta_pass"] is True
    assert res["max_deviation"] <= res["bound"] + 1e-7
    assert res["max_deviation"] <= 0.01


def test_audit_gronwall_requires_network(tmp_path):
    cfg = _write_cfg(tmp_path / "aud.json", {
        "model": "linear_1d",
        "budget": {"k_x": 1.0, "k_u": 1.0, "k_cont": 0.5, "tau": 0.5, "delta": 0.5},
        "oracle": {"kind": "builtin", "name": "zero"},
    })
    assert main(["audit", "--which", "gronwall", "--config", cfg,
                 "--out", str(tmp_path)]) == 2


def test_sysid_build_and_audit(tmp_path):
    sid = tmp_path / "sid"
    cfg = _write_cfg(tmp_path / "sid.json", {
        "model": "linear_1d",
        "eta": 0.5,
        "k_field": 2.0,
        "budget": {"k_x": 1.0, "k_u": 1.0, "k_cont": 0.5, "tau": 0.5, "delta": 0.5},
    })
    assert main(["sysid", "--config", cfg, "--out", str(sid)]) == 0
    rep = _report(sid, "sysid_report.json")
    assert rep["pass"] is True
    res = rep["results"]
    assert float.fromhex(res["eta"]) == 0.5
    assert res["grid_points"] == 16  # 4 per axis over [-1,1] x [-1,1]
    assert res["size_bound"] == 72   # 2! * ceil(2/0.5 + 2)^2
    assert all(size <= res["size_bound"] for size in res["bank_sizes"])
    assert "deviation_budget" in res
    assert (sid / "sysid_network.json").exists()

    aud = _write_cfg(tmp_path / "aud.json", {
        "model": "linear_1d",
        "budget": {"k_x": 1.0, "k_u": 1.0, "k_cont": 0.5, "tau": 0.5, "delta": 0.5},
        "oracle": {"kind": "builtin", "name": "affine", "W": [[-0.5]], "b": [0.0]},
        "k_psi": 0.5,
        "probes": {"per_axis": 5},
    })
    assert main(["audit", "--which", "sysid",
                 "--network", str(sid / "sysid_network.json"),
                 "--config", aud, "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path, "audit_sysid_report.json")
    assert rep["pass"] is True


def test_audit_sysid_shape_mismatch_is_config_error(tmp_path):
    # a controller network maps 1 -> 1; the surrogate must map 2 -> 1
    net = _linear_controller_chain(tmp_path)
    cfg = _write_cfg(tmp_path / "aud.json", {
        "model": "linear_1d",
        "budget": {"k_x": 1.0, "k_u": 1.0, "k_cont": 0.5, "tau": 0.5, "delta": 0.5},
        "oracle": {"kind": "builtin", "name": "zero"},
    })
    assert main(["audit", "--which", "sysid", "--network", str(net),
                 "--config", cfg, "--out", str(tmp_path)]) == 2


# -- ads-check ------------------------------------------------------------------------


def _ts_file(path, coords, transitions):
    ts = FiniteTransitionSystem(np.array(coords, dtype=float), set(transitions))
    dump_json(ts.to_json(), str(path))
    return str(path)


def test_ads_check_pass_fail_and_validation(tmp_path):
    a = _ts_file(tmp_path / "a.json", [[0.0], [1.0]],
                 {(0, "go", 1), (1, "go", 1)})
    chain = _ts_file(tmp_path / "chain.json", [[0.0], [1.0], [2.0]],
                     {(0, "go", 1), (1, "go", 2)})
    sparse = _ts_file(tmp_path / "sparse.json", [[5.0]], {(0, "go", 0)})

    assert main(["ads-check", a, a, "--delta", "0.0", "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path, "ads_check_report.json")
    assert rep["pass"] is True
    assert rep["results"]["num_states"] == [2, 2]

    assert main(["ads-check", chain, sparse, "--delta", "0.1",
                 "--out", str(tmp_path)]) == 1
    rep = _report(tmp_path, "ads_check_report.json")
    assert rep["pass"] is False
    assert rep["results"]["counterexample"] is not None

    assert main(["ads-check", a, a, "--delta", "-1.0", "--out", str(tmp_path)]) == 2
    assert main(["ads-check", a, str(tmp_path / "missing.json"),
                 "--delta", "0.0", "--out", str(tmp_path)]) == 2


# -- process-level entry points ---------------------------------------------------------


def test_module_and_console_entry_points(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json", _size_cfg())
    proc = subprocess.run([sys.executable, "-m", "tllsynth", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("tllsynth ")
    proc = subprocess.run(
        [sys.executable, "-m", "tllsynth", "size", "--config", cfg,
         "--out", str(tmp_path)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "[PASS] size" in proc.stdout
    exe = shutil.which("tllsynth")
    assert exe is not None
    proc = subprocess.run([exe, "size", "--config", cfg, "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
