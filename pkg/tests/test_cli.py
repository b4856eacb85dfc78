import io
import json
import math
import os

import pytest

from dissipative_strip import scenario as scen
from dissipative_strip.cli import main, modes_table
from dissipative_strip.modal import Params

UNIT = {"epsilon": 1.0, "a": 1.0, "c": 1.0, "ell": math.pi}


def run(tmp_path, cfg, *args, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    out, err = io.StringIO(), io.StringIO()
    code = main([args[0], "--config", str(path), "--out", str(tmp_path / "out"), *args[1:]], out, err)
    return code, out.getvalue(), err.getvalue()


def read(tmp_path, name):
    return (tmp_path / "out" / name).read_text()


def test_modes_table_rows():
    table = modes_table(Params(1.0, 1.0, 1.0, math.pi), 3)
    assert (table.p, table.q, table.beta) == (0.5, 1.0, 0.5)
    assert table.rows[0] == (1, 1.0, 1.0, 1.0, 0.0, "Critical", 1.0)
    assert table.rows[1] == (2, 2.0, 2.0, 2.5, 2.25, "Overdamped", 1.0)
    assert table.rows[2][:6] == (3, 3.0, 3.0, 5.0, 16.0, "Overdamped")


def test_modes_command_prints_header_and_rows(tmp_path):
    code, out, _ = run(tmp_path, {"params": UNIT, "T": 1}, "modes", "--modes", "3")
    lines = out.splitlines()
    assert code == 0
    assert lines[:4] == ["# p=0.5", "# q=1", "# beta=0.5", "n,gamma,b,h,omega_sq,regime,decay_rate"]
    assert lines[4] == "1,1,1,1,0,Critical,1" and len(lines) == 7
    assert read(tmp_path, "modes.csv").splitlines()[3:] == lines[3:]


def test_zero_scenario_writes_zero_tables(tmp_path):
    code, _, _ = run(tmp_path, {"params": UNIT, "T": 1}, "solve")
    assert code == 0
    sol = read(tmp_path, "solution.csv").splitlines()
    assert sol[0] == "t,x,u"
    assert all(line.endswith(",0") for line in sol[1:])
    sup = read(tmp_path, "sup_norms.csv").splitlines()
    assert sup[0] == "t,sup_norm" and len(sup) == 102
    assert not [p for p in os.listdir(tmp_path / "out") if p.startswith(".tmp")]


def test_compare_single_mode_passes(tmp_path):
    cfg = {"params": UNIT, "T": 2, "grid": {"m": 201},
           "initial": {"g1": {"kind": "single_mode", "n": 1, "amplitude": 1.0}}}
    code, out, _ = run(tmp_path, cfg, "compare")
    assert code == 0 and "PASS" in out
    rows = read(tmp_path, "comparison.csv").splitlines()
    assert rows[0] == "t,sup_spectral,sup_fd,discrepancy"
    assert max(float(r.split(",")[3]) for r in rows[1:]) <= 1e-3


def test_compare_fails_with_tight_tol(tmp_path):
    cfg = {"params": UNIT, "T": 1, "grid": {"m": 31},
           "initial": {"g1": {"kind": "single_mode", "n": 1}}, "numerics": {"fd_dt": 0.05}}
    code, out, _ = run(tmp_path, cfg, "compare", "--tol", "1e-9")
    assert code == 1 and "FAIL" in out


@pytest.mark.parametrize("cfg, field", [
    ({"params": dict(UNIT, epsilon=-1.0), "T": 1}, "params.epsilon"),
    ({"params": UNIT, "T": 1, "source": {"kind": "psge"}}, "source"),
    ({"params": UNIT, "T": 1, "grid": {"m": 2}}, "grid.m"),
    ({"params": UNIT, "T": 1, "tolerances": {"compare": 0}}, "tolerances.compare"),
    ({"params": UNIT, "T": 1, "solver": "magic"}, "solver"),
    ({"params": UNIT}, "<root>"),
    ({"params": UNIT, "T": 1, "source": {"kind": "psge", "gamma": 0.5}}, "solver"),
    ({"params": UNIT, "T": 5, "decay": {"window": [4, 8]}}, "decay.window"),
])
def test_config_errors_name_the_field(tmp_path, cfg, field):
    code, _, err = run(tmp_path, cfg, "solve")
    assert code == 2
    assert err.startswith(f"config error: {field}")


def test_unreadable_config(tmp_path):
    err = io.StringIO()
    assert main(["solve", "--config", str(tmp_path / "missing.json")], io.StringIO(), err) == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["solve", "--config", str(tmp_path / "bad.json")], io.StringIO(), err) == 2


def test_decay_exit_status_follows_verdict(tmp_path):
    cfg = {"params": UNIT, "T": 40, "source": {"kind": "exp_decay", "delta": 0.25},
           "output": {"n_times": 401, "solution": None}, "decay": {"window": [20, 40]},
           "numerics": {"quadrature_dt": 1e-2}}
    code, out, _ = run(tmp_path, cfg, "decay")
    assert code == 0 and "PASS" in out
    report = dict(line.split(",", 1) for line in read(tmp_path, "decay_report.csv").splitlines()[1:])
    assert report["passed"] == "true" and report["delta_star"] == "0.25"
    assert not (tmp_path / "out" / "solution.csv").exists()
    # claim a faster guaranteed rate than the forcing allows
    cfg["decay"]["scenario"] = "homogeneous"
    code, out, _ = run(tmp_path, cfg, "decay")
    assert code == 1 and "FAIL" in out


def test_canonical_config_round_trip_is_bit_identical(tmp_path):
    cfg = {"params": UNIT, "T": 1, "solver": "march", "initial": {"g0": {"kind": "random", "n_modes": 6}},
           "source": {"kind": "psge", "gamma": 0.5}}
    assert run(tmp_path, cfg, "solve", "--seed", "7")[0] == 0
    first = {n: read(tmp_path, n) for n in ("solution.csv", "sup_norms.csv", "scenario.json")}
    canonical = json.loads(first["scenario.json"])
    assert canonical["seed"] == 7 and canonical["numerics"]["march_dt"] == 0.01
    assert run(tmp_path, canonical, "solve", name="canon.json")[0] == 0
    assert {n: read(tmp_path, n) for n in first} == first


def test_seed_changes_random_data(tmp_path):
    cfg = {"params": UNIT, "T": 0.5, "initial": {"g0": {"kind": "random", "n_modes": 6}}}
    run(tmp_path, cfg, "solve", "--seed", "1")
    a = read(tmp_path, "sup_norms.csv")
    run(tmp_path, cfg, "solve", "--seed", "2")
    assert read(tmp_path, "sup_norms.csv") != a


def test_canonicalize_fills_defaults():
    cfg = scen.canonicalize({"params": UNIT, "T": 3})
    assert cfg["grid"]["m"] == 63 and cfg["solver"] == "spectral" and cfg["source"] == {"kind": "none"}
    assert scen.canonicalize(cfg) == cfg
    assert scen.dump(cfg) == scen.dump(scen.canonicalize(json.loads(scen.dump(cfg))))
