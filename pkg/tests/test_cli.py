"""Experiment config parsing, the sweep runner, emission and CLI plumbing."""

import csv
import json
import math
from pathlib import Path

import pytest
import yaml

from cmdetect.cli import ResultRow, emit, list_recipes, main, run_experiment
from cmdetect.config import (
    ConfigError,
    load_spec,
    parse_spec,
    sensing_from_dict,
    spec_hash,
)
from cmdetect.noise import CauchySensing, LaplaceSensing, UniformSensing

BASE_DOC = {
    "name": "smoke",
    "sweep": {"axis": "omega", "grid": [0.3, 0.5, 0.7]},
    "base": {
        "theta": 2.0,
        "n_sensors": 8,
        "power": {"mode": "total", "value": 1.0},
        "sensing": {"kind": "gaussian", "var": 1.0},
        "channel": {"kind": "gaussian", "var": 1.0},
    },
    "outputs": ["dc", "exponent"],
}


def doc(**overrides):
    d = json.loads(json.dumps(BASE_DOC))
    d.update(overrides)
    return d


# -- parsing ---------------------------------------------------------------

def test_parse_roundtrip():
    spec = parse_spec(doc())
    assert spec.name == "smoke"
    assert spec.grid == (0.3, 0.5, 0.7)
    assert spec.base.n_sensors == 8


def test_tagged_sensing_records():
    assert sensing_from_dict({"kind": "cauchy", "gamma": 1.0}) == CauchySensing(1.0)
    assert sensing_from_dict({"kind": "laplace", "var": 1.0}) == LaplaceSensing(0.5)
    u = sensing_from_dict({"kind": "uniform", "var": 1.0})
    assert isinstance(u, UniformSensing)
    assert u.var == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        sensing_from_dict({"kind": "levy", "alpha": 1.5})
    with pytest.raises(ConfigError):
        sensing_from_dict({"gamma": 1.0})


def test_db_power_conversion_happens_at_parse():
    d = doc()
    d["base"]["power"] = {"mode": "total", "value_db": 10.0}
    spec = parse_spec(d)
    assert spec.base.total_power == pytest.approx(10.0)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(outputs=[]),
        lambda d: d.update(outputs=["pe_exact"]),
        lambda d: d["sweep"].update(grid=[0.5, 0.3]),
        lambda d: d["sweep"].update(axis="voltage"),
        lambda d: d["sweep"].update(grid=[]),
        lambda d: d["base"].pop("theta"),
        lambda d: d.update(omega={"mode": "fixed"}),
        lambda d: d.update(mc={"hypothesis_mode": "h5"}),
    ],
)
def test_invalid_specs_rejected(mutate):
    d = doc()
    d["sweep"]["axis"] = "theta"  # so omega fixed-mode check applies
    mutate(d)
    with pytest.raises(ConfigError):
        parse_spec(d)


def test_spec_hash_key_order_invariant():
    d1 = doc()
    d2 = {k: d1[k] for k in reversed(list(d1))}
    assert spec_hash(d1) == spec_hash(d2)
    d3 = doc()
    d3["base"]["theta"] = 2.5
    assert spec_hash(d3) != spec_hash(d1)


# -- runner ----------------------------------------------------------------

def test_run_omega_sweep_rows():
    spec = parse_spec(doc())
    rows = list(run_experiment(spec, seed=1))
    assert [r.sweep_value for r in rows] == [0.3, 0.5, 0.7]
    for r in rows:
        assert r.omega_used == r.sweep_value
        assert r.dc is not None and r.dc > 0.0
        assert r.epsilon is not None and r.epsilon > 0.0
        # unrequested outputs stay null, never zero
        assert r.pe_mc is None and r.pe_theory is None
        assert r.error is None


def test_run_records_row_errors_and_continues():
    d = doc()
    d["sweep"] = {"axis": "rho_s", "in_db": True, "grid": [0.0, 5.0]}
    d["base"]["sensing"] = {"kind": "cauchy", "gamma": 1.0}
    d["omega"] = {"mode": "dc_optimal"}
    spec = parse_spec(d)
    rows = list(run_experiment(spec, seed=1))
    assert len(rows) == 2
    assert all(r.error is not None for r in rows)  # no sensing SNR for Cauchy
    assert all(r.dc is None for r in rows)


def test_run_montecarlo_rows_have_seeds_and_ci():
    d = doc()
    d["outputs"] = ["pe_montecarlo"]
    d["mc"] = {"n_trials": 20000}
    spec = parse_spec(d)
    rows = list(run_experiment(spec, seed=42))
    assert all(r.seed is not None for r in rows)
    assert len({r.seed for r in rows}) == len(rows)
    assert all(r.pe_mc is not None and r.pe_mc_ci > 0.0 for r in rows)


def test_rho_c_sweep_rescales_channel():
    d = doc()
    d["sweep"] = {"axis": "rho_c", "in_db": True, "grid": [0.0, 10.0]}
    d["omega"] = {"mode": "fixed", "value": 0.5}
    spec = parse_spec(d)
    rows = list(run_experiment(spec, seed=1))
    # higher channel SNR => less channel noise => larger deflection
    assert rows[1].dc > rows[0].dc


# -- emission --------------------------------------------------------------

def _rows():
    return [
        ResultRow(sweep_value=0.3, omega_used=0.3, dc=1.2345, epsilon=None, seed=7),
        ResultRow(sweep_value=0.5, omega_used=0.5, dc=2.5, epsilon=0.01, seed=8),
    ]


def test_emit_csv_determinism(tmp_path):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit(_rows(), "csv", p1, seed=7, hash_="abc")
    emit(_rows(), "csv", p2, seed=7, hash_="abc")
    assert p1.read_bytes() == p2.read_bytes()
    text = p1.read_text()
    assert text.startswith("#")
    assert "seed=7" in text and "abc" in text


def test_emit_csv_nulls_are_empty_not_zero(tmp_path):
    p = tmp_path / "a.csv"
    emit(_rows(), "csv", p, seed=7, hash_="abc")
    with open(p) as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    header, first = rows[0], rows[1]
    assert first[header.index("epsilon")] == ""
    assert float(first[header.index("dc")]) == 1.2345


def test_emit_jsonl_roundtrip(tmp_path):
    p = tmp_path / "a.jsonl"
    emit(_rows(), "jsonl", p, seed=7, hash_="abc")
    lines = p.read_text().splitlines()
    meta = json.loads(lines[0])["meta"]
    assert meta["seed"] == 7
    rec = json.loads(lines[1])
    assert rec["dc"] == 1.2345
    assert rec["epsilon"] is None


def test_emit_17_digit_floats(tmp_path):
    p = tmp_path / "a.csv"
    val = 1.0 / 3.0
    emit([ResultRow(sweep_value=val, dc=val)], "csv", p, seed=0, hash_="x")
    body = [l for l in p.read_text().splitlines() if not l.startswith(("#", "sweep"))][0]
    assert "0.33333333333333331" in body


# -- CLI entry point -------------------------------------------------------

def _write_spec(tmp_path, d):
    p = tmp_path / "exp.yaml"
    p.write_text(yaml.safe_dump(d))
    return p


def test_main_run_success_and_determinism(tmp_path):
    d = doc()
    spec_path = _write_spec(tmp_path, d)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["run", str(spec_path), "--seed", "5", "--out", str(out1)]) == 0
    assert main(["run", str(spec_path), "--seed", "5", "--out", str(out2)]) == 0
    assert (out1 / "smoke.csv").read_bytes() == (out2 / "smoke.csv").read_bytes()


def test_main_jsonl_format(tmp_path):
    spec_path = _write_spec(tmp_path, doc())
    assert main(["run", str(spec_path), "--format", "jsonl", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "smoke.jsonl").exists()


def test_main_config_error_exit_2(tmp_path):
    bad = doc(outputs=[])
    spec_path = _write_spec(tmp_path, bad)
    assert main(["run", str(spec_path)]) == 2
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2


def test_main_env_overrides(tmp_path, monkeypatch):
    spec_path = _write_spec(tmp_path, doc())
    monkeypatch.setenv("CMDETECT_OUT", str(tmp_path / "envout"))
    monkeypatch.setenv("CMDETECT_THREADS", "2")
    assert main(["run", str(spec_path), "--seed", "5"]) == 0
    assert (tmp_path / "envout" / "smoke.csv").exists()


def test_main_list_recipes(capsys):
    assert main(["list-recipes"]) == 0
    out = capsys.readouterr().out.split()
    assert "fig1_gaussian" in out
    assert "fig9_bahadur_rao" in out
    assert out == sorted(out)


def test_main_optimize_omega(tmp_path, capsys):
    spec_path = _write_spec(tmp_path, doc())
    assert main(["optimize-omega", str(spec_path)]) == 0
    out = capsys.readouterr().out
    assert "DeflectionResult" in out and "omega_star" in out


def test_bundled_recipes_parse():
    from cmdetect.cli import _resolve_spec_path

    for name in list_recipes():
        spec = load_spec(_resolve_spec_path(name))
        assert spec.name == name
        assert len(spec.grid) > 0
