import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from slowsid import config as cfgmod
from slowsid.cli import FRF_HEADER, MC_FRF_HEADER, MC_PEM_HEADER, main, read_samples
from slowsid.experiments import RAO_GARNIER_THETA, nonparametric_study_config, parametric_study_config
from slowsid.lti import simulate_stationary, true_frf_vector

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("text, value", [
    ("5pi", 5 * math.pi), ("7pi/2", 3.5 * math.pi), ("pi/3", math.pi / 3), ("pi", math.pi),
    ("2.5*pi", 2.5 * math.pi), ("1.25", 1.25), (3, 3.0),
])
def test_parse_frequency(text, value):
    assert cfgmod.parse_frequency(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("bad", ["fivepi", "pi/0", "", "pi pi"])
def test_parse_frequency_rejects(bad):
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.parse_frequency(bad)


def test_shipped_configs_match_study_defaults():
    a = cfgmod.load(CONFIGS / "nonparametric_study.json")
    b = cfgmod.load(CONFIGS / "parametric_study.json")
    assert cfgmod.digest(a) == cfgmod.digest(nonparametric_study_config())
    assert cfgmod.digest(b) == cfgmod.digest(parametric_study_config())


def test_round_trip_is_exact():
    cfg = parametric_study_config()
    back = cfgmod.config_from_dict(json.loads(cfgmod.dumps(cfg)))
    assert cfgmod.dumps(back) == cfgmod.dumps(cfg)
    assert back.input == cfg.input
    assert cfgmod.digest(back) == cfgmod.digest(cfg)


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("grid"),
    lambda d: d.update(runs=0),
    lambda d: d.update(bogus=1),
    lambda d: d["grid"].update(period=-1),
    lambda d: d.update(mode="arx"),
])
def test_schema_violations(mutate, tmp_path):
    data = json.loads(cfgmod.dumps(nonparametric_study_config()))
    mutate(data)
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.config_from_dict(data)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(data))
    assert main(["check", str(path)]) == 2


def _write(tmp_path, data, name="c.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def _base(**kw):
    data = json.loads(cfgmod.dumps(nonparametric_study_config(runs=1)))
    data.update(kw)
    return data


def _read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_usage_errors(tmp_path):
    assert main([]) == 2
    assert main(["frf"]) == 2
    assert main(["check", str(tmp_path / "missing.json")]) == 2
    assert main(["frf", _write(tmp_path, _base())]) == 2  # neither data nor --simulate


def test_check_overlapping_pem_input(capsys):
    assert main(["check", str(CONFIGS / "parametric_study.json")]) == 1
    out = capsys.readouterr().out
    assert "identifiability rank: 7" in out
    assert "overlaps with component 2" in out
    assert "n_theta = 6: PASS" in out


def test_check_sub_nyquist_input(tmp_path, capsys):
    data = _base()
    data["input"]["components"] = [{"amplitude": 1, "frequency": w, "phase": 0} for w in (0.5, 1, 2)]
    assert main(["check", _write(tmp_path, data)]) == 0
    assert "identifiability rank: 7" in capsys.readouterr().out


def test_check_flags_nyquist_multiple(tmp_path, capsys):
    data = _base()
    data["input"]["components"] = [{"frequency": 1.0}, {"frequency": "2pi"}]
    assert main(["check", _write(tmp_path, data)]) == 1
    assert "at_nyquist_multiple" in capsys.readouterr().out


def test_frf_simulated_noiseless(tmp_path):
    cfg_path = _write(tmp_path, _base(noise_std=0.0))
    out = tmp_path / "out"
    assert main(["frf", cfg_path, "--simulate", "--out", str(out)]) == 0
    header, rows = _read(out / "frf.csv")
    assert header == FRF_HEADER
    assert len(rows) == 27
    arr = np.array(rows, float)
    np.testing.assert_allclose(arr[:, 3], arr[:, 1], atol=1e-10)
    np.testing.assert_allclose(arr[:, 4], arr[:, 2], atol=1e-10)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_digest"] == cfgmod.digest(cfgmod.load(cfg_path))
    assert set(manifest) >= {"tool_version", "started", "finished", "outputs"}


def test_frf_from_data_file(tmp_path, rg):
    cfg = nonparametric_study_config(runs=1)
    y = simulate_stationary(rg, cfg.input, cfg.grid)
    data = tmp_path / "y.csv"
    data.write_text("k,y\n" + "".join(f"{k},{float(v)!r}\n" for k, v in enumerate(y, 1)))
    np.testing.assert_array_equal(read_samples(data), y)
    out = tmp_path / "o"
    assert main(["frf", _write(tmp_path, _base()), str(data), "--out", str(out)]) == 0
    arr = np.array(_read(out / "frf.csv")[1], float)
    G = true_frf_vector(rg, cfg.input)
    np.testing.assert_allclose(arr[:, 3] + 1j * arr[:, 4], G, atol=1e-10)


def test_frf_wrong_sample_count(tmp_path):
    data = tmp_path / "y.csv"
    data.write_text("1\n2\n3\n")
    assert main(["frf", _write(tmp_path, _base()), str(data)]) == 2


def test_etfe_leakage_reported(tmp_path, capsys):
    assert main(["frf", _write(tmp_path, _base()), "--simulate", "--etfe",
                 "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "LeakagePresent" in err and "0.1" in err


def _pem_data(**pem):
    data = json.loads(cfgmod.dumps(parametric_study_config(n_grid=(2000,))))
    data["pem"].update(pem)
    data["noise_std"] = 0.0
    return data


def test_pem_noiseless_from_truth(tmp_path):
    out = tmp_path / "o"
    path = _write(tmp_path, _pem_data(theta_init=list(RAO_GARNIER_THETA)))
    assert main(["pem", path, "--simulate", "--out", str(out)]) == 0
    header, rows = _read(out / "pem.csv")
    assert header == ["a0", "a1", "a2", "a3", "b0", "b1", "final_cost", "iterations",
                      "converged", "stable"]
    np.testing.assert_allclose(np.array(rows[0][:6], float), RAO_GARNIER_THETA, rtol=1e-10)
    assert rows[0][8:] == ["true", "true"]
    traj_header, traj = _read(out / "pem_trajectory.csv")
    assert traj_header == ["iteration", "cost"]


def test_pem_perturbed_start(tmp_path):
    out = tmp_path / "o"
    assert main(["pem", _write(tmp_path, _pem_data()), "--simulate", "--out", str(out)]) == 0
    rows = _read(out / "pem.csv")[1]
    np.testing.assert_allclose(np.array(rows[0][:6], float), RAO_GARNIER_THETA, rtol=1e-8)
    cost = np.array(_read(out / "pem_trajectory.csv")[1], float)[:, 1]
    assert np.all(np.diff(cost) <= 0)


def test_pem_overparametrised_needs_force(tmp_path, capsys):
    path = _write(tmp_path, _pem_data(numerator_degree=3, denominator_degree=4))
    assert main(["pem", path, "--simulate", "--out", str(tmp_path / "a")]) == 1
    assert "--force" in capsys.readouterr().err
    main(["pem", path, "--simulate", "--force", "--out", str(tmp_path / "b")])
    assert (tmp_path / "b" / "pem.csv").exists()


def test_mc_frf_rerun_identical(tmp_path):
    path = _write(tmp_path, _base(runs=5, master_seed=3))
    assert main(["mc", path, "--out", str(tmp_path / "a")]) == 0
    assert main(["mc", path, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "mc_summary.csv").read_bytes()
    assert a == (tmp_path / "b" / "mc_summary.csv").read_bytes()
    assert main(["mc", path, "--seed", "4", "--out", str(tmp_path / "c")]) == 0
    assert a != (tmp_path / "c" / "mc_summary.csv").read_bytes()
    assert _read(tmp_path / "a" / "mc_summary.csv")[0] == MC_FRF_HEADER


def test_mc_frf_noiseless_single_run(tmp_path):
    path = _write(tmp_path, _base(runs=1, noise_std=0.0))
    assert main(["mc", path, "--out", str(tmp_path)]) == 0
    arr = np.array(_read(tmp_path / "mc_summary.csv")[1], float)
    assert np.all(arr[:, 9] == 0)
    np.testing.assert_allclose(arr[:, 7], 0, atol=1e-10)


def test_mc_pem_rows(tmp_path, monkeypatch):
    monkeypatch.setenv("SYSID_THREADS", "2")
    data = json.loads(cfgmod.dumps(parametric_study_config(runs=4, n_grid=(500, 1000))))
    assert main(["mc", _write(tmp_path, data), "--out", str(tmp_path)]) == 0
    header, rows = _read(tmp_path / "mc_summary.csv")
    assert header == MC_PEM_HEADER
    assert [r[0] for r in rows] == ["estimate"] * 12 + ["slope"] * 6
    assert all(math.isfinite(float(r[-1])) for r in rows[12:])
