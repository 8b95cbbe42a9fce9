import json

import pytest

from trimon.cli import EXIT_CONFIG, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_unknown_command_is_usage_error(capsys):
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_missing_config_is_config_error(tmp_path):
    assert main(["derive", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["derive", "--config", str(bad)]) == EXIT_CONFIG
    half = tmp_path / "half.json"
    half.write_text(json.dumps({"device": {"ej_ghz": 8.7, "ca_ff": 60}}))
    assert main(["derive", "--config", str(half)]) == EXIT_CONFIG


def test_derive_reports_conventional_units(capsys):
    code, out = run(capsys, "derive")
    assert code == EXIT_OK
    data = json.loads(out)
    units = data["reported_units"]
    assert units["j_ab_over_pi_mhz"] == pytest.approx(227.0, abs=0.5)
    assert units["alpha_a_mhz"] == pytest.approx(-111.0, abs=1e-6)
    assert data["cavity"]["g_source"] == "chi_a"
    assert data["cavity"]["measured_bands"]["chi_a_hz"] == pytest.approx(-0.332e6, rel=1e-6)


def test_derive_from_capacitances(capsys, tmp_path):
    cfg = tmp_path / "cap.json"
    cfg.write_text(json.dumps({"device": {"ej_ghz": 8.7, "ca_ff": 60, "cb_ff": 60, "ccp_ff": 10},
                               "cavity": {"omega_bare_ghz": 7.23, "g_mhz": 94.4}}))
    code, out = run(capsys, "derive", "--config", str(cfg))
    assert code == EXIT_OK
    assert json.loads(out)["cavity"]["g_source"] == "config"


def test_csv_output_written(capsys, tmp_path):
    code, _ = run(capsys, "derive", "--format", "csv", "--out", str(tmp_path))
    assert code == EXIT_OK
    lines = (tmp_path / "derive.csv").read_text().splitlines()
    assert lines[0] == "key,value"
    assert any(line.startswith("charging_energies.e_ca_hz,") for line in lines)


def test_empty_circuit_simulates_to_identity(capsys):
    code, out = run(capsys, "simulate", "--circuit", "empty")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["gate_fidelity"] == pytest.approx(1.0)
    assert data["state_fidelity"] == pytest.approx(1.0)


def test_simulate_circuit_file(capsys, tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps([{"op": "crot", "target": "B", "band": "both", "phi_deg": 90, "theta_deg": 90},
                                {"op": "cnot", "control": "B"}]))
    code, out = run(capsys, "simulate", "--circuit", str(path))
    assert code == EXIT_OK
    assert json.loads(out)["state_fidelity"] == pytest.approx(1.0)
    assert main(["simulate", "--circuit", "no_such_circuit"]) == EXIT_CONFIG


def test_exact_tomography(capsys):
    code, out = run(capsys, "tomo", "--shots", "0")
    assert code == EXIT_OK
    assert json.loads(out)["fidelity"] >= 0.999


def test_tomography_reproducible_with_seed(capsys, tmp_path):
    cfg = tmp_path / "sep.json"
    cfg.write_text(json.dumps({"readout": {"beta1": 34, "beta2": 26, "vth_plus": 30, "vth_minus": -30}}))
    args = ("tomo", "--config", str(cfg), "--shots", "300", "--bootstrap", "0", "--seed", "5")
    _, first = run(capsys, *args)
    _, second = run(capsys, *args)
    assert json.loads(first)["fidelity"] == json.loads(second)["fidelity"]
    assert json.loads(first)["fidelity"] > 0.9


def test_spectrum_and_report(capsys, tmp_path):
    assert main(["derive", "--out", str(tmp_path)]) == EXIT_OK
    assert main(["spectrum", "--n-max", "4", "--out", str(tmp_path)]) == EXIT_OK
    assert main(["fit-crossing", "--out", str(tmp_path)]) == EXIT_OK
    capsys.readouterr()
    code, out = run(capsys, "report", "--out", str(tmp_path))
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["sources"] == ["derive", "fit-crossing", "spectrum"]
    assert report["crossing"]["j_over_pi_mhz"] == pytest.approx(77.6, rel=1e-4)
    assert report["band_summary"]["a"]["omega_upper_ghz"] == pytest.approx(5.5585)


def test_fit_crossing_from_csv(capsys, tmp_path):
    import numpy as np

    from trimon.crossing import synthetic_dataset

    data = synthetic_dataset(38.8e6, 5.5585e9, 6.2e9, 1.0, np.linspace(0.1, 0.3, 21))
    path = tmp_path / "x.csv"
    rows = ["flux,freq_hz,branch"] + [f"{f},{w},{b}" for f, w, b in zip(data.flux, data.freq, data.branch)]
    path.write_text("\n".join(rows))
    code, out = run(capsys, "fit-crossing", "--data", str(path))
    assert code == EXIT_OK
    assert json.loads(out)["j_over_pi_mhz"] == pytest.approx(77.6, rel=1e-4)
