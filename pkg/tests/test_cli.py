import csv
import hashlib
import json
import subprocess
import sys

import pytest

from lumen_mix.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main


def read_csv(path):
    meta, body = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, value = line[2:].rstrip("\n").partition(": ")
                meta[key] = value
            else:
                body.append(line)
    rows = list(csv.DictReader(body))
    return meta, rows


def manifests(directory):
    return sorted(directory.glob("*.manifest.json"))


def test_thermal_g1_output(tmp_path):
    out = tmp_path / "g1.csv"
    assert main(["thermal-g1", "--points", "21", "--out", str(out)]) == EXIT_OK
    meta, rows = read_csv(out)
    assert "units" in meta and meta["temperature_K"] == "5777"
    assert list(rows[0]) == ["tau_fs", "re", "im", "abs", "abs_normalized"]
    assert len(rows) == 21
    norm = [float(r["abs_normalized"]) for r in rows]
    assert norm[10] == 1.0
    for a, b in zip(norm, norm[::-1]):
        assert a == pytest.approx(b, rel=1e-12)
    assert max(norm) == 1.0
    [mf] = manifests(tmp_path)
    doc = json.loads(mf.read_text())
    assert doc["command"] == "thermal-g1"
    assert doc["parameters"]["tau_min"] == {"value": -5.0, "unit": "fs"}
    assert doc["outputs"][0]["sha256"] == hashlib.sha256(out.read_bytes()).hexdigest()
    assert doc["constants_version"] == "CODATA2018"


def test_csv_is_deterministic(tmp_path):
    a, b = tmp_path / "a" / "g1.csv", tmp_path / "b" / "g1.csv"
    for p in (a, b):
        assert main(["thermal-g1", "--points", "11", "--out", str(p)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_gaussian_solve_feasible_and_infeasible(tmp_path):
    ok = tmp_path / "w1.csv"
    assert main(["gaussian-solve", "--fwhm-thz", "1", "--strict", "--out", str(ok)]) == EXIT_OK
    meta, rows = read_csv(ok)
    assert meta["feasible"] == "true"
    assert all(float(r["p_value"]) >= 0 for r in rows)

    bad = tmp_path / "w100.csv"
    assert main(["gaussian-solve", "--fwhm-thz", "100", "--strict", "--out", str(bad)]) == EXIT_INFEASIBLE
    assert read_csv(bad)[0]["feasible"] == "false"
    # without --strict the infeasible solve is still reported, not an error
    assert main(["gaussian-solve", "--fwhm-thz", "100", "--out", str(bad)]) == EXIT_OK
    assert len(manifests(tmp_path)) == 2


def test_gaussian_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["gaussian-sweep", "--out", str(out)]) == EXIT_OK
    _, rows = read_csv(out)
    assert {float(r["fwhm_thz"]): r["feasible"] for r in rows} == {
        0.1: "true", 1.0: "true", 10.0: "false", 100.0: "false"}


def test_pulse_moments_row(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["pulse-moments", "--out", str(out)]) == EXIT_OK
    meta, [row] = read_csv(out)
    assert meta["variance_convention"] == "reduced"
    assert float(row["energy_mean_eV"]) == pytest.approx(1.34471, abs=5e-6)
    assert float(row["energy_std_eV"]) == pytest.approx(1.60169, abs=5e-6)
    assert float(row["p_mean_m_eV_c"]) == pytest.approx(float(row["p_mean_m_erf_eV_c"]), rel=1e-8)
    assert float(row["p_mean_n_eV_c"]) == 0.0
    assert main(["pulse-moments", "--convention", "direct", "--out", str(out)]) == EXIT_OK
    _, [direct] = read_csv(out)
    assert float(direct["p_var_mm_eV2_c2"]) == pytest.approx(2 * float(row["p_var_mm_eV2_c2"]), rel=1e-12)


def test_pulse_field_m_axis(tmp_path):
    out = tmp_path / "f.csv"
    assert main(["pulse-field", "--axis", "m", "--r-max-kt", "2", "--points", "9", "--out", str(out)]) == EXIT_OK
    _, rows = read_csv(out)
    assert len(rows) == 9
    assert max(float(r["I_over_Imax"]) for r in rows) == 1.0
    for r in rows:
        if float(r["Theta"]) == 0.0:
            assert float(r["ReEm"]) == 0.0 and float(r["ImEm"]) == 0.0
        else:
            assert abs(complex(float(r["ReEm"]), float(r["ImEm"]))) <= 1e-15 * abs(
                complex(float(r["ReEu"]), float(r["ImEu"])))


def test_pulse_intensity_outputs(tmp_path):
    out = tmp_path / "i.csv"
    argv = ["pulse-intensity", "--r-points", "4", "--theta-points", "3", "--phi-points", "4", "--out", str(out)]
    assert main(argv) == EXIT_OK
    _, rows = read_csv(out)
    assert len(rows) == 4 * 3 * 4
    _, half = read_csv(tmp_path / "i_halfmax.csv")
    assert len(half) > 0
    [mf] = manifests(tmp_path)
    assert len(json.loads(mf.read_text())["outputs"]) == 2


def test_constants(tmp_path, capsys):
    assert main(["constants"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "k_T_per_m = 2522834.6458" in text
    out = tmp_path / "c.json"
    assert main(["constants", "--out", str(out)]) == EXIT_OK
    table = json.loads(out.read_text())
    assert table["p_alpha_sq_per_m3"] == pytest.approx(4.9537e16, rel=1e-4)
    assert len(manifests(tmp_path)) == 1


@pytest.mark.parametrize("argv", [
    ["pulse-field", "--r-max-kt", "50"],
    ["pulse-field", "--points", "1"],
    ["thermal-g1", "--temperature", "-1"],
    ["thermal-g1", "--tau-min", "3", "--tau-max", "1"],
    ["gaussian-solve", "--sigma", "-5"],
    ["pulse-moments", "--gamma", "0"],
])
def test_invalid_arguments(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path / "x.csv")]) == EXIT_USAGE
    assert not list(tmp_path.iterdir())


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["gaussian-solve"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["gaussian-solve", "--sigma", "1", "--fwhm-thz", "1"])
    assert info.value.code == 2


def test_bad_thread_setting(tmp_path, monkeypatch):
    monkeypatch.setenv("LUMEN_MIX_THREADS", "zero")
    assert main(["constants"]) == EXIT_USAGE


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lumen_mix.cli", "constants"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "coherence_time_fs" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "lumen_mix.cli", "pulse-field", "--r-max-kt", "99",
                           "--out", str(tmp_path / "f.csv")], capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
