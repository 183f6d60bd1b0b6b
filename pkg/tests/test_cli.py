"""End-to-end CLI runs, in process, against the bundled defaults."""
import io as sysio
import json
import math

import numpy as np
import pytest

from upconvspec import cli, io as uio, spectra

CONFIG_HASH = "1d1ab3dd4c1a5821"


def run_cli(argv):
    buf = sysio.StringIO()
    code = cli.main(argv, out=buf)
    return code, buf.getvalue()


def get_field(text, name):
    for line in text.splitlines():
        if line.startswith(name):
            return line[len(name):].strip()
    raise AssertionError(f"no line starts with {name!r}:\n{text}")


@pytest.fixture(scope="module")
def scan_workdir(tmp_path_factory):
    work = tmp_path_factory.mktemp("cli-scan")
    grid = np.arange(1544.0, 1556.0, 0.02)
    s = spectra.multimode_ld_spectrum(grid, n_modes=1, total_dbm=-120.0)
    uio.write_spectrum_csv(work / "input.csv", s)
    argv = ["scan", "--input", str(work / "input.csv"),
            "--out", str(work / "scan.csv"),
            "--pump-start", "1944", "--pump-stop", "1956", "--pump-step", "0.1",
            "--seed", "7", "--write-kernel", str(work / "kernel.csv")]
    code, text = run_cli(argv)
    assert code == 0
    return work, text


def test_design_qpm_output():
    code, text = run_cli(["design-qpm", "--signal", "1550", "--pump", "1950"])
    assert code == 0
    assert get_field(text, "qpm_period_um") == "19.600000"
    assert get_field(text, "sfg_nm") == "863.571429"
    assert get_field(text, "temperature_c") == "56.00"
    bands = [l for l in text.splitlines() if l.startswith("acceptance_fwhm_nm")]
    assert bands[0].endswith("0.588048 (signal band)")
    assert bands[1].endswith("0.182535 (sfg band)")


def test_design_qpm_temperature_override():
    code, text = run_cli(["design-qpm", "--signal", "1550", "--pump", "1950",
                          "--temp", "58"])
    assert code == 0
    assert get_field(text, "temperature_c") == "58.00"
    assert get_field(text, "qpm_period_um") == "19.594617"


def test_fom_at_operating_power():
    code, text = run_cli(["fom", "--pump-power", "30"])
    assert code == 0
    assert get_field(text, "efficiency") == "0.202215"
    assert get_field(text, "noise_rate_cps") == "42.385529"
    assert get_field(text, "nep_w_per_sqrt_hz") == "4.126097e-18"
    assert get_field(text, "nep_dbm") == "-143.8446"
    assert get_field(text, "nep_convention") == "background_sqrt_d"


def test_fom_convention_override():
    _, base_text = run_cli(["fom", "--pump-power", "30"])
    code, text = run_cli(["fom", "--pump-power", "30",
                          "--nep-convention", "background_sqrt_2d"])
    assert code == 0
    assert get_field(text, "nep_convention") == "background_sqrt_2d"
    base = float(get_field(base_text, "nep_dbm"))
    alt = float(get_field(text, "nep_dbm"))
    assert alt - base == pytest.approx(5.0 * math.log10(2.0), abs=1e-3)


def test_fom_zero_power_is_solver_error():
    code, text = run_cli(["fom", "--pump-power", "0"])
    assert code == 4
    assert get_field(text, "efficiency") == "0.000000"
    assert get_field(text, "noise_rate_cps") == "0.000000"
    assert "nep_dbm" not in text


def test_scan_summary_and_reproducibility(scan_workdir):
    work, text = scan_workdir
    assert get_field(text, "points") == "121"
    assert get_field(text, "total_counts") == "9215"
    assert get_field(text, "noise_rate_cps") == "42.3855"
    code, _ = run_cli(["scan", "--input", str(work / "input.csv"),
                       "--out", str(work / "scan2.csv"),
                       "--pump-start", "1944", "--pump-stop", "1956",
                       "--pump-step", "0.1", "--seed", "7"])
    assert code == 0
    assert (work / "scan.csv").read_bytes() == (work / "scan2.csv").read_bytes()
    _, meta = uio.read_scan_csv(work / "scan.csv")
    assert meta["config_hash"] == CONFIG_HASH
    assert meta["seed"] == "7"
    assert meta["vbg_tracking"] == "tracked"


def test_deconvolve_with_saved_kernel(scan_workdir):
    work, _ = scan_workdir
    code, text = run_cli(["deconvolve", "--raw", str(work / "scan.csv"),
                          "--kernel", str(work / "kernel.csv"),
                          "--out", str(work / "est.csv")])
    assert code == 0
    assert get_field(text, "stop_reason") == "discrepancy_reached"
    report = json.loads((work / "est.csv.report.json").read_text())
    assert report["iterations_used"] == 2
    assert report["stop_reason"] == "discrepancy_reached"
    assert report["residual_norm"] == pytest.approx(0.8878576069011208, rel=1e-9)
    assert report["background_cps"] == pytest.approx(42.592592592592595, rel=1e-12)
    assert report["config_hash"] == CONFIG_HASH
    assert report["seed"] == 7
    est, emeta = uio.read_spectrum_csv(work / "est.csv")
    peak_nm = float(est.grid_nm[np.argmax(est.values)])
    assert peak_nm == pytest.approx(1550.0119857371326, abs=1e-9)
    assert emeta["config_hash"] == CONFIG_HASH


def test_deconvolve_model_kernel_matches_saved(scan_workdir):
    work, _ = scan_workdir
    code, _ = run_cli(["deconvolve", "--raw", str(work / "scan.csv"),
                       "--kernel", "model", "--out", str(work / "est2.csv"),
                       "--report", str(work / "rep2.json")])
    assert code == 0
    rep = json.loads((work / "rep2.json").read_text())
    assert rep["iterations_used"] == 2
    assert rep["residual_norm"] == pytest.approx(0.8878576069011208, rel=1e-9)


def test_exit_codes(tmp_path):
    code, _ = run_cli(["scan", "--input", str(tmp_path / "missing.csv"),
                       "--out", str(tmp_path / "out.csv")])
    assert code == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("waveguide: [unclosed\n  x: {")
    code, _ = run_cli(["--config", str(bad), "fom", "--pump-power", "30"])
    assert code == 3
