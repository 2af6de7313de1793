"""End-to-end CLI tests: exit codes, CSV artifacts, determinism, config errors.

All invocations run in-process through ``bpm_spdc.cli.main`` so coverage and
error paths stay inspectable; stdout/stderr are captured with capsys.
"""

import re

import pytest
from conftest import material_text

from bpm_spdc import __version__
from bpm_spdc.cli import main

CROSSING_CFG = """\
material = synthetic_crossing

[waveguide]
theta_deg = 90.0
"""

ANGLE_CFG = """\
material = synthetic_angle

[waveguide]
theta_deg = 45.0
"""

SIM_CFG = """\
[source]
pair_rate_hz = 50000.0
duration_s = 0.2
seed = 42
"""

CROSSING_ROOT_NM = 193.649167310370844259
THETA_STAR_400 = 61.65552686533990608

METRIC_NAMES = [
    "pgr_hz",
    "brightness_hz_per_mw",
    "car",
    "car_lower_bound_flag",
    "eta_h_signal",
    "eta_h_idler",
    "g2h_zero",
    "purity",
]


def write_config(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def data_rows(path):
    """CSV lines with the comment header stripped."""
    return [line for line in path.read_text().splitlines() if not line.startswith("#")]


def metric_values(path):
    rows = data_rows(path)
    assert rows[0] == "metric,value,sigma"
    out = {}
    for row in rows[1:]:
        name, value, sigma = row.split(",")
        out[name] = (float(value), float(sigma))
    return out


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# Top-level parser behavior
# ---------------------------------------------------------------------------


class TestParser:
    def test_version(self, capsys):
        code, out, _ = run(capsys, ["--version"])
        assert code == 0
        assert out.strip() == f"bpm-spdc {__version__}"

    def test_no_arguments_is_usage_error(self, capsys):
        code, _, err = run(capsys, [])
        assert code == 1
        assert "error:" in err

    def test_unknown_subcommand(self, capsys):
        code, _, err = run(capsys, ["frobnicate"])
        assert code == 1
        assert "invalid choice" in err

    def test_missing_config_file(self, tmp_path, capsys):
        code, _, err = run(capsys, ["pm-solve", "--config", str(tmp_path / "nope.cfg")])
        assert code == 1
        assert "not found" in err


# ---------------------------------------------------------------------------
# pm-solve
# ---------------------------------------------------------------------------


class TestPmSolve:
    def test_wavelength_mode_writes_solution_csv(self, tmp_path, capsys):
        cfg = write_config(tmp_path, CROSSING_CFG)
        out = tmp_path / "out"
        code, stdout, _ = run(capsys, ["pm-solve", "--config", cfg, "--out", str(out)])
        assert code == 0
        lines = (out / "pm_solution.csv").read_text().splitlines()
        assert lines[0] == f"# bpm-spdc {__version__}"
        assert re.fullmatch(r"# config_hash=[0-9a-f]{12}", lines[1])
        assert lines[2] == "# seed=none"
        assert lines[3] == "theta_deg,lambda_p_nm,lambda_s_nm,residual"
        theta, lam_p, lam_s, resid = map(float, lines[4].split(","))
        assert theta == 90.0
        assert lam_p == pytest.approx(CROSSING_ROOT_NM, abs=1e-6)
        assert lam_s == pytest.approx(2.0 * lam_p, rel=1e-12)
        assert abs(resid) < 1e-6
        assert "lambda_p_nm    = 193.649167" in stdout
        assert f"wrote {out}/pm_solution.csv" in stdout

    def test_angle_mode(self, tmp_path, capsys):
        cfg = write_config(tmp_path, ANGLE_CFG)
        out = tmp_path / "out"
        code, stdout, _ = run(
            capsys,
            ["pm-solve", "--config", cfg, "--mode", "angle", "--lambda-p-nm", "400", "--out", str(out)],
        )
        assert code == 0
        theta, lam_p, lam_s, _ = map(float, data_rows(out / "pm_solution.csv")[1].split(","))
        assert theta == pytest.approx(THETA_STAR_400, abs=1e-6)
        assert lam_p == 400.0
        assert lam_s == 800.0
        assert "theta_deg      = 61.655527" in stdout

    def test_angle_mode_requires_pump_wavelength(self, tmp_path, capsys):
        cfg = write_config(tmp_path, ANGLE_CFG)
        code, _, err = run(capsys, ["pm-solve", "--config", cfg, "--mode", "angle"])
        assert code == 1
        assert "requires --lambda-p-nm" in err

    def test_no_crossing_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, CROSSING_CFG)
        code, _, err = run(capsys, ["pm-solve", "--config", cfg, "--theta-deg", "0"])
        assert code == 2
        assert err.startswith("no solution:")

    def test_multiple_roots_exits_2(self, tmp_path, capsys, monkeypatch):
        matdir = tmp_path / "materials"
        matdir.mkdir()
        (matdir / "dual.mat").write_text(
            material_text(
                name="dual crossing fixture",
                lambda_min=250.0,
                lambda_max=1800.0,
                ordinary="form = poly_inverse_lambda2\ncoefficients = 2.30, 31250\ndn_dT = 0.0",
                extraordinary="form = poly_inverse_lambda2\ncoefficients = 2.309765625, 0.0, 1.0e9\ndn_dT = 0.0",
            )
        )
        monkeypatch.setenv("BPM_SPDC_MATERIAL_DIR", str(matdir))
        cfg = write_config(tmp_path, "material = dual\n\n[waveguide]\ntheta_deg = 90.0\n")
        code, _, err = run(capsys, ["pm-solve", "--config", cfg])
        assert code == 2
        assert "2 crossings" in err

    def test_search_range_flags_isolate_a_root(self, tmp_path, capsys, monkeypatch):
        matdir = tmp_path / "materials"
        matdir.mkdir()
        (matdir / "dual.mat").write_text(
            material_text(
                name="dual crossing fixture",
                lambda_min=250.0,
                lambda_max=1800.0,
                ordinary="form = poly_inverse_lambda2\ncoefficients = 2.30, 31250\ndn_dT = 0.0",
                extraordinary="form = poly_inverse_lambda2\ncoefficients = 2.309765625, 0.0, 1.0e9\ndn_dT = 0.0",
            )
        )
        monkeypatch.setenv("BPM_SPDC_MATERIAL_DIR", str(matdir))
        cfg = write_config(tmp_path, "material = dual\n\n[waveguide]\ntheta_deg = 90.0\n")
        out = tmp_path / "out"
        code, _, _ = run(
            capsys,
            ["pm-solve", "--config", cfg, "--lambda-min-nm", "600", "--lambda-max-nm", "900", "--out", str(out)],
        )
        assert code == 0
        lam_p = float(data_rows(out / "pm_solution.csv")[1].split(",")[1])
        assert lam_p == pytest.approx(800.0, abs=1e-6)

    def test_unknown_material_lists_tried_paths(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "material = unobtainium\n\n[waveguide]\ntheta_deg = 90.0\n")
        code, _, err = run(capsys, ["pm-solve", "--config", cfg])
        assert code == 1
        assert "material 'unobtainium' not found (tried" in err

    def test_material_by_literal_path(self, tmp_path, capsys):
        mat = tmp_path / "local.mat"
        mat.write_text(material_text())
        cfg = write_config(tmp_path, f"material = {mat}\n\n[waveguide]\ntheta_deg = 90.0\n")
        out = tmp_path / "out"
        code, _, _ = run(capsys, ["pm-solve", "--config", cfg, "--out", str(out)])
        assert code == 0

    def test_output_directory_from_config(self, tmp_path, capsys):
        target = tmp_path / "cfg_out"
        cfg = write_config(
            tmp_path, CROSSING_CFG + f"\n[output]\ndirectory = {target}\n"
        )
        code, _, _ = run(capsys, ["pm-solve", "--config", cfg])
        assert code == 0
        assert (target / "pm_solution.csv").exists()

    def test_shipped_device_config(self, tmp_path, capsys):
        out = tmp_path / "out"
        code, _, _ = run(
            capsys, ["pm-solve", "--config", "configs/reference_device.cfg", "--out", str(out)]
        )
        assert code == 0
        lam_p = float(data_rows(out / "pm_solution.csv")[1].split(",")[1])
        assert 774.0 < lam_p < 777.0

    def test_missing_material_key(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "[waveguide]\ntheta_deg = 90.0\n")
        code, _, err = run(capsys, ["pm-solve", "--config", cfg])
        assert code == 1
        assert "no 'material' key" in err

    def test_missing_angle(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "material = synthetic_crossing\n")
        code, _, err = run(capsys, ["pm-solve", "--config", cfg])
        assert code == 1
        assert "no propagation angle" in err


# ---------------------------------------------------------------------------
# shg
# ---------------------------------------------------------------------------


def run_shg(capsys, cfg, out, lo="383", hi="391", step="0.25", extra=()):
    return run(
        capsys,
        [
            "shg",
            "--config",
            cfg,
            "--lambda-min-nm",
            lo,
            "--lambda-max-nm",
            hi,
            "--step-nm",
            step,
            "--out",
            str(out),
            *extra,
        ],
    )


class TestShg:
    def test_spectrum_csv(self, tmp_path, capsys):
        cfg = write_config(tmp_path, CROSSING_CFG)
        out = tmp_path / "out"
        code, stdout, _ = run_shg(capsys, cfg, out)
        assert code == 0
        rows = data_rows(out / "shg_spectrum.csv")
        assert rows[0] == "lambda_nm,efficiency"
        values = [tuple(map(float, r.split(","))) for r in rows[1:]]
        assert len(values) == 33
        assert values[0][0] == 383.0
        effs = [e for _, e in values]
        assert max(effs) == 1.0
        assert all(0.0 <= e <= 1.0 for e in effs)
        peak_lambda = values[effs.index(max(effs))][0]
        # Doubling peaks where the pump-wavelength solve puts the crossing.
        assert peak_lambda == pytest.approx(2.0 * CROSSING_ROOT_NM, abs=0.3)
        assert "peak efficiency 1 at" in stdout
        assert "over 33 points" in stdout

    def test_inverted_grid_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, CROSSING_CFG)
        code, _, err = run_shg(capsys, cfg, tmp_path, lo="400", hi="390")
        assert code == 1
        assert "inverted grid" in err

    def test_nonpositive_step_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, CROSSING_CFG)
        code, _, err = run_shg(capsys, cfg, tmp_path, step="0")
        assert code == 1
        assert "--step-nm must be positive" in err

    def test_grid_outside_material_range(self, tmp_path, capsys):
        # Fundamental 150 nm halves to 75 nm, below the material's 100 nm edge.
        cfg = write_config(tmp_path, CROSSING_CFG)
        code, _, err = run_shg(capsys, cfg, tmp_path, lo="140", hi="160", step="5")
        assert code == 1
        assert "error:" in err

    def test_interpolation_choice_changes_spectrum(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "material = ln_wg_effective_775\n\n[waveguide]\ntheta_deg = 53.5\nlength_mm = 20.0\n",
        )
        outs = {name: tmp_path / name for name in ("cubic", "cubic2", "linear")}
        for name, out in outs.items():
            kind = "linear" if name == "linear" else "cubic"
            code, _, _ = run_shg(
                capsys, cfg, out, lo="1548", hi="1552", step="0.5", extra=["--interpolation", kind]
            )
            assert code == 0
        cubic = data_rows(outs["cubic"] / "shg_spectrum.csv")
        assert cubic == data_rows(outs["cubic2"] / "shg_spectrum.csv")
        assert cubic != data_rows(outs["linear"] / "shg_spectrum.csv")

    def test_invalid_interpolation_in_config(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "interpolation = quadratic\n" + CROSSING_CFG)
        code, _, err = run_shg(capsys, cfg, tmp_path)
        assert code == 1
        assert "interpolation must be 'cubic' or 'linear'" in err


# ---------------------------------------------------------------------------
# simulate / analyze
# ---------------------------------------------------------------------------


class TestSimulate:
    def test_outputs_and_determinism(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SIM_CFG)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        code, stdout, _ = run(capsys, ["simulate", "--config", cfg, "--out", str(out1)])
        assert code == 0
        assert "simulated" in stdout
        assert "seed = 42" in stdout
        code, _, _ = run(capsys, ["simulate", "--config", cfg, "--out", str(out2)])
        assert code == 0
        for name in ("tags.txt", "metrics.csv", "histogram.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_metrics_csv_layout(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SIM_CFG)
        out = tmp_path / "r"
        code, _, _ = run(capsys, ["simulate", "--config", cfg, "--out", str(out)])
        assert code == 0
        lines = (out / "metrics.csv").read_text().splitlines()
        assert lines[0] == f"# bpm-spdc {__version__}"
        assert re.fullmatch(r"# config_hash=[0-9a-f]{12}", lines[1])
        assert lines[2] == "# seed=42"
        assert [r.split(",")[0] for r in data_rows(out / "metrics.csv")[1:]] == METRIC_NAMES

    def test_seed_override_changes_stream(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SIM_CFG)
        out1, out43 = tmp_path / "r1", tmp_path / "r43"
        run(capsys, ["simulate", "--config", cfg, "--out", str(out1)])
        code, stdout, _ = run(
            capsys, ["simulate", "--config", cfg, "--seed", "43", "--out", str(out43)]
        )
        assert code == 0
        assert "seed = 43" in stdout
        assert "# seed=43" in (out43 / "metrics.csv").read_text()
        assert (out1 / "tags.txt").read_bytes() != (out43 / "tags.txt").read_bytes()

    def test_resource_cap_exits_3(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "[source]\npair_rate_hz = 1e10\n")
        code, _, err = run(capsys, ["simulate", "--config", cfg])
        assert code == 3
        assert err.startswith("resource limit:")

    def test_brightness_route_sets_pump_power(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "[source]\nbrightness_hz_per_mw = 1e5\npump_mw = 2.0\nduration_s = 0.2\nseed = 5\n",
        )
        out = tmp_path / "r"
        code, _, _ = run(capsys, ["simulate", "--config", cfg, "--out", str(out)])
        assert code == 0
        values = metric_values(out / "metrics.csv")
        assert values["brightness_hz_per_mw"][0] == values["pgr_hz"][0] / 2.0

    def test_both_rate_keys_rejected(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path, "[source]\npair_rate_hz = 1.0\nbrightness_hz_per_mw = 1.0\npump_mw = 1.0\n"
        )
        code, _, err = run(capsys, ["simulate", "--config", cfg])
        assert code == 1
        assert "pick one" in err

    def test_neither_rate_key_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "[source]\npump_mw = 1.0\n")
        code, _, err = run(capsys, ["simulate", "--config", cfg])
        assert code == 1
        assert "must set pair_rate_hz" in err

    def test_missing_source_section(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "material = synthetic_crossing\n")
        code, _, err = run(capsys, ["simulate", "--config", cfg])
        assert code == 1
        assert "no [source] section" in err


class TestAnalyze:
    @pytest.fixture()
    def sim_out(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SIM_CFG)
        out = tmp_path / "sim"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        capsys.readouterr()
        return out

    def test_reproduces_simulate_metrics(self, tmp_path, capsys, sim_out):
        out = tmp_path / "an"
        code, stdout, _ = run(
            capsys, ["analyze", "--tags", str(sim_out / "tags.txt"), "--out", str(out)]
        )
        assert code == 0
        assert "analyzed" in stdout
        assert data_rows(out / "metrics.csv") == data_rows(sim_out / "metrics.csv")
        assert data_rows(out / "histogram.csv") == data_rows(sim_out / "histogram.csv")
        assert "# seed=none" in (out / "metrics.csv").read_text()

    def test_window_override_rescales_histogram(self, tmp_path, capsys, sim_out):
        out = tmp_path / "an2"
        code, _, _ = run(
            capsys,
            ["analyze", "--tags", str(sim_out / "tags.txt"), "--tau-ns", "2.0", "--out", str(out)],
        )
        assert code == 0
        rows = data_rows(out / "histogram.csv")
        assert rows[0] == "delay_ps,counts"
        delays = [int(r.split(",")[0]) for r in rows[1:]]
        assert len(delays) == 201
        assert delays[1] - delays[0] == 2000

    def test_pump_power_enables_brightness_row(self, tmp_path, capsys, sim_out):
        out = tmp_path / "an3"
        code, _, _ = run(
            capsys,
            ["analyze", "--tags", str(sim_out / "tags.txt"), "--pump-mw", "2.0", "--out", str(out)],
        )
        assert code == 0
        values = metric_values(out / "metrics.csv")
        assert values["brightness_hz_per_mw"][0] == values["pgr_hz"][0] / 2.0

    def test_missing_tag_file(self, tmp_path, capsys):
        code, _, err = run(capsys, ["analyze", "--tags", str(tmp_path / "nope.txt")])
        assert code == 1
        assert "error:" in err

    def test_malformed_tag_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("not a tag file\n")
        code, _, err = run(capsys, ["analyze", "--tags", str(bad)])
        assert code == 1
        assert "first line must start with" in err


# ---------------------------------------------------------------------------
# Config validation details
# ---------------------------------------------------------------------------


class TestConfigValidation:
    def test_unknown_top_level_key(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "fuel = 1\n" + SIM_CFG)
        code, _, err = run(capsys, ["simulate", "--config", cfg])
        assert code == 1
        assert f"{cfg}:1: unknown top-level key 'fuel'" in err

    def test_unknown_section(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SIM_CFG + "\n[detector]\nkind = snspd\n")
        code, _, err = run(capsys, ["simulate", "--config", cfg])
        assert code == 1
        assert "unknown section [detector]" in err

    def test_unknown_key_in_section_with_line_number(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "[source]\npair_rate_hz = 5e4\npair_rate = 1\n")
        code, _, err = run(capsys, ["simulate", "--config", cfg])
        assert code == 1
        assert f"{cfg}:3: unknown key 'pair_rate' in section [source]" in err

    def test_malformed_float_value(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "[source]\npair_rate_hz = fast\n")
        code, _, err = run(capsys, ["simulate", "--config", cfg])
        assert code == 1
        assert f"{cfg}:2:" in err

    def test_non_integer_seed(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "[source]\npair_rate_hz = 1000.0\nseed = 1.5\n")
        code, _, err = run(capsys, ["simulate", "--config", cfg])
        assert code == 1
        assert "expected an integer" in err

    def test_model_validation_maps_to_usage_exit(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "[source]\npair_rate_hz = 1000.0\nduration_s = -1.0\n")
        code, _, err = run(capsys, ["simulate", "--config", cfg])
        assert code == 1
        assert "duration" in err
