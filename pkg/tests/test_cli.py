"""Command-line surface: exit codes, CSV schemas, and reproducibility."""

import csv

import pytest

from d2d_effcap.cli import main

WORKED_PD = (0.9959754114572416, 0.9877755273449553, 0.9837509388021971)

SMALL_INI = """
[modeselect]
detect_l_direct_db = 90.7
detect_l_micro_db = 80.9
detect_l_macro_db = 85.4
trials = 10000

[harq]
mc_samples = 10000

[montecarlo]
num_paths = 400
num_blocks = 120
"""

VALIDATE_INI = """
[modeselect]
trials = 20000

[harq]
mc_samples = 20000

[montecarlo]
num_paths = 2000
num_blocks = 400
"""


def _cfg_file(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _read_csv(path):
    header, body = [], []
    for line in path.read_text().splitlines():
        (header if line.startswith("#") else body).append(line)
    parsed = list(csv.reader(body))
    cols = parsed[0]
    rows = [dict(zip(cols, r)) for r in parsed[1:]]
    return header, cols, rows


def _body(path):
    return [l for l in path.read_text().splitlines() if not l.startswith("#")]


def test_mode_select_worked_example(tmp_path):
    cfg = _cfg_file(tmp_path, SMALL_INI)
    out = tmp_path / "nested" / "deeper"
    assert main(["mode-select", "--config", cfg, "--out", str(out)]) == 0
    header, cols, rows = _read_csv(out / "mode_select.csv")
    assert cols == ["hypothesis", "pd_analytic", "pe_analytic", "pd_mc", "pe_mc"]
    assert [r["hypothesis"] for r in rows] == ["H0", "H1", "H2"]
    assert "# thresholds_db = 83.15,88.05" in header
    assert any(h.startswith("# losses_db = ") for h in header)
    for row, expect in zip(rows, WORKED_PD):
        assert float(row["pd_analytic"]) == pytest.approx(expect, abs=1e-9)
        assert float(row["pe_analytic"]) == pytest.approx(1 - expect, abs=1e-9)
        assert float(row["pd_mc"]) == pytest.approx(expect, abs=0.01)


def test_ec_csv_schema_and_closed_form_agreement(tmp_path):
    cfg = _cfg_file(tmp_path, SMALL_INI)
    out = tmp_path / "ec_out"
    assert main(["ec", "--config", cfg, "--out", str(out)]) == 0
    header, cols, rows = _read_csv(out / "ec.csv")
    assert cols == ["queue_model", "lambda_plus", "ec_closed", "ec_generic",
                    "ec_mc", "ci_lo", "ci_hi"]
    assert [r["queue_model"] for r in rows] == ["n1", "n2"]
    assert "# seed = 1234" in header
    for row in rows:
        assert 0.0 < float(row["lambda_plus"]) < 1.0
        assert float(row["ec_closed"]) == pytest.approx(
            float(row["ec_generic"]), abs=1e-6
        )
        assert float(row["ci_lo"]) < float(row["ci_hi"])
    assert rows[0]["ec_mc"] == rows[1]["ec_mc"]


def test_ec_body_reproducible_and_seed_sensitive(tmp_path):
    cfg = _cfg_file(tmp_path, SMALL_INI)
    outs = [tmp_path / f"run{k}" for k in range(3)]
    assert main(["ec", "--config", cfg, "--out", str(outs[0])]) == 0
    assert main(["ec", "--config", cfg, "--out", str(outs[1])]) == 0
    assert main(["ec", "--config", cfg, "--seed", "777",
                 "--out", str(outs[2])]) == 0
    base = _body(outs[0] / "ec.csv")
    assert _body(outs[1] / "ec.csv") == base
    reseeded = _body(outs[2] / "ec.csv")
    assert reseeded != base
    header, _, _ = _read_csv(outs[2] / "ec.csv")
    assert "# montecarlo.seed = 777" in header


def test_sweep_csv_shape(tmp_path):
    cfg = _cfg_file(tmp_path, SMALL_INI + "\n[sweep]\nlo = 0.5\nhi = 2.0\nsteps = 4\n")
    out = tmp_path / "sweep_out"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    header, cols, rows = _read_csv(out / "sweep_r.csv")
    assert cols == ["variable", "value", "ec_n1", "ec_n2", "ci_n1", "ci_n2"]
    assert "# grid = 0.5..2 x4" in header
    assert len(rows) == 4
    for row in rows:
        assert row["variable"] == "r"
        assert float(row["ec_n1"]) > 0
        assert row["ci_n1"] == "" and row["ci_n2"] == ""


def test_sweep_block_length_grid_is_integral(tmp_path):
    cfg = _cfg_file(
        tmp_path,
        SMALL_INI + "\n[sweep]\nvariable = l\nlo = 50\nhi = 52\nsteps = 60\n",
    )
    out = tmp_path / "sweep_l"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    _, _, rows = _read_csv(out / "sweep_l.csv")
    assert [r["value"] for r in rows] == ["50", "51", "52"]


def test_sweep_with_mc_prices_both_models_identically(tmp_path):
    cfg = _cfg_file(
        tmp_path,
        SMALL_INI
        + "\n[sweep]\nvariable = theta\nlo = 0.005\nhi = 0.05\nsteps = 3\nwith_mc = true\n",
    )
    out = tmp_path / "sweep_theta"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    _, _, rows = _read_csv(out / "sweep_theta.csv")
    assert len(rows) == 3
    for row in rows:
        assert row["ci_n1"] != ""
        assert row["ci_n1"] == row["ci_n2"]


@pytest.mark.filterwarnings("ignore::d2d_effcap.errors.ModelWarning")
def test_optimize_agrees_with_grid_oracle(tmp_path):
    cfg = _cfg_file(
        tmp_path,
        SMALL_INI
        + "\n[optimizer]\ngrid_lo = 0.5\ngrid_hi = 4.0\ngrid_steps = 8\nmax_iters = 60\n",
    )
    out = tmp_path / "opt"
    assert main(["optimize", "--config", cfg, "--out", str(out)]) == 0
    _, cols, rows = _read_csv(out / "optimize.csv")
    assert cols[:5] == ["queue_model", "r_gd", "ec_gd", "iterations",
                        "converged"]
    assert [r["queue_model"] for r in rows] == ["n1", "n2"]
    for row in rows:
        assert row["within_one_step"] == "true"
        assert 0.5 <= float(row["r_gd"])
        assert float(row["ec_gd"]) > 0
    assert not (out / "optimize_trace.csv").exists()


def test_validate_passes_at_reduced_sizes(tmp_path):
    cfg = _cfg_file(tmp_path, VALIDATE_INI)
    out = tmp_path / "val"
    assert main(["validate", "--config", cfg, "--out", str(out)]) == 0
    _, cols, rows = _read_csv(out / "validate.csv")
    assert cols == ["check", "detail", "value", "bound", "status"]
    assert [r["check"] for r in rows] == [
        "detection_confusion", "sir_outage", "snr_ccdf",
        "removal_n1", "removal_n2",
        "ec_empirical_n1", "closed_form_n1",
        "ec_empirical_n2", "closed_form_n2",
    ]
    assert all(r["status"] == "PASS" for r in rows)


def test_strict_escalates_clamp_warnings(tmp_path):
    cfg = _cfg_file(
        tmp_path,
        "[modeselect]\nweighting = paper-literal\n\n[harq]\nmc_samples = 10000\n"
        "\n[sweep]\nlo = 0.5\nhi = 1.0\nsteps = 2\n",
    )
    out = tmp_path / "strict"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    assert main(["sweep", "--config", cfg, "--strict",
                 "--out", str(out)]) == 2


def test_config_errors_exit_2(tmp_path):
    out = tmp_path / "cfg_err"
    assert main(["ec", "--config", str(tmp_path / "absent.ini"),
                 "--out", str(out)]) == 2
    bad = _cfg_file(tmp_path, "[system]\nwarp_factor = 9\n", name="bad.ini")
    assert main(["ec", "--config", bad, "--out", str(out)]) == 2


def test_degenerate_detection_exits_2(tmp_path):
    tie = _cfg_file(
        tmp_path,
        "[modeselect]\ndetect_l_direct_db = 80.9\n"
        "detect_l_micro_db = 80.9\ndetect_l_macro_db = 85.4\n",
        name="tie.ini",
    )
    assert main(["mode-select", "--config", tie, "--out", str(tmp_path)]) == 2


def test_missing_command_is_usage_error():
    with pytest.raises(SystemExit):
        main([])
