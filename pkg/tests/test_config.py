"""Configuration loading: defaults, file/env merging, and rejection paths."""

import pytest

from d2d_effcap.channel import LinkBudget, dbm_to_watts, pathloss_db
from d2d_effcap.config import SWEEP_VARIABLES, SweepSpec, load_config
from d2d_effcap.errors import ConfigError

LOSS_FILE = """
[geometry]
l_d_db = 81.0
l_micro_ul_db = 82.2
l_micro_dl_db = 86.9
l_macro_ul_db = 85.8
l_macro_dl_db = 93.5
l_ut_dr_db = 111.0
l_ut_micro_db = 112.2
l_ut_macro_db = 115.8
"""


def _write(tmp_path, text):
    p = tmp_path / "exp.ini"
    p.write_text(text)
    return str(p)


def test_defaults_without_file():
    cfg = load_config(env={})
    assert cfg.params.p_dt == dbm_to_watts(27.0)
    assert cfg.params.p_MC == dbm_to_watts(47.0)
    assert cfg.params.rate_r == 0.5
    assert cfg.params.qos_theta == 0.01
    assert cfg.params.max_tx_M == 2
    assert cfg.params.duplex_mode == "full"
    assert cfg.sigma == 1.0
    assert cfg.weighting == "uniform"
    assert cfg.detect_triple is None
    assert cfg.schedule is None
    assert cfg.mc_samples == 100_000
    assert cfg.sweep == SweepSpec("r", 0.25, 10.0, 60, False)
    assert cfg.seed == 1234
    assert cfg.grid == (0.25, 10.0, 200)
    expect = LinkBudget.from_db(
        L_d=pathloss_db(0.056),
        L_mc_ul=pathloss_db(0.060),
        L_mc_dl=pathloss_db(0.080),
        L_MC_ul=pathloss_db(0.075),
        L_MC_dl=pathloss_db(0.120),
        L_ut_dr=pathloss_db(0.378),
        L_ut_mc=pathloss_db(0.378),
        L_ut_MC=pathloss_db(0.470),
    )
    assert cfg.budget == expect


def test_file_values_applied(tmp_path):
    path = _write(tmp_path, "[system]\nrate_r = 2.5\n[sweep]\nvariable = theta\nwith_mc = yes\n")
    cfg = load_config(path, env={})
    assert cfg.params.rate_r == 2.5
    assert cfg.sweep.variable == "theta"
    assert cfg.sweep.with_mc is True
    assert "system.rate_r = 2.5" in cfg.echo


def test_env_overrides_file(tmp_path):
    path = _write(tmp_path, "[system]\nrate_r = 2.5\n")
    cfg = load_config(path, env={"D2D_EFFCAP_SYSTEM_RATE_R": "3.5"})
    assert cfg.params.rate_r == 3.5


def test_seed_override_wins_and_echoes(tmp_path):
    path = _write(tmp_path, "[montecarlo]\nseed = 42\n")
    cfg = load_config(path, seed_override=7, env={})
    assert cfg.seed == 7
    assert "montecarlo.seed = 7" in cfg.echo


def test_unknown_key_reports_line(tmp_path):
    path = _write(tmp_path, "[system]\nbogus_key = 1\n")
    with pytest.raises(ConfigError, match=r":2: unknown key 'bogus_key'"):
        load_config(path, env={})


def test_unknown_section_reports_line(tmp_path):
    path = _write(tmp_path, "# experiment\n[rocketry]\nfuel = lots\n")
    with pytest.raises(ConfigError, match=r":2: unknown section \[rocketry\]"):
        load_config(path, env={})


def test_bad_value_reports_location(tmp_path):
    path = _write(tmp_path, "[system]\nblock_len_l = many\n")
    with pytest.raises(ConfigError, match=r":2: system\.block_len_l"):
        load_config(path, env={})


def test_geometry_families_are_exclusive(tmp_path):
    path = _write(tmp_path, "[geometry]\nd_d_km = 0.05\nl_d_db = 81.0\n")
    with pytest.raises(ConfigError, match="not both"):
        load_config(path, env={})


def test_partial_loss_family_rejected(tmp_path):
    path = _write(tmp_path, "[geometry]\nl_d_db = 81.0\n")
    with pytest.raises(ConfigError, match="missing"):
        load_config(path, env={})


def test_full_loss_family_accepted(tmp_path):
    cfg = load_config(_write(tmp_path, LOSS_FILE), env={})
    expect = LinkBudget.from_db(
        L_d=81.0, L_mc_ul=82.2, L_mc_dl=86.9, L_MC_ul=85.8, L_MC_dl=93.5,
        L_ut_dr=111.0, L_ut_mc=112.2, L_ut_MC=115.8,
    )
    assert cfg.budget == expect


def test_detection_losses_all_or_none(tmp_path):
    path = _write(tmp_path, "[modeselect]\ndetect_l_direct_db = 90.7\n")
    with pytest.raises(ConfigError, match="all three"):
        load_config(path, env={})
    full = _write(
        tmp_path,
        "[modeselect]\ndetect_l_direct_db = 90.7\n"
        "detect_l_micro_db = 80.9\ndetect_l_macro_db = 85.4\n",
    )
    cfg = load_config(full, env={})
    assert cfg.detect_triple == (90.7, 80.9, 85.4)


def test_modeselect_validation(tmp_path):
    with pytest.raises(ConfigError, match="weighting"):
        load_config(_write(tmp_path, "[modeselect]\nweighting = spectral\n"), env={})
    with pytest.raises(ConfigError, match="sigma_db"):
        load_config(_write(tmp_path, "[modeselect]\nsigma_db = -1\n"), env={})


def test_sweep_validation(tmp_path):
    assert SWEEP_VARIABLES == ("r", "theta", "sigma", "beta", "l")
    with pytest.raises(ConfigError, match="lo < hi"):
        load_config(_write(tmp_path, "[sweep]\nlo = 5\nhi = 1\n"), env={})
    with pytest.raises(ConfigError, match="grid point"):
        load_config(_write(tmp_path, "[sweep]\nsteps = 0\n"), env={})
    with pytest.raises(ConfigError, match="variable"):
        load_config(_write(tmp_path, "[sweep]\nvariable = snr\n"), env={})


def test_dataclass_rejections_become_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[system]\nqos_theta = -1\n"), env={})
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[montecarlo]\nqueue_model = n9\n"), env={})
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[optimizer]\ngrid_steps = 1\n"), env={})


def test_schedule_parsing(tmp_path):
    path = _write(tmp_path, "[harq]\nschedule = underlay, overlay\n")
    cfg = load_config(path, env={})
    assert cfg.schedule == ("underlay", "overlay")


def test_echo_is_sorted_and_skips_unset(tmp_path):
    cfg = load_config(env={})
    assert cfg.echo == tuple(sorted(cfg.echo))
    assert not any(line.startswith("geometry.l_") for line in cfg.echo)
    assert "system.duplex_mode = 'full'" in cfg.echo


def test_env_bool_parsing_and_errors(tmp_path):
    cfg = load_config(env={"D2D_EFFCAP_SWEEP_WITH_MC": "on"})
    assert cfg.sweep.with_mc is True
    with pytest.raises(ConfigError, match="environment D2D_EFFCAP_SWEEP_WITH_MC"):
        load_config(env={"D2D_EFFCAP_SWEEP_WITH_MC": "maybe"})


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "absent.ini"), env={})
