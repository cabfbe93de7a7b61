"""Experiment drivers: config plumbing, surveys, scans, and demos."""

import numpy as np
import pytest

from maxwave.experiments import (
    DIRECTION_CENTER,
    FOCUSING_SEED,
    ExperimentConfig,
    _auto_K,
    _fit_loglog,
    _plane_wave_control,
    band_block,
    config_hash,
    exponent_scan,
    part_a_check,
    plane_wave_field,
    reduction_demo,
    scan_target_exponent,
    survey_max_ratio,
    worker_count,
)
from maxwave.gridfield import make_band_limited_random, propagate

TOY = dict(radii=(32, 48, 64), dt=0.5, seeds=(1,))


# ------------------------------------------------------------- config


def test_config_defaults_echo_roundtrip():
    cfg = ExperimentConfig()
    d = cfg.as_dict()
    assert d["radii"] == [64, 128, 256, 512]
    assert ExperimentConfig(**{k: v for k, v in d.items()}) == cfg


def test_config_rejects_bad_radii():
    with pytest.raises(ValueError):
        ExperimentConfig(radii=())
    with pytest.raises(ValueError):
        ExperimentConfig(radii=(64, 64))
    with pytest.raises(ValueError):
        ExperimentConfig(radii=(128, 64))
    with pytest.raises(ValueError):
        ExperimentConfig(radii=(0, 64))


def test_config_rejects_bad_knobs():
    with pytest.raises(ValueError):
        ExperimentConfig(dt=0.0)
    with pytest.raises(ValueError):
        ExperimentConfig(grid="mesh")
    with pytest.raises(ValueError):
        ExperimentConfig(p=0.5)


def test_focusing_seed_is_reserved():
    with pytest.raises(ValueError):
        ExperimentConfig(seeds=(1, FOCUSING_SEED))
    cfg = ExperimentConfig(seeds=(1, 2), include_focusing=True)
    assert cfg.ensemble_seeds() == (1, 2, FOCUSING_SEED)
    lean = ExperimentConfig(seeds=(1, 2), include_focusing=False)
    assert lean.ensemble_seeds() == (1, 2)


def test_config_hash_tracks_fields():
    a = ExperimentConfig()
    b = ExperimentConfig()
    c = ExperimentConfig(p=2.0)
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)
    assert len(config_hash(a)) == 16
    assert set(config_hash(a)) <= set("0123456789abcdef")


def test_worker_count_env_cap(monkeypatch):
    monkeypatch.setenv("MAXWAVE_THREADS", "1")
    assert worker_count() == 1
    monkeypatch.setenv("MAXWAVE_THREADS", "64")
    assert worker_count() <= 64


# --------------------------------------------------------- band block


def test_band_block_preserves_norm_and_values():
    f = make_band_limited_random(64, seed=3)
    g = band_block(f)
    assert g.n < f.n
    assert g.n % 2 == 0
    assert g.half_side == f.half_side
    assert abs(g.l2_norm() - f.l2_norm()) < 1e-12 * f.l2_norm()
    # the reduced grid samples the same trigonometric polynomial
    uf = propagate(f, 7.0)
    ug = propagate(g, 7.0)
    # compare at the common physical point x = (0, 0)
    i_f, i_g = f.n // 2, g.n // 2
    assert abs(uf.data[i_f, i_f] - ug.data[i_g, i_g]) < 1e-10


def test_band_block_is_exact_for_survey():
    f = make_band_limited_random(32, seed=5)
    full = survey_max_ratio(f, 32.0, 3.2, dt=0.5, grid="full",
                            single_precision=False)
    band = survey_max_ratio(f, 32.0, 3.2, dt=0.5, grid="band",
                            single_precision=False)
    assert abs(band - full) < 5e-3 * full


def test_survey_single_precision_close_to_double():
    f = make_band_limited_random(32, seed=7)
    lo = survey_max_ratio(f, 32.0, 3.2, dt=0.5, single_precision=True)
    hi = survey_max_ratio(f, 32.0, 3.2, dt=0.5, single_precision=False)
    assert abs(lo - hi) < 2e-3 * hi


def test_survey_accepts_exponent_list():
    f = make_band_limited_random(32, seed=9)
    pair = survey_max_ratio(f, 32.0, [2.0, 3.2], dt=0.5)
    solo = survey_max_ratio(f, 32.0, 3.2, dt=0.5)
    assert isinstance(pair, list) and len(pair) == 2
    assert pair[1] == solo
    assert pair[0] > pair[1]  # lower exponent sees the bigger ball norm


# ------------------------------------------------------------- control


def test_plane_wave_has_single_mode():
    f = plane_wave_field(32)
    c = f.coefficients()
    nz = np.nonzero(np.abs(c) > 1e-12)
    assert len(nz[0]) == 1
    assert f.l2_norm() > 0


def test_control_recovers_ball_volume_exponent():
    cfg = ExperimentConfig(radii=(32, 48, 64), seeds=(1,),
                           include_focusing=False)
    vals = _plane_wave_control(cfg, workers=1)
    slope, _, _ = _fit_loglog(cfg.radii, vals)
    assert abs(slope - 2.0 / cfg.p) <= 0.02


# ---------------------------------------------------------------- scan


def test_scan_target_exponents():
    assert scan_target_exponent(3.2) == 0.0
    assert scan_target_exponent(2.0) == pytest.approx(3.0 / 8.0)
    assert scan_target_exponent(4.0) == 0.0


def test_scan_refuses_short_radius_list():
    with pytest.raises(ValueError, match="3 radii"):
        exponent_scan(ExperimentConfig(radii=(64, 128)))
    with pytest.raises(ValueError, match="3 radii"):
        part_a_check(ExperimentConfig(radii=(36, 64)))


def test_scan_rows_and_fits():
    cfg = ExperimentConfig(**TOY)
    res = exponent_scan(cfg)
    seeds = cfg.ensemble_seeds()
    assert len(res.rows) == len(cfg.radii) * len(seeds)
    keys = [(r["R"], r["seed"]) for r in res.rows]
    assert keys == sorted(keys)
    for r in res.rows[: len(seeds)]:
        assert r["slope_partial"] is None
    assert res.fit["n_radii"] == 3
    assert res.slope == res.fit["slope"]
    assert set(res.comparison["fits_by_p"]) == {"2.0", "3.2"}
    assert res.comparison["control_error"] <= 0.02
    # the focusing candidate dominates the random ensemble at every R
    by_R = {}
    for row in res.rows:
        by_R.setdefault(row["R"], {})[row["seed"]] = row["ratio"]
    for R, vals in by_R.items():
        assert vals[FOCUSING_SEED] == max(vals.values())
        assert res.max_ratios[R] == vals[FOCUSING_SEED]


def test_scan_is_deterministic():
    cfg = ExperimentConfig(**TOY)
    a = exponent_scan(cfg)
    b = exponent_scan(cfg)
    assert a.rows == b.rows
    assert a.fit == b.fit


def test_scan_theorem_exponent_arithmetic():
    res = ExperimentConfig(p=3.2)
    assert 2.0 / res.p - 5.0 / 8.0 == 0.0
    assert 2.0 / 2.0 - 5.0 / 8.0 == pytest.approx(3.0 / 8.0)


# -------------------------------------------------------------- part a


def test_auto_K_tracks_root_R():
    assert _auto_K(36) == 6
    assert _auto_K(64) == 8
    assert _auto_K(100) == 10
    assert _auto_K(144) == 12


def test_part_a_refuses_oversized_grid():
    cfg = ExperimentConfig(radii=(64, 128, 256), K=16, A=0, seeds=(1,),
                           include_focusing=False)
    with pytest.raises(ValueError, match="GiB"):
        part_a_check(cfg)


def test_part_a_structure_small():
    cfg = ExperimentConfig(radii=(16, 25, 36), A=0, seeds=(1,),
                           include_focusing=False)
    res = part_a_check(cfg)
    assert res.experiment == "part_a"
    assert res.extras["K_per_R"] == {16: 4, 25: 5, 36: 6}
    assert res.extras["direction_center"] == list(DIRECTION_CENTER)
    assert set(res.comparison["fits_by_p"]) == {"2.0", "3.2"}
    assert res.comparison["fits_by_p"]["2.0"]["target"] == 0.5
    assert res.comparison["fits_by_p"]["3.2"]["target"] == pytest.approx(-0.1)
    assert all(r["ratio"] > 0 for r in res.rows)
    keys = [(r["R"], r["seed"]) for r in res.rows]
    assert keys == sorted(keys)


# ----------------------------------------------------------- reduction


def test_reduction_demo_certifies_and_splits():
    cfg = ExperimentConfig(radii=(32, 64, 128), seeds=(1,),
                           include_focusing=False)
    res = reduction_demo(cfg)
    assert res.comparison["violations_total"] == 0
    assert res.comparison["zero_exclusion_violations"] == 0
    assert res.comparison["single_cap_narrow_share"] >= 0.99
    assert res.fit is None
    cells = res.extras["cells"]
    assert len(cells) == 12
    for cell in cells:
        assert cell["full_mass"] >= 0
        assert cell["broad_mass"] >= 0
        assert cell["narrow_mass"] >= 0
        assert cell["ok"] is True
