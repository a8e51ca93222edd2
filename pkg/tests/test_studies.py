import numpy as np
import pytest

from helmrec.studies import StudyConfig, run_pollution_scan, run_refinement_study


def test_finer_kh_gives_smaller_errors():
    ks = (5.0, 6.0)
    coarse = run_pollution_scan(
        StudyConfig(domain="hexagon", k_list=ks, kh=1.0, out="x.csv", figure=False)
    )
    fine = run_pollution_scan(
        StudyConfig(domain="hexagon", k_list=ks, kh=0.5, out="x.csv", figure=False)
    )
    for c, f in zip(coarse, fine):
        assert f.rel_h1_fem < c.rel_h1_fem
        assert f.rel_l2_fem < c.rel_l2_fem


def test_multiple_wave_numbers_in_one_study():
    cfg = StudyConfig(domain="square", k_list=(5.0, 10.0), levels=(4, 8),
                      out="x.csv", figure=False)
    records = run_refinement_study(cfg)
    assert [r.k for r in records] == [5.0, 5.0, 10.0, 10.0]
    assert all(r.status == "ok" for r in records)


def test_estimator_preasymptotic_hump_high_wave_number():
    # far below resolution the estimator first grows, then falls once the
    # mesh resolves the wave
    cfg = StudyConfig(domain="square", problem="gaussian", k_list=(120.0,),
                      levels=(8, 16, 32, 64, 128, 256, 512),
                      out="x.csv", figure=False)
    from helmrec.studies import run_estimator_only

    eta = {r.m: r.eta for r in run_estimator_only(cfg) if r.eta is not None}
    assert eta[16] < eta[32]
    assert eta[512] < eta[32]
    assert eta[512] == pytest.approx(2.0382e-02, rel=0.15)


def test_structured_levels_must_double():
    from helmrec.studies import ConfigError

    cfg = StudyConfig(domain="square", k_list=(5.0,), levels=(4, 12),
                      out="x.csv", figure=False)
    with pytest.raises(ConfigError):
        run_refinement_study(cfg)
