import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levypassage import asymptotics as A
from levypassage import passage_sim as ps
from levypassage.levy_models import REGISTRY, UnsupportedModelError
from levypassage.runner import run_check
from levypassage.stable_core import UnsupportedRegimeError


@given(st.floats(0.1, 100), st.floats(0.001, 0.1), st.integers(100, 10**6),
       st.floats(0.0, 0.5))
def test_lifetime_ratio_scale_invariance(t, rel, alive, frac):
    ended = int(alive * frac)
    a = A.lifetime_ratio_from_counts(t, rel * t, alive, ended)
    b = A.lifetime_ratio_from_counts(t, rel * t, 7 * alive, 7 * ended)
    assert b.value == pytest.approx(a.value)
    assert b.ci == pytest.approx(a.ci / math.sqrt(7))
    # invariance under rescaling time
    c = A.lifetime_ratio_from_counts(3 * t, 3 * rel * t, alive, ended)
    assert c.value == pytest.approx(a.value)


@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_loglog_slope_exact_power(k, c):
    ts = [1.0, 2.0, 4.0, 8.0]
    ests = [A.Estimate(c * t ** k, 0.01 * c * t ** k) for t in ts]
    assert A.loglog_slope(ts, ests).value == pytest.approx(k, abs=1e-9)


def test_verdict_and_ratio():
    assert A.verdict(0.52, 0.5, 0.0, tol=0.05)
    assert not A.verdict(0.56, 0.5, 0.0, tol=0.05)
    assert A.verdict(1.0, 1.05, 0.04)  # 0.05 < 3 sigma = 0.061
    assert not A.verdict(1.0, 1.1, 0.04)
    r = A.ratio_estimate(A.Estimate(2.0, 0.2), A.Estimate(1.0, 0.1))
    assert r.value == 2.0 and r.ci == pytest.approx(2.0 * math.hypot(0.1, 0.1))
    assert A.max_pairwise_z([A.Estimate(1.0, A.Z95), A.Estimate(2.0, A.Z95)]) == pytest.approx(
        1 / math.sqrt(2))


def test_reports_roundtrip(tmp_path):
    reps = [A.CheckReport("T1.2", "brownian", 1.0, 0.05, math.nan, 0.49, 0.5, 0.02, True),
            A.CheckReport("T2.6", "cauchy", 10.0, 0.5, 10.0, 0.3, 0.25, 0.01, False)]
    path = tmp_path / "c.csv"
    A.write_reports(reps[:1], path)
    A.write_reports(reps[1:], path, append=True)
    text = path.read_text().splitlines()
    assert text[0] == "check_id,model,t,delta,x,statistic,target,ci,pass"
    assert len(text) == 3 and text[2].endswith(",fail")
    back = A.read_reports(path)
    assert [r.check_id for r in back] == ["T1.2", "T2.6"]
    assert back[0].statistic == 0.49 and math.isnan(back[0].x) and back[0].passed


def _synthetic_excursions(rho_bar, n, seed, cont_share=1.0):
    rng = np.random.default_rng(seed)
    zeta = rng.random(n) ** (-1.0 / rho_bar) * 0.1  # P(zeta > t) = (t / 0.1)^-rho_bar
    code = np.where(rng.random(n) < cont_share, ps._kernels.CONTINUOUS, ps._kernels.JUMP)
    zeta = np.where(zeta > 100.0, np.nan, zeta)
    code = np.where(np.isnan(zeta), ps._kernels.NONE, code)
    return ps.ExcursionBatch("synthetic", 0.0, 1e-3, 100.0, np.array([]), zeta, code,
                             np.empty((n, 0)))


def test_t1_checks_synthetic():
    ex = _synthetic_excursions(0.5, 2_000_000, 0, cont_share=1 / 3)
    m = REGISTRY["bm_cp"]
    reps = A.t1_checks(m, ex, [1.0], [0.02], check_ids=("T1.2", "T1.3x", "T1.4"))
    by = {r.check_id: r for r in reps}
    assert by["T1.2"].statistic == pytest.approx(0.5, abs=0.03)
    assert by["T1.3x"].target == pytest.approx(1 / 6)
    assert by["T1.4"].target == pytest.approx(1 / 3)
    assert all(r.passed for r in reps)
    slope = A.lifetime_tail_slope(ex, [0.5, 1.0, 2.0, 4.0])
    assert slope.value == pytest.approx(-0.5, abs=0.02)


def test_t1_guards():
    ex = _synthetic_excursions(0.5, 10_000, 1)
    with pytest.raises(UnsupportedModelError):
        A.t1_checks(REGISTRY["brownian"], ex, [1.0], [0.02], check_ids=("T1.4",))
    with pytest.raises(UnsupportedRegimeError):
        A.t1_checks(REGISTRY["cauchy"], ex, [1.0], [0.02], check_ids=("T1.3x",))
    with pytest.raises(UnsupportedModelError):
        A.t1_checks(REGISTRY["cauchy"], ex, [1.0], [0.02], check_ids=("T1.5",))


def test_regime_guards():
    with pytest.raises(UnsupportedRegimeError):
        run_check("PZ", REGISTRY["brownian"])
    with pytest.raises(UnsupportedRegimeError):
        A.jump_density_normal(REGISTRY["bm_cp"], 1.0, [1.0])
    with pytest.raises(UnsupportedModelError):
        A.creeping_t_shape(REGISTRY["cauchy"], 0.5, [1.0, 2.0])


def test_small_deviation_regime_warning():
    with pytest.warns(A.RegimeWarning):
        A.t2_small_deviation_check(REGISTRY["brownian"], 1.0, 0.5, [1.0, 2.0], n_paths=20_000,
                                   seed=0, dt=5e-3)


def test_small_deviation_brownian_ratio():
    # U*(x) = x for Brownian motion
    reps = A.t2_small_deviation_check(REGISTRY["brownian"], 0.1, 0.05, [4.0, 8.0],
                                      n_paths=200_000, seed=3, dt=0.01)
    ratios = [r for r in reps if r.check_id == "T2.7"]
    assert ratios[0].target == pytest.approx(2.0)
    assert all(abs(r.statistic - 2.0) < 0.25 for r in ratios)


def test_flatness_report():
    reps = [A.CheckReport("T2.6", "m", t, 1, 1, v, 0.25, 0.01, True) for t, v in
            [(10, 0.25), (20, 0.251), (40, 0.3)]]
    f = A.flatness_report(reps)
    assert f.check_id == "T2.6.flat" and not f.passed
