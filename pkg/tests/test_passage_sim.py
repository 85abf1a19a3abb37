import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levypassage import passage_sim as ps
from levypassage.levy_models import REGISTRY, UnsupportedModelError
from levypassage.stable_core import InsufficientSamplesError

BM = REGISTRY["brownian"]


@pytest.fixture(scope="module")
def bm_batch():
    return ps.simulate_passages(BM, 1.0, 1.0, 1e-3, 40_000, 5)


def test_brownian_crossing_probability(bm_batch):
    p = bm_batch.fraction_crossed()
    exact = math.erfc(1 / math.sqrt(2))
    assert abs(p - exact) <= 4 * math.sqrt(exact * (1 - exact) / bm_batch.n_paths)
    assert not np.any(bm_batch.code == ps._kernels.JUMP)


def test_determinism_and_worker_invariance():
    m = REGISTRY["stable_neg"]
    a = ps.simulate_passages(m, 0.5, 1.0, 1e-3, 30_000, 9, chunk=7_000)
    b = ps.simulate_passages(m, 0.5, 1.0, 1e-3, 30_000, 9, chunk=7_000, workers=3)
    np.testing.assert_array_equal(a.t0, b.t0)
    np.testing.assert_array_equal(a.code, b.code)
    np.testing.assert_array_equal(a.jump_size, b.jump_size)
    c = ps.simulate_passages(m, 0.5, 1.0, 1e-3, 30_000, 10, chunk=7_000)
    assert not np.array_equal(a.t0, c.t0)


def test_spectrally_positive_never_jumps_below():
    b = ps.simulate_passages(REGISTRY["stable_pos"], 0.3, 1.0, 1e-3, 20_000, 1)
    assert np.sum(~b.censored) > 1000
    assert not np.any(b.code == ps._kernels.JUMP)


def test_jump_records_are_consistent():
    b = ps.simulate_passages(REGISTRY["cauchy"], 1.0, 1.0, 1e-3, 20_000, 2)
    j = b.code == ps._kernels.JUMP
    assert np.all(b.pre_pos[j] >= 0)
    assert np.all(b.pre_pos[j] + b.jump_size[j] < 0)


def test_passage_csv(bm_batch, tmp_path):
    path = tmp_path / "p.csv"
    bm_batch.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "start_x,t0,crossing,pre_pos,jump_size"
    assert len(lines) == 1 + bm_batch.n_paths - bm_batch.n_dropped
    assert {ln.split(",")[2] for ln in lines[1:]} <= {"continuous", "jump", "censored"}


def test_first_passage_single_path():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        ps.simulate_first_passage(BM, 1.0, 1.0, 0.01, rng)
    rec = ps.simulate_first_passage(BM, 0.01, 1.0, 1e-3, rng)
    assert rec is None or (0 < rec.t0 <= 1.0 and rec.crossing == "continuous")


def test_local_estimator_guards():
    with pytest.raises(InsufficientSamplesError):
        ps.estimate_local_passage_prob(BM, 1.0, 1.0, 0.05, 5_000, 0)
    with pytest.raises(ValueError):
        ps.estimate_local_passage_prob(BM, 1.0, 1.0, 0.2, 20_000, 0)


def test_local_estimator_brownian():
    e = ps.estimate_local_passage_prob(BM, 1.0, 1.0, 0.1, 200_000, 4, centered=True)
    d, ci = e.density()
    assert abs(d - 0.2420) <= 1.5 * ci
    assert e.count == e.count_continuous and e.count_jump == 0


def test_compensation_requires_negative_jumps():
    with pytest.raises(UnsupportedModelError):
        ps.compensation_density_estimator(BM, 1.0, 1.0, 10_000, 0)


def test_compensation_closed_form_bm_cp_short_time():
    # for small t, h_x(t) -> lam * exp(-x/mean) (the jump must come at once)
    m = REGISTRY["bm_cp"]
    h, ci = ps.compensation_density_estimator(m, 0.5, 0.01, 20_000, 3, dt=1e-5)
    assert h == pytest.approx(math.exp(-0.5), rel=0.05)


@given(st.integers(1, 10_000), st.integers(1, 10_000))
def test_binomial_ci_scaling(k, extra):
    n = k + extra
    assert ps.binomial_ci(7 * k, 7 * n) == pytest.approx(ps.binomial_ci(k, n) / math.sqrt(7))


def test_excursions(tmp_path):
    with pytest.raises(ValueError):
        ps.harvest_excursions(BM, 1.0, 1e-3, (), 0, n_excursions=1000)
    ex = ps.harvest_excursions(BM, 10.0, 1e-3, (0.5,), 0, n_excursions=20_000)
    assert ex.x0 == pytest.approx(3 * math.sqrt(1e-3))
    assert ex.survivors(0.5) == np.sum(~np.isnan(ex.probe_column(0.5)))
    # survival of Brownian excursions from x0 decays like t^-1/2
    r = ex.survivors(2.0) / ex.survivors(0.5)
    assert r == pytest.approx(0.5, abs=0.08)
    path = tmp_path / "e.csv"
    ex.to_csv(path)
    assert path.read_text().splitlines()[0] == "zeta,ended_by,probe_t,probe_pos"
    with pytest.raises(InsufficientSamplesError):
        ps.harvest_excursions(BM, 10.0, 1e-3, (10.0,), 0, n_excursions=200)
