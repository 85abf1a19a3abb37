import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from levypassage.stable_core import (StableParams, estimate_meander_densities,
                                     levy_density_coefficients, passage_density_at,
                                     positivity_from_beta, rayleigh_density, sample_stable,
                                     stable_cdf, stable_density, stable_density_at_zero,
                                     stable_passage_density)

alphas = st.floats(0.2, 1.95).filter(lambda a: abs(a - 1.0) > 1e-3)
betas = st.floats(-1.0, 1.0)


@pytest.fixture(scope="module")
def cauchy_table():
    return estimate_meander_densities(StableParams(1.0, 0.5), n_steps=128, n_paths=100_000,
                                      rng=np.random.default_rng(3))


def test_positivity_known_values():
    assert positivity_from_beta(1.5, 0.0) == 0.5
    assert positivity_from_beta(1.5, -1.0) == pytest.approx(2.0 / 3.0)
    assert positivity_from_beta(1.5, 1.0) == pytest.approx(1.0 / 3.0)
    assert positivity_from_beta(2.0, 0.7) == 0.5


@given(alphas, betas)
def test_params_from_beta_are_admissible_and_dual_involutive(a, b):
    if a < 1.0 and abs(b) == 1.0:
        # one-sided laws with alpha < 1 are subordinators (rho = 0 or 1): rejected
        with pytest.raises(ValueError):
            StableParams.from_beta(a, b)
        return
    p = StableParams.from_beta(a, b)
    assert 0.0 < p.rho < 1.0
    assert p.alpha * p.rho <= 1.0 + 1e-9 and p.alpha * p.rho_bar <= 1.0 + 1e-9
    assert p.dual().dual().rho == pytest.approx(p.rho, abs=1e-14)
    assert p.dual().rho == pytest.approx(p.rho_bar)
    assert p.beta == pytest.approx(b, abs=1e-7)


@given(st.floats(-5, 5), st.floats(-1, 2))
def test_params_validation(a, r):
    ok = 0 < a <= 2 and 0 < r < 1 and a * r <= 1 + 1e-12 and a * (1 - r) <= 1 + 1e-12
    ok = ok and not (a == 2 and r != 0.5) and not (a == 1 and r != 0.5)
    if ok:
        StableParams(a, r)
    else:
        with pytest.raises(ValueError):
            StableParams(a, r)


def test_levy_coefficients_cauchy_and_one_sided():
    assert levy_density_coefficients(StableParams(1.0, 0.5)) == (1 / math.pi, 1 / math.pi)
    cp, cm = levy_density_coefficients(StableParams(1.5, 2.0 / 3.0))  # no positive jumps
    assert cp == pytest.approx(0.0, abs=1e-12) and cm > 0


def test_closed_form_densities():
    x = np.array([-2.0, 0.0, 0.7, 3.0])
    np.testing.assert_allclose(stable_density(StableParams(2.0, 0.5), x), stats.norm.pdf(x))
    np.testing.assert_allclose(stable_density(StableParams(1.0, 0.5), x), stats.cauchy.pdf(x))
    np.testing.assert_allclose(stable_cdf(StableParams(1.0, 0.5), x), stats.cauchy.cdf(x))


@pytest.mark.parametrize("a,b", [(1.5, 0.0), (1.5, -1.0), (0.7, 0.3)])
def test_zolotarev_density_at_zero_and_cdf(a, b):
    p = StableParams.from_beta(a, b)
    assert stable_density(p, 0.0) == pytest.approx(stable_density_at_zero(p), rel=1e-6)
    assert stable_cdf(p, 0.0) == pytest.approx(p.rho_bar, abs=1e-7)
    h = 1e-3
    fd = (stable_cdf(p, 0.8 + h) - stable_cdf(p, 0.8 - h)) / (2 * h)
    assert fd == pytest.approx(stable_density(p, 0.8), rel=1e-4)


def test_density_integrates_to_one():
    p = StableParams.from_beta(1.5, 0.0)
    v, _ = integrate.quad(lambda u: stable_density(p, math.sinh(u)) * math.cosh(u), -9, 9,
                          limit=200)
    assert v == pytest.approx(1.0, abs=2e-5)


@pytest.mark.parametrize("p,ref", [(StableParams(1.0, 0.5), stats.cauchy.cdf),
                                   (StableParams(2.0, 0.5), stats.norm.cdf)])
def test_sampler_ks(p, ref):
    draws = sample_stable(p, np.random.default_rng(0), 20_000)
    assert stats.kstest(draws, ref).pvalue > 1e-3


def test_sampler_matches_zolotarev_cdf_one_sided():
    p = StableParams.from_beta(1.5, -1.0)
    draws = sample_stable(p, np.random.default_rng(1), 40_000)
    for x in (-2.0, 0.0, 1.0):
        f = stable_cdf(p, x)
        assert np.mean(draws <= x) == pytest.approx(f, abs=4 * math.sqrt(f * (1 - f) / draws.size))


def test_rayleigh_density():
    v, _ = integrate.quad(rayleigh_density, 0, np.inf)
    assert v == pytest.approx(1.0)
    assert rayleigh_density(1.0) / rayleigh_density(2.0) == pytest.approx(math.exp(1.5) / 2)


def test_brownian_passage_density_closed_form():
    p = StableParams(2.0, 0.5)
    assert stable_passage_density(p, 1.0) == pytest.approx(0.24197072451914337)
    for x, t in [(1.0, 3.0), (0.3, 0.5)]:
        exact = x / math.sqrt(2 * math.pi * t ** 3) * math.exp(-x * x / (2 * t))
        assert passage_density_at(p, x, t) == pytest.approx(exact)


def test_no_negative_jumps_passage_density():
    p = StableParams(1.5, 1.0 - 1.0 / 1.5)  # spectrally positive: alpha*rho_bar = 1
    assert stable_passage_density(p, 0.8) == pytest.approx(0.8 * stable_density(p, -0.8))


def test_passage_density_needs_table():
    with pytest.raises(ValueError):
        stable_passage_density(StableParams(1.0, 0.5), 1.0)
    with pytest.raises(ValueError):
        stable_passage_density(StableParams(2.0, 0.5), -1.0)


def test_meander_table_mass_and_boundary(cauchy_table):
    assert cauchy_table.mass("g") == pytest.approx(1.0, abs=0.01)
    c, a = cauchy_table._boundary_fit["g"]
    assert a == pytest.approx(0.5)  # alpha * rho


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_phi_monotone(cauchy_table, z1, z2):
    lo, hi = sorted((z1, z2))
    assert cauchy_table.phi(lo) >= cauchy_table.phi(hi) - 1e-12
    assert cauchy_table.phi(0.0) == 1.0


def test_meander_table_csv_roundtrip(cauchy_table, tmp_path):
    path = tmp_path / "m.csv"
    cauchy_table.to_csv(path)
    assert path.read_text().splitlines()[0] == "y,g,g_star,ci_g,ci_g_star"
    back = type(cauchy_table).from_csv(path, cauchy_table.params)
    np.testing.assert_allclose(back.g_values, cauchy_table.g_values, rtol=1e-11)
