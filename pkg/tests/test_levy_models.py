import math

import numpy as np
import pytest

from levypassage.levy_models import (REGISTRY, ConfigurationError, ModelKind, ModelSpec,
                                     UnsupportedModelError, bm_cp_renewal_closed_form, dual_model,
                                     effective_tail_neg, get_model, levy_tail_neg,
                                     model_from_fields, norming_function, renewal_U,
                                     renewal_from_heights)
from levypassage.stable_core import StableParams


def test_registry_structure():
    r = REGISTRY
    assert r["brownian"].creeps_downward and not r["brownian"].has_negative_jumps
    assert r["stable_pos"].creeps_downward and not r["stable_pos"].has_negative_jumps
    assert not r["stable_neg"].creeps_downward and r["stable_neg"].has_negative_jumps
    assert r["bm_cp"].creeps_downward and r["bm_cp"].has_negative_jumps
    assert r["stable_neg"].limit.rho_bar == pytest.approx(1.0 / 3.0)
    assert r["cauchy"].limit.rho_bar == 0.5


def test_constants():
    assert REGISTRY["bm_cp"].q_known == pytest.approx(1.0 / 3.0)
    assert REGISTRY["brownian"].q_known == 1.0
    assert REGISTRY["stable_neg"].q_known == 0.0
    assert REGISTRY["stable_neg"].k_star == pytest.approx(0.39894, abs=1e-5)
    assert REGISTRY["cauchy"].k_star == pytest.approx(1.0 / math.pi)


def test_norming_function():
    assert float(norming_function(REGISTRY["cauchy"], 7.0)) == pytest.approx(7.0)
    assert float(norming_function(REGISTRY["stable_neg"], 8.0)) == pytest.approx(4.0)
    assert float(norming_function(REGISTRY["bm_cp"], 4.0)) == pytest.approx(2 * math.sqrt(3))
    with pytest.raises(ValueError):
        norming_function(REGISTRY["brownian"], 0.0)


def test_validation_errors():
    with pytest.raises(ConfigurationError):
        ModelSpec(ModelKind.SPECTRALLY_NEGATIVE_STABLE, StableParams(1.5, 0.5))
    with pytest.raises(ConfigurationError):
        ModelSpec(ModelKind.BROWNIAN_MOTION, StableParams(2.0, 0.5), sigma=0.0)
    with pytest.raises(ConfigurationError):
        model_from_fields("TwoSidedStable")
    with pytest.raises(ValueError):
        model_from_fields("NoSuchKind")
    with pytest.raises(ConfigurationError):
        get_model("nope")
    assert model_from_fields("SpectrallyNegativeStable", alpha=1.5).limit.rho == pytest.approx(2 / 3)


def test_dual():
    assert dual_model(REGISTRY["stable_neg"]).kind is ModelKind.SPECTRALLY_POSITIVE_STABLE
    assert dual_model(REGISTRY["brownian"]) is REGISTRY["brownian"]
    with pytest.raises(UnsupportedModelError):
        dual_model(REGISTRY["bm_cp"])


def test_tails():
    m = REGISTRY["stable_neg"]
    assert levy_tail_neg(m, 2.0) / levy_tail_neg(m, 1.0) == pytest.approx(2 ** -1.5)
    assert levy_tail_neg(REGISTRY["stable_pos"], 1.0) == 0.0
    par = m.step_params(1e-2)
    eps = par[3]
    y = np.array([eps / 10, eps / 2, eps, 2 * eps])
    v = effective_tail_neg(m, y, par)
    assert v[0] == v[1] == v[2] == pytest.approx(levy_tail_neg(m, eps))
    assert v[3] == pytest.approx(levy_tail_neg(m, 2 * eps))
    with pytest.raises(ValueError):
        levy_tail_neg(m, 0.0)


def test_cutoff_bounds():
    with pytest.raises(ConfigurationError):
        REGISTRY["cauchy"].step_params(1e-3, kappa=0.9)


def test_bm_cp_renewal_closed_form():
    m = REGISTRY["bm_cp"]
    x = np.linspace(0, 20, 201)
    u = bm_cp_renewal_closed_form(m, x)
    assert u[0] == 0.0 and np.all(np.diff(u) > 0)
    total = 0.5 + 1.0
    assert (u[-1] - u[-2]) / (x[-1] - x[-2]) == pytest.approx(1 / total, rel=1e-6)
    # U* ratio used for small-deviation targets
    assert renewal_U(m, 0.5) / renewal_U(m, 0.25) == pytest.approx(1.6916, abs=1e-4)


def test_stable_renewal_power():
    m = REGISTRY["stable_neg"]
    assert renewal_U(m, 0.4) / renewal_U(m, 0.1) == pytest.approx(2.0)  # exponent 1/2
    with pytest.raises(ValueError):
        renewal_U(m, -1.0)


def test_renewal_from_heights_exponential():
    h = np.random.default_rng(0).exponential(1.0, 400_000)
    grid = np.linspace(0, 4, 41)
    u = renewal_from_heights(h, grid)
    slope = (u[-1] - u[20]) / (grid[-1] - grid[20])
    assert slope == pytest.approx(1.0, rel=0.03)
