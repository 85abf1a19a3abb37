import math

import numpy as np
import pytest

from levypassage import identity_checks as I
from levypassage.levy_models import REGISTRY, UnsupportedModelError
from levypassage.stable_core import StableParams


def test_bridge_alpha2_exact():
    r = I.bridge_integral_check(StableParams(2.0, 0.5))
    assert abs(r.lhs - 1 / (4 * math.sqrt(math.pi))) < 1e-10 and r.passed


def test_meander_convolution_alpha2():
    reps = I.meander_convolution_check(StableParams(2.0, 0.5), (0.5, 1.0, 2.0))
    assert all(r.rel_err < 1e-6 for r in reps)
    with pytest.raises(ValueError):
        I.meander_convolution_check(StableParams(1.0, 0.5), (1.0,))


def test_identity_report_build():
    r = I.IdentityReport.build("x", 1.02, 1.0, tol_rel=0.05)
    assert r.passed and r.status == "pass" and r.rel_err == pytest.approx(0.02)
    r = I.IdentityReport.build("x", 1.0, 0.0, tol_abs=0.5)
    assert not r.passed and r.rel_err is None
    cr = r.to_check_report("brownian")
    assert cr.statistic == 1.0 and cr.target == 0.0 and not cr.passed


def test_vigon_guards():
    with pytest.raises(UnsupportedModelError):
        I.vigon_check(REGISTRY["cauchy"])


def test_llt_cauchy():
    m = REGISTRY["cauchy"]
    reps = I.llt_check(m, 10.0, (-10.0, 0.0, 5.0), 1.0, n_paths=50_000, seed=2)
    assert reps and all(r.passed for r in reps)


def test_tail_index_brownian():
    from levypassage import passage_sim as ps
    m = REGISTRY["brownian"]
    ex = ps.harvest_excursions(m, 10.0, 1e-3, (), 4, n_excursions=100_000)
    reps = I.tail_index_check(m, ex, ex, np.geomspace(0.5, 5.0, 5))
    assert reps
    assert reps[0].lhs == pytest.approx(-0.5, abs=0.05)
