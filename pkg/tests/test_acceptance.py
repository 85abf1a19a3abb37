"""Acceptance criteria 1-12 at desk scale.

Every test records a one-line verdict through ``conftest.record``; the lines
are printed in the terminal summary.  All tests are marked ``slow``.
"""

import math
import subprocess
import sys

import numpy as np
import pytest

from conftest import record
from levypassage import asymptotics as A
from levypassage import identity_checks as I
from levypassage import passage_sim as ps
from levypassage.levy_models import REGISTRY
from levypassage.runner import run_check
from levypassage.stable_core import StableParams

pytestmark = pytest.mark.slow

BM, CAUCHY, SN, SP, TWO, BMCP = (REGISTRY[k] for k in ("brownian", "cauchy", "stable_neg",
                                                       "stable_pos", "stable_two_sided", "bm_cp"))
Z = 1.959963984540054


def _z(stat, target, ci):
    return abs(stat - target) / (ci / Z)


def _fmt_rows(reps):
    return ", ".join(f"{r.statistic:.4g}" for r in reps)


def test_criterion_01_brownian_oracle():
    b = ps.simulate_passages(BM, 1.0, 1.025, 1.0 / 200.0, 1_000_000, 101, keep_after=0.975)
    crossed = b.n_dropped + np.sum(b.t0 <= 1.0)  # crossings before keep_after are only counted
    p_hat = crossed / b.n_paths
    p_ci = ps.binomial_ci(crossed, b.n_paths)
    p_true = math.erfc(1.0 / math.sqrt(2.0))
    est = ps.local_probs_from_batch(b, 1.0, [0.05], centered=True)[0]
    d, dci = est.density()
    d_true = math.exp(-0.5) / math.sqrt(2.0 * math.pi)
    ok1 = _z(p_hat, p_true, p_ci) <= 3.0
    ok2 = _z(d, d_true, dci) <= 3.0
    record(1, ok1 and ok2, f"P(T<=1)={p_hat:.5f}+-{p_ci:.5f} vs {p_true:.5f}; "
                           f"density={d:.4f}+-{dci:.4f} vs {d_true:.4f}")
    assert ok1 and ok2


def test_criterion_02_cauchy_stable_identity(ctx):
    reps = run_check("T2.6", CAUCHY, None, ctx)
    rows = [r for r in reps if r.check_id == "T2.6"]
    flat = [r for r in reps if r.check_id.endswith(".flat")]
    ok = all(r.passed for r in reps) and len(rows) == 3 and len(flat) == 1
    record(2, ok, f"t*p/delta at t=10,20,40: {_fmt_rows(rows)} vs h(1)={rows[0].target:.5f}; "
                  f"max pairwise z={flat[0].statistic:.2f}")
    assert ok


@pytest.mark.parametrize("name", ["brownian", "cauchy", "stable_neg"])
def test_criterion_03_lifetime_ratio(ctx, name):
    m = REGISTRY[name]
    reps = run_check("T1.2", m, None, ctx)
    ok = len(reps) == 4 and all(abs(r.statistic - m.limit.rho_bar) <= 0.05 for r in reps)
    record(3, ok, f"{name}: {_fmt_rows(reps)} (target {m.limit.rho_bar:.4g})")
    assert ok


def test_criterion_04a_no_negative_jumps(ctx):
    reps = run_check("T1.5", SP, None, ctx)
    jump = [r for r in reps if r.target == 0.0]
    cont = [r for r in reps if r.target != 0.0]
    ok = all(r.statistic == 0.0 for r in jump) and all(r.passed for r in cont)
    record(4, ok, f"stable_pos jump part {_fmt_rows(jump)}, continuous part {_fmt_rows(cont)}")
    assert ok


def _continuous_fraction(m, dt, seed):
    b = ps.simulate_passages(m, 1.0, 1.0, dt, 200_000, seed)
    crossed = ~b.censored
    return float(np.mean(b.code[crossed] == ps._kernels.CONTINUOUS)), int(crossed.sum())


def test_criterion_04b_two_sided_continuous_fraction():
    f1, n1 = _continuous_fraction(TWO, 1e-3, 41)
    f2, n2 = _continuous_fraction(TWO, 5e-4, 42)
    se = math.sqrt(f1 * (1 - f1) / n1 + f2 * (1 - f2) / n2)
    decreasing = f2 < f1 - 2.0 * se
    small = f1 <= 0.01
    record(4, small and decreasing,
           f"two-sided alpha=1.5 continuous fraction {f1:.4f} (dt=1e-3), {f2:.4f} (dt=5e-4): "
           f"decreasing={decreasing}, <=1%={small}")
    assert decreasing
    assert small, "continuous fraction above 1% at dt=1e-3"


def test_criterion_05_negative_moment(ctx):
    r = run_check("eq22", SN, None, ctx)[0]
    ok = abs(r.statistic - 1.0 / 3.0) <= 0.1 / 3.0
    record(5, ok, f"k* E Z^-alpha = {r.statistic:.4f} (target 1/3)")
    assert ok


def test_criterion_06_bridge_identity(ctx):
    r2 = I.bridge_integral_check(StableParams(2.0, 0.5))
    exact = 1.0 / (4.0 * math.sqrt(math.pi))
    rc = I.bridge_integral_check(CAUCHY.limit, ctx.meander_table(CAUCHY.limit))
    ok = abs(r2.lhs - exact) < 1e-6 and rc.rel_err <= 0.05
    record(6, ok, f"alpha=2 |LHS-1/(4 sqrt pi)|={abs(r2.lhs - exact):.2e}; "
                  f"Cauchy rel err {rc.rel_err:.4f}")
    assert ok


def test_criterion_07_meander_convolution(ctx):
    r2 = I.meander_convolution_check(StableParams(2.0, 0.5), (0.5, 1.0, 2.0))
    rc = I.meander_convolution_check(CAUCHY.limit, (0.5, 1.0, 2.0),
                                     ctx.meander_table(CAUCHY.limit))
    ok = all(r.rel_err <= 0.02 for r in r2) and all(r.rel_err <= 0.05 for r in rc)
    record(7, ok, "alpha=2 rel err " + ", ".join(f"{r.rel_err:.1e}" for r in r2)
           + "; Cauchy rel err " + ", ".join(f"{r.rel_err:.3f}" for r in rc))
    assert ok


def test_criterion_08_vigon(ctx):
    reps = run_check("vigon", BMCP, None, ctx)
    rel = [abs(r.statistic / r.target - 1.0) for r in reps]
    ok = len(reps) == 3 and all(v <= 0.05 for v in rel)
    record(8, ok, "direct/convolution rel err " + ", ".join(f"{v:.3f}" for v in rel))
    assert ok


@pytest.mark.parametrize("name", ["stable_neg", "bm_cp"])
def test_criterion_09_small_deviation(ctx, name):
    m = REGISTRY[name]
    reps = run_check("T2.7", m, None, ctx)
    ratios = [r for r in reps if r.check_id == "T2.7"]
    if name == "stable_neg":
        assert ratios[0].target == pytest.approx(2.0 ** 0.5, rel=1e-6)
    ok = bool(ratios) and all(abs(r.statistic - r.target) <= 0.07 for r in ratios)
    record(9, ok, f"{name}: ratios {_fmt_rows(ratios)} vs {ratios[0].target:.4f}")
    assert ok


def test_criterion_10_creeping_shape():
    shape = A.creeping_normal_shape(BM, 1.0, 2.0, (1.0, 4.0), n_paths=500_000, seed=1001)
    target = math.exp(1.5) / 2.0
    slope = A.creeping_t_shape(BM, 0.5, tuple(np.geomspace(10.0, 100.0, 5)), n_paths=1_000_000,
                               seed=1002)[0]
    ok = (all(abs(r.statistic / target - 1.0) <= 0.10 for r in shape)
          and abs(slope.statistic) <= 0.05)
    record(10, ok, f"g*(1)/g*(2) estimates {_fmt_rows(shape)} vs {target:.4f}; "
                   f"log-log slope {slope.statistic:+.4f}+-{slope.ci:.4f}")
    assert ok


def test_criterion_11_estimator_agreement(ctx):
    reps = run_check("EA", SN, None, ctx)
    ok = len(reps) == 9 and all(r.passed for r in reps)
    record(11, ok, "z-scores " + ", ".join(f"{r.statistic:+.2f}" for r in reps))
    assert ok


def _cli(*args, cwd):
    return subprocess.run([sys.executable, "-m", "levypassage.cli", *args], cwd=cwd,
                          capture_output=True, text=True)


def test_criterion_12_determinism(tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[model]\nkind = SpectrallyNegativeStable\nalpha = 1.5\n\n"
                   "[sim]\ndt = 0.001\nhorizon = 10.0\nn_paths = 30000\nmaster_seed = 11\n"
                   "n_excursions = 20000\nprobe_times = 0.5, 1.0\n")
    outs = {}
    for tag, workers in (("a", 1), ("b", 1), ("c", 8)):
        r = _cli("simulate", "--config", str(cfg), "--out", str(tmp_path / tag), "--workers",
                 str(workers), cwd=tmp_path)
        assert r.returncode == 0, r.stderr
        outs[tag] = {f: (tmp_path / tag / f).read_bytes()
                     for f in ("passages.csv", "excursions.csv")}
    same_run = outs["a"] == outs["b"]
    same_workers = outs["a"] == outs["c"]
    # check CSVs: two runs of the same check
    for tag in ("x", "y"):
        r = _cli("check", "--id", "bridge", "--alpha", "2", "--id", "meander_conv", "--out",
                 str(tmp_path / tag), cwd=tmp_path)
        assert r.returncode == 0, r.stderr
    same_checks = ((tmp_path / "x" / "checks.csv").read_bytes()
                   == (tmp_path / "y" / "checks.csv").read_bytes())
    ok = same_run and same_workers and same_checks
    record(12, ok, f"byte-identical reruns={same_run}, 1 vs 8 workers={same_workers}, "
                   f"check CSV reruns={same_checks}")
    assert ok
