"""Constant-free test statistics for the local limit theorems.

Every statistic here is a ratio in which the local-time normalization of the
excursion measure and the scale of the renewal functions cancel.  Check
functions return lists of :class:`CheckReport`, one per grid point.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import passage_sim as ps
from .levy_models import (ModelKind, UnsupportedModelError, effective_tail_neg, levy_tail_neg,
                          norming_function, renewal_U)
from .stable_core import (InsufficientSamplesError, UnsupportedRegimeError, rayleigh_density,
                          stable_passage_density)

Z95 = ps.Z95
N_SIGMA = 3.0
CSV_HEADER = ["check_id", "model", "t", "delta", "x", "statistic", "target", "ci", "pass"]


class RegimeWarning(UserWarning):
    """x is not small compared with c(t) in a small-deviation check."""


@dataclass(frozen=True)
class Estimate:
    value: float
    ci: float  # 95% half-width
    count: int | None = None

    @property
    def sigma(self):
        return self.ci / Z95


@dataclass
class CheckReport:
    check_id: str
    model: str
    t: float
    delta: float
    x: float
    statistic: float
    target: float
    ci: float
    passed: bool
    tolerance: float = math.nan
    note: str = ""

    def row(self):
        return [self.check_id, self.model, _fmt(self.t), _fmt(self.delta), _fmt(self.x),
                _fmt(self.statistic), _fmt(self.target), _fmt(self.ci),
                "pass" if self.passed else "fail"]

    def as_dict(self):
        return asdict(self)


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{float(v):.10g}"


def write_reports(reports, path, append=False):
    """Write (or append) check rows; the header is written for new files only."""
    import os
    new = not append or not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(CSV_HEADER)
        for r in reports:
            w.writerow(r.row())


def read_reports(path):
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            num = {k: float(row[k]) if row[k] != "" else math.nan
                   for k in ("t", "delta", "x", "statistic", "target", "ci")}
            out.append(CheckReport(row["check_id"], row["model"], passed=row["pass"] == "pass", **num))
    return out


def verdict(stat, target, ci, tol=None):
    """Pass within ``tol`` if given, else within N_SIGMA standard errors."""
    if tol is not None and not math.isnan(tol):
        return abs(stat - target) <= tol
    return abs(stat - target) <= N_SIGMA * ci / Z95


def _report(cid, m, t, delta, x, est, target, tol=None, note=""):
    stat = est.value if isinstance(est, Estimate) else float(est)
    ci = est.ci if isinstance(est, Estimate) else math.nan
    tol_v = math.nan if tol is None else float(tol)
    return CheckReport(cid, m.name if hasattr(m, "name") else str(m), float(t), float(delta),
                       float(x), float(stat), float(target), float(ci),
                       bool(verdict(stat, target, ci, tol)), tol_v, note)


def ratio_estimate(a, b):
    """Ratio of two independent estimates with a delta-method CI."""
    r = a.value / b.value
    rel = math.hypot(a.ci / a.value, b.ci / b.value)
    return Estimate(r, abs(r) * rel)


def loglog_slope(ts, ests):
    """Weighted least-squares slope of log(value) against log(t), with 95% CI."""
    x = np.log(np.asarray(ts, dtype=float))
    y = np.log([e.value for e in ests])
    s = np.array([e.sigma / e.value for e in ests])
    w = 1.0 / s ** 2
    xm = np.sum(w * x) / w.sum()
    sxx = np.sum(w * (x - xm) ** 2)
    slope = float(np.sum(w * (x - xm) * (y - np.sum(w * y) / w.sum())) / sxx)
    return Estimate(slope, Z95 / math.sqrt(sxx))


def max_pairwise_z(ests):
    """Largest |a - b| / sqrt(sa^2 + sb^2) over pairs (flatness across t)."""
    z = 0.0
    for i, a in enumerate(ests):
        for b in ests[i + 1:]:
            z = max(z, abs(a.value - b.value) / math.hypot(a.sigma, b.sigma))
    return z


def _seeds(seed, n):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.spawn(n)


# ---------------------------------------------------------------------------
# Theorem 1: excursion lifetimes


def lifetime_ratio_from_counts(t, delta, n_alive, n_ended):
    """t * #{zeta in (t, t+delta]} / (delta * #{zeta > t}) with its binomial CI."""
    if n_alive <= 0:
        raise InsufficientSamplesError("no excursion alive at t", 0)
    p = n_ended / n_alive
    return Estimate(t * p / delta, Z95 * t / delta * math.sqrt(max(p * (1 - p), 0.0) / n_alive),
                    int(n_ended))


def _alive(samples, t, minimum=100):
    a = samples.survivors(t)
    if a < minimum:
        raise InsufficientSamplesError(f"only {a} excursions alive at t={t}", a)
    return a


def t1_lifetime_ratio(samples, t, delta):
    """Lifetime-tail ratio; target rho_bar."""
    a = _alive(samples, t)
    return lifetime_ratio_from_counts(t, delta, a, samples.ended_in(t, t + delta))


def t1_split_ratios(samples, t, delta):
    """(continuous, jump) versions of the lifetime ratio; targets q rho_bar and p rho_bar."""
    a = _alive(samples, t)
    cont = lifetime_ratio_from_counts(t, delta, a, samples.ended_in(t, t + delta, ps.CONTINUOUS))
    jump = lifetime_ratio_from_counts(t, delta, a, samples.ended_in(t, t + delta, ps.JUMP))
    return cont, jump


def continuous_share(samples, t_lo, t_hi):
    """Fraction of excursions ending continuously among those with zeta in (t_lo, t_hi]."""
    tot = samples.ended_in(t_lo, t_hi)
    if tot == 0:
        raise InsufficientSamplesError("no excursion ended in the window", 0)
    c = samples.ended_in(t_lo, t_hi, ps.CONTINUOUS)
    p = c / tot
    return Estimate(p, ps.binomial_ci(c, tot), c)


def creep_probability(m, x, n_paths, seed, horizon, dt, workers=1):
    """P_x(continuous crossing | T0 <= horizon)."""
    b = ps.simulate_passages(m, x, horizon, dt, n_paths, seed, workers=workers)
    crossed = ~b.censored
    n = int(crossed.sum())
    if n == 0:
        raise InsufficientSamplesError("no crossing before the horizon", 0)
    c = int(np.sum(b.code[crossed] == ps._kernels.CONTINUOUS))
    return Estimate(c / n, ps.binomial_ci(c, n), c)


def t1_checks(m, samples, t_grid, deltas, tol=0.05, check_ids=("T1.2",)):
    """Lifetime and split ratios at every (t, delta)."""
    rb = m.limit.rho_bar
    q = m.q_known
    out = []
    for t in t_grid:
        for d in deltas:
            if "T1.2" in check_ids:
                out.append(_report("T1.2", m, t, d, math.nan, t1_lifetime_ratio(samples, t, d),
                                   rb, tol))
            if not {"T1.4", "T1.3x", "T1.5"} & set(check_ids):
                continue
            cont, jump = t1_split_ratios(samples, t, d)
            if "T1.4" in check_ids:
                if not m.has_negative_jumps:
                    raise UnsupportedModelError("T1.4 needs negative jumps")
                out.append(_report("T1.4", m, t, d, math.nan, jump, (1.0 - q) * rb, tol))
            if "T1.3x" in check_ids:
                if not m.creeps_downward or abs(m.limit.alpha * rb - 1.0) > 1e-12:
                    raise UnsupportedRegimeError("T1.3x needs d* > 0 and alpha*rho_bar = 1")
                out.append(_report("T1.3x", m, t, d, math.nan, cont, q * rb, tol))
            if "T1.5" in check_ids:
                if m.has_negative_jumps:
                    raise UnsupportedModelError("T1.5 needs a model without negative jumps")
                out.append(_report("T1.5", m, t, d, math.nan, jump, 0.0, 0.0,
                                   note="jump part identically 0"))
                out.append(_report("T1.5", m, t, d, math.nan, cont, rb, tol))
    return out


def lifetime_tail_slope(samples, t_grid):
    """Slope of log #{zeta > t} against log t (target -rho_bar)."""
    ests = []
    for t in t_grid:
        a = _alive(samples, t)
        ests.append(Estimate(float(a), Z95 * math.sqrt(a), a))
    # counts at nested t are correlated; the CI treats them as independent
    return loglog_slope(t_grid, ests)


def excursion_creeping_shape(m, samples, t_grid, delta_rel=0.1, tol=0.05):
    """t c(t) #{zeta in (t, t+delta], continuous} / delta is flat in t (slope 0)."""
    if not m.creeps_downward:
        raise UnsupportedModelError(f"{m.name} does not creep downwards")
    ests = []
    for t in t_grid:
        d = delta_rel * t
        c = samples.ended_in(t, t + d, ps.CONTINUOUS)
        if c == 0:
            raise InsufficientSamplesError(f"no continuous endings near t={t}", 0)
        k = t * float(norming_function(m, t)) / d
        ests.append(Estimate(k * c, Z95 * k * math.sqrt(c), c))
    s = loglog_slope(t_grid, ests)
    return [_report("TR", m, t_grid[-1], delta_rel, math.nan, s, 0.0, tol,
                    note="log-log slope over t grid")]


# ---------------------------------------------------------------------------
# Theorem 2


def _part_fraction(m, part):
    q = m.q_known
    return {"total": 1.0, "jump": 1.0 - q, "continuous": q}[part]


def _local(m, x, t, delta, n_paths, seed, dt, kappa, workers, centered=True):
    return ps.estimate_local_passage_prob(m, x, t, delta, n_paths, seed, dt=dt, centered=centered,
                                          kappa=kappa, workers=workers)


def _density_estimate(est, part="total"):
    if part == "total":
        d, ci = est.density()
        return Estimate(d, ci, est.count)
    d, ci = est.part(part)
    return Estimate(d, ci, est.count_continuous if part == ps.CONTINUOUS else est.count_jump)


def t2_normal_deviation_check(m, x_over_ct, t_grid, delta=None, *, delta_rel=0.05, n_paths=10**6,
                              seed=0, table=None, dt_steps=200, kappa=None, workers=1,
                              part="total", check_id="T2.6"):
    """t p_hat / delta at x = x_over_ct * c(t) against p h_tilde_{x_over_ct}(1).

    Bins are centred on t; ``delta`` (absolute) overrides ``delta_rel * t``.
    """
    target = _part_fraction(m, part) * stable_passage_density(m.limit, x_over_ct, table)
    out = []
    for t, ss in zip(t_grid, _seeds(seed, len(t_grid))):
        d = delta if delta is not None else delta_rel * t
        x = x_over_ct * float(norming_function(m, t))
        est = _local(m, x, t, d, n_paths, ss, t / dt_steps, kappa, workers)
        e = _density_estimate(est, part)
        out.append(_report(check_id, m, t, d, x, Estimate(t * e.value, t * e.ci, e.count), target))
    return out


def flatness_report(reports, check_id=None):
    """Mutual agreement of statistics across t (largest pairwise z-score <= 3)."""
    ests = [Estimate(r.statistic, r.ci) for r in reports]
    z = max_pairwise_z(ests)
    r0 = reports[-1]
    return CheckReport(check_id or r0.check_id + ".flat", r0.model, r0.t, r0.delta, r0.x, z, 0.0,
                       N_SIGMA, z <= N_SIGMA, N_SIGMA, "max pairwise z across t")


def _regime_guard(m, xs, t_min):
    r = max(xs) / float(norming_function(m, t_min))
    if r > 0.1:
        warnings.warn(f"x/c(t) = {r:.3g} > 0.1: not in the small-deviation regime", RegimeWarning,
                      stacklevel=3)


def _batch_bins(m, x, t_grid, delta_rel, n_paths, seed, dt, kappa, workers):
    lo = t_grid[0] * (1.0 - 0.5 * delta_rel)
    hi = t_grid[-1] * (1.0 + 0.5 * delta_rel)
    b = ps.simulate_passages(m, x, hi, dt, n_paths, seed, keep_after=lo, kappa=kappa,
                             workers=workers)
    return [ps.local_probs_from_batch(b, t, [delta_rel * t], centered=True)[0] for t in t_grid]


def u_star_ratio(m, x1, x2, ladder=None):
    return float(renewal_U(m, x1, "down", ladder) / renewal_U(m, x2, "down", ladder))


def t2_small_deviation_check(m, x1, x2, t_grid, *, delta_rel=0.1, n_paths=10**6, seed=0,
                             ladder=None, dt=None, kappa=None, workers=1, tol=0.07,
                             part="total", check_id="T2.7"):
    """p_hat(x1)/p_hat(x2) against U*(x1)/U*(x2) at each t, plus the t^-rho_bar shape.

    One batch per starting point serves every t (bins centred on t with width
    ``delta_rel * t``).
    """
    t_grid = sorted(t_grid)
    _regime_guard(m, (x1, x2), t_grid[0])
    dt = t_grid[0] / 400.0 if dt is None else dt
    s1, s2 = _seeds(seed, 2)
    b1 = _batch_bins(m, x1, t_grid, delta_rel, n_paths, s1, dt, kappa, workers)
    b2 = _batch_bins(m, x2, t_grid, delta_rel, n_paths, s2, dt, kappa, workers)
    target = u_star_ratio(m, x1, x2, ladder)
    out = []
    for t, e1, e2 in zip(t_grid, b1, b2):
        r = ratio_estimate(_density_estimate(e1, part), _density_estimate(e2, part))
        out.append(_report(check_id, m, t, e1.delta, x1 / x2, r, target, tol,
                           note=f"x1={x1:g} x2={x2:g}"))
    shape = [_density_estimate(e, part) for e in b1]
    shape = [Estimate(t * e.value, t * e.ci) for t, e in zip(t_grid, shape)]
    out.append(_report(check_id + ".shape", m, t_grid[-1], delta_rel, x1, loglog_slope(t_grid, shape),
                       -m.limit.rho_bar, note="slope of log(t p/delta)"))
    return out


# ---------------------------------------------------------------------------
# Proposition Z and the negative moment


def propZ_phi_check(m, samples, t, y_grid, table, n_sigma=N_SIGMA):
    """theta_hat(t, y)/theta_hat(t, 0) against phi(y/c(t)).

    The excursions are weighted equally, so the ratio is free of the
    excursion-measure normalization.  The CI comes from the paired delta method.
    """
    p = m.limit
    if p.alpha * p.rho_bar >= 1.0:
        raise UnsupportedRegimeError("Proposition Z needs alpha*rho_bar < 1")
    if not m.has_negative_jumps:
        raise UnsupportedModelError(f"{m.name} has no negative jumps")
    pos = samples.probe_column(t)
    v = pos[~np.isnan(pos)]
    if v.size < 100:
        raise InsufficientSamplesError(f"only {v.size} excursions alive at t={t}", v.size)
    c = float(norming_function(m, t))
    base = levy_tail_neg(m, v)
    out = []
    for y in y_grid:
        num = levy_tail_neg(m, y + v) if y > 0 else base
        a, b = num.mean(), base.mean()
        r = a / b
        cov = np.cov(num, base)
        var = (cov[0, 0] / a ** 2 + cov[1, 1] / b ** 2 - 2 * cov[0, 1] / (a * b)) * r * r / v.size
        est = Estimate(r, Z95 * math.sqrt(max(var, 0.0)))
        out.append(_report("PZ", m, t, math.nan, y, est, float(table.phi(y / c)),
                           note="theta(t,y)/theta(t,0) vs phi(y/c(t))"))
    return out


def eq22_check(m, table, tol_rel=0.10):
    """k* E[Z_1^-alpha] from the meander table against rho_bar."""
    p = m.limit
    if p.alpha * p.rho_bar >= 1.0:
        raise UnsupportedRegimeError("E Z_1^-alpha is infinite when alpha*rho_bar = 1")
    val = m.k_star * table.negative_moment()
    return _report("PZ.eq22", m, 1.0, math.nan, 0.0, val, p.rho_bar, tol_rel * p.rho_bar,
                   note="k* E Z^-alpha")


# ---------------------------------------------------------------------------
# creeping (Theorems S, R, H) and jump densities (Theorems E, G, I)


def _require_creeping(m):
    if not m.creeps_downward:
        raise UnsupportedModelError(f"{m.name} does not creep downwards")


def creeping_small_x_ratio(m, x1, x2, t_grid, *, delta_rel=0.1, n_paths=10**6, seed=0, ladder=None,
                           dt=None, workers=1, tol=None):
    """P^c_x1 / P^c_x2 over (t, t+delta] against U*(x1)/U*(x2)."""
    _require_creeping(m)
    return t2_small_deviation_check(m, x1, x2, t_grid, delta_rel=delta_rel, n_paths=n_paths,
                                    seed=seed, ladder=ladder, dt=dt, workers=workers, tol=tol,
                                    part="continuous", check_id="TS.7")


def creeping_t_shape(m, x, t_grid, *, delta_rel=0.1, n_paths=10**6, seed=0, dt=None, workers=1,
                     tol=0.05):
    """t c(t) P^c_x(T in bin)/delta has log-log slope 0 in t."""
    _require_creeping(m)
    t_grid = sorted(t_grid)
    dt = t_grid[0] * delta_rel / 20.0 if dt is None else dt
    bins = _batch_bins(m, x, t_grid, delta_rel, n_paths, seed, dt, None, workers)
    ests = []
    for t, e in zip(t_grid, bins):
        d = _density_estimate(e, "continuous")
        k = t * float(norming_function(m, t))
        ests.append(Estimate(k * d.value, k * d.ci, d.count))
    return [_report("TS.7.shape", m, t_grid[-1], delta_rel, x, loglog_slope(t_grid, ests), 0.0, tol,
                    note="slope of log(t c(t) P^c/delta)")]


def meander_ratio_target(m, a, b, which="g_star", table=None):
    if m.limit.alpha == 2.0:
        return float(rayleigh_density(a) / rayleigh_density(b))
    return float(table.density(a, which) / table.density(b, which))


def creeping_normal_shape(m, a, b, t_grid, *, delta_rel=0.05, n_paths=10**6, seed=0, table=None,
                          dt_steps=200, workers=1, tol_rel=0.10):
    """P^c at x = a c(t) over P^c at x = b c(t) against g*(a)/g*(b)."""
    _require_creeping(m)
    target = meander_ratio_target(m, a, b, "g_star", table)
    out = []
    for t, ss in zip(t_grid, _seeds(seed, len(t_grid))):
        s1, s2 = _seeds(ss, 2)
        c = float(norming_function(m, t))
        d = delta_rel * t
        e1 = _local(m, a * c, t, d, n_paths, s1, t / dt_steps, None, workers)
        e2 = _local(m, b * c, t, d, n_paths, s2, t / dt_steps, None, workers)
        r = ratio_estimate(_density_estimate(e1, "continuous"), _density_estimate(e2, "continuous"))
        out.append(_report("TS.8", m, t, d, a / b, r, target, tol_rel * target,
                           note=f"a={a:g} b={b:g}"))
    return out


def creeping_local_checks(m, x_pair, t_grid_small, ab_pair, t_grid_normal, *, n_paths=10**6,
                          seed=0, ladder=None, table=None, samples=None, workers=1):
    """Theorems S, R and H for a creeping model (all three constant-free forms)."""
    _require_creeping(m)
    s = _seeds(seed, 3)
    out = creeping_small_x_ratio(m, *x_pair, t_grid_small, n_paths=n_paths, seed=s[0],
                                 ladder=ladder, workers=workers)
    out += creeping_t_shape(m, x_pair[1], t_grid_small, n_paths=n_paths, seed=s[1], workers=workers)
    out += creeping_normal_shape(m, *ab_pair, t_grid_normal, n_paths=n_paths, seed=s[2],
                                 table=table, workers=workers)
    if samples is not None:
        out += excursion_creeping_shape(m, samples, t_grid_small)
    return out


def _compensation(m, x, t, n_paths, seed, dt_steps, kappa, workers):
    h, ci = ps.compensation_density_estimator(m, x, t, n_paths, seed, dt=t / dt_steps, kappa=kappa,
                                              workers=workers)
    return Estimate(h, ci)


def jump_density_small_x(m, x1, x2, t_grid, *, n_paths=10**5, seed=0, ladder=None, dt_steps=400,
                         kappa=None, workers=1, tol=0.07, check_id=None):
    """Theorems E / I: h_x1(t)/h_x2(t) -> U*(x1)/U*(x2) (compensation estimator)."""
    if not m.has_negative_jumps:
        raise UnsupportedModelError(f"{m.name} has no negative jumps")
    p = m.limit
    ok_e = p.alpha * p.rho_bar < 1.0
    cid = check_id or ("TE" if ok_e else "TI")
    _regime_guard(m, (x1, x2), min(t_grid))
    target = u_star_ratio(m, x1, x2, ladder)
    out = []
    for t, ss in zip(t_grid, _seeds(seed, len(t_grid))):
        s1, s2 = _seeds(ss, 2)
        h1 = _compensation(m, x1, t, n_paths, s1, dt_steps, kappa, workers)
        h2 = _compensation(m, x2, t, n_paths, s2, dt_steps, kappa, workers)
        out.append(_report(cid, m, t, math.nan, x1 / x2, ratio_estimate(h1, h2), target, tol,
                           note=f"x1={x1:g} x2={x2:g}"))
    return out


def jump_share_statistic(m, x, t_grid, *, n_paths=10**5, seed=0, dt_steps=400, kappa=None,
                         workers=1):
    """t h_x(t) / (rho_bar P_x(T0 > t)) -> p for fixed x (Theorems E and I)."""
    if not m.has_negative_jumps:
        raise UnsupportedModelError(f"{m.name} has no negative jumps")
    p_target = 1.0 - m.q_known
    out = []
    for t, ss in zip(t_grid, _seeds(seed, len(t_grid))):
        dt = t / dt_steps
        b = ps.simulate_passages(m, x, t, dt, n_paths, ss, probe_times=(t,), kappa=kappa,
                                 workers=workers)
        par = m.step_params(dt, kappa)
        pos = b.probes[:, 0]
        alive = ~np.isnan(pos)
        vals = np.zeros(b.n_paths)
        vals[:pos.size][alive] = effective_tail_neg(m, pos[alive], par)
        surv = alive.sum() / b.n_paths
        # ratio of two means over the same paths: paired delta method
        ind = np.zeros(b.n_paths)
        ind[:pos.size][alive] = 1.0
        k = t / m.limit.rho_bar
        a_m, b_m = vals.mean(), ind.mean()
        r = k * a_m / b_m
        cov = np.cov(vals, ind)
        var = (cov[0, 0] / a_m ** 2 + cov[1, 1] / b_m ** 2 - 2 * cov[0, 1] / (a_m * b_m)) * r * r
        out.append(_report("TI.p" if m.limit.alpha * m.limit.rho_bar >= 1 else "TE.p", m, t,
                           math.nan, x, Estimate(r, Z95 * math.sqrt(var / b.n_paths)), p_target,
                           note=f"survival={surv:.4g}"))
    return out


def jump_density_normal(m, x_over_ct, t_grid, *, n_paths=10**5, seed=0, table=None, dt_steps=200,
                        kappa=None, workers=1):
    """Theorem G: t h_x(t) at x = x_t c(t) against p h_tilde_{x_t}(1)."""
    p = m.limit
    if p.alpha * p.rho_bar >= 1.0:
        raise UnsupportedRegimeError("Theorem G needs alpha*rho_bar < 1")
    target = (1.0 - m.q_known) * stable_passage_density(p, x_over_ct, table)
    out = []
    for t, ss in zip(t_grid, _seeds(seed, len(t_grid))):
        x = x_over_ct * float(norming_function(m, t))
        h = _compensation(m, x, t, n_paths, ss, dt_steps, kappa, workers)
        out.append(_report("TG", m, t, math.nan, x, Estimate(t * h.value, t * h.ci), target))
    return out


def jump_density_shape(m, a, b, t_grid, *, n_paths=10**5, seed=0, table=None, dt_steps=200,
                       kappa=None, workers=1, tol_rel=0.10):
    """Theorem H: h at a c(t) over h at b c(t) against g*(a)/g*(b) (alpha rho_bar = 1)."""
    p = m.limit
    if abs(p.alpha * p.rho_bar - 1.0) > 1e-12:
        raise UnsupportedRegimeError("Theorem H needs alpha*rho_bar = 1")
    if not m.has_negative_jumps:
        raise UnsupportedModelError(f"{m.name} has no negative jumps")
    target = meander_ratio_target(m, a, b, "g_star", table)
    out = []
    for t, ss in zip(t_grid, _seeds(seed, len(t_grid))):
        s1, s2 = _seeds(ss, 2)
        c = float(norming_function(m, t))
        h1 = _compensation(m, a * c, t, n_paths, s1, dt_steps, kappa, workers)
        h2 = _compensation(m, b * c, t, n_paths, s2, dt_steps, kappa, workers)
        out.append(_report("TH", m, t, math.nan, a / b, ratio_estimate(h1, h2), target,
                           tol_rel * target, note=f"a={a:g} b={b:g}"))
    return out


def estimator_agreement(m, x_grid=(0.5, 1.0, 2.0), t_grid=(1.0, 2.0, 4.0), *, delta_rel=0.1,
                        n_paths=400_000, seed=0, dt=None, kappa=None, workers=1,
                        check_id="EA"):
    """Binned jump-passage density against the compensation estimator h_x(t).

    Per x, one batch gives centred bins at every t and an independent batch
    gives X at the probe times; the statistic is the z-score of the difference.
    """
    if not m.has_negative_jumps:
        raise UnsupportedModelError(f"{m.name} has no negative jumps")
    t_grid = sorted(t_grid)
    dt = t_grid[0] / 200.0 if dt is None else dt
    par = m.step_params(dt, kappa)
    out = []
    for x, ss in zip(x_grid, _seeds(seed, len(x_grid))):
        s1, s2 = _seeds(ss, 2)
        bins = _batch_bins(m, x, t_grid, delta_rel, n_paths, s1, dt, kappa, workers)
        c = ps.simulate_passages(m, x, t_grid[-1], dt, n_paths, s2, probe_times=tuple(t_grid),
                                 kappa=kappa, workers=workers)
        for j, (t, e) in enumerate(zip(t_grid, bins)):
            pos = c.probes[:, j]
            v = np.where(np.isnan(pos), 0.0,
                         effective_tail_neg(m, np.nan_to_num(pos, nan=1.0), par))
            v = np.concatenate([v, np.zeros(c.n_dropped)])
            h = Estimate(float(v.mean()), float(Z95 * v.std(ddof=1) / math.sqrt(v.size)))
            d = _density_estimate(e, ps.JUMP)
            z = (d.value - h.value) / math.hypot(d.sigma, h.sigma)
            out.append(CheckReport(check_id, m.name, t, delta_rel * t, x, z, 0.0, N_SIGMA,
                                   abs(z) <= N_SIGMA, N_SIGMA,
                                   f"binned={d.value:.6g}+-{d.ci:.2g} "
                                   f"compensation={h.value:.6g}+-{h.ci:.2g}"))
    return out
