"""Numerical verification of exact fluctuation identities on small instances.

Deterministic checks (bridge integral, meander convolution) run by quadrature
on closed forms or on a :class:`MeanderTable`; the others pair a Monte Carlo
estimate with an independent evaluation of the other side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import _kernels
from .asymptotics import CheckReport, Estimate, Z95, loglog_slope, max_pairwise_z
from .levy_models import ModelKind, UnsupportedModelError, levy_tail_neg, norming_function
from .parallel import run_chunks
from .stable_core import (QUAD_EPSABS, QUAD_EPSREL, FastStable, InsufficientSamplesError, _quiet_quad,
                          rayleigh_density, stable_density, stable_density_at_zero)


@dataclass
class IdentityReport:
    id: str
    lhs: float
    rhs: float
    abs_err: float
    rel_err: float | None
    x: float = math.nan
    ci: float = math.nan
    passed: bool = False
    tolerance: float = math.nan
    status: str = ""
    notes: str = ""

    @classmethod
    def build(cls, id, lhs, rhs, *, x=math.nan, ci=math.nan, tol_rel=None, tol_abs=None,
              n_sigma=None, notes=""):
        err = abs(lhs - rhs)
        rel = float(err / abs(rhs)) if rhs != 0 else None
        ok = True
        tol = math.nan
        if tol_abs is not None:
            tol = tol_abs
            ok &= err <= tol_abs
        if tol_rel is not None:
            tol = tol_rel * abs(rhs)
            ok &= rel is not None and rel <= tol_rel
        if n_sigma is not None:
            tol = n_sigma * ci / Z95
            ok &= err <= tol
        return cls(id, float(lhs), float(rhs), float(err), rel, float(x), float(ci), bool(ok),
                   float(tol), "pass" if ok else "fail", notes)

    def to_check_report(self, model, t=math.nan, delta=math.nan):
        return CheckReport(self.id, model, t, delta, self.x, self.lhs, self.rhs, self.ci,
                           self.passed, self.tolerance, self.notes)


# ---------------------------------------------------------------------------
# Vigon's identity


def _renewal_points(heights, ymax):
    """Renewal points (with the atom at 0) of consecutive sums of ``heights``,
    cut into independent sequences that stop past ``ymax``."""
    seqs = []
    cur = [0.0]
    level = 0.0
    for h in heights:
        level += h
        if level > ymax:
            seqs.append(np.array(cur))
            cur = [0.0]
            level = 0.0
            continue
        cur.append(level)
    return seqs


def vigon_check(m, x_grid=(0.5, 1.0, 2.0), n_epochs=100_000, dt=3e-3, seed=0, ymax=25.0,
                tol_rel=0.05, cap=1_000_000):
    """Ladder-height tail mu*(x) two ways on the dt-skeleton of ``m``.

    Direct: P(H* > x)/dt from descending ladder heights.  Convolution:
    sum over ascending renewal points y_k (including y_0 = 0) of Pi*(x + y_k),
    averaged over renewal sequences.  For a random walk the identity
    P(H* > x) = int U_w(dy) F(-inf, -x-y) is exact, and F(-inf, -z)/dt -> Pi*(z).
    """
    if m.kind is not ModelKind.BROWNIAN_PLUS_NEG_CP:
        raise UnsupportedModelError("vigon_check runs on BrownianPlusNegCP")
    par = m.step_params(dt)
    rng = np.random.default_rng(seed)
    hd = _kernels.ladder_heights(int(n_epochs), dt, par, rng, int(cap), True)
    hu = _kernels.ladder_heights(int(n_epochs), dt, par, rng, int(cap), False)
    hd = hd[~np.isnan(hd)]
    hu = hu[~np.isnan(hu)]
    seqs = _renewal_points(hu, ymax)
    if len(seqs) < 20 or hd.size < 1000:
        raise InsufficientSamplesError(
            f"ladder sample too small ({hd.size} heights, {len(seqs)} renewal sequences)", len(seqs))
    out = []
    for x in x_grid:
        k = int(np.sum(hd > x))
        direct = k / hd.size / dt
        d_ci = Z95 * math.sqrt(max(k, 1) * (1 - k / hd.size)) / hd.size / dt
        per_seq = np.array([levy_tail_neg(m, x + s).sum() for s in seqs])
        conv = per_seq.mean()
        c_ci = Z95 * per_seq.std(ddof=1) / math.sqrt(per_seq.size)
        out.append(IdentityReport.build("vigon", direct, conv, x=x, ci=math.hypot(d_ci, c_ci),
                                        tol_rel=tol_rel,
                                        notes=f"dt={dt:g} heights={hd.size} sequences={len(seqs)}"))
    return out


# ---------------------------------------------------------------------------
# stable bridge identity


def bridge_integral_check(p, table=None, n_grid=20_001, max_ci_rel=0.20, tol_rel=0.05):
    """(Gamma(rho)Gamma(rho_bar))^-1 int g g* against 2^-(1+eta) f(0).

    With ``table=None`` (alpha = 2 only) g = g* is the Rayleigh density and the
    left side is pure quadrature.  Otherwise the table densities are used and
    the status is ``inconclusive`` when the propagated CI exceeds
    ``max_ci_rel`` of the value.
    """
    norm = special.gamma(p.rho) * special.gamma(p.rho_bar)
    rhs = 2.0 ** (-(1.0 + p.eta)) * stable_density_at_zero(p)
    if table is None:
        if p.alpha != 2.0:
            raise ValueError("a MeanderTable is required unless alpha = 2")
        val, _ = integrate.quad(lambda z: float(rayleigh_density(z)) ** 2, 0.0, np.inf,
                                epsabs=1e-13, epsrel=1e-12)
        return IdentityReport.build("bridge", val / norm, rhs, ci=0.0, tol_abs=1e-6,
                                    notes="closed-form Rayleigh quadrature")
    w = np.linspace(0.0, table.edges[-1], n_grid)
    g = table.density(w, "g")
    gs = table.density(w, "g_star")
    lhs = float(np.trapezoid(g * gs, w)) / norm
    # bin-level propagation of the histogram CIs
    sg, ss = table.ci_g / Z95, table.ci_g_star / Z95
    wd = table.widths
    var = np.sum(wd ** 2 * (table.g_star_values ** 2 * sg ** 2 + table.g_values ** 2 * ss ** 2))
    ci = Z95 * math.sqrt(var) / norm
    rep = IdentityReport.build("bridge", lhs, rhs, ci=ci, tol_rel=tol_rel,
                               notes=f"table n_paths={table.n_paths}")
    if ci > max_ci_rel * abs(lhs):
        rep.status = "inconclusive"
        rep.passed = False
    return rep


# ---------------------------------------------------------------------------
# meander convolution identity


_GL = np.polynomial.legendre.leggauss(64)


def _gl(lo, hi):
    x, w = _GL
    h = 0.5 * (hi - lo)
    return lo + h * (x + 1.0), h * w


def meander_convolution_rhs(p, x, g, f, w_max=40.0):
    """int_0^1 ds int_0^x s^(-eta-rho_bar) g(s^-eta y) f_{1-s}(x - y) dy.

    ``g`` and ``f`` are vectorized callables; g vanishes beyond ``w_max``.  On s < 1/2 the inner variable is
    w = s^-eta y (and s = u^(1/(1-rho_bar)) removes the s^-rho_bar factor); on
    s > 1/2 it is v = (x - y)(1-s)^-eta, which resolves f_{1-s} as s -> 1.
    """
    eta, rb = p.eta, p.rho_bar
    e = 1.0 / (1.0 - rb)

    def left(u):
        s = u ** e
        top = min(x * s ** (-eta), w_max)
        w, wt = _gl(0.0, top)
        # piecewise rule on [0, top] for long ranges
        if top > 8.0:
            knots = np.concatenate([np.linspace(0.0, 8.0, 9), np.geomspace(8.0, top, 12)[1:]])
            parts = [_gl(a, b) for a, b in zip(knots[:-1], knots[1:])]
            w = np.concatenate([q[0] for q in parts])
            wt = np.concatenate([q[1] for q in parts])
        fs = (1.0 - s) ** (-eta) * f((x - s ** eta * w) * (1.0 - s) ** (-eta))
        return e * float(np.dot(wt, g(w) * fs))

    def right(s):
        if s >= 1.0:
            return 0.0
        r = (1.0 - s) ** eta
        top = x / r
        knots = np.unique(np.concatenate([np.linspace(0.0, min(top, 8.0), 9),
                                          np.geomspace(min(top, 8.0), top, 12) if top > 8.0 else []]))
        parts = [_gl(a, b) for a, b in zip(knots[:-1], knots[1:])]
        v = np.concatenate([q[0] for q in parts])
        wt = np.concatenate([q[1] for q in parts])
        y = x - r * v
        return float(np.dot(wt, s ** (-eta - rb) * g(s ** (-eta) * y) * f(v)))

    u_half = 0.5 ** (1.0 - rb)
    a, _ = _quiet_quad(left, 0.0, u_half, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
    b, _ = _quiet_quad(right, 0.5, 1.0, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
    return a + b


def meander_convolution_check(p, x_grid=(0.5, 1.0, 2.0), table=None, tol_rel=None):
    """g(x) against the convolution right side at each x.

    alpha = 2 without a table uses the Rayleigh density and the normal density
    (tolerance 2%); with a table both g and the comparison value come from it
    (tolerance 5%).
    """
    if table is None:
        if p.alpha != 2.0:
            raise ValueError("a MeanderTable is required unless alpha = 2")
        g = rayleigh_density
        tol_rel = 0.02 if tol_rel is None else tol_rel
        src = "Rayleigh"
    else:
        g = lambda w: table.density(w, "g")  # noqa: E731
        tol_rel = 0.05 if tol_rel is None else tol_rel
        src = "table"
    w_max = 40.0 if table is None else float(table.edges[-1])
    fs = FastStable(p)
    f = (lambda v: stable_density(p, v)) if p.alpha in (1.0, 2.0) else fs.pdf
    out = []
    for x in x_grid:
        rhs = meander_convolution_rhs(p, x, g, f, w_max)
        lhs = float(g(np.array(x)))
        out.append(IdentityReport.build("meander_conv", lhs, rhs, x=x, tol_rel=tol_rel,
                                        notes=f"g from {src}"))
    return out


# ---------------------------------------------------------------------------
# excursion decomposition and local limit theorem


def semigroup_decomposition_check(m, samples, t, bins, s_min_steps=20, tol_rel=0.10):
    """t n(eps_t in bin) against int_0^t ds int n_s(dz) P_z(X_{t-s} in bin).

    ``samples`` must carry probe times s_1 < ... < s_K = t.  The s-integral is
    the trapezoid rule in s over the probes, with [0, s_1] closed by the
    power law n(zeta > s) ~ s^-rho_bar.  Both sides are sums of per-excursion
    contributions over the same excursions, so the ratio is normalization-free
    and its CI comes from the paired delta method.
    """
    if not m.kind.is_stable:
        raise UnsupportedModelError("the decomposition check needs an exact stable density")
    probes = np.asarray(samples.probe_times)
    if abs(probes[-1] - t) > 1e-9 * t:
        raise ValueError("the last probe time must equal t")
    s_all = probes[probes >= s_min_steps * samples.dt - 1e-12]
    if s_all.size < 3:
        raise ValueError("need at least three probe times beyond the start-up layer")
    s = s_all[:-1]
    p = m.limit
    fs = FastStable(p)
    pos_t = samples.probe_column(t)
    alive_t = ~np.isnan(pos_t)
    if alive_t.sum() < 100:
        raise InsufficientSamplesError(f"only {int(alive_t.sum())} excursions alive at t", 0)
    cols = [samples.probe_column(v) for v in s]
    knots = np.append(s, t)
    out = []
    n = samples.n
    for lo, hi in bins:
        in_bin = alive_t & (pos_t > lo) & (pos_t <= hi)
        lhs_i = np.where(in_bin, t, 0.0)
        # integrand at each knot; at s = t, P_z(X_0 in bin) is the indicator
        vals = []
        for sv, z in zip(s, cols):
            ok = ~np.isnan(z) & (z <= hi)
            zz = z[ok]
            c = float(norming_function(m, t - sv))
            contrib = np.zeros(n)
            contrib[ok] = fs.cdf((hi - zz) / c) - fs.cdf((np.maximum(lo, zz) - zz) / c)
            vals.append(contrib)
        vals.append(in_bin.astype(float))
        rhs_i = np.zeros(n)
        for j in range(len(knots) - 1):
            rhs_i += 0.5 * (knots[j + 1] - knots[j]) * (vals[j] + vals[j + 1])
        first = vals[0]
        # [0, s_1]: integrand ~ s^-rho_bar
        rhs_i += first * s[0] / (1.0 - p.rho_bar)
        a, b = lhs_i.mean(), rhs_i.mean()
        r = a / b
        cov = np.cov(lhs_i, rhs_i)
        var = (cov[0, 0] / a ** 2 + cov[1, 1] / b ** 2 - 2 * cov[0, 1] / (a * b)) * r * r / n
        out.append(IdentityReport.build("DA", r, 1.0, x=0.5 * (lo + hi),
                                        ci=Z95 * math.sqrt(max(var, 0.0)), tol_rel=tol_rel,
                                        notes=f"bin=({lo:g},{hi:g}]"))
    return out


def _endpoints(m, t, n_steps, n_paths, seed, kappa=None):
    dt = t / n_steps
    par = m.step_params(dt, kappa)

    def work(size, rng):
        inc = _kernels.increments(size * n_steps, dt, par, rng)
        return inc.reshape(size, n_steps).sum(axis=1)

    return np.concatenate(run_chunks(work, n_paths, seed, chunk=20_000))


def llt_check(m, t, x_grid, delta, n_paths=200_000, seed=0, n_steps=64, kappa=None,
              n_sigma=3.0):
    """c(t) P(X_t in (x, x+delta]) / delta against the bin average of f(./c(t)),
    plus the uniform bound sup c(t) P / delta <= 1.1 max f."""
    if not m.kind.is_stable and m.kind is not ModelKind.BROWNIAN_MOTION:
        raise UnsupportedModelError("llt_check needs an exactly stable model")
    p = m.limit
    x_t = _endpoints(m, t, n_steps, n_paths, seed, kappa)
    c = float(norming_function(m, t))
    fs = FastStable(p)
    out = []
    vals = []
    for x in x_grid:
        k = int(np.sum((x_t > x) & (x_t <= x + delta)))
        ph = k / n_paths
        stat = c * ph / delta
        ci = Z95 * c * math.sqrt(ph * (1 - ph) / n_paths) / delta
        target = float(fs.cdf((x + delta) / c) - fs.cdf(x / c)) * c / delta
        out.append(IdentityReport.build("LLT", stat, target, x=x, ci=ci, n_sigma=n_sigma,
                                        notes=f"t={t:g} delta={delta:g}"))
        vals.append(stat)
    grid = np.linspace(-5.0, 5.0, 2001)
    fmax = float(np.max(fs.pdf(grid)))
    out.append(IdentityReport.build("LLT.bound", max(vals), 1.1 * fmax,
                                    tol_abs=math.inf, notes="sup over x grid vs 1.1 max f"))
    out[-1].passed = max(vals) <= 1.1 * fmax
    out[-1].status = "pass" if out[-1].passed else "fail"
    return out


# ---------------------------------------------------------------------------
# regular variation indices of the lifetime tails


def tail_index_check(m, samples, dual_samples, t_grid, tol=0.05, tol_single=0.03):
    """Slopes of log #{zeta > t}: -rho_bar for X, -rho for -X, and 0 for t n n_bar."""
    p = m.limit

    def counts(sm):
        out = []
        for t in t_grid:
            a = sm.survivors(t)
            if a < 100:
                raise InsufficientSamplesError(f"only {a} excursions alive at t={t}", a)
            out.append(Estimate(float(a), Z95 * math.sqrt(a), a))
        return out

    a = counts(samples)
    b = counts(dual_samples)
    sa = loglog_slope(t_grid, a)
    sb = loglog_slope(t_grid, b)
    prod = [Estimate(t * u.value * v.value,
                     t * u.value * v.value * math.hypot(u.ci / u.value, v.ci / v.value))
            for t, u, v in zip(t_grid, a, b)]
    sp = loglog_slope(t_grid, prod)
    return [
        IdentityReport.build("equivtails_index", sa.value, -p.rho_bar, ci=sa.ci, tol_abs=tol_single,
                             notes="slope of log n(zeta>t)"),
        IdentityReport.build("equivtails_index", sb.value, -p.rho, ci=sb.ci, tol_abs=tol_single,
                             notes="slope of log n_bar(zeta>t)"),
        IdentityReport.build("equivtails_index", sp.value, 0.0, ci=sp.ci, tol_abs=tol,
                             notes="slope of log t n n_bar"),
    ]


__all__ = [
    "IdentityReport", "vigon_check", "bridge_integral_check", "meander_convolution_check",
    "meander_convolution_rhs", "semigroup_decomposition_check", "llt_check", "tail_index_check",
    "max_pairwise_z",
]
