"""Dispatch of check ids to the check functions with desk-scale defaults."""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics as A
from . import identity_checks as I
from . import passage_sim as ps
from .config import KNOWN_CHECKS, CheckBlock
from .levy_models import (REGISTRY, ModelKind, UnsupportedModelError, dual_model,
                          estimate_ladder_data, norming_function)
from .stable_core import StableParams, UnsupportedRegimeError, estimate_meander_densities

# theorem-to-check map used by the ``table`` command
THEOREM_MAP = {
    "T1.2": "Theorem 1, lifetime ratio -> rho_bar",
    "T1.4": "Theorem 1 (i), jump part -> p",
    "T1.3": "Theorem 1 (ii), t c(t) n^c flat in t",
    "T1.3x": "Theorem 1 (ii), continuous part -> q (alpha rho_bar = 1)",
    "T1.5": "Theorem 1 (iii), no negative jumps",
    "T2.6": "Theorem 2, normal deviations",
    "T2.7": "Theorem 2, small deviations",
    "PZ": "Proposition Z, phi and k* E Z^-alpha = rho_bar",
    "TS.7": "Theorem S, small-x creeping",
    "TS.8": "Theorem S, normal-deviation creeping",
    "TR": "Theorem R, excursion creeping shape",
    "TE": "Theorem E, jump density at small x",
    "TG": "Theorem G, jump density at normal x",
    "TH": "Theorem H, jump density shape",
    "TI": "Theorem I, jump density at small x",
    "vigon": "Vigon identity",
    "bridge": "Stable bridge integral",
    "meander_conv": "Meander convolution identity",
    "eq22": "k* E Z^-alpha = rho_bar",
    "DA": "Excursion decomposition of the entrance law",
    "LLT": "Local limit theorem",
    "equivtails_index": "Lifetime tail indices",
    "EA": "Compensation formula vs binned jump density",
}

# default model for each check when none is given
DEFAULT_MODEL = {
    "T1.2": "brownian", "T1.4": "stable_neg", "T1.3": "brownian", "T1.3x": "bm_cp",
    "T1.5": "stable_pos", "T2.6": "cauchy", "T2.7": "stable_neg", "PZ": "stable_neg",
    "TS.7": "brownian", "TS.8": "brownian", "TR": "brownian", "TE": "stable_neg",
    "TG": "stable_neg", "TH": "bm_cp", "TI": "bm_cp", "vigon": "bm_cp", "bridge": "brownian",
    "meander_conv": "brownian", "eq22": "stable_neg", "DA": "cauchy", "LLT": "cauchy",
    "equivtails_index": "cauchy", "EA": "stable_neg",
}

# excursion counts giving ~1e5 survivors at t = 1000 dt
EXCURSIONS = {ModelKind.BROWNIAN_MOTION: 1_650_000, ModelKind.TWO_SIDED_STABLE: 1_650_000,
              ModelKind.SPECTRALLY_NEGATIVE_STABLE: 600_000,
              ModelKind.SPECTRALLY_POSITIVE_STABLE: 3_000_000,
              ModelKind.BROWNIAN_PLUS_NEG_CP: 1_650_000}


def check_seed(master_seed, cid, extra=0):
    """Seed for one check: independent of the order in which checks run."""
    return np.random.SeedSequence([int(master_seed), zlib.crc32(cid.encode()), int(extra)])


@dataclass
class RunContext:
    master_seed: int = 0
    workers: int = 1
    table_paths: int = 1_000_000
    table_steps: int = 1024
    scale: float = 1.0  # multiplies every default sample size
    _tables: dict = field(default_factory=dict)
    _excursions: dict = field(default_factory=dict)
    _ladders: dict = field(default_factory=dict)

    def n(self, default, block=None):
        if block is not None and block.n_paths is not None:
            return int(block.n_paths)
        return max(1, int(round(default * self.scale)))

    def meander_table(self, p):
        key = (p.alpha, p.rho)
        if key not in self._tables:
            rng = np.random.default_rng(check_seed(self.master_seed, f"meander-{p.alpha}-{p.rho}"))
            self._tables[key] = estimate_meander_densities(
                p, n_steps=self.table_steps, n_paths=self.n(self.table_paths), rng=rng)
        return self._tables[key]

    def excursions(self, m, dt=1e-3, probe_times=(), n=None, tag=""):
        n = self.n(EXCURSIONS[m.kind]) if n is None else n
        key = (m.name, m.kind, dt, tuple(probe_times), n)
        if key not in self._excursions:
            seed = check_seed(self.master_seed, f"exc-{m.name}-{tag}")
            self._excursions[key] = ps.harvest_excursions(m, 1e4 * dt, dt, probe_times, seed,
                                                          n_excursions=n, workers=self.workers)
        return self._excursions[key]

    def ladder(self, m):
        if m.kind is not ModelKind.BROWNIAN_PLUS_NEG_CP:
            return None
        if m.name not in self._ladders:
            rng = np.random.default_rng(check_seed(self.master_seed, f"ladder-{m.name}"))
            self._ladders[m.name] = estimate_ladder_data(m, n_epochs=self.n(100_000), rng=rng)
        return self._ladders[m.name]


def _grid(values, default):
    return tuple(values) if values else tuple(default)


def _rel_deltas(block, t_grid, default_rel):
    if block.deltas:
        return [tuple(block.deltas)] * len(t_grid)
    return [tuple(r * t for r in default_rel) for t in t_grid]


def _tol(block, default):
    return default if block.tolerance is None else block.tolerance


# ---------------------------------------------------------------------------


def _t1(cid):
    def run(m, block, ctx, seed):
        if cid == "T1.4" and not m.has_negative_jumps:
            raise UnsupportedModelError("T1.4 needs negative jumps")
        if cid == "T1.5" and m.has_negative_jumps:
            raise UnsupportedModelError("T1.5 needs a model without negative jumps")
        if cid == "T1.3x" and not (m.creeps_downward and m.limit.alpha * m.limit.rho_bar == 1.0):
            raise UnsupportedRegimeError("T1.3x needs d* > 0 and alpha*rho_bar = 1")
        samples = ctx.excursions(m)
        t_grid = _grid(block.t_grid, (1.0, 2.0))
        out = []
        for t, ds in zip(t_grid, _rel_deltas(block, t_grid, (0.025, 0.05))):
            out += A.t1_checks(m, samples, [t], ds, tol=_tol(block, 0.05), check_ids=(cid,))
        if cid == "T1.3x":
            q1 = A.continuous_share(samples, t_grid[0], 4.0 * t_grid[-1])
            x_big = 4.0
            q2 = A.creep_probability(m, x_big, ctx.n(200_000), seed, horizon=400.0, dt=0.05,
                                     workers=ctx.workers)
            z = abs(q1.value - q2.value) / math.hypot(q1.sigma, q2.sigma)
            out.append(A.CheckReport("T1.3x.q", m.name, t_grid[0], math.nan, x_big, q1.value,
                                     q2.value, math.hypot(q1.ci, q2.ci), z <= A.N_SIGMA,
                                     note="continuous share of excursions vs P_x(creep)"))
            out.append(A._report("T1.3x.q", m, math.nan, math.nan, x_big, q2, m.q_known,
                                 note="P_x(creep) plateau vs closed-form q"))
        return out
    return run


def _t13(m, block, ctx, seed):
    if not m.creeps_downward:
        raise UnsupportedModelError(f"{m.name} does not creep downwards")
    samples = ctx.excursions(m)
    t_grid = _grid(block.t_grid, (0.5, 1.0, 2.0, 4.0, 8.0))
    reps = A.excursion_creeping_shape(m, samples, t_grid, tol=_tol(block, 0.05))
    for r in reps:
        r.check_id = "T1.3"
    return reps


def _tr(m, block, ctx, seed):
    samples = ctx.excursions(m)
    t_grid = _grid(block.t_grid, (0.5, 1.0, 2.0, 4.0, 8.0))
    return A.excursion_creeping_shape(m, samples, t_grid, tol=_tol(block, 0.05))


def _needs_table(p):
    return p.alpha < 2.0 and p.alpha * p.rho_bar < 1.0


def _t26(m, block, ctx, seed):
    p = m.limit
    table = ctx.meander_table(p) if _needs_table(p) else None
    t_grid = _grid(block.t_grid, (10.0, 20.0, 40.0))
    out = []
    for i, xt in enumerate(_grid(block.x_grid, (1.0,))):
        delta = block.deltas[0] if block.deltas else None
        reps = A.t2_normal_deviation_check(m, xt, t_grid, delta, n_paths=ctx.n(1_000_000, block),
                                           seed=check_seed(ctx.master_seed, "T2.6", i), table=table,
                                           workers=ctx.workers)
        out += reps
        if len(reps) > 1 and m.kind.is_stable:
            out.append(A.flatness_report(reps))
    return out


def _small_x_default(m):
    if m.kind is ModelKind.BROWNIAN_PLUS_NEG_CP:
        return (0.5, 0.25), (10.0, 20.0, 40.0)
    return (0.1, 0.05), (1.0, 2.0, 4.0)


def _t27(m, block, ctx, seed):
    xs, ts = _small_x_default(m)
    x1, x2 = _grid(block.x_grid, xs)[:2]
    t_grid = _grid(block.t_grid, ts)
    dt = None
    if m.kind is ModelKind.BROWNIAN_PLUS_NEG_CP or m.kind is ModelKind.BROWNIAN_MOTION:
        dt = t_grid[0] / 200.0  # exact kernel for Gaussian plus compound Poisson
    return A.t2_small_deviation_check(m, x1, x2, t_grid, n_paths=ctx.n(1_000_000, block), seed=seed,
                                      ladder=ctx.ladder(m), dt=dt, workers=ctx.workers,
                                      tol=_tol(block, 0.07))


def _pz(m, block, ctx, seed):
    p = m.limit
    if p.alpha * p.rho_bar >= 1.0:
        raise UnsupportedRegimeError("Proposition Z needs alpha*rho_bar < 1 (unsupported regime)")
    table = ctx.meander_table(p)
    t = _grid(block.t_grid, (1.0,))[0]
    samples = ctx.excursions(m, probe_times=(t,), n=ctx.n(600_000, block), tag="pz")
    c = float(norming_function(m, t))
    ys = [y * c for y in _grid(block.x_grid, (0.0, 0.5, 1.0, 2.0))]
    return A.propZ_phi_check(m, samples, t, ys, table) + [A.eq22_check(m, table)]


def _eq22(m, block, ctx, seed):
    return [A.eq22_check(m, ctx.meander_table(m.limit), tol_rel=_tol(block, 0.10))]


def _ts7(m, block, ctx, seed):
    xs, ts = ((0.5, 0.25), (10.0, 20.0, 40.0)) if m.kind is ModelKind.BROWNIAN_PLUS_NEG_CP else \
        ((0.1, 0.05), (1.0, 2.0, 4.0))
    x1, x2 = _grid(block.x_grid, xs)[:2]
    t_grid = _grid(block.t_grid, ts)
    s1, s2 = check_seed(ctx.master_seed, "TS.7", 1), check_seed(ctx.master_seed, "TS.7", 2)
    out = A.creeping_small_x_ratio(m, x1, x2, t_grid, n_paths=ctx.n(1_000_000, block), seed=s1,
                                   ladder=ctx.ladder(m), dt=t_grid[0] / 200.0, workers=ctx.workers,
                                   tol=block.tolerance)
    shape_t = tuple(np.geomspace(10.0, 100.0, 5))
    out += A.creeping_t_shape(m, 0.5, shape_t, n_paths=ctx.n(1_000_000, block), seed=s2,
                              workers=ctx.workers, tol=_tol(block, 0.05))
    return out


def _ts8(m, block, ctx, seed):
    a, b = _grid(block.x_grid, (1.0, 2.0))[:2]
    t_grid = _grid(block.t_grid, (1.0, 4.0))
    return A.creeping_normal_shape(m, a, b, t_grid, n_paths=ctx.n(500_000, block), seed=seed,
                                   workers=ctx.workers, tol_rel=_tol(block, 0.10))


def _te_ti(cid):
    def run(m, block, ctx, seed):
        p = m.limit
        if cid == "TE" and p.alpha * p.rho_bar >= 1.0:
            raise UnsupportedRegimeError("Theorem E needs alpha*rho_bar < 1")
        if cid == "TI" and p.alpha * p.rho_bar < 1.0:
            raise UnsupportedRegimeError("Theorem I needs alpha*rho_bar = 1")
        xs, ts = _small_x_default(m)
        if m.kind.is_stable:
            ts = (2.0, 4.0)
        x1, x2 = _grid(block.x_grid, xs)[:2]
        t_grid = _grid(block.t_grid, ts)
        s1, s2 = check_seed(ctx.master_seed, cid, 1), check_seed(ctx.master_seed, cid, 2)
        out = A.jump_density_small_x(m, x1, x2, t_grid, n_paths=ctx.n(400_000, block), seed=s1,
                                     ladder=ctx.ladder(m), workers=ctx.workers,
                                     tol=_tol(block, 0.07), check_id=cid)
        if cid == "TI":
            out += A.jump_share_statistic(m, 1.0, (50.0, 100.0, 200.0), n_paths=ctx.n(400_000),
                                          seed=s2, workers=ctx.workers)
        return out
    return run


def _tg(m, block, ctx, seed):
    table = ctx.meander_table(m.limit)
    t_grid = _grid(block.t_grid, (1.0, 4.0))
    out = []
    for i, xt in enumerate(_grid(block.x_grid, (1.0,))):
        out += A.jump_density_normal(m, xt, t_grid, n_paths=ctx.n(200_000, block),
                                     seed=check_seed(ctx.master_seed, "TG", i), table=table,
                                     workers=ctx.workers)
    return out


def _th(m, block, ctx, seed):
    a, b = _grid(block.x_grid, (1.0, 2.0))[:2]
    t_grid = _grid(block.t_grid, (10.0, 40.0))
    return A.jump_density_shape(m, a, b, t_grid, n_paths=ctx.n(400_000, block), seed=seed,
                                workers=ctx.workers, tol_rel=_tol(block, 0.10))


def _as_reports(reps, m, t=math.nan, delta=math.nan):
    name = m.name if hasattr(m, "name") else str(m)
    return [r.to_check_report(name, t, delta) for r in reps]


def _vigon(m, block, ctx, seed):
    xs = _grid(block.x_grid, (0.5, 1.0, 2.0))
    reps = I.vigon_check(m, xs, n_epochs=ctx.n(100_000, block), seed=seed,
                         tol_rel=_tol(block, 0.05))
    return _as_reports(reps, m)


def _bridge(m, block, ctx, seed):
    p = m.limit
    table = None if p.alpha == 2.0 else ctx.meander_table(p)
    rep = I.bridge_integral_check(p, table, tol_rel=_tol(block, 0.05))
    return _as_reports([rep], _label(m, p))


def _label(m, p):
    return m.name if m is not None else f"stable(alpha={p.alpha:g},rho={p.rho:g})"


def _meander_conv(m, block, ctx, seed):
    p = m.limit
    table = None if p.alpha == 2.0 else ctx.meander_table(p)
    reps = I.meander_convolution_check(p, _grid(block.x_grid, (0.5, 1.0, 2.0)), table,
                                       tol_rel=block.tolerance)
    return _as_reports(reps, m)


def _da(m, block, ctx, seed):
    t = _grid(block.t_grid, (1.0,))[0]
    probes = tuple(np.geomspace(0.02 * t, t, 48))
    samples = ctx.excursions(m, dt=1e-3 * t, probe_times=probes, n=ctx.n(200_000, block), tag="da")
    c = float(norming_function(m, t))
    w = 0.2 * c
    bins = [(a * c, a * c + w) for a in _grid(block.x_grid, (0.0, 0.2, 0.5, 1.0, 2.0))]
    return _as_reports(I.semigroup_decomposition_check(m, samples, t, bins,
                                                       tol_rel=_tol(block, 0.10)), m, t, w)


def _llt(m, block, ctx, seed):
    t = _grid(block.t_grid, (10.0,))[0]
    c = float(norming_function(m, t))
    xs = _grid(block.x_grid, tuple(v * c for v in (-2.0, -0.5, 0.0, 0.5, 2.0)))
    delta = block.deltas[0] if block.deltas else 0.1 * c
    return _as_reports(I.llt_check(m, t, xs, delta, n_paths=ctx.n(200_000, block), seed=seed), m, t,
                       delta)


def _tails(m, block, ctx, seed):
    d = dual_model(m)
    s1 = ctx.excursions(m, tag="tails")
    s2 = ctx.excursions(d, tag="tails")
    t_grid = _grid(block.t_grid, tuple(np.geomspace(0.5, 5.0, 6)))
    return _as_reports(I.tail_index_check(m, s1, s2, t_grid, tol=_tol(block, 0.05)), m)


def _ea(m, block, ctx, seed):
    return A.estimator_agreement(m, _grid(block.x_grid, (0.5, 1.0, 2.0)),
                                 _grid(block.t_grid, (1.0, 2.0, 4.0)),
                                 n_paths=ctx.n(400_000, block), seed=seed, workers=ctx.workers)


RUNNERS = {
    "T1.2": _t1("T1.2"), "T1.4": _t1("T1.4"), "T1.3x": _t1("T1.3x"), "T1.5": _t1("T1.5"),
    "T1.3": _t13, "TR": _tr, "T2.6": _t26, "T2.7": _t27, "PZ": _pz, "eq22": _eq22,
    "TS.7": _ts7, "TS.8": _ts8, "TE": _te_ti("TE"), "TI": _te_ti("TI"), "TG": _tg, "TH": _th,
    "vigon": _vigon, "bridge": _bridge, "meander_conv": _meander_conv, "DA": _da, "LLT": _llt,
    "equivtails_index": _tails, "EA": _ea,
}
assert set(RUNNERS) == set(KNOWN_CHECKS)


def stable_probe_model(alpha, beta=0.0):
    """A model stand-in for the deterministic checks driven by --alpha."""
    if alpha == 2.0:
        return REGISTRY["brownian"]
    from .levy_models import two_sided_stable
    return two_sided_stable(alpha, beta, name=f"stable_{alpha:g}")


def run_check(cid, m, block=None, ctx=None):
    """Run one check id on model ``m``; returns a list of CheckReport."""
    if cid not in RUNNERS:
        raise KeyError(cid)
    ctx = RunContext() if ctx is None else ctx
    block = CheckBlock(cid) if block is None else block
    return RUNNERS[cid](m, block, ctx, check_seed(ctx.master_seed, cid))


__all__ = ["RUNNERS", "THEOREM_MAP", "DEFAULT_MODEL", "RunContext", "run_check", "check_seed",
           "stable_probe_model", "StableParams"]
