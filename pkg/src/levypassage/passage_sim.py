"""Monte Carlo first passage below 0 and excursions away from the infimum.

Paths are advanced on a grid of step ``dt`` with continuous monitoring inside
each step: Gaussian stretches are tested with the Brownian-bridge crossing
probability and every explicit jump is tested on landing.  A crossing is
classified ``jump`` iff an explicit jump carries the path below 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .levy_models import (ModelKind, UnsupportedModelError, effective_tail_neg, norming_function,
                          renewal_U)
from .parallel import DEFAULT_CHUNK, run_chunks
from .stable_core import InsufficientSamplesError, rayleigh_density

CONTINUOUS = "continuous"
JUMP = "jump"
CENSORED = "censored"
_CODE_NAMES = {_kernels.NONE: CENSORED, _kernels.CONTINUOUS: CONTINUOUS, _kernels.JUMP: JUMP}

Z95 = 1.959963984540054


@dataclass(frozen=True)
class PassageRecord:
    start_x: float
    t0: float
    crossing: str
    pre_pos: float
    jump_size: float | None = None


@dataclass
class PassageBatch:
    """Columnar passage records; ``t0`` is NaN for censored paths."""

    start_x: float
    horizon: float
    dt: float
    t0: np.ndarray
    code: np.ndarray
    pre_pos: np.ndarray
    jump_size: np.ndarray
    n_dropped: int = 0
    probes: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_paths(self):
        return self.t0.size + self.n_dropped

    @property
    def censored(self):
        return self.code == _kernels.NONE

    def fraction_crossed(self):
        return 1.0 - self.censored.sum() / self.n_paths

    def records(self):
        for t0, c, pre, j in zip(self.t0, self.code, self.pre_pos, self.jump_size):
            if c == _kernels.NONE:
                continue
            yield PassageRecord(self.start_x, float(t0), _CODE_NAMES[int(c)], float(pre),
                                float(j) if c == _kernels.JUMP else None)

    def to_csv(self, path, append=False):
        with open(path, "a" if append else "w", newline="") as fh:
            w = csv.writer(fh)
            if not append:
                w.writerow(["start_x", "t0", "crossing", "pre_pos", "jump_size"])
            for t0, c, pre, j in zip(self.t0, self.code, self.pre_pos, self.jump_size):
                name = _CODE_NAMES[int(c)]
                w.writerow([_fmt(self.start_x), "" if c == _kernels.NONE else _fmt(t0), name,
                            _fmt(pre), _fmt(j) if c == _kernels.JUMP else ""])


def _fmt(v):
    return f"{float(v):.12g}"


def _concat(parts, start_x, horizon, dt):
    t0 = np.concatenate([p[0] for p in parts])
    code = np.concatenate([p[1] for p in parts])
    pre = np.concatenate([p[2] for p in parts])
    jump = np.concatenate([p[3] for p in parts])
    probes = np.concatenate([p[4] for p in parts])
    dropped = int(sum(p[5] for p in parts))
    return PassageBatch(start_x, horizon, dt, t0, code, pre, jump, dropped, probes)


def _grid_steps(horizon, dt):
    n = int(round(horizon / dt))
    if abs(n * dt - horizon) > 1e-9 * horizon:
        n = int(math.ceil(horizon / dt))
    return n


def simulate_passages(m, x, horizon, dt, n_paths, seed, probe_times=(), keep_after=0.0,
                      kappa=None, workers=1, chunk=DEFAULT_CHUNK):
    """Simulate ``n_paths`` first passages below 0 from ``x``.

    Paths that cross at or before ``keep_after`` are counted but not stored.
    ``probe_times`` are rounded to the grid; positions are NaN once killed.
    """
    if not x > 0:
        raise ValueError("start must be positive")
    par = m.step_params(dt, kappa)
    n_steps = _grid_steps(horizon, dt)
    probe_idx = np.array(sorted(int(round(t / dt)) for t in probe_times), dtype=np.int64)

    def work(size, rng):
        return _kernels.killed_paths(float(x), size, n_steps, dt, par, rng, probe_idx,
                                     float(keep_after))

    parts = run_chunks(work, n_paths, seed, workers, chunk)
    return _concat(parts, float(x), n_steps * dt, dt)


def simulate_first_passage(m, x, horizon, dt, rng, kappa=None):
    """One path: a PassageRecord, or None when censored at ``horizon``."""
    if dt > horizon / 1e3:
        raise ValueError("dt must be <= horizon / 1000")
    b = simulate_passages(m, x, horizon, dt, 1, rng, kappa=kappa)
    recs = list(b.records())
    return recs[0] if recs else None


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalProbEstimate:
    """Estimate of P_x(T0 in (a, a + delta]) with a = t (or t - delta/2 when centred)."""

    t: float
    delta: float
    x: float
    p_hat: float
    p_continuous: float
    p_jump: float
    n_paths: int
    ci_half_width: float
    count: int
    count_continuous: int
    count_jump: int
    centered: bool = False

    def density(self):
        """(p_hat/delta, CI half-width/delta)."""
        return self.p_hat / self.delta, self.ci_half_width / self.delta

    def part(self, which):
        """(p/delta, CI/delta) for the continuous or jump part alone."""
        c = self.count_continuous if which == CONTINUOUS else self.count_jump
        p = c / self.n_paths
        return p / self.delta, binomial_ci(c, self.n_paths) / self.delta


def binomial_ci(count, n):
    p = count / n
    return Z95 * math.sqrt(max(p * (1.0 - p), 0.0) / n)


def default_dt(m, t):
    return t / 200.0


def estimate_local_passage_prob(m, x, t, delta, n_paths, seed, dt=None, centered=False,
                                kappa=None, workers=1, delta_max=None):
    """Binned passage probability over (t, t + delta] (or centred on t)."""
    if n_paths < 10_000:
        raise InsufficientSamplesError(f"n_paths={n_paths} < 10^4", n_paths)
    if t < 10.0 * delta:
        raise ValueError("need t >= 10 * delta")
    if delta_max is not None and delta > delta_max:
        raise ValueError(f"delta {delta} exceeds delta_0 = {delta_max}")
    dt = default_dt(m, t) if dt is None else dt
    a = t - 0.5 * delta if centered else t
    b = simulate_passages(m, x, a + delta, dt, n_paths, seed, keep_after=a, kappa=kappa,
                          workers=workers)
    return _local_from_batch(b, t, a, delta, x, centered)


def _local_from_batch(b, t, a, delta, x, centered):
    hit = (b.t0 > a) & (b.t0 <= a + delta)
    cc = int(np.sum(hit & (b.code == _kernels.CONTINUOUS)))
    cj = int(np.sum(hit & (b.code == _kernels.JUMP)))
    n = b.n_paths
    c = cc + cj
    return LocalProbEstimate(t, delta, x, c / n, cc / n, cj / n, n, binomial_ci(c, n), c, cc, cj,
                             centered)


def local_probs_from_batch(b, t, deltas, centered=False):
    """Several bin widths from one stored batch (paths must be kept past the bins)."""
    out = []
    for d in deltas:
        a = t - 0.5 * d if centered else t
        out.append(_local_from_batch(b, t, a, d, b.start_x, centered))
    return out


def compensation_density_estimator(m, x, t, n_paths, seed, dt=None, kappa=None, workers=1):
    """h_x(t) = E_x[Pi*(X_t); t < T0]: density of jump-type passage at t.

    The tail used is that of the explicit jumps of the simulation, which makes
    the estimator exact for the simulated classification.  Returns
    (estimate, 95% CI half-width).
    """
    if not m.has_negative_jumps:
        raise UnsupportedModelError(f"{m.name} has no negative jumps")
    if not t > 0:
        raise ValueError("t must be positive")
    dt = default_dt(m, t) if dt is None else dt
    n_steps = _grid_steps(t, dt)
    dt = t / n_steps
    par = m.step_params(dt, kappa)
    b = simulate_passages(m, x, t, dt, n_paths, seed, probe_times=(t,), kappa=kappa,
                          workers=workers)
    pos = b.probes[:, 0]
    vals = np.where(np.isnan(pos), 0.0, effective_tail_neg(m, np.nan_to_num(pos, nan=1.0), par))
    vals = np.concatenate([vals, np.zeros(b.n_dropped)])
    return float(vals.mean()), float(Z95 * vals.std(ddof=1) / math.sqrt(vals.size))


# ---------------------------------------------------------------------------
# excursions


@dataclass(frozen=True)
class ExcursionSample:
    zeta: float
    probe_positions: dict
    ended_by: str


@dataclass
class ExcursionBatch:
    """Excursions of X - inf X, each entered at height ``x0`` (see harvest_excursions).

    ``zeta`` is NaN for excursions still alive at ``horizon``.
    """

    model_name: str
    x0: float
    dt: float
    horizon: float
    probe_times: np.ndarray
    zeta: np.ndarray
    code: np.ndarray
    probes: np.ndarray

    @property
    def n(self):
        return self.zeta.size

    def survivors(self, t):
        """Count of excursions with zeta > t."""
        return int(np.sum(np.isnan(self.zeta) | (self.zeta > t)))

    def ended_in(self, a, b, which=None):
        hit = (self.zeta > a) & (self.zeta <= b)
        if which == CONTINUOUS:
            hit &= self.code == _kernels.CONTINUOUS
        elif which == JUMP:
            hit &= self.code == _kernels.JUMP
        return int(np.sum(hit))

    def probe_column(self, t):
        j = int(np.argmin(np.abs(self.probe_times - t)))
        if abs(self.probe_times[j] - t) > 1e-9 * max(1.0, t):
            raise KeyError(f"no probe at t={t}")
        return self.probes[:, j]

    def samples(self):
        for i in range(self.n):
            z = float(self.zeta[i])
            pp = {float(t): float(v) for t, v in zip(self.probe_times, self.probes[i])
                  if not np.isnan(v)}
            yield ExcursionSample(z if not np.isnan(z) else math.inf, pp,
                                  _CODE_NAMES[int(self.code[i])])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["zeta", "ended_by", "probe_t", "probe_pos"])
            for i in range(self.n):
                z = "" if np.isnan(self.zeta[i]) else _fmt(self.zeta[i])
                name = _CODE_NAMES[int(self.code[i])]
                alive = [(t, v) for t, v in zip(self.probe_times, self.probes[i]) if not np.isnan(v)]
                if not alive:
                    w.writerow([z, name, "", ""])
                for t, v in alive:
                    w.writerow([z, name, _fmt(t), _fmt(v)])


def harvest_excursions(m, horizon, dt, probe_times, seed, n_excursions=200_000, theta=3.0,
                       kappa=None, workers=1, min_alive=100):
    """Independent excursions away from the running infimum.

    Each excursion starts at height ``theta * c(dt)`` (the scale below which the
    grid cannot resolve the path leaving its infimum) and runs with continuous
    monitoring until it first goes below 0 or reaches ``horizon``.  Counts are
    proportional to the excursion measure up to one unknown constant, so only
    count ratios are meaningful.
    """
    if horizon < 1e4 * dt * (1.0 - 1e-12):
        raise ValueError("horizon must be >= 10^4 dt")
    probe_times = np.asarray(sorted(probe_times), dtype=float)
    x0 = theta * float(norming_function(m, dt))
    b = simulate_passages(m, x0, horizon, dt, n_excursions, seed, probe_times=probe_times,
                          kappa=kappa, workers=workers)
    zeta = np.where(b.code == _kernels.NONE, np.nan, b.t0)
    batch = ExcursionBatch(m.name, x0, dt, b.horizon, probe_times, zeta, b.code, b.probes)
    if probe_times.size:
        alive = batch.survivors(probe_times[-1])
        if alive < min_alive:
            raise InsufficientSamplesError(
                f"only {alive} excursions alive at t={probe_times[-1]}", alive)
    return batch


@dataclass(frozen=True)
class EntranceLawStats:
    t: float
    y: float
    delta: float
    count: int
    n_alive: int
    ref_y: float | None = None
    ref_count: int | None = None
    r_small: float | None = None
    r_small_target: float | None = None
    r_meander: float | None = None
    r_meander_ci: float | None = None
    r_meander_target: float | None = None


def _u_bin_integral(m, lo, hi, ladder=None):
    w = np.linspace(lo, hi, 201)
    return float(np.trapezoid(renewal_U(m, w, "up", ladder), w))


def entrance_law_local_estimate(samples, t, y, delta, model=None, ref_y=None, table=None):
    """Count-ratio statistics of the entrance law at time t.

    ``r_small`` = count(y bin)/count(ref_y bin), with target the ratio of the
    integrals of U over the two bins.  ``r_meander`` compares the conditional
    density of eps_t/c(t) given zeta > t with the meander density at y/c(t)
    (Rayleigh when alpha = 2, else ``table``).
    """
    pos = samples.probe_column(t)
    alive = ~np.isnan(pos)
    n_alive = int(alive.sum())
    if n_alive == 0:
        raise InsufficientSamplesError("no excursion alive at t", 0)
    v = pos[alive]
    count = int(np.sum((v > y) & (v <= y + delta)))
    stats = dict(t=t, y=y, delta=delta, count=count, n_alive=n_alive)
    if ref_y is not None:
        ref = int(np.sum((v > ref_y) & (v <= ref_y + delta)))
        if ref == 0:
            raise InsufficientSamplesError("empty reference bin", 0)
        stats.update(ref_y=ref_y, ref_count=ref, r_small=count / ref)
        if model is not None:
            stats["r_small_target"] = (_u_bin_integral(model, y, y + delta)
                                       / _u_bin_integral(model, ref_y, ref_y + delta))
    if model is not None:
        c = float(norming_function(model, t))
        dens = count / n_alive / delta * c
        ci = binomial_ci(count, n_alive) / delta * c
        mid = (y + 0.5 * delta) / c
        if model.limit.alpha == 2.0:
            lo, hi = y / c, (y + delta) / c
            target = (math.exp(-0.5 * lo * lo) - math.exp(-0.5 * hi * hi)) / (hi - lo)
        elif table is not None:
            target = float(table.density(mid, "g"))
        else:
            target = None
        stats.update(r_meander=dens, r_meander_ci=ci, r_meander_target=target)
    return EntranceLawStats(**stats)


def meander_density_target(model, lo, hi, table=None):
    """Bin average of g over (lo, hi] on the c(t) = 1 scale."""
    if model.limit.alpha == 2.0:
        return (math.exp(-0.5 * lo * lo) - math.exp(-0.5 * hi * hi)) / (hi - lo)
    w = np.linspace(lo, hi, 101)
    return float(np.trapezoid(table.density(w, "g"), w) / (hi - lo))


__all__ = [
    "PassageRecord", "PassageBatch", "LocalProbEstimate", "ExcursionSample", "ExcursionBatch",
    "EntranceLawStats", "simulate_first_passage", "simulate_passages",
    "estimate_local_passage_prob", "local_probs_from_batch", "compensation_density_estimator",
    "harvest_excursions", "entrance_law_local_estimate", "binomial_ci", "rayleigh_density",
    "ModelKind", "meander_density_target",
]
