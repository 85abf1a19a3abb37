"""Compiled path kernels.

Every process in the registry is simulated through one step law: a Gaussian
segment (drift ``mu``, diffusion ``sd``) interrupted by explicit jumps arriving
at rate ``lam``.  Within a step the path is monitored continuously: each
Gaussian segment is tested for an intra-segment dip below ``level`` with the
Brownian-bridge crossing probability, and each explicit jump is tested on
landing.  Jumps are either two-sided Pareto with cutoff ``eps`` (stable kinds)
or negative exponential (compound Poisson part).

The step parameters are packed into a float64 vector so that one compiled
kernel serves every model; see :data:`PARAM_FIELDS`.
"""

import math

import numba as nb
import numpy as np

PARAM_FIELDS = ("mu", "sd", "lam", "eps", "p_up", "alpha", "jump_kind", "jump_mean")

JUMP_PARETO = 0.0
JUMP_NEG_EXP = 1.0

NONE = 0
CONTINUOUS = 1
JUMP = 2


def pack_params(mu, sd, lam, eps=0.0, p_up=0.0, alpha=0.0, jump_kind=JUMP_PARETO,
                jump_mean=0.0):
    return np.array([mu, sd, lam, eps, p_up, alpha, jump_kind, jump_mean], dtype=np.float64)


@nb.njit(cache=True, nogil=True)
def _draw_jump(par, gen):
    if par[6] == JUMP_NEG_EXP:
        return -par[7] * gen.standard_exponential()
    size = par[3] * gen.random() ** (-1.0 / par[5])
    if gen.random() < par[4]:
        return size
    return -size


@nb.njit(cache=True, nogil=True)
def draw_increment(dt, par, gen):
    """Total increment over one step (no monitoring)."""
    mu, sd, lam = par[0], par[1], par[2]
    x = mu * dt + sd * math.sqrt(dt) * gen.standard_normal()
    if lam > 0.0:
        n = gen.poisson(lam * dt)
        for _ in range(n):
            x += _draw_jump(par, gen)
    return x


@nb.njit(cache=True, nogil=True)
def advance(x, level, dt, par, gen, res):
    """Advance one step of length ``dt`` from ``x``, watching for ``X < level``.

    Returns NONE, CONTINUOUS or JUMP.  ``res`` receives
    (end position, crossing time within the step, pre-crossing position, jump).
    """
    mu, sd, lam = par[0], par[1], par[2]
    t = 0.0
    while True:
        if lam > 0.0:
            tau = gen.standard_exponential() / lam
        else:
            tau = np.inf
        last = tau >= dt - t
        seg = dt - t if last else tau
        if seg > 0.0:
            y = x + mu * seg + sd * math.sqrt(seg) * gen.standard_normal()
            crossed = y < level
            if not crossed and sd > 0.0:
                a = x - level
                b = y - level
                crossed = gen.random() < math.exp(-2.0 * a * b / (sd * sd * seg))
            if crossed:
                res[0] = y
                res[1] = t + seg * gen.random()
                res[2] = level
                res[3] = 0.0
                return CONTINUOUS
            x = y
            t += seg
        if last:
            res[0] = x
            return NONE
        j = _draw_jump(par, gen)
        if x + j < level:
            res[0] = x + j
            res[1] = t
            res[2] = x
            res[3] = j
            return JUMP
        x += j


@nb.njit(cache=True, nogil=True)
def killed_paths(x0, n_paths, n_steps, dt, par, gen, probe_idx, keep_after):
    """Run ``n_paths`` paths from ``x0`` until first passage below 0 or ``n_steps``.

    Paths whose passage time is <= ``keep_after`` are dropped from the output
    (their count is returned).  Probe positions are recorded at the end of the
    steps listed in ``probe_idx`` (1-based step counts, sorted); NaN once dead.
    """
    n_probe = probe_idx.shape[0]
    t0 = np.empty(n_paths)
    code = np.empty(n_paths, dtype=np.int8)
    pre = np.empty(n_paths)
    jump = np.empty(n_paths)
    probes = np.empty((n_paths, n_probe))
    res = np.empty(4)
    kept = 0
    dropped = 0
    for _ in range(n_paths):
        x = x0
        status = NONE
        tcross = np.nan
        j = 0
        for p in range(n_probe):
            probes[kept, p] = np.nan
        for k in range(n_steps):
            status = advance(x, 0.0, dt, par, gen, res)
            if status != NONE:
                tcross = (k + res[1] / dt) * dt
                break
            x = res[0]
            while j < n_probe and probe_idx[j] == k + 1:
                probes[kept, j] = x
                j += 1
        if status != NONE and tcross <= keep_after:
            dropped += 1
            continue
        t0[kept] = tcross
        code[kept] = status
        if status != NONE:
            pre[kept] = res[2]
            jump[kept] = res[3]
        else:
            pre[kept] = x
            jump[kept] = 0.0
        kept += 1
    return t0[:kept], code[:kept], pre[:kept], jump[:kept], probes[:kept], dropped


@nb.njit(cache=True, nogil=True)
def survivor_endpoints(x0, n_paths, n_steps, dt, par, gen):
    """Endpoints of the paths from ``x0`` that stay >= 0 for ``n_steps`` steps."""
    out = np.empty(n_paths)
    res = np.empty(4)
    m = 0
    for _ in range(n_paths):
        x = x0
        alive = True
        for _k in range(n_steps):
            if advance(x, 0.0, dt, par, gen, res) != NONE:
                alive = False
                break
            x = res[0]
        if alive:
            out[m] = x
            m += 1
    return out[:m]


@nb.njit(cache=True, nogil=True)
def ladder_heights(n, dt, par, gen, cap, descending):
    """First strict ladder heights of the grid skeleton started at 0.

    Returns |S_tau| for the first k with S_k < 0 (descending) or S_k > 0
    (ascending); epochs not reached within ``cap`` steps are returned as NaN.
    """
    out = np.empty(n)
    sign = -1.0 if descending else 1.0
    for i in range(n):
        s = 0.0
        h = np.nan
        for _ in range(cap):
            s += draw_increment(dt, par, gen)
            if sign * s > 0.0:
                h = sign * s
                break
        out[i] = h
    return out


@nb.njit(cache=True, nogil=True)
def increments(n, dt, par, gen):
    out = np.empty(n)
    for i in range(n):
        out[i] = draw_increment(dt, par, gen)
    return out


@nb.njit(cache=True, nogil=True)
def increments_split(n, dt, par, gen):
    """Increments split into (Gaussian part, explicit jump sum, jump count)."""
    cont = np.empty(n)
    jsum = np.empty(n)
    cnt = np.empty(n, dtype=np.int64)
    mu, sd, lam = par[0], par[1], par[2]
    for i in range(n):
        cont[i] = mu * dt + sd * math.sqrt(dt) * gen.standard_normal()
        s = 0.0
        k = 0
        if lam > 0.0:
            k = gen.poisson(lam * dt)
            for _ in range(k):
                s += _draw_jump(par, gen)
        jsum[i] = s
        cnt[i] = k
    return cont, jsum, cnt


@nb.njit(cache=True, nogil=True)
def cms_stable(n, alpha, beta, gen):
    """Unit-scale strictly stable draws (Chambers-Mallows-Stuck)."""
    out = np.empty(n)
    if alpha == 2.0:
        for i in range(n):
            out[i] = gen.standard_normal()
        return out
    half_pi = 0.5 * math.pi
    if alpha == 1.0:
        for i in range(n):
            out[i] = math.tan(math.pi * (gen.random() - 0.5))
        return out
    tan_pa = math.tan(half_pi * alpha)
    b = math.atan(beta * tan_pa) / alpha
    s = (1.0 + beta * beta * tan_pa * tan_pa) ** (1.0 / (2.0 * alpha))
    for i in range(n):
        v = math.pi * (gen.random() - 0.5)
        w = gen.standard_exponential()
        out[i] = (s * math.sin(alpha * (v + b)) / math.cos(v) ** (1.0 / alpha)
                  * (math.cos(v - alpha * (v + b)) / w) ** ((1.0 - alpha) / alpha))
    return out


@nb.njit(cache=True, nogil=True)
def post_extremum_endpoints(n_paths, n_steps, alpha, beta, gen, min_tail):
    """Meander endpoints from splitting stable random walks at their extrema.

    The part of an ``n_steps`` walk after its (last) minimum is a walk
    conditioned to stay positive over the remaining ``m`` steps, independent
    of the part before; ``(S_n - min)/m**(1/alpha)`` is therefore a draw of
    the length-``m`` meander endpoint on the unit scale.  The part after the
    maximum gives the dual meander.  Splits with ``m < min_tail`` are NaN.
    For ``alpha == 2`` the extrema between grid points are sampled from the
    Brownian bridge, which removes the lattice error of the discrete walk.
    """
    g = np.empty(n_paths)
    g_star = np.empty(n_paths)
    eta = 1.0 / alpha
    bridge = alpha == 2.0
    for i in range(n_paths):
        inc = cms_stable(n_steps, alpha, beta, gen)
        s = 0.0
        lo = 0.0
        hi = 0.0
        t_lo = 0.0
        t_hi = 0.0
        for k in range(n_steps):
            a = s
            s += inc[k]
            if bridge:
                # extrema of the Brownian bridge between grid points
                d = s - a
                m_lo = 0.5 * (a + s - math.sqrt(d * d - 2.0 * math.log(gen.random())))
                m_hi = 0.5 * (a + s + math.sqrt(d * d - 2.0 * math.log(gen.random())))
                if m_lo <= lo:
                    lo = m_lo
                    t_lo = k + 0.5
                if m_hi >= hi:
                    hi = m_hi
                    t_hi = k + 0.5
            else:
                if s <= lo:
                    lo = s
                    t_lo = k + 1.0
                if s >= hi:
                    hi = s
                    t_hi = k + 1.0
        m = n_steps - t_lo
        g[i] = (s - lo) / m ** eta if m >= min_tail else np.nan
        m = n_steps - t_hi
        g_star[i] = (hi - s) / m ** eta if m >= min_tail else np.nan
    return g, g_star
