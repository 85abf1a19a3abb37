"""Primitives of the limiting strictly stable process Y.

Parametrization: for ``alpha < 2`` the characteristic function of Y_1 is
``exp(-|u|**alpha * (1 - 1j*beta*tan(pi*alpha/2)*sign(u)))`` (unit scale,
no shift; ``alpha == 1`` forces ``beta == 0``).  For ``alpha == 2`` we take
Y_1 ~ N(0, 1), so Y is a standard Brownian motion.  With this convention
c(t) = t**(1/alpha) for every stable model.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy import integrate, interpolate, optimize, special

from . import _kernels

QUAD_EPSABS = 1e-9
QUAD_EPSREL = 1e-7

# Surrogate cutoff as a fraction of c(dt); see levy_models.increment_sampler.
DEFAULT_KAPPA = 0.25


class InsufficientSamplesError(RuntimeError):
    """Raised when a Monte Carlo estimate has too few effective samples."""

    def __init__(self, message, count=None):
        super().__init__(message)
        self.count = count


class UnsupportedRegimeError(ValueError):
    pass


@dataclass(frozen=True)
class StableParams:
    """Strictly stable law with index ``alpha`` and positivity ``rho = P(Y_1 > 0)``."""

    alpha: float
    rho: float

    def __post_init__(self):
        a, r = float(self.alpha), float(self.rho)
        if not 0.0 < a <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {a}")
        if not 0.0 < r < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {r}")
        if a * r > 1.0 + 1e-12 or a * (1.0 - r) > 1.0 + 1e-12:
            raise ValueError(f"alpha*rho and alpha*(1-rho) must be <= 1 (alpha={a}, rho={r})")
        if a == 2.0 and abs(r - 0.5) > 1e-12:
            raise ValueError("alpha = 2 forces rho = 1/2")
        if a == 1.0 and abs(r - 0.5) > 1e-12:
            raise ValueError("strict stability at alpha = 1 forces rho = 1/2")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "rho", r)

    @classmethod
    def from_beta(cls, alpha, beta):
        return cls(alpha, positivity_from_beta(alpha, beta))

    @property
    def eta(self):
        return 1.0 / self.alpha

    @property
    def rho_bar(self):
        return 1.0 - self.rho

    @property
    def beta(self):
        a = self.alpha
        if a in (1.0, 2.0):
            return 0.0
        b = math.tan(math.pi * a * (self.rho - 0.5)) / math.tan(0.5 * math.pi * a)
        if abs(abs(b) - 1.0) < 1e-10:
            return math.copysign(1.0, b)
        return float(min(1.0, max(-1.0, b)))

    def dual(self):
        """Parameters of -Y."""
        return StableParams(self.alpha, 1.0 - self.rho)


def positivity_from_beta(alpha, beta):
    if not -1.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [-1, 1], got {beta}")
    if alpha == 2.0:
        return 0.5
    if alpha == 1.0:
        if beta != 0.0:
            raise ValueError("alpha = 1 requires beta = 0 for strict stability")
        return 0.5
    return 0.5 + math.atan(beta * math.tan(0.5 * math.pi * alpha)) / (math.pi * alpha)


def levy_density_coefficients(p):
    """(c_plus, c_minus) with Levy density c_plus x^(-1-alpha) on x > 0 and c_minus |x|^(-1-alpha) on x < 0."""
    a = p.alpha
    if a == 2.0:
        return 0.0, 0.0
    if a == 1.0:
        return 1.0 / math.pi, 1.0 / math.pi
    total = -1.0 / (special.gamma(-a) * math.cos(0.5 * math.pi * a))
    b = p.beta
    return 0.5 * total * (1.0 + b), 0.5 * total * (1.0 - b)


def stable_step_params(p, dt, kappa=DEFAULT_KAPPA):
    """Packed kernel parameters for a step of Y of length ``dt``.

    Jumps larger than ``kappa * dt**(1/alpha)`` are explicit; the rest is a
    drift-corrected Gaussian surrogate.
    """
    a = p.alpha
    if a == 2.0:
        return _kernels.pack_params(0.0, 1.0, 0.0)
    cp, cm = levy_density_coefficients(p)
    eps = kappa * dt ** (1.0 / a)
    lam = (cp + cm) * eps ** (-a) / a
    var = (cp + cm) * eps ** (2.0 - a) / (2.0 - a)
    if a > 1.0:
        mu = -(cp - cm) * eps ** (1.0 - a) / (a - 1.0)
    elif a < 1.0:
        mu = (cp - cm) * eps ** (1.0 - a) / (1.0 - a)
    else:
        mu = 0.0
    return _kernels.pack_params(mu, math.sqrt(var), lam, eps, cp / (cp + cm), a,
                                _kernels.JUMP_PARETO)


# ---------------------------------------------------------------------------
# density and distribution function


def _quiet_quad(fn, a, b, **kw):
    # roundoff warnings at these tolerances are expected near the integrable
    # singularities; accuracy is checked against closed forms in the tests
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(fn, a, b, **kw)


def _theta0(alpha, beta):
    return math.atan(beta * math.tan(0.5 * math.pi * alpha)) / alpha


def _log_g(theta, x, alpha, th0):
    # log of x^(alpha/(alpha-1)) V(theta); V is the Zolotarev kernel
    am1 = alpha - 1.0
    c = math.cos(theta)
    s = math.sin(alpha * (th0 + theta))
    r = math.cos(alpha * th0 + am1 * theta)
    if c <= 0.0 or s <= 0.0 or r <= 0.0:
        return math.inf if alpha > 1.0 else -math.inf
    return (alpha / am1 * math.log(x) + math.log(math.cos(alpha * th0)) / am1
            + alpha / am1 * (math.log(c) - math.log(s)) + math.log(r) - math.log(c))


def _zolotarev_integral(x, alpha, beta, integrand):
    """Integrate ``integrand(g)`` over theta, splitting at the peak g = 1."""
    th0 = _theta0(alpha, beta)
    lo, hi = -th0, 0.5 * math.pi
    if hi - lo <= 1e-15:
        return 0.0

    def fn(th):
        lg = _log_g(th, x, alpha, th0)
        if lg > 700.0:
            return integrand(math.inf)
        if lg < -700.0:
            return integrand(0.0)
        return integrand(math.exp(lg))

    # the peak can sit extremely close to either endpoint; geometric break
    # points on both sides of it resolve every scale
    a, b = lo + 1e-15 * (hi - lo), hi - 1e-15 * (hi - lo)
    la = _log_g(a, x, alpha, th0)
    lb = _log_g(b, x, alpha, th0)
    mid = 0.5 * (lo + hi)
    if np.isfinite(la) and np.isfinite(lb) and la * lb < 0.0:
        mid = optimize.brentq(lambda th: _log_g(th, x, alpha, th0), a, b, xtol=1e-300, rtol=1e-14)
    total = 0.0
    for u, v in ((lo, mid), (mid, hi)):
        d = v - u
        if d <= 0.0:
            continue
        fr = 10.0 ** -np.arange(1, 16)
        pts = np.unique(np.concatenate([[u, v], u + d * fr, v - d * fr]))
        for s0, s1 in zip(pts[:-1], pts[1:]):
            if s1 > s0:
                total += _quiet_quad(fn, s0, s1, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    return total


def _density_scalar(p, x):
    a = p.alpha
    if a == 2.0:
        return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if a == 1.0:
        return 1.0 / (math.pi * (1.0 + x * x))
    if x == 0.0:
        return stable_density_at_zero(p)
    beta = p.beta
    if x < 0.0:
        x, beta = -x, -beta
    integral = _zolotarev_integral(x, a, beta, lambda g: g * math.exp(-g) if np.isfinite(g) else 0.0)
    return max(0.0, a / (math.pi * abs(a - 1.0) * x) * integral)


def _cdf_scalar(p, x):
    a = p.alpha
    if a == 2.0:
        return float(special.ndtr(x))
    if a == 1.0:
        return 0.5 + math.atan(x) / math.pi
    if x == 0.0:
        return p.rho_bar
    beta = p.beta
    flip = x < 0.0
    if flip:
        x, beta = -x, -beta
    th0 = _theta0(a, beta)
    integral = _zolotarev_integral(x, a, beta, lambda g: math.exp(-g) if np.isfinite(g) else 0.0)
    if a < 1.0:
        val = (0.5 * math.pi - th0) / math.pi + integral / math.pi
    else:
        val = 1.0 - integral / math.pi
    val = min(1.0, max(0.0, val))
    return 1.0 - val if flip else val


def _check_finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("stable density argument must be finite")
    return x


def stable_density(p, x):
    """Density of Y_1 at ``x`` (scalar or array)."""
    x = _check_finite(x)
    if p.alpha == 2.0:
        out = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    elif p.alpha == 1.0:
        out = 1.0 / (math.pi * (1.0 + x * x))
    else:
        out = np.vectorize(lambda v: _density_scalar(p, float(v)), otypes=[float])(x)
    return float(out) if out.ndim == 0 else out


def stable_cdf(p, x):
    x = _check_finite(x)
    if p.alpha == 2.0:
        out = special.ndtr(x)
    elif p.alpha == 1.0:
        out = 0.5 + np.arctan(x) / math.pi
    else:
        out = np.vectorize(lambda v: _cdf_scalar(p, float(v)), otypes=[float])(x)
    return float(out) if out.ndim == 0 else out


def stable_density_at_zero(p):
    """f(0) in closed form: Gamma(1+1/alpha) sin(pi rho) cos(pi alpha (rho-1/2))^(1/alpha) / pi."""
    if p.alpha == 2.0:
        return 1.0 / math.sqrt(2.0 * math.pi)
    a, r = p.alpha, p.rho
    return (special.gamma(1.0 + 1.0 / a) * math.sin(math.pi * r)
            * math.cos(math.pi * a * (r - 0.5)) ** (1.0 / a) / math.pi)


@lru_cache(maxsize=16)
def _tabulated(alpha, rho):
    p = StableParams(alpha, rho)
    u = np.linspace(-7.0, 7.0, 561)  # spline error < 2e-6 relative where f > 1e-8
    x = np.sinh(u)
    dens = stable_density(p, x)
    cdf = stable_cdf(p, x)
    return (x, interpolate.CubicSpline(u, np.log(np.maximum(dens, 1e-300))),
            interpolate.CubicSpline(u, cdf))


class FastStable:
    """Spline surrogate of f and F for repeated evaluation (|x| <= sinh(7) ~ 548).

    Outside the tabulated range the first-order power tails are used.
    """

    def __init__(self, p):
        self.p = p
        self._x, self._logf, self._cdf = _tabulated(p.alpha, p.rho)
        self._xmax = self._x[-1]
        self._cp, self._cm = levy_density_coefficients(p)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.p.alpha in (1.0, 2.0):
            return stable_density(self.p, x)
        out = np.exp(self._logf(np.arcsinh(np.clip(x, -self._xmax, self._xmax))))
        big = np.abs(x) > self._xmax
        if np.any(big):
            xb = x[big]
            c = np.where(xb > 0, self._cp, self._cm)
            out = np.where(big, 0.0, out)
            out[big] = c * np.abs(xb) ** (-1.0 - self.p.alpha)
        return out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.p.alpha in (1.0, 2.0):
            return stable_cdf(self.p, x)
        out = self._cdf(np.arcsinh(np.clip(x, -self._xmax, self._xmax)))
        a = self.p.alpha
        out = np.where(x > self._xmax, 1.0 - self._cp * np.abs(x) ** (-a) / a, out)
        out = np.where(x < -self._xmax, self._cm * np.abs(x) ** (-a) / a, out)
        return np.clip(out, 0.0, 1.0)


def sample_stable(p, rng, size=None):
    """Draws of Y_1 from a numpy Generator."""
    n = 1 if size is None else int(np.prod(size))
    out = _kernels.cms_stable(n, p.alpha, p.beta, rng)
    if size is None:
        return float(out[0])
    return out.reshape(size)


# ---------------------------------------------------------------------------
# meander densities


@dataclass
class MeanderTable:
    """Endpoint densities of the length-1 meander of Y (g) and of -Y (g_star).

    Values are histogram estimates over bins with the given ``edges``;
    ``grid`` holds the bin centres.  Treat instances as immutable.
    """

    params: StableParams
    edges: np.ndarray
    g_values: np.ndarray
    g_star_values: np.ndarray
    ci_g: np.ndarray
    ci_g_star: np.ndarray
    n_paths: int = 0
    n_steps: int = 0
    n_accepted: tuple = (0, 0)
    boundary_bins: int = field(default=3)

    def __post_init__(self):
        for name in ("edges", "g_values", "g_star_values", "ci_g", "ci_g_star"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def grid(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self):
        return np.diff(self.edges)

    @property
    def ci_half_widths(self):
        return np.column_stack([self.ci_g, self.ci_g_star])

    def values(self, which="g"):
        return self.g_values if which == "g" else self.g_star_values

    def boundary_exponent(self, which="g"):
        # near 0 the meander density of Y behaves like U(y) ~ y^(alpha rho)
        p = self.params
        return p.alpha * (p.rho if which == "g" else p.rho_bar)

    @cached_property
    def _boundary_fit(self):
        # least squares of the bin averages against those of C w^a
        out = {}
        k = self.boundary_bins
        e = self.edges[:k + 1]
        for which in ("g", "g_star"):
            a = self.boundary_exponent(which)
            basis = (e[1:] ** (a + 1.0) - e[:-1] ** (a + 1.0)) / ((a + 1.0) * np.diff(e))
            v = self.values(which)[:k]
            out[which] = (float(np.dot(basis, v) / np.dot(basis, basis)), a)
        return out

    def boundary_coefficient(self, which="g"):
        """C in g(w) ~ C w^a below the first ``boundary_bins`` bins (least squares)."""
        return self._boundary_fit[which][0]

    def density(self, w, which="g"):
        """Pointwise density with the power-law boundary extension near 0."""
        w = np.asarray(w, dtype=float)
        vals = self.values(which)
        c, a = self._boundary_fit[which]
        grid = self.grid
        lin = np.interp(w, grid, vals, left=0.0, right=0.0)
        cut = self.edges[self.boundary_bins]
        out = np.where(w < cut, c * np.clip(w, 0.0, None) ** a, lin)
        out = np.where(w > self.edges[-1], 0.0, out)
        return out

    def mass(self, which="g"):
        return float(np.trapezoid(self.values(which), self.grid))

    def kernel_moment(self, kernel_integral, kernel, which="g"):
        """int_0^inf k(w) g(w) dw using exact bin integrals of k.

        ``kernel_integral(a, b)`` must return int_a^b k; ``kernel(w)`` is used
        for the boundary piece with the power-law extension.
        """
        c, a = self._boundary_fit[which]
        b = self.boundary_bins
        e = self.edges
        body = float(np.sum(self.values(which)[b:] * kernel_integral(e[b:-1], e[b + 1:])))
        head, _ = _quiet_quad(lambda w: kernel(w) * c * w ** a, 0.0, e[b],
                                 epsabs=QUAD_EPSABS * 1e-3, epsrel=QUAD_EPSREL, limit=200)
        return head + body

    def negative_moment(self, order=None, z=0.0, which="g"):
        """E[(z + Z_1)^(-order)] from the table (order defaults to alpha)."""
        s = self.params.alpha if order is None else float(order)
        return self.kernel_moment(lambda lo, hi: _power_bin_integral(z, s, lo, hi),
                                  lambda w: (z + w) ** (-s), which)

    @cached_property
    def _phi_spline(self):
        z = np.concatenate([[0.0], np.geomspace(1e-7, 1e7, 561)])
        num = np.array([self.negative_moment(z=v) for v in z])
        phi = num / num[0]
        return z, num[0], interpolate.PchipInterpolator(np.log(z[1:]), np.log(phi[1:]))

    def phi(self, z):
        """phi(z) = E[(z + Z_1)^-alpha] / E[Z_1^-alpha], vectorized."""
        z = np.asarray(z, dtype=float)
        zz, norm, spl = self._phi_spline
        a = self.params.alpha
        mass = self.mass("g")
        lz = np.log(np.clip(z, zz[1], zz[-1]))
        out = np.exp(spl(lz))
        out = np.where(z < zz[1], 1.0 - (1.0 - np.exp(spl(np.log(zz[1])))) * np.clip(z, 0, None) / zz[1], out)
        out = np.where(z > zz[-1], mass * np.maximum(np.abs(z), zz[-1]) ** (-a) / norm, out)
        return np.where(z == 0.0, 1.0, out)

    def moment(self, z):
        """E[(z + Z_1)^-alpha] on the same interpolant as :meth:`phi`."""
        return self.phi(z) * self._phi_spline[1]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y", "g", "g_star", "ci_g", "ci_g_star"])
            for row in zip(self.grid, self.g_values, self.g_star_values, self.ci_g, self.ci_g_star):
                w.writerow([f"{v:.12g}" for v in row])

    @classmethod
    def from_csv(cls, path, params, n_paths=0, n_steps=0):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        centers = data[:, 0]
        return cls(params, _edges_from_centers(centers), data[:, 1], data[:, 2], data[:, 3],
                   data[:, 4], n_paths=n_paths, n_steps=n_steps)


def _power_bin_integral(z, s, lo, hi):
    lo = np.asarray(lo, dtype=float) + z
    hi = np.asarray(hi, dtype=float) + z
    if s == 1.0:
        return np.log(hi / lo)
    return (hi ** (1.0 - s) - lo ** (1.0 - s)) / (1.0 - s)


def _edges_from_centers(centers):
    centers = np.asarray(centers, dtype=float)
    if centers.size == 1:
        return np.array([0.0, 2.0 * centers[0]])
    mids = 0.5 * (centers[:-1] + centers[1:])
    first = max(0.0, centers[0] - (mids[0] - centers[0]))
    last = centers[-1] + (centers[-1] - mids[-1])
    return np.concatenate([[first], mids, [last]])


def default_meander_edges(samples, n_uniform=None, h=None):
    """Uniform bins of width h up to the 95% quantile, then geometric to the 99.9% quantile."""
    samples = np.asarray(samples)
    n = samples.size
    if h is None:
        q25, q75 = np.percentile(samples, [25, 75])
        h = max(0.02, 2.0 * (q75 - q25) * n ** (-1.0 / 3.0))
    split = np.quantile(samples, 0.95)
    top = np.quantile(samples, 0.999)
    uni = np.arange(0.0, split + h, h)
    if top > uni[-1] * 1.1:
        geo = np.geomspace(uni[-1], top, int(np.ceil(np.log(top / uni[-1]) / np.log(1.1))) + 1)[1:]
        return np.concatenate([uni, geo])
    return uni


def estimate_meander_densities(p, n_steps=512, n_paths=1_000_000, grid=None, rng=None,
                               min_tail=None, min_accepted=1000):
    """Histogram estimates of g and g_star from stable random walks.

    Each walk of ``n_steps`` exact stable increments is split at its minimum
    (for g) and at its maximum (for g_star); the post-split piece is a walk
    meander whose rescaled endpoint is one draw.  Splits leaving fewer than
    ``min_tail`` steps (default ``n_steps // 4``) are rejected, which bounds
    the lattice error of the discrete meander.
    """
    if n_steps < 64:
        raise ValueError("n_steps must be >= 64")
    rng = np.random.default_rng() if rng is None else rng
    min_tail = n_steps // 4 if min_tail is None else int(min_tail)
    z, z_star = _kernels.post_extremum_endpoints(n_paths, n_steps, p.alpha, p.beta, rng, min_tail)
    z = z[~np.isnan(z)]
    z_star = z_star[~np.isnan(z_star)]
    for arr in (z, z_star):
        if arr.size < min_accepted:
            raise InsufficientSamplesError(
                f"only {arr.size} accepted meander paths (need {min_accepted})", arr.size)
    return meander_table_from_samples(p, z, z_star, grid, n_paths=n_paths, n_steps=n_steps)


def meander_table_from_samples(p, z, z_star, grid=None, n_paths=0, n_steps=0):
    if grid is None:
        edges = default_meander_edges(np.concatenate([z, z_star]))
    else:
        grid = np.asarray(grid, dtype=float)
        if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be positive and strictly increasing")
        edges = _edges_from_centers(grid)
    cols = []
    w = np.diff(edges)
    for arr in (z, z_star):
        counts, _ = np.histogram(arr, bins=edges)
        n = arr.size
        frac = counts / n
        cols.append((frac / w, 1.96 * np.sqrt(frac * (1.0 - frac) / n) / w))
    return MeanderTable(p, edges, cols[0][0], cols[1][0], cols[0][1], cols[1][1],
                        n_paths=n_paths, n_steps=n_steps, n_accepted=(z.size, z_star.size))


def rayleigh_density(y):
    y = np.asarray(y, dtype=float)
    return np.where(y > 0, y * np.exp(-0.5 * y * y), 0.0)


def phi(p, z, table):
    """Normalized truncated negative moment of the meander endpoint."""
    if p.alpha * p.rho_bar >= 1.0:
        raise UnsupportedRegimeError("phi requires alpha*rho_bar < 1")
    if np.any(np.asarray(z) < 0):
        raise ValueError("phi is defined for z >= 0")
    out = table.phi(z)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# first-passage density of Y


_GL_HEAD = np.polynomial.legendre.leggauss(48)
_GL_BODY = np.polynomial.legendre.leggauss(6)


def _gauss_nodes(lo, hi, rule):
    x, w = rule
    lo = np.asarray(lo, dtype=float)[:, None]
    hi = np.asarray(hi, dtype=float)[:, None]
    half = 0.5 * (hi - lo)
    return (lo + half * (x + 1.0)).ravel(), (half * w).ravel()


def _passage_density_quadrature(p, x, table):
    # rho_bar * phi(z) = k_star * E[(z + Z_1)^-alpha] exactly (the identity
    # rho_bar = k_star E[Z_1^-alpha]); using the right side avoids the noisy
    # boundary estimate of E[Z_1^-alpha] in the normalization
    r, rb, eta = p.rho, p.rho_bar, p.eta
    k_star = levy_density_coefficients(p)[1] / p.alpha
    const = k_star / (special.gamma(rb) * special.gamma(r))
    cut = table.edges[table.boundary_bins]
    c_head, a_head = table._boundary_fit["g_star"]
    # g_star is linear between these knots beyond the boundary piece
    knots = np.union1d(table.edges[table.boundary_bins:], table.grid[table.grid > cut])

    def inner(s):
        if s <= 0.0 or s >= 1.0:
            return 0.0
        se = s ** eta
        top = min(x / se, knots[-1])
        scale = (1.0 - s) ** (-eta)
        total = 0.0
        hc = min(cut, top)
        if hc > 0.0:
            # u = w^(a+1) flattens the power-law head
            u, wt = _gauss_nodes([0.0], [hc ** (a_head + 1.0)], _GL_HEAD)
            w = u ** (1.0 / (a_head + 1.0))
            m = table.moment(np.clip((x - w * se) * scale, 0.0, None))
            total += c_head / (a_head + 1.0) * float(np.dot(wt, m))
        if top > cut:
            k = knots[knots < top]
            lo = k
            hi = np.append(k[1:], top)
            w, wt = _gauss_nodes(lo, hi, _GL_BODY)
            m = table.moment(np.clip((x - w * se) * scale, 0.0, None))
            total += float(np.dot(wt, m * table.density(w, "g_star")))
        return total * s ** (-r) * (1.0 - s) ** (-rb - 1.0)

    # break points where the truncation x s^-eta crosses the first knots
    brk = sorted({min(max((x / w) ** p.alpha, 1e-12), 1.0 - 1e-12) for w in knots[:8]} - {1.0 - 1e-12})
    pts = [0.0] + [b for b in brk if 0.0 < b < 1.0] + [1.0]
    val = 0.0
    for s0, s1 in zip(pts[:-1], pts[1:]):
        if s1 > s0:
            val += _quiet_quad(inner, s0, s1, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)[0]
    return const * val


def stable_passage_density(p, x, table=None):
    """Density at time 1 of the first passage of Y below 0 from ``x > 0``."""
    if not x > 0:
        raise ValueError("starting point must be positive")
    if p.alpha == 2.0:
        return x * math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if abs(p.alpha * p.rho_bar - 1.0) < 1e-12:
        # no negative jumps: passage below 0 is the first passage of -Y above x
        return x * float(stable_density(p, -x))
    if table is None:
        raise ValueError("a MeanderTable is required when alpha*rho_bar < 1")
    return _passage_density_quadrature(p, x, table)


def passage_density_at(p, x, t, table=None):
    """Density at time t from x, by self-similarity: t^-1 h_{x t^-eta}(1)."""
    return stable_passage_density(p, x * t ** (-p.eta), table) / t
