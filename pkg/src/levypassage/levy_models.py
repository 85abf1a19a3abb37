"""Registry of Levy processes in the domain of attraction of a stable law.

Every model has an exact power-law norming function c(t) = sigma_eff t^(1/alpha),
a closed-form negative-jump tail and known ladder exponents.  Simulation goes
through one packed parameter vector (see :mod:`levypassage._kernels`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .stable_core import StableParams, levy_density_coefficients, stable_step_params

# Largest admissible small-jump cutoff, in units of c(dt).  Up to this value the
# drift-corrected Gaussian surrogate of the small jumps keeps the one-step law
# within KS distance 0.005 of the exact stable law for every registry model.
KAPPA_MAX = 0.5


class ConfigurationError(ValueError):
    pass


class UnsupportedModelError(ValueError):
    pass


class ModelKind(str, enum.Enum):
    TWO_SIDED_STABLE = "TwoSidedStable"
    SPECTRALLY_POSITIVE_STABLE = "SpectrallyPositiveStable"
    SPECTRALLY_NEGATIVE_STABLE = "SpectrallyNegativeStable"
    BROWNIAN_MOTION = "BrownianMotion"
    BROWNIAN_PLUS_NEG_CP = "BrownianPlusNegCP"

    @property
    def is_stable(self):
        return self in (ModelKind.TWO_SIDED_STABLE, ModelKind.SPECTRALLY_POSITIVE_STABLE,
                        ModelKind.SPECTRALLY_NEGATIVE_STABLE)


@dataclass(frozen=True)
class ModelSpec:
    """A concrete Levy process.

    Stable kinds have unit scale (so c(t) = t^(1/alpha)); ``sigma`` is the
    Gaussian coefficient of the Brownian kinds.  BrownianPlusNegCP is
    sigma B_t + lam * jump_mean * t - (compound Poisson with rate ``lam`` and
    Exp(mean ``jump_mean``) jumps); the drift makes it centred.
    """

    kind: ModelKind
    limit: StableParams
    sigma: float = 0.0
    lam: float = 0.0
    jump_mean: float = 0.0
    name: str = ""

    def __post_init__(self):
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        a, r = self.limit.alpha, self.limit.rho
        if kind is ModelKind.BROWNIAN_MOTION:
            if not self.sigma > 0 or self.lam != 0.0:
                raise ConfigurationError("BrownianMotion needs sigma > 0 and no jumps")
        elif kind is ModelKind.BROWNIAN_PLUS_NEG_CP:
            if not (self.sigma > 0 and self.lam > 0 and self.jump_mean > 0):
                raise ConfigurationError("BrownianPlusNegCP needs sigma, lambda, jump_mean > 0")
        else:
            if a >= 2.0:
                raise ConfigurationError("stable kinds need alpha < 2")
            if kind is ModelKind.SPECTRALLY_NEGATIVE_STABLE and abs(a * r - 1.0) > 1e-12:
                raise ConfigurationError("spectrally negative stable needs alpha*rho = 1")
            if kind is ModelKind.SPECTRALLY_POSITIVE_STABLE and abs(a * (1.0 - r) - 1.0) > 1e-12:
                raise ConfigurationError("spectrally positive stable needs alpha*rho_bar = 1")
            if kind is ModelKind.TWO_SIDED_STABLE:
                cp, cm = levy_density_coefficients(self.limit)
                if min(cp, cm) <= 0.0:
                    raise ConfigurationError("two-sided stable needs jumps of both signs")
            if a <= 1.0 and kind is not ModelKind.TWO_SIDED_STABLE:
                # a one-sided stable law with alpha <= 1 is a subordinator
                raise ConfigurationError("one-sided stable kinds need alpha > 1")
        if kind in (ModelKind.BROWNIAN_MOTION, ModelKind.BROWNIAN_PLUS_NEG_CP) and a != 2.0:
            raise ConfigurationError("Brownian kinds are attracted to alpha = 2")
        if not self.name:
            object.__setattr__(self, "name", kind.value)

    # -- structural flags -------------------------------------------------
    @property
    def creeps_downward(self):
        return self.kind in (ModelKind.BROWNIAN_MOTION, ModelKind.BROWNIAN_PLUS_NEG_CP,
                             ModelKind.SPECTRALLY_POSITIVE_STABLE)

    @property
    def has_negative_jumps(self):
        return self.kind in (ModelKind.BROWNIAN_PLUS_NEG_CP, ModelKind.TWO_SIDED_STABLE,
                             ModelKind.SPECTRALLY_NEGATIVE_STABLE)

    @property
    def sigma_eff(self):
        """c(t) = sigma_eff * t^(1/alpha)."""
        if self.kind is ModelKind.BROWNIAN_MOTION:
            return self.sigma
        if self.kind is ModelKind.BROWNIAN_PLUS_NEG_CP:
            # m(x) -> sigma^2 + lam E[J^2] with E[J^2] = 2 mean^2
            return math.sqrt(self.sigma ** 2 + 2.0 * self.lam * self.jump_mean ** 2)
        return 1.0

    @property
    def k_star(self):
        """lim t * Pi*(c(t))."""
        if self.kind.is_stable:
            return levy_density_coefficients(self.limit)[1] / self.limit.alpha
        return 0.0

    @property
    def d_star_known(self):
        # the downward drift depends on the local-time normalization; only
        # ratio forms are used downstream
        return None

    @property
    def q_known(self):
        """Limiting proportion of continuous passage, where known in closed form."""
        if self.kind in (ModelKind.BROWNIAN_MOTION, ModelKind.SPECTRALLY_POSITIVE_STABLE):
            return 1.0
        if self.kind.is_stable:
            return 0.0
        s2 = self.sigma ** 2
        return s2 / (s2 + 2.0 * self.lam * self.jump_mean ** 2)

    def step_params(self, dt, kappa=None):
        """Packed kernel parameters for steps of length ``dt``."""
        if self.kind is ModelKind.BROWNIAN_MOTION:
            return _kernels.pack_params(0.0, self.sigma, 0.0)
        if self.kind is ModelKind.BROWNIAN_PLUS_NEG_CP:
            return _kernels.pack_params(self.lam * self.jump_mean, self.sigma, self.lam,
                                        jump_kind=_kernels.JUMP_NEG_EXP, jump_mean=self.jump_mean)
        from .stable_core import DEFAULT_KAPPA
        kappa = DEFAULT_KAPPA if kappa is None else kappa
        if not 0.0 < kappa <= KAPPA_MAX:
            raise ConfigurationError(
                f"small-jump cutoff {kappa} c(dt) outside (0, {KAPPA_MAX}] c(dt)")
        return stable_step_params(self.limit, dt, kappa)

    def dual_limit(self):
        return self.limit.dual()


def two_sided_stable(alpha=1.5, beta=0.0, name=""):
    return ModelSpec(ModelKind.TWO_SIDED_STABLE, StableParams.from_beta(alpha, beta), name=name)


def spectrally_negative_stable(alpha=1.5, name=""):
    return ModelSpec(ModelKind.SPECTRALLY_NEGATIVE_STABLE, StableParams(alpha, 1.0 / alpha), name=name)


def spectrally_positive_stable(alpha=1.5, name=""):
    return ModelSpec(ModelKind.SPECTRALLY_POSITIVE_STABLE, StableParams(alpha, 1.0 - 1.0 / alpha),
                     name=name)


def brownian(sigma=1.0, name=""):
    return ModelSpec(ModelKind.BROWNIAN_MOTION, StableParams(2.0, 0.5), sigma=sigma, name=name)


def brownian_plus_neg_cp(sigma=1.0, lam=1.0, jump_mean=1.0, name=""):
    return ModelSpec(ModelKind.BROWNIAN_PLUS_NEG_CP, StableParams(2.0, 0.5), sigma=sigma, lam=lam,
                     jump_mean=jump_mean, name=name)


REGISTRY = {
    "brownian": brownian(name="brownian"),
    "cauchy": two_sided_stable(1.0, 0.0, name="cauchy"),
    "stable_two_sided": two_sided_stable(1.5, 0.0, name="stable_two_sided"),
    "stable_neg": spectrally_negative_stable(1.5, name="stable_neg"),
    "stable_pos": spectrally_positive_stable(1.5, name="stable_pos"),
    "bm_cp": brownian_plus_neg_cp(name="bm_cp"),
}


def dual_model(m):
    """The model of -X (registry kinds only)."""
    if m.kind is ModelKind.BROWNIAN_MOTION:
        return m
    if m.kind is ModelKind.SPECTRALLY_NEGATIVE_STABLE:
        return spectrally_positive_stable(m.limit.alpha, name=f"dual_{m.name}")
    if m.kind is ModelKind.SPECTRALLY_POSITIVE_STABLE:
        return spectrally_negative_stable(m.limit.alpha, name=f"dual_{m.name}")
    if m.kind is ModelKind.TWO_SIDED_STABLE:
        return ModelSpec(m.kind, m.limit.dual(), name=f"dual_{m.name}")
    raise UnsupportedModelError(f"the dual of {m.name} is not a registry kind")


def get_model(name):
    try:
        return REGISTRY[name]
    except KeyError:
        raise ConfigurationError(f"unknown model {name!r}; known: {sorted(REGISTRY)}") from None


def model_from_fields(kind, alpha=None, sigma=1.0, lam=1.0, jump_mean=1.0, beta=0.0):
    """Build a model from the config-file fields."""
    kind = ModelKind(kind)
    if kind is ModelKind.BROWNIAN_MOTION:
        return brownian(sigma)
    if kind is ModelKind.BROWNIAN_PLUS_NEG_CP:
        return brownian_plus_neg_cp(sigma, lam, jump_mean)
    if alpha is None:
        raise ConfigurationError("stable kinds need model.alpha")
    if kind is ModelKind.SPECTRALLY_NEGATIVE_STABLE:
        return spectrally_negative_stable(alpha)
    if kind is ModelKind.SPECTRALLY_POSITIVE_STABLE:
        return spectrally_positive_stable(alpha)
    return two_sided_stable(alpha, beta)


# ---------------------------------------------------------------------------


def norming_function(m, t):
    if not t > 0:
        raise ValueError("t must be positive")
    return m.sigma_eff * np.asarray(t, dtype=float) ** (1.0 / m.limit.alpha)


def levy_tail_neg(m, y):
    """Pi*(y) = Pi(-inf, -y) for y > 0."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("levy_tail_neg needs y > 0")
    if m.kind is ModelKind.BROWNIAN_PLUS_NEG_CP:
        out = m.lam * np.exp(-y / m.jump_mean)
    elif m.has_negative_jumps:
        cm = levy_density_coefficients(m.limit)[1]
        out = cm / m.limit.alpha * y ** (-m.limit.alpha)
    else:
        out = np.zeros_like(y)
    return float(out) if out.ndim == 0 else out


def effective_tail_neg(m, y, par):
    """Negative-jump tail of the simulated process (explicit jumps only).

    For stable kinds jumps smaller than the cutoff ``eps`` are folded into the
    Gaussian surrogate, so the tail saturates at Pi*(eps).  This is the exact
    jump-passage intensity of the simulation.
    """
    y = np.asarray(y, dtype=float)
    if m.kind.is_stable:
        eps = par[3]
        return levy_tail_neg(m, np.maximum(y, eps))
    if m.kind is ModelKind.BROWNIAN_PLUS_NEG_CP:
        return m.lam * np.exp(-np.maximum(y, 0.0) / m.jump_mean)
    return np.zeros_like(y)


def cutoff_bound(m, dt):
    """Largest admissible explicit-jump cutoff for steps of length dt."""
    if m.kind.is_stable:
        return KAPPA_MAX * float(norming_function(m, dt))
    return math.inf


@dataclass
class Increment:
    continuous: float
    jumps: list


def increment_sampler(m, dt, eps, rng):
    """One increment over (0, dt], split into a Gaussian part and explicit jumps.

    Stable kinds: jumps with |J| > eps are explicit and the small jumps are
    replaced by a drift-corrected Gaussian.  Compound Poisson jumps are always
    explicit (finite activity, so no approximation is needed).
    """
    par = _step_params_for_cutoff(m, dt, eps)
    mu, sd, lam = par[0], par[1], par[2]
    cont = mu * dt + sd * math.sqrt(dt) * rng.standard_normal()
    jumps = []
    if lam > 0.0:
        for _ in range(rng.poisson(lam * dt)):
            if par[6] == _kernels.JUMP_NEG_EXP:
                jumps.append(-par[7] * rng.standard_exponential())
            else:
                size = par[3] * rng.random() ** (-1.0 / par[5])
                jumps.append(size if rng.random() < par[4] else -size)
    return Increment(cont, jumps)


def sample_increments(m, dt, eps, rng, n):
    """Vectorized version: (Gaussian parts, jump sums, jump counts)."""
    par = _step_params_for_cutoff(m, dt, eps)
    return _kernels.increments_split(int(n), dt, par, rng)


def _step_params_for_cutoff(m, dt, eps):
    if not eps > 0:
        raise ConfigurationError("cutoff must be positive")
    if m.kind.is_stable:
        bound = cutoff_bound(m, dt)
        if eps > bound:
            raise ConfigurationError(
                f"cutoff {eps:g} exceeds the Gaussian-approximation bound {bound:g} for dt={dt:g}")
        return m.step_params(dt, eps / float(norming_function(m, dt)))
    return m.step_params(dt)


# ---------------------------------------------------------------------------
# ladder data


@dataclass
class LadderData:
    """Ladder-height information of a model.

    ``U_coef``/``U_star_coef`` give the closed form U(x) = coef * x^exponent
    (stable and Brownian kinds).  For BrownianPlusNegCP the descending renewal
    function is tabulated from simulated ladder heights of a fine grid
    skeleton; ``heights``/``heights_up`` keep the raw samples.
    """

    U_exponent: float
    U_star_exponent: float
    U_coef: float | None = 1.0
    U_star_coef: float | None = 1.0
    grid: np.ndarray | None = None
    U_star_table: np.ndarray | None = None
    U_table: np.ndarray | None = None
    heights: np.ndarray | None = field(default=None, repr=False)
    heights_up: np.ndarray | None = field(default=None, repr=False)
    dt: float = 0.0
    n_censored: int = 0

    def U_star_empirical(self, x):
        return np.interp(x, self.grid, self.U_star_table)

    def U_empirical(self, x):
        return np.interp(x, self.grid, self.U_table)


def closed_form_ladder(m):
    p = m.limit
    if m.kind is ModelKind.BROWNIAN_PLUS_NEG_CP:
        return LadderData(1.0, 1.0, None, None)
    return LadderData(p.alpha * p.rho, p.alpha * p.rho_bar)


def renewal_from_heights(heights, grid):
    """Renewal function sum_k P(H_1+...+H_k <= x) from an i.i.d. height sample.

    Consecutive heights are summed into renewal sequences that restart once
    past ``grid[-1]``; each renewal is placed at the midpoint of its step,
    which cancels the first-order lattice offset of a grid skeleton.
    """
    heights = np.asarray(heights, dtype=float)
    xmax = grid[-1]
    cs = np.cumsum(heights)
    points = []
    runs = 0
    start = 0.0
    prev = 0.0
    for i, c in enumerate(cs):
        level = c - start
        if level > xmax:
            # the overshooting step's midpoint can still lie below xmax
            points.append(0.5 * (prev + level))
            runs += 1
            start = c
            prev = 0.0
            continue
        points.append(0.5 * (prev + level))
        prev = level
    if runs == 0:
        raise ValueError("height sample too small to complete one renewal sequence")
    points = np.sort(np.asarray(points))
    # the k = 0 renewal (at level 0) is replaced by the midpoint of the first step
    return np.searchsorted(points, grid, side="right") / runs


def estimate_ladder_data(m, n_epochs=100_000, dt=1e-3, rng=None, cap=1_000_000,
                         grid=None, upward=True):
    """Simulate ladder heights of the dt-skeleton and tabulate U* (and U)."""
    rng = np.random.default_rng() if rng is None else rng
    base = closed_form_ladder(m)
    par = m.step_params(dt)
    h = _kernels.ladder_heights(int(n_epochs), dt, par, rng, int(cap), True)
    cens = int(np.isnan(h).sum())
    h = h[~np.isnan(h)]
    grid = np.linspace(0.0, 5.0, 501) if grid is None else np.asarray(grid, dtype=float)
    u_star = renewal_from_heights(h, grid)
    h_up = None
    u = None
    if upward:
        h_up = _kernels.ladder_heights(int(n_epochs), dt, par, rng, int(cap), False)
        cens += int(np.isnan(h_up).sum())
        h_up = h_up[~np.isnan(h_up)]
        u = renewal_from_heights(h_up, grid)
    return LadderData(base.U_exponent, base.U_star_exponent, base.U_coef, base.U_star_coef,
                      grid, u_star, u, h, h_up, dt, cens)


def bm_cp_renewal_closed_form(m, x, which="down"):
    """Renewal functions of BrownianPlusNegCP in the normalization where the
    Laplace exponent of the descending ladder height is psi(b)/b with
    psi(b) = sigma^2 b^2 / 2 + lam m^2 b^2 / (1 + m b) (m = jump mean)."""
    x = np.asarray(x, dtype=float)
    a = 0.5 * m.sigma ** 2
    lam, mu = m.lam, m.jump_mean
    if which == "up":
        # no positive jumps: the ascending ladder height is the running maximum
        return x.copy()
    total = a + lam * mu * mu
    r = total / (a * mu)
    return x / total + lam * mu ** 3 / total ** 2 * (1.0 - np.exp(-r * x))


def renewal_U(m, x, which="down", ladder=None):
    """U (which='up') or U* (which='down') at x, up to the fixed normalization."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("renewal function needs x >= 0")
    if which not in ("up", "down"):
        raise ValueError("which must be 'up' or 'down'")
    if m.kind is ModelKind.BROWNIAN_PLUS_NEG_CP:
        if ladder is not None and ladder.grid is not None:
            out = ladder.U_star_empirical(x) if which == "down" else ladder.U_empirical(x)
        else:
            out = bm_cp_renewal_closed_form(m, x, which)
    else:
        p = m.limit
        e = p.alpha * (p.rho if which == "up" else p.rho_bar)
        out = x ** e
    return float(out) if np.ndim(out) == 0 else out
