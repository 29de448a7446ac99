"""Natural exponential-family noise models.

Each model is determined by its log-partition function ``G`` on an open
natural-parameter domain: the mean map is ``G'``, the variance map is
``G''``, and the Bregman divergence of ``G`` coincides with the
Kullback-Leibler divergence between two members of the family.

Supported models (natural parameter ``x``):

====================  ================  =========================
model                 natural domain    log-partition G(x)
====================  ================  =========================
gaussian (sigma)      all reals         sigma^2 x^2 / 2
binomial (trials N)   all reals         N log(1 + e^x)
poisson               all reals         e^x
exponential           x < 0             -log(-x)
====================  ================  =========================

A draw at parameter ``x`` has mean ``G'(x)`` and variance ``G''(x)``;
in particular the Gaussian model produces ``Y ~ N(sigma^2 x, sigma^2)``
and the exponential model produces an exponential variable with rate
``-x``.

The base measure of the density never needs to be evaluated: it enters
every likelihood only as an additive constant, so all objectives in
:mod:`expmc.estimator` drop it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "DomainError",
    "ParameterBox",
    "IntervalConstants",
    "ExponentialFamily",
    "Gaussian",
    "Binomial",
    "Poisson",
    "Exponential",
    "family_from_config",
    "family_to_config",
    "box_from_config",
]

_DELTA_BRACKET = (1e-6, 1e6)


class DomainError(ValueError):
    """A natural parameter fell outside the model's domain."""


@dataclass(frozen=True)
class ParameterBox:
    """Closed interval ``[lo, hi]`` constraining the entries of a parameter matrix."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("box endpoints must be finite")
        if not self.lo < self.hi:
            raise ValueError(f"box requires lo < hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def symmetric(cls, gamma: float) -> "ParameterBox":
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        return cls(-float(gamma), float(gamma))

    @property
    def radius(self) -> float:
        """Sup-norm radius max(|lo|, |hi|) of the box."""
        return max(abs(self.lo), abs(self.hi))

    def contains(self, a, tol: float = 0.0) -> bool:
        a = np.asarray(a, dtype=float)
        return bool(np.all(a >= self.lo - tol) and np.all(a <= self.hi + tol))


@dataclass(frozen=True)
class IntervalConstants:
    """Curvature, sub-exponential and mean-map constants of a model over a box.

    ``sigma_lo_sq`` / ``sigma_hi_sq`` bound the variance map ``G''`` from
    below / above on the box, ``delta_gamma`` is the smallest scale at
    which the centered observation is sub-exponential uniformly over the
    box, and ``l_gamma`` is the largest absolute mean ``sup |G'|``.
    """

    sigma_lo_sq: float
    sigma_hi_sq: float
    delta_gamma: float
    l_gamma: float

    def __post_init__(self):
        if not (0 < self.sigma_lo_sq <= self.sigma_hi_sq):
            raise ValueError("curvature bounds must satisfy 0 < sigma_lo_sq <= sigma_hi_sq")
        if not (self.delta_gamma > 0 and math.isfinite(self.delta_gamma)):
            raise ValueError("delta_gamma must be positive and finite")
        if not self.l_gamma >= 0:
            raise ValueError("l_gamma must be nonnegative")


def _maybe_scalar(out: np.ndarray, scalar: bool):
    return float(out) if scalar else out


class ExponentialFamily:
    """Base class; concrete models implement the log-partition hooks."""

    name: str = ""
    # Open natural-parameter domain (domain_lo, domain_hi).
    domain_lo: float = -math.inf
    domain_hi: float = math.inf

    # -- domain handling -------------------------------------------------

    def in_domain(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(np.isfinite(x)) and np.all(x > self.domain_lo) and np.all(x < self.domain_hi))

    def _require_domain(self, x: np.ndarray):
        if not self.in_domain(x):
            raise DomainError(
                f"natural parameter outside the open domain "
                f"({self.domain_lo}, {self.domain_hi}) of the {self.name} model"
            )

    def validate_box(self, box: ParameterBox):
        """Reject boxes that are not strictly inside the domain."""
        if not (box.lo > self.domain_lo and box.hi < self.domain_hi):
            raise DomainError(
                f"box [{box.lo}, {box.hi}] is not strictly inside the "
                f"{self.name} domain ({self.domain_lo}, {self.domain_hi})"
            )

    # -- hooks implemented by subclasses ---------------------------------

    def _g(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _g1(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _g2(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _bregman(self, x: np.ndarray, x_ref: np.ndarray) -> np.ndarray:
        # Generic fallback; subclasses override with cancellation-safe forms.
        return self._g(x) - self._g(x_ref) - self._g1(x_ref) * (x - x_ref)

    def _sample(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def _variance_bounds(self, box: ParameterBox) -> tuple[float, float]:
        raise NotImplementedError

    def _mean_abs_max(self, box: ParameterBox) -> float:
        raise NotImplementedError

    def _centered_abs_exp_moment(self, x: np.ndarray, scale: float) -> np.ndarray:
        """E[exp(|Y - G'(x)| / scale)] for each x, +inf where divergent."""
        raise NotImplementedError

    # -- public vectorized operations ------------------------------------

    def log_partition(self, x):
        scalar = np.isscalar(x)
        x = np.asarray(x, dtype=float)
        self._require_domain(x)
        return _maybe_scalar(self._g(x), scalar)

    def mean(self, x):
        """Mean map G'(x) of an observation at natural parameter x."""
        scalar = np.isscalar(x)
        x = np.asarray(x, dtype=float)
        self._require_domain(x)
        return _maybe_scalar(self._g1(x), scalar)

    def variance(self, x):
        """Variance map G''(x); strictly positive on the domain."""
        scalar = np.isscalar(x)
        x = np.asarray(x, dtype=float)
        self._require_domain(x)
        return _maybe_scalar(self._g2(x), scalar)

    def bregman(self, x, x_ref):
        """Bregman divergence G(x) - G(x_ref) - G'(x_ref) (x - x_ref).

        Nonnegative, zero exactly at ``x == x_ref``; equals the
        Kullback-Leibler divergence KL(P_{x_ref} || P_x).
        """
        scalar = np.isscalar(x) and np.isscalar(x_ref)
        x = np.asarray(x, dtype=float)
        x_ref = np.asarray(x_ref, dtype=float)
        self._require_domain(x)
        self._require_domain(x_ref)
        return _maybe_scalar(self._bregman(x, x_ref), scalar)

    def sample(self, x, rng: np.random.Generator):
        """One draw per natural parameter, using the caller-supplied generator."""
        scalar = np.isscalar(x)
        x = np.asarray(x, dtype=float)
        self._require_domain(x)
        return _maybe_scalar(np.asarray(self._sample(x, rng), dtype=float), scalar)

    def variance_bounds(self, box: ParameterBox) -> tuple[float, float]:
        """Closed-form (min, max) of the variance map G'' over the box."""
        self.validate_box(box)
        return self._variance_bounds(box)

    # -- interval constants -----------------------------------------------

    def interval_constants(
        self,
        box: ParameterBox,
        grid_points: int = 101,
        bisect_iters: int = 60,
        bracket: tuple[float, float] = _DELTA_BRACKET,
    ) -> IntervalConstants:
        """Curvature bounds, mean-map bound and sub-exponential scale over a box.

        The variance bounds and ``sup |G'|`` are closed-form for every
        supported model. ``delta_gamma`` is found by bisection: the
        smallest scale (within bracket resolution) at which
        ``E[exp(|Y - G'(x)| / delta)] <= e`` holds on a uniform grid of
        ``grid_points`` parameters spanning the box.
        """
        self.validate_box(box)
        lo_sq, hi_sq = self._variance_bounds(box)
        l_gamma = self._mean_abs_max(box)
        if not (math.isfinite(lo_sq) and math.isfinite(hi_sq) and math.isfinite(l_gamma)) or lo_sq <= 0:
            raise ValueError(f"interval constants are not finite/positive for box [{box.lo}, {box.hi}]")
        delta = self._solve_delta(box, grid_points, bisect_iters, bracket)
        return IntervalConstants(lo_sq, hi_sq, delta, l_gamma)

    def _solve_delta(self, box, grid_points, bisect_iters, bracket) -> float:
        xs = np.linspace(box.lo, box.hi, grid_points)
        target = math.e

        def feasible(scale: float) -> bool:
            with np.errstate(over="ignore"):
                vals = self._centered_abs_exp_moment(xs, scale)
            return bool(np.max(vals) <= target)

        lo, hi = bracket
        if not feasible(hi):
            raise ValueError(
                f"sub-exponential scale exceeds {hi:g} for box [{box.lo}, {box.hi}]; "
                "the box is too close to the domain boundary"
            )
        if feasible(lo):
            return lo
        for _ in range(bisect_iters):
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                hi = mid
            else:
                lo = mid
        return hi


@dataclass(frozen=True)
class Gaussian(ExponentialFamily):
    """Gaussian observations with known standard deviation."""

    sigma: float = 1.0
    name = "gaussian"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def _g(self, x):
        return 0.5 * self.sigma**2 * x**2

    def _g1(self, x):
        return self.sigma**2 * x

    def _g2(self, x):
        return np.full_like(x, self.sigma**2)

    def _bregman(self, x, x_ref):
        return 0.5 * self.sigma**2 * (x - x_ref) ** 2

    def _sample(self, x, rng):
        return rng.normal(loc=self.sigma**2 * x, scale=self.sigma)

    def _variance_bounds(self, box):
        return self.sigma**2, self.sigma**2

    def _mean_abs_max(self, box):
        return self.sigma**2 * box.radius

    def _centered_abs_exp_moment(self, x, scale):
        # |Y - mean| is a folded normal; the moment does not depend on x.
        x = np.asarray(x, dtype=float)
        s = self.sigma / scale
        if 0.5 * s * s > 700.0:
            return np.full(x.shape, math.inf)
        val = 2.0 * math.exp(0.5 * s * s) * special.ndtr(s)
        return np.full(x.shape, val)


@dataclass(frozen=True)
class Binomial(ExponentialFamily):
    """Binomial counts with a known number of trials; x is the log-odds."""

    trials: int = 1
    name = "binomial"

    def __post_init__(self):
        if not (isinstance(self.trials, int) and self.trials >= 1):
            raise ValueError("trials must be an integer >= 1")

    def _g(self, x):
        return self.trials * np.logaddexp(0.0, x)

    def _g1(self, x):
        return self.trials * special.expit(x)

    def _g2(self, x):
        p = special.expit(x)
        return self.trials * p * (1.0 - p)

    def _bregman(self, x, x_ref):
        return self.trials * (
            np.logaddexp(0.0, x) - np.logaddexp(0.0, x_ref) - special.expit(x_ref) * (x - x_ref)
        )

    def _sample(self, x, rng):
        return rng.binomial(self.trials, special.expit(x))

    def _variance_bounds(self, box):
        ends = [float(self._g2(np.asarray(v))) for v in (box.lo, box.hi)]
        hi = 0.25 * self.trials if box.lo <= 0.0 <= box.hi else max(ends)
        return min(ends), hi

    def _mean_abs_max(self, box):
        return float(self.trials * special.expit(box.hi))

    def _centered_abs_exp_moment(self, x, scale):
        x = np.asarray(x, dtype=float)[..., None]
        k = np.arange(self.trials + 1, dtype=float)
        log_pmf = (
            special.gammaln(self.trials + 1)
            - special.gammaln(k + 1)
            - special.gammaln(self.trials - k + 1)
            - k * np.logaddexp(0.0, -x)
            - (self.trials - k) * np.logaddexp(0.0, x)
        )
        log_term = log_pmf + np.abs(k - self.trials * special.expit(x)) / scale
        return np.exp(special.logsumexp(log_term, axis=-1))


@dataclass(frozen=True)
class Poisson(ExponentialFamily):
    """Poisson counts; x is the log-intensity."""

    name = "poisson"

    def _g(self, x):
        return np.exp(x)

    def _g1(self, x):
        return np.exp(x)

    def _g2(self, x):
        return np.exp(x)

    def _bregman(self, x, x_ref):
        return np.exp(x_ref) * (np.expm1(x - x_ref) - (x - x_ref))

    def _sample(self, x, rng):
        return rng.poisson(np.exp(x))

    def _variance_bounds(self, box):
        return math.exp(box.lo), math.exp(box.hi)

    def _mean_abs_max(self, box):
        return math.exp(box.hi)

    def _centered_abs_exp_moment(self, x, scale):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape)
        flat = out.reshape(-1)
        for i, xi in enumerate(x.reshape(-1)):
            flat[i] = _poisson_abs_moment(math.exp(xi), scale)
        return out


def _poisson_abs_moment(lam: float, scale: float, k_cap: int = 200_000) -> float:
    """E[exp(|Y - lam| / scale)] for Y ~ Poisson(lam), by log-space summation."""
    growth = math.exp(min(1.0 / scale, 35.0))
    peak = lam * growth
    kmax = int(min(lam + peak + 12.0 * math.sqrt(peak + 1.0) + 60.0, k_cap))
    k = np.arange(kmax + 1, dtype=float)
    log_term = -lam + k * math.log(lam) - special.gammaln(k + 1) + np.abs(k - lam) / scale
    m = float(log_term.max())
    if m > 500.0:
        return math.inf
    total = m + math.log(float(np.exp(log_term - m).sum()))
    if kmax >= k_cap and log_term[-1] > m - 60.0 and total <= 1.5:
        raise ValueError("poisson sub-exponential moment series did not converge")
    return math.exp(total) if total < 700.0 else math.inf


@dataclass(frozen=True)
class Exponential(ExponentialFamily):
    """Exponentially distributed observations with rate -x; domain x < 0."""

    name = "exponential"
    domain_hi = 0.0

    def _g(self, x):
        return -np.log(-x)

    def _g1(self, x):
        return -1.0 / x

    def _g2(self, x):
        return 1.0 / x**2

    def _bregman(self, x, x_ref):
        u = (x - x_ref) / x_ref
        return u - np.log1p(u)

    def _sample(self, x, rng):
        return rng.exponential(scale=-1.0 / x)

    def _variance_bounds(self, box):
        return 1.0 / box.lo**2, 1.0 / box.hi**2

    def _mean_abs_max(self, box):
        return -1.0 / box.hi

    def _centered_abs_exp_moment(self, x, scale):
        # Closed form for the folded exponential; diverges once the tilt
        # 1/scale reaches the rate -x.
        x = np.asarray(x, dtype=float)
        u = -1.0 / (scale * x)
        out = np.full(x.shape, math.inf)
        ok = u < 1.0
        uu = u[ok]
        out[ok] = np.exp(uu) * (1.0 - np.exp(-1.0 - uu)) / (1.0 + uu) + math.exp(-1.0) / (1.0 - uu)
        return out


_FAMILY_BUILDERS = {
    "gaussian": lambda d: Gaussian(sigma=float(d.get("sigma", 1.0))),
    "binomial": lambda d: Binomial(trials=int(d.get("trials", 1))),
    "poisson": lambda d: Poisson(),
    "exponential": lambda d: Exponential(),
}


def family_from_config(spec: dict) -> ExponentialFamily:
    """Build a model from its config-file form, e.g. ``{"family": "gaussian", "sigma": 1.0}``."""
    name = spec.get("family")
    if name not in _FAMILY_BUILDERS:
        raise ValueError(f"unknown family {name!r}; expected one of {sorted(_FAMILY_BUILDERS)}")
    return _FAMILY_BUILDERS[name](spec)


def family_to_config(family: ExponentialFamily) -> dict:
    spec = {"family": family.name}
    if isinstance(family, Gaussian):
        spec["sigma"] = family.sigma
    elif isinstance(family, Binomial):
        spec["trials"] = family.trials
    return spec


def box_from_config(spec: dict) -> ParameterBox:
    """Build a box from its config-file form ``{"lo": -1.0, "hi": 1.0}``."""
    return ParameterBox(float(spec["lo"]), float(spec["hi"]))
