"""Penalized maximum-likelihood matrix completion.

Two estimation modes share one solver:

* ``likelihood`` — minimize the averaged negative log-likelihood of the
  observed entries plus a nuclear-norm penalty, subject to an entrywise
  box constraint;
* ``known_sampling`` — when the entry-sampling distribution is known,
  replace the empirical log-partition average with its expectation under
  the sampling table (the data term keeps the empirical average).

The solver is an accelerated proximal-gradient method with momentum
restarts on objective increase and halving backtracking, using the
Dykstra combined proximal operator for nuclear norm + box. The returned
iterate is always box-feasible and the recorded objective trace is
non-increasing up to proximal slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .families import DomainError, ExponentialFamily, ParameterBox
from .matops import box_clip, combined_prox, nuclear_norm, operator_norm
from .sampling import ObservationSet, SamplingScheme

__all__ = [
    "LIKELIHOOD",
    "KNOWN_SAMPLING",
    "SolverConfig",
    "CompletionProblem",
    "FitResult",
    "neg_loglik",
    "gradient",
    "theorem_lambda",
    "oracle_lambda",
    "fit",
]

LIKELIHOOD = "likelihood"
KNOWN_SAMPLING = "known_sampling"

_C_STAR = 1.0 + math.sqrt(3.0)


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-9
    max_iters: int = 5000
    dykstra_iters: int = 200
    dykstra_tol: float = 1e-10
    c_gamma: float = 1.0
    c_star: float = _C_STAR

    @classmethod
    def from_dict(cls, d: dict | None) -> "SolverConfig":
        if not d:
            return cls()
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown solver config keys: {sorted(extra)}")
        kwargs = dict(d)
        if "max_iters" in kwargs:
            kwargs["max_iters"] = int(kwargs["max_iters"])
        if "dykstra_iters" in kwargs:
            kwargs["dykstra_iters"] = int(kwargs["dykstra_iters"])
        return cls(**kwargs)


@dataclass(eq=False)
class CompletionProblem:
    """Observations plus model, box constraint and penalty level.

    ``scheme`` is required in ``known_sampling`` mode and must match the
    observation dimensions.
    """

    obs: ObservationSet
    family: ExponentialFamily
    box: ParameterBox
    lam: float
    mode: str = LIKELIHOOD
    scheme: SamplingScheme | None = None

    # Derived summaries of the sample, filled in __post_init__.
    counts: np.ndarray = field(init=False, repr=False)
    y_sum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("penalty level must be >= 0")
        if self.mode not in (LIKELIHOOD, KNOWN_SAMPLING):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == KNOWN_SAMPLING:
            if self.scheme is None:
                raise ValueError("known_sampling mode requires a sampling scheme")
            if (self.scheme.m1, self.scheme.m2) != (self.obs.m1, self.obs.m2):
                raise ValueError("scheme dimensions do not match the observations")
        self.family.validate_box(self.box)
        shape = (self.obs.m1, self.obs.m2)
        counts = np.zeros(shape)
        y_sum = np.zeros(shape)
        np.add.at(counts, (self.obs.rows, self.obs.cols), 1.0)
        np.add.at(y_sum, (self.obs.rows, self.obs.cols), self.obs.ys)
        self.counts = counts
        self.y_sum = y_sum
        self._sup = np.nonzero(counts)
        self._sup_counts = counts[self._sup]
        self._sup_ysum = y_sum[self._sup]

    @property
    def shape(self) -> tuple[int, int]:
        return self.obs.m1, self.obs.m2

    def with_lambda(self, lam: float) -> "CompletionProblem":
        return replace(self, lam=lam)


def neg_loglik(problem: CompletionProblem, x: np.ndarray) -> float:
    """Data-fit term of the objective (base-measure constant dropped).

    ``likelihood`` mode averages ``G(x) - x y`` over the sample; entries
    never observed do not enter. ``known_sampling`` mode replaces the
    empirical log-partition average by its expectation under the scheme,
    so the whole matrix must lie in the model domain.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != problem.shape:
        raise ValueError("matrix shape does not match the observations")
    fam = problem.family
    n = problem.obs.n
    if problem.mode == LIKELIHOOD:
        vals = x[problem._sup]
        fam._require_domain(vals)
        return float((problem._sup_counts * fam._g(vals) - problem._sup_ysum * vals).sum() / n)
    fam._require_domain(x)
    data = float((x[problem._sup] * problem._sup_ysum).sum() / n)
    return float((problem.scheme.pi * fam._g(x)).sum()) - data


def gradient(problem: CompletionProblem, x: np.ndarray) -> np.ndarray:
    """Gradient of :func:`neg_loglik` at ``x``; vanishes entrywise at the
    noiseless truth in ``likelihood`` mode."""
    x = np.asarray(x, dtype=float)
    if x.shape != problem.shape:
        raise ValueError("matrix shape does not match the observations")
    fam = problem.family
    n = problem.obs.n
    if problem.mode == LIKELIHOOD:
        vals = x[problem._sup]
        fam._require_domain(vals)
        grad = np.zeros(problem.shape)
        grad[problem._sup] = (problem._sup_counts * fam._g1(vals) - problem._sup_ysum) / n
        return grad
    fam._require_domain(x)
    return problem.scheme.pi * fam._g1(x) - problem.y_sum / n


def theorem_lambda(
    which: str,
    consts,
    scheme: SamplingScheme,
    n: int,
    c_gamma: float = 1.0,
    c_star: float = _C_STAR,
) -> float:
    """Theoretically prescribed penalty level for either estimation mode.

    ``which="likelihood"``: ``2 c_gamma sigma_hi sqrt(2 nu log(d) / (m n))``.
    ``which="known_sampling"``: ``(c_gamma sigma_hi + c_star l_gamma) sqrt(2 log(d) / (m n))``.

    Here ``d = m1 + m2`` and ``m = min(m1, m2)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = scheme.m1 + scheme.m2
    m = min(scheme.m1, scheme.m2)
    sigma_hi = math.sqrt(consts.sigma_hi_sq)
    if which == LIKELIHOOD:
        nu = scheme.nu_constant()
        return 2.0 * c_gamma * sigma_hi * math.sqrt(2.0 * nu * math.log(d) / (m * n))
    if which == KNOWN_SAMPLING:
        return (c_gamma * sigma_hi + c_star * consts.l_gamma) * math.sqrt(2.0 * math.log(d) / (m * n))
    raise ValueError(f"unknown lambda rule {which!r}")


def oracle_lambda(problem: CompletionProblem, x_bar: np.ndarray) -> float:
    """Penalty level from the score at the (simulation-only) truth.

    Twice the operator norm of the gradient in ``likelihood`` mode, the
    operator norm itself in ``known_sampling`` mode.
    """
    factor = 2.0 if problem.mode == LIKELIHOOD else 1.0
    return factor * operator_norm(gradient(problem, x_bar))


@dataclass(eq=False)
class FitResult:
    x_hat: np.ndarray
    objective_trace: list[float]
    iterations: int
    converged: bool
    prox_residual: float
    lambda_used: float


def _objective(problem: CompletionProblem, x: np.ndarray) -> float:
    return neg_loglik(problem, x) + problem.lam * nuclear_norm(x)


def _step_weight(problem: CompletionProblem) -> float:
    if problem.mode == LIKELIHOOD:
        return float(problem.counts.max()) / problem.obs.n
    return float(problem.scheme.pi.max())


def fit(
    problem: CompletionProblem,
    config: SolverConfig | None = None,
    init: np.ndarray | None = None,
) -> FitResult:
    """Solve the penalized completion problem by accelerated proximal gradient.

    The step size starts at ``1/L`` with ``L`` the curvature upper bound
    over the box times the heaviest per-entry observation weight, and is
    halved whenever a step fails to decrease the composite objective.
    Momentum restarts on objective increase keep the trace monotone.
    Convergence requires both a relative objective change below ``tol``
    and a proximal fixed-point residual at most ``10 tol``; otherwise the
    best iterate is returned with ``converged=False``.
    """
    cfg = config or SolverConfig()
    box = problem.box
    lam = problem.lam
    shape = problem.shape

    if init is None:
        x = box_clip(np.zeros(shape), box)
    else:
        init = np.asarray(init, dtype=float)
        if init.shape != shape:
            raise ValueError("init shape does not match the problem")
        if not box.contains(init, tol=1e-12):
            raise ValueError("init must satisfy the box constraint")
        x = box_clip(init, box)

    sigma_hi_sq = problem.family.variance_bounds(box)[1]
    lipschitz = sigma_hi_sq * _step_weight(problem)
    eta0 = 1.0 / lipschitz if lipschitz > 0 else 1.0
    eta = eta0

    def prox(point, step):
        return combined_prox(point, step * lam, box, cfg.dykstra_iters, cfg.dykstra_tol)

    def residual_at(point, step):
        moved = prox(point - step * gradient(problem, point), step)
        return float(np.linalg.norm(point - moved)) / step

    f_x = _objective(problem, x)
    trace = [f_x]
    z = x
    t = 1.0
    converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iters + 1):
        momentum = z is not x
        try:
            g = gradient(problem, z)
        except DomainError:
            # Extrapolated point left the domain: drop the momentum.
            z, t, momentum = x, 1.0, False
            g = gradient(problem, x)

        cand = prox(z - eta * g, eta)
        f_cand = _objective(problem, cand)
        slack = 1e-12 * max(1.0, abs(f_x))

        if f_cand > f_x + slack and momentum:
            z, t = x, 1.0
            g = gradient(problem, x)
            cand = prox(x - eta * g, eta)
            f_cand = _objective(problem, cand)
        backtracks = 0
        while f_cand > f_x + slack and backtracks < 60:
            eta *= 0.5
            backtracks += 1
            cand = prox(z - eta * g, eta)
            f_cand = _objective(problem, cand)

        if f_cand > f_x + slack:
            converged = residual_at(x, eta) <= 10.0 * cfg.tol
            break

        rel_change = (f_x - f_cand) / max(1.0, abs(f_x))
        x_prev, x, f_x = x, cand, f_cand
        trace.append(f_x)

        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        z = x + ((t - 1.0) / t_next) * (x - x_prev)
        t = t_next
        if backtracks == 0 and eta < eta0:
            eta = min(eta0, 1.5 * eta)

        if rel_change < cfg.tol and residual_at(x, eta) <= 10.0 * cfg.tol:
            converged = True
            break

    prox_residual = residual_at(x, eta)
    return FitResult(
        x_hat=x,
        objective_trace=trace,
        iterations=iterations,
        converged=converged,
        prox_residual=prox_residual,
        lambda_used=lam,
    )
