"""Prior densities and the unnormalised log posterior.

Cluster allocations carry Dirichlet-multinomial allocation (DMA) priors:
a symmetric Dirichlet over cluster weights is integrated out, leaving a
closed-form mass in the occupancy counts.  Level counts carry a Poisson
prior (intransitivity) and a truncated Poisson (skills); level values
carry order-statistics priors built from Gamma and Gaussian densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .data import ComparisonDataset
from .model import ModelState, log_likelihood

__all__ = [
    "Hyperparameters",
    "log_dma_intransitivity",
    "log_dma_skill",
    "log_prior_K",
    "log_prior_A",
    "log_prior_theta",
    "log_prior_phi",
    "log_prior_joint",
    "log_posterior_unnorm",
]


@dataclass(frozen=True)
class Hyperparameters:
    """Prior constants; all strictly positive.

    ``lambda_a`` defaults to n/2 via :meth:`defaults`.  The truncated
    Poisson on the number of skill levels has support 0..n-1; by default
    its normaliser sums one term past the support (``a_normalizer_printed``),
    matching the conventional form, and can be switched to the
    self-consistent sum over the support alone.  The normaliser only
    shifts the density by a constant, so inference is unaffected.
    """

    lambda_k: float = 2.0
    lambda_a: float = 2.0
    gamma_k: float = 1.0
    gamma_a: float = 1.0
    nu_a: float = 2.0
    alpha: float = 2.0
    beta: float = 2.0
    a_normalizer_printed: bool = True

    def __post_init__(self) -> None:
        for name in ("lambda_k", "lambda_a", "gamma_k", "gamma_a", "nu_a", "alpha", "beta"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"hyperparameter {name} must be a positive finite number, got {v!r}")

    @classmethod
    def defaults(cls, n: int, **overrides) -> "Hyperparameters":
        """Default constants for a problem with n objects (lambda_a = n/2)."""
        h = cls(lambda_a=max(n / 2.0, 0.5))
        return replace(h, **overrides) if overrides else h


def _log_dma_counts(counts: np.ndarray, gamma: float, include_coefficient: bool) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    n_labels = counts.shape[0]
    total = counts.sum()
    val = (
        gammaln(n_labels * gamma)
        - n_labels * gammaln(gamma)
        + float(np.sum(gammaln(gamma + counts)))
        - gammaln(n_labels * gamma + total)
    )
    if include_coefficient:
        val += gammaln(total + 1.0) - float(np.sum(gammaln(counts + 1.0)))
    return float(val)


def log_dma_intransitivity(
    z: np.ndarray,
    gamma_k: float,
    k: int,
    *,
    include_coefficient: bool = True,
) -> float:
    """Log DMA mass of a free-pair allocation over the 2K+1 labels -K..K.

    With ``include_coefficient`` the value is the Dirichlet-multinomial
    probability of the occupancy counts (the multinomial coefficient
    included); without it, the probability of one specific allocation
    vector, which is the form that enters the posterior.
    """
    z = np.asarray(z, dtype=np.int64)
    if k < 0:
        raise ValueError("k must be non-negative")
    if z.size and (z.min() < -k or z.max() > k):
        raise ValueError(f"allocation labels outside -{k}..{k}")
    counts = np.bincount(z + k, minlength=2 * k + 1)
    return _log_dma_counts(counts, gamma_k, include_coefficient)


def log_dma_skill(
    y: np.ndarray,
    gamma_a: float,
    a: int,
    *,
    include_coefficient: bool = True,
) -> float:
    """Log DMA mass of the non-reference skill allocation over A+1 labels.

    ``y`` holds level offsets 0..A for the objects other than the
    reference (the reference allocation is pinned and carries no prior
    mass).
    """
    y = np.asarray(y, dtype=np.int64)
    if a < 0:
        raise ValueError("a must be non-negative")
    if y.size and (y.min() < 0 or y.max() > a):
        raise ValueError(f"allocation offsets outside 0..{a}")
    counts = np.bincount(y, minlength=a + 1)
    return _log_dma_counts(counts, gamma_a, include_coefficient)


def log_prior_K(k: int, lambda_k: float) -> float:
    """Poisson log pmf for the number of intransitivity levels."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return float(k * math.log(lambda_k) - lambda_k - gammaln(k + 1.0))


@lru_cache(maxsize=256)
def _log_poisson_partial_sum(lam: float, top: int) -> float:
    i = np.arange(top + 1, dtype=np.float64)
    return float(logsumexp(i * math.log(lam) - gammaln(i + 1.0)))


def log_prior_A(a: int, lambda_a: float, n: int, *, printed_normalizer: bool = True) -> float:
    """Truncated Poisson log pmf for the number of unknown skill levels.

    Support is a = 0..n-1.  The printed normaliser sums terms i = 0..n;
    the self-consistent variant sums i = 0..n-1.  Either way the pmf
    ratios over the support are plain Poisson ratios.
    """
    if not 0 <= a <= n - 1:
        raise ValueError(f"a must lie in 0..{n - 1}, got {a}")
    top = n if printed_normalizer else n - 1
    return float(a * math.log(lambda_a) - gammaln(a + 1.0) - _log_poisson_partial_sum(lambda_a, top))


def log_prior_theta(theta: np.ndarray, alpha: float, beta: float) -> float:
    """Log density of the ordered positive levels: K! times a Gamma product.

    The K! factor makes this the joint density of the order statistics of
    K independent Gamma(alpha, beta) draws.  Returns 0 for K = 0.
    """
    theta = np.asarray(theta, dtype=np.float64)
    k = theta.shape[0]
    if k == 0:
        return 0.0
    if theta[0] <= 0.0 or np.any(np.diff(theta) <= 0.0):
        raise ValueError(f"theta must be strictly increasing and positive: {theta!r}")
    dens = alpha * math.log(beta) - gammaln(alpha) + (alpha - 1.0) * np.log(theta) - beta * theta
    return float(gammaln(k + 1.0) + np.sum(dens))


def log_prior_phi(
    phi: np.ndarray,
    zero_index: int,
    nu_a: float,
    *,
    proper: bool = False,
) -> float:
    """Log density of the ordered skill levels around the pinned zero.

    The default order factor is (A+1)!, treating the zero level as one of
    A+1 exchangeable positions.  Because the position of zero is already a
    state dimension, that variant integrates to A+1 over each A; the
    ``proper`` variant uses A! and integrates to exactly 1, and is the
    form the posterior uses so that the prior marginal of A stays the
    truncated Poisson.
    """
    phi = np.asarray(phi, dtype=np.float64)
    a = phi.shape[0] - 1
    if not 0 <= zero_index <= a:
        raise ValueError("zero_index outside the level sequence")
    if phi[zero_index] != 0.0:
        raise ValueError(f"phi[{zero_index}] must be exactly 0, got {phi[zero_index]!r}")
    if np.any(np.diff(phi) <= 0.0):
        raise ValueError(f"phi must be strictly increasing: {phi!r}")
    free = np.delete(phi, zero_index)
    dens = -0.5 * (free / nu_a) ** 2 - math.log(nu_a) - 0.5 * math.log(2.0 * math.pi)
    order_factor = gammaln(a + 1.0) if proper else gammaln(a + 2.0)
    return float(order_factor + np.sum(dens))


def log_prior_joint(state: ModelState, h: Hyperparameters) -> float:
    """Log prior of a full state under the independence structure.

    Skills and intransitivities are independent blocks; within each block
    the level values and the allocation are independent given the level
    count.  The allocation terms enter without the occupancy coefficient
    (mass of the specific allocation vector) and the skill-level order
    factor is the proper A! variant; with these choices the prior marginal
    of K is exactly Poisson and of A exactly the truncated Poisson, which
    is what the sampler-correctness oracles check.
    """
    n = state.n
    sk, it = state.skills, state.intrans
    lp = log_prior_K(it.k, h.lambda_k)
    lp += log_prior_theta(it.theta, h.alpha, h.beta)
    lp += log_dma_intransitivity(it.allocation, h.gamma_k, it.k, include_coefficient=False)
    lp += log_prior_A(sk.a, h.lambda_a, n, printed_normalizer=h.a_normalizer_printed)
    lp += log_prior_phi(sk.phi, sk.zero_index, h.nu_a, proper=True)
    lp += log_dma_skill(sk.allocation[1:], h.gamma_a, sk.a, include_coefficient=False)
    return lp


def log_posterior_unnorm(state: ModelState, data: ComparisonDataset, h: Hyperparameters) -> float:
    """Log likelihood plus log prior; the sampler's target up to a constant."""
    return log_likelihood(state, data) + log_prior_joint(state, h)
