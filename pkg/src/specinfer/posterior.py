"""Scoring mathematics: closed-form trace likelihood, log-likelihood,
Bernoulli information gain, and the two posterior modes.

Everything here is a pure function.  Scores live in the log domain and may
be -inf (ruled out) or +inf (demonstrations contradict the dynamics model).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InconsistentModelError

INF = float("inf")


@dataclass(frozen=True)
class SatStats:
    """Per-specification satisfaction statistics.

    ``n_sat`` of ``n_total`` demonstrations satisfy the specification;
    ``rand_rate`` is the probability that a uniformly-random-action agent
    does.
    """

    n_sat: int
    n_total: int
    rand_rate: float

    def __post_init__(self):
        if self.n_total < 1:
            raise ValueError("need at least one demonstration")
        if not (0 <= self.n_sat <= self.n_total):
            raise ValueError("n_sat must lie in [0, n_total]")
        if not (0.0 <= self.rand_rate <= 1.0):
            raise ValueError("rand_rate must lie in [0, 1]")

    @property
    def empirical_rate(self) -> float:
        return self.n_sat / self.n_total


@dataclass(frozen=True)
class BetaPriorConfig:
    """Beta(alpha, beta) prior over the demonstrator's success rate."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("Beta prior parameters must be positive")


def bernoulli_kl(p: float, q: float) -> float:
    """KL divergence between Bernoulli(p) and Bernoulli(q), with 0*ln(0) = 0.

    Returns +inf when p > 0, q = 0 or p < 1, q = 1.
    """
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError("probabilities required")
    total = 0.0
    if p > 0.0:
        if q == 0.0:
            return INF
        total += p * math.log(p / q)
    if p < 1.0:
        if q == 1.0:
            return INF
        total += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return total


def j_score(n_sat: int, n_total: int, rand_rate: float) -> float:
    """Indicator-gated information gain over the random-action baseline.

    Zero whenever the empirical rate falls below the random rate; +inf only
    in the degenerate rand_rate = 0, n_sat > 0 case (which signals that the
    demonstrations cannot have been generated inside the model).
    """
    if not (0 <= n_sat <= n_total):
        raise ValueError("n_sat must lie in [0, n_total]")
    empirical = n_sat / n_total
    if empirical < rand_rate:
        return 0.0
    return bernoulli_kl(empirical, rand_rate)


def trace_likelihood(
    trace_in_phi: bool, rand_trace_prob: float, stats: SatStats
) -> float:
    """Closed form of the maximum-entropy demonstration likelihood.

    The trace's random-policy probability is reweighted by how much better
    (or worse) than random the demonstrator is on this specification.
    """
    empirical = stats.empirical_rate
    rate = stats.rand_rate
    if trace_in_phi:
        if rate == 0.0:
            raise InconsistentModelError(
                "a demonstration satisfies a specification with zero "
                "random satisfaction probability"
            )
        return rand_trace_prob * (empirical / rate)
    if rate == 1.0:
        raise InconsistentModelError(
            "a demonstration violates a specification with random "
            "satisfaction probability one"
        )
    return rand_trace_prob * ((1.0 - empirical) / (1.0 - rate))


def log_likelihood(stats: SatStats, log_rho_x: float = 0.0) -> float:
    """Demonstration-set log likelihood, up to the shared multinomial term.

    ``log_rho_x`` is the log probability of generating the demonstrations
    under the random policy; it is constant across specifications and may be
    left at zero for comparisons.
    """
    n_pos, n_neg = stats.n_sat, stats.n_total - stats.n_sat
    empirical, rate = stats.empirical_rate, stats.rand_rate
    total = log_rho_x
    if n_pos:
        total += INF if rate == 0.0 else n_pos * math.log(empirical / rate)
    if n_neg:
        total += (
            INF
            if rate == 1.0
            else n_neg * math.log((1.0 - empirical) / (1.0 - rate))
        )
    return total


def log_beta_density(theta: float, prior: BetaPriorConfig) -> float:
    if not (0.0 < theta < 1.0):
        raise ValueError("theta must lie strictly inside (0, 1)")
    log_norm = (
        math.lgamma(prior.alpha)
        + math.lgamma(prior.beta)
        - math.lgamma(prior.alpha + prior.beta)
    )
    return (
        (prior.alpha - 1.0) * math.log(theta)
        + (prior.beta - 1.0) * math.log(1.0 - theta)
        - log_norm
    )


def posterior_score(stats: SatStats, mode="indicator") -> float:
    """Unnormalized log posterior of a specification given its statistics.

    ``mode`` is either the string ``"indicator"`` (hard demonstrator-beats-
    random gate) or a :class:`BetaPriorConfig` (soft bias toward positive
    demonstrations).  For the Beta density the empirical rate is clamped
    away from {0, 1} by half a demonstration's mass.
    """
    if mode == "indicator":
        empirical = stats.empirical_rate
        if empirical < stats.rand_rate:
            return -INF
        return stats.n_total * bernoulli_kl(empirical, stats.rand_rate)
    if isinstance(mode, BetaPriorConfig):
        eps = 1.0 / (2.0 * stats.n_total)
        clamped = min(max(stats.empirical_rate, eps), 1.0 - eps)
        kl = bernoulli_kl(stats.empirical_rate, stats.rand_rate)
        return stats.n_total * kl + log_beta_density(clamped, mode)
    raise ValueError(f"unknown scoring mode {mode!r}")
