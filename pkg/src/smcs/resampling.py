"""Importance weights, effective sample size, multinomial resampling,
and adaptive selection of the next inverse temperature.

Only multinomial resampling is provided; the genealogy-based variance
estimators in `diagnostics` are valid for multinomial schemes only.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigurationError, NumericalError, ParticleDeathError


class WeightVector:
    """Unnormalized log-weights with cached normalization and ESS.

    Parameters
    ----------
    log_weights : array (N,)
        Entries may be -inf (zero weight); all -inf raises
        ParticleDeathError. +inf and NaN raise NumericalError.
    """

    def __init__(self, log_weights):
        lw = np.atleast_1d(np.asarray(log_weights, dtype=float))
        if lw.ndim != 1 or lw.size == 0:
            raise ConfigurationError("log_weights must be a nonempty vector")
        if np.isnan(lw).any() or np.isposinf(lw).any():
            raise NumericalError("log-weights must be finite or -inf")
        if np.isneginf(lw).all():
            raise ParticleDeathError("total particle death: all weights are zero")
        self.log_weights = lw
        self.log_total = float(logsumexp(lw))
        self.normalized = np.exp(lw - self.log_total)
        # (sum w)^2 / sum w^2 on max-shifted weights: exact for equal
        # weights, so a strict threshold of 1.0 never fires on them
        shifted = np.exp(lw - lw.max())
        raw = shifted.sum() ** 2 / (shifted * shifted).sum()
        self.ess = float(min(max(raw, 1.0), lw.size))

    def __len__(self):
        return self.log_weights.size

    @classmethod
    def equal(cls, n):
        return cls(np.zeros(n))

    def incremented(self, delta):
        """New WeightVector with log-weights shifted elementwise by delta."""
        return WeightVector(self.log_weights + np.asarray(delta, dtype=float))


@dataclass
class ScheduleState:
    """Schedule bookkeeping for one run: tempering criterion and
    resample trigger, plus the accepted path parameters."""

    current_lambda: float = 0.0
    kappa: float = 0.5
    resample_threshold: float = 1.0
    history: list = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise ConfigurationError(f"kappa must lie in (0, 1), got {self.kappa}")
        if not 0.0 < self.resample_threshold <= 1.0:
            raise ConfigurationError(
                f"resample_threshold must lie in (0, 1], got {self.resample_threshold}"
            )


def ess(weights):
    """Effective sample size (sum w)^2 / sum w^2 of unnormalized weights.

    Accepts a WeightVector or a vector of plain (linear) weights.
    """
    if isinstance(weights, WeightVector):
        return weights.ess
    w = np.asarray(weights, dtype=float)
    if (w < 0).any():
        raise ConfigurationError("weights must be nonnegative")
    with np.errstate(divide="ignore"):
        return WeightVector(np.log(w)).ess


def multinomial_ancestors(weights, n_out, rng):
    """Draw n_out i.i.d. ancestor indices distributed as Categorical(w).

    weights is a WeightVector or a probability vector. Deterministic
    given the rng state. Zero-weight indices are never selected.
    """
    w = weights.normalized if isinstance(weights, WeightVector) else np.asarray(weights, dtype=float)
    cdf = np.cumsum(w)
    cdf[-1] = 1.0  # guard against rounding at the top end
    u = rng.random(int(n_out))
    return np.searchsorted(cdf, u, side="right").astype(np.intp)


def next_lambda(lambda_prev, log_ratios, kappa, tol=1e-10):
    """Select the next inverse temperature by the ESS criterion.

    Returns 1.0 when the full remaining step keeps ESS/N >= kappa,
    otherwise the bisection root of ESS(lambda)/N = kappa on
    (lambda_prev, 1). The ESS fraction of the incremental weights
    exp((lambda - lambda_prev) * log_ratios) is strictly decreasing in
    lambda for non-constant ratios, so the root is unique.
    """
    ell = np.asarray(log_ratios, dtype=float)
    if not 0.0 <= lambda_prev < 1.0:
        raise ConfigurationError(f"lambda_prev must lie in [0, 1), got {lambda_prev}")
    if not 0.0 < kappa < 1.0:
        raise ConfigurationError(f"kappa must lie in (0, 1), got {kappa}")
    if np.isnan(ell).any() or np.isposinf(ell).any():
        raise NumericalError("log-ratios must be finite or -inf")
    if np.isneginf(ell).all():
        raise ParticleDeathError("total particle death: all annealing ratios vanish")
    n = ell.size

    def ess_fraction(lam):
        lw = (lam - lambda_prev) * ell
        return float(np.exp(2.0 * logsumexp(lw) - logsumexp(2.0 * lw))) / n

    if ess_fraction(1.0) >= kappa:
        return 1.0
    lo, hi = lambda_prev, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ess_fraction(mid) >= kappa:
            lo = mid
        else:
            hi = mid
    # lo keeps ESS/N >= kappa, so a trigger at the same threshold never
    # fires on rounding noise right after an equal-weight resample
    return lo if lo > lambda_prev else hi


def should_resample(weights, policy):
    """True iff ESS/N falls strictly below the policy threshold."""
    return weights.ess / len(weights) < policy.resample_threshold
