"""Error quantification and post-processing: genealogy-based
asymptotic-variance estimators, root counting, multi-run combination
with confidence intervals, particle independent Metropolis-Hastings
(PIMH), and closed-form Gaussian oracles used by tests.

The variance estimators assume multinomial resampling at every step;
runs that skipped resampling get a validity warning and use the number
of resampling events as the exponent.
"""

import hashlib
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from . import rng as rngmod
from .errors import ConfigurationError, NumericalError
from .resampling import multinomial_ancestors

_EPS = float(np.finfo(float).eps)


@dataclass
class GenealogySummary:
    """Compressed genealogy of a particle system: root label per
    particle and the class size (sibling count) per distinct root."""

    roots: np.ndarray
    class_sizes: np.ndarray
    t: int
    n: int
    resample_events: int

    @classmethod
    def from_system(cls, system):
        _, counts = np.unique(system.roots, return_counts=True)
        return cls(roots=np.asarray(system.roots), class_sizes=counts,
                   t=system.t, n=system.n, resample_events=system.resample_events)


def _estimator_exponent(summary):
    if summary.resample_events < summary.t:
        warnings.warn(
            "resampling was skipped at some steps; genealogy variance "
            "estimators assume multinomial resampling every step",
            RuntimeWarning, stacklevel=3)
    return summary.resample_events + 1


def count_roots(summary):
    """Number of distinct time-zero ancestors among the particles."""
    return int(summary.class_sizes.size)


def variance_estimator_phi(system, phi):
    """Genealogy estimate of the asymptotic variance of the
    self-normalized estimator of phi.

    Returns N * V(phi_c) with phi_c = phi - pi^N(phi) and

        V(f) = pi^N(f)^2 - (N/(N-1))^(E+1) N^-2 sum_{roots differ} f_n f_m,

    E the resampling event count. The distinct-root double sum is
    computed in O(N + classes) from per-class aggregates.
    """
    n = system.n
    if n < 2:
        raise ConfigurationError("variance estimation needs at least two particles")
    summary = GenealogySummary.from_system(system)
    exponent = _estimator_exponent(summary)
    vals = np.atleast_1d(np.asarray(phi(system.positions), dtype=float))
    w = system.weights.normalized
    centered = vals - float(w @ vals)
    mean_sq = float(w @ centered) ** 2
    total = centered.sum()
    _, inverse = np.unique(system.roots, return_inverse=True)
    class_sums = np.bincount(inverse, weights=centered)
    cross = total * total - float((class_sums * class_sums).sum())
    factor = (n / (n - 1.0)) ** exponent
    return n * (mean_sq - factor * cross / (n * n))


def variance_estimator_Z(summary):
    """Genealogy estimate of the relative-variance rate of Z.

    Returns N * V with V = 1 - (N/(N-1))^(E+1) (1 - sum_r c_r^2 / N^2),
    the pair-count specialization of the phi estimator to phi = 1.
    """
    n = summary.n
    if n < 2:
        raise ConfigurationError("variance estimation needs at least two particles")
    exponent = _estimator_exponent(summary)
    c2 = float((summary.class_sizes.astype(float) ** 2).sum())
    v = 1.0 - (n / (n - 1.0)) ** exponent * (1.0 - c2 / (n * n))
    return n * v


@dataclass
class RunSummary:
    """Per-run inputs for multi-run combination."""

    log_z: float
    positions: np.ndarray
    normalized_weights: np.ndarray
    config_hash: str = ""

    @classmethod
    def from_result(cls, result, config_hash=""):
        system = result.system
        return cls(log_z=system.cumulative_log_z, positions=system.positions,
                   normalized_weights=system.weights.normalized,
                   config_hash=config_hash)

    def estimate(self, phi):
        vals = np.atleast_1d(np.asarray(phi(self.positions), dtype=float))
        if vals.ndim == 1:
            return float(self.normalized_weights @ vals)
        return self.normalized_weights @ vals


@dataclass
class MultiRunSet:
    """Independent runs of one configuration (hash equality enforced)."""

    runs: list = field(default_factory=list)

    def __post_init__(self):
        if not self.runs:
            raise ConfigurationError("MultiRunSet needs at least one run")
        hashes = {r.config_hash for r in self.runs}
        if len(hashes) != 1:
            raise ConfigurationError("runs were produced by different configurations")

    def __len__(self):
        return len(self.runs)


def config_hash(payload):
    """Stable hash of a flat config mapping, for MultiRunSet checks."""
    canon = repr(sorted((str(k), repr(v)) for k, v in dict(payload).items()))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _log_z_weights(runs):
    log_zs = np.array([r.log_z for r in runs.runs])
    if np.isneginf(log_zs).all():
        raise NumericalError("all runs estimate Z = 0; combination undefined")
    shift = log_zs.max()
    return np.exp(log_zs - shift), log_zs


def combine_runs(runs, phi):
    """Z-weighted average of per-run estimates, plus the combined Z.

    Returns (combined_estimate, log_mean_z). The weighting is exact in
    log space, so rescaling every Z by a common constant leaves the
    estimate unchanged; the combined Z is the plain average of the
    per-run Z values.
    """
    zw, log_zs = _log_z_weights(runs)
    estimates = np.stack([np.atleast_1d(np.asarray(r.estimate(phi))) for r in runs.runs])
    combined = (zw[:, None] * estimates).sum(axis=0) / zw.sum()
    log_mean_z = float(logsumexp(log_zs) - np.log(len(runs)))
    if combined.size == 1:
        return float(combined[0]), log_mean_z
    return combined, log_mean_z


def combined_ci(runs, phi, level=0.95):
    """Normal-approximation interval for the combined estimate.

    Uses the ratio-estimator variance of the pairs (Z_r, Z_r * est_r):
    sigma^2 = sum_r Z_r^2 (est_r - m)^2 / (sum_r Z_r)^2, with everything
    computed on log-space-shifted Z values.
    """
    if len(runs) < 2:
        raise ConfigurationError("combined_ci needs at least two runs")
    if not 0.0 < level < 1.0:
        raise ConfigurationError("level must lie in (0, 1)")
    zw, _ = _log_z_weights(runs)
    estimates = np.stack([np.atleast_1d(np.asarray(r.estimate(phi))) for r in runs.runs])
    m = (zw[:, None] * estimates).sum(axis=0) / zw.sum()
    sigma2 = ((zw[:, None] ** 2) * (estimates - m) ** 2).sum(axis=0) / zw.sum() ** 2
    half = norm.ppf(0.5 + 0.5 * level) * np.sqrt(sigma2)
    lo, hi = m - half, m + half
    if lo.size == 1:
        return float(lo[0]), float(hi[0])
    return lo, hi


@dataclass
class PIMHResult:
    log_zs: np.ndarray
    positions: np.ndarray
    accepted: np.ndarray

    @property
    def acceptance_rate(self):
        # the first iteration initializes the chain, not a proposal
        if self.accepted.size <= 1:
            return 0.0
        return float(self.accepted[1:].mean())


def pimh_chain(run_fn, iterations, seed):
    """Independent-proposal Metropolis chain over whole sampler runs.

    run_fn(run_seed) executes one frozen (non-adaptive) run and returns
    a RunResult. Each iteration proposes a fresh run, selects one
    terminal particle by its weight, and accepts the (Z, particle) pair
    with probability min(1, Z_new / Z_current). The acceptance ratio
    depends only on the Z ratio, never on the selected particle.
    """
    if iterations < 1:
        raise ConfigurationError("iterations must be >= 1")
    log_zs = np.empty(iterations)
    accepted = np.zeros(iterations, dtype=bool)
    positions = None
    current_log_z = -np.inf
    current_pos = None
    for k in range(iterations):
        result = run_fn(rngmod.derive_seed(seed, rngmod.RUN, k))
        system = result.system
        gen = rngmod.substream(seed, rngmod.CHAIN, k)
        idx = int(multinomial_ancestors(system.weights, 1, gen)[0])
        candidate = system.positions[idx]
        if positions is None:
            positions = np.empty((iterations, candidate.size))
        log_z_new = system.cumulative_log_z
        if current_pos is None or np.log(gen.random()) < log_z_new - current_log_z:
            accepted[k] = True
            current_log_z = log_z_new
            current_pos = candidate
        log_zs[k] = current_log_z
        positions[k] = current_pos
    return PIMHResult(log_zs, positions, accepted)


def gaussian_chi2(mu0, mu, sigma_diag, lambda_prev, lambda_t):
    """Closed-form chi-square divergence between consecutive geometric
    bridge points of two Gaussians sharing the diagonal covariance
    sigma_diag: exp(dlambda^2 |mu - mu0|^2_Sigma^-1) - 1."""
    mu0 = np.atleast_1d(np.asarray(mu0, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.broadcast_to(np.asarray(sigma_diag, dtype=float), mu0.shape)
    dist2 = float(((mu - mu0) ** 2 / sigma).sum())
    dlam = float(lambda_t) - float(lambda_prev)
    return float(np.expm1(dlam * dlam * dist2))


def gaussian_bridge_schedule(mu0, mu, sigma_diag, delta):
    """Closed-form equal-divergence tempering schedule for the matched
    covariance Gaussian pair: T = ceil(D / sqrt(log(1+delta))) steps with
    lambda_t = t sqrt(log(1+delta)) / D, D = |mu - mu0|_Sigma^-1, and the
    last step clamped to 1."""
    mu0 = np.atleast_1d(np.asarray(mu0, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.broadcast_to(np.asarray(sigma_diag, dtype=float), mu0.shape)
    dist = float(np.sqrt(((mu - mu0) ** 2 / sigma).sum()))
    if dist == 0.0:
        return 1, [1.0]
    step = float(np.sqrt(np.log1p(delta)))
    n_steps = int(np.ceil(dist / step - 1e-12))
    lams = [min(t * step / dist, 1.0) for t in range(1, n_steps + 1)]
    lams[-1] = 1.0
    return n_steps, lams


def perfect_kernel_variance(chis, n_particles):
    """Relative variance of the normalizing-constant estimator under a
    perfect forward kernel: prod_t (1 + chi2_t / N) - 1."""
    chis = np.atleast_1d(np.asarray(chis, dtype=float))
    if (chis < 0).any():
        raise ConfigurationError("chi-square divergences must be nonnegative")
    return float(np.prod(1.0 + chis / float(n_particles)) - 1.0)
