"""Forward Markov moves and their paired backward-kernel weight rules.

Exact kernels (rwmh, mala, hmc) leave the current bridging distribution
invariant and use time-reversal backward kernels, so their log-weight
increment is exactly zero. Unadjusted kernels (ula, uhmc) carry the
discretization error as an explicit importance-weight increment. The
"perfect" kernel samples the bridging distribution exactly and exists
for tests and oracles.

All moves are vectorized over particles: x has shape (n, d) and one rng
drives the whole batch in a fixed draw order, so results are
deterministic given the stream.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, NumericalError
from .resampling import WeightVector

EXACT_KINDS = ("rwmh", "mala", "hmc", "perfect")
UNADJUSTED_KINDS = ("ula", "uhmc")
KINDS = EXACT_KINDS + UNADJUSTED_KINDS

PRECONDITIONER_FLOOR = 1e-8


@dataclass
class KernelSpec:
    """Move configuration.

    preconditioner is a positive variance-like diagonal: proposal
    covariance scale for rwmh/mala/ula, and the inverse of the mass
    matrix for hmc/uhmc (mass = elementwise 1/preconditioner).
    """

    kind: str
    step_size: float
    leapfrog_steps: int = 1
    preconditioner: np.ndarray = field(default_factory=lambda: np.ones(1))
    iterations: int = 1

    def validate(self, dim=None):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown kernel kind {self.kind!r}")
        if not self.step_size > 0 and self.kind != "perfect":
            raise ConfigurationError("step_size must be positive")
        if self.kind in ("hmc", "uhmc") and self.leapfrog_steps < 1:
            raise ConfigurationError("hmc/uhmc need at least one leapfrog step")
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.kind == "uhmc" and self.iterations != 1:
            raise ConfigurationError("uhmc uses a single momentum refresh per step")
        omega = np.atleast_1d(np.asarray(self.preconditioner, dtype=float))
        if not (omega > 0).all():
            raise ConfigurationError("preconditioner entries must be positive")
        if dim is not None and omega.size not in (1, dim):
            raise ConfigurationError(
                f"preconditioner length {omega.size} does not match dimension {dim}")
        return self

    def with_preconditioner(self, omega):
        return replace(self, preconditioner=np.asarray(omega, dtype=float))


@dataclass
class MoveOutcome:
    """Result of one kernel application over the particle batch.

    log_weight_increment is identically zero for exact kernels.
    accepted is None for unadjusted kernels (no accept-reject step).
    """

    new_position: np.ndarray
    log_weight_increment: np.ndarray
    accepted: np.ndarray = None
    momentum: np.ndarray = None


def _omega(spec, dim):
    omega = np.atleast_1d(np.asarray(spec.preconditioner, dtype=float))
    if omega.size == 1:
        omega = np.full(dim, float(omega[0]))
    if omega.size != dim:
        raise ConfigurationError(
            f"preconditioner length {omega.size} does not match dimension {dim}")
    return omega


def _diag_normal_logpdf(x, mean, var):
    """Row-wise log N(x; mean, diag(var)); x, mean (n, d), var (d,)."""
    delta = x - mean
    return -0.5 * (x.shape[1] * np.log(2.0 * np.pi) + np.log(var).sum()
                   + (delta * delta / var).sum(axis=1))


def rwmh_move(x, pi_t, spec, rng):
    """Random-walk Metropolis: propose x + sqrt(eps * Omega) z, accept
    with probability min(1, gamma_t(x') / gamma_t(x))."""
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    scale = np.sqrt(spec.step_size * _omega(spec, d))
    proposal = x + scale * rng.standard_normal((n, d))
    delta = pi_t.log_density(proposal) - pi_t.log_density(x)
    # NaN delta (both densities -inf) compares False, i.e. reject
    accepted = np.log(rng.random(n)) < delta
    new = np.where(accepted[:, None], proposal, x)
    return MoveOutcome(new, np.zeros(n), accepted=accepted)


def mala_move(x, pi_t, spec, rng):
    """Metropolis-adjusted Langevin: drifted Gaussian proposal with the
    exact forward/backward correction; zero weight increment."""
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    omega = _omega(spec, d)
    eps = spec.step_size
    grad_x = pi_t.grad_log_density(x)
    if not np.isfinite(grad_x).all():
        raise NumericalError("non-finite gradient at current state")
    mean_fwd = x + 0.5 * eps * omega * grad_x
    proposal = mean_fwd + np.sqrt(eps * omega) * rng.standard_normal((n, d))
    logp_x = pi_t.log_density(x)
    logp_prop = pi_t.log_density(proposal)
    with np.errstate(invalid="ignore"):
        grad_prop = pi_t.grad_log_density(proposal)
        bad = ~np.isfinite(grad_prop).all(axis=1)
        grad_prop = np.where(bad[:, None], 0.0, grad_prop)
        mean_bwd = proposal + 0.5 * eps * omega * grad_prop
        delta = (logp_prop - logp_x
                 + _diag_normal_logpdf(x, mean_bwd, eps * omega)
                 - _diag_normal_logpdf(proposal, mean_fwd, eps * omega))
    delta = np.where(bad, -np.inf, delta)
    accepted = np.log(rng.random(n)) < delta
    new = np.where(accepted[:, None], proposal, x)
    return MoveOutcome(new, np.zeros(n), accepted=accepted)


def ula_move(x, pi_t, pi_prev, spec, rng):
    """Unadjusted Langevin with its exact importance-weight increment.

    The backward kernel reverses the same pi_t-drifted proposal (both
    directions use the gradient of pi_t, never pi_prev), giving

        increment = log gamma_t(x') - log gamma_prev(x)
                  + log N(x; x' + (eps/2) Omega grad_t(x'), eps Omega)
                  - log N(x'; x + (eps/2) Omega grad_t(x), eps Omega).
    """
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    omega = _omega(spec, d)
    eps = spec.step_size
    grad_x = pi_t.grad_log_density(x)
    if not np.isfinite(grad_x).all():
        raise NumericalError("non-finite gradient at current state")
    mean_fwd = x + 0.5 * eps * omega * grad_x
    proposal = mean_fwd + np.sqrt(eps * omega) * rng.standard_normal((n, d))
    logp_t_prop = pi_t.log_density(proposal)
    dead = np.isneginf(logp_t_prop)  # zero weight, not an error
    with np.errstate(invalid="ignore"):
        grad_prop = pi_t.grad_log_density(proposal)
        grad_prop = np.where(dead[:, None], 0.0, grad_prop)
        mean_bwd = proposal + 0.5 * eps * omega * grad_prop
        increment = (logp_t_prop - pi_prev.log_density(x)
                     + _diag_normal_logpdf(x, mean_bwd, eps * omega)
                     - _diag_normal_logpdf(proposal, mean_fwd, eps * omega))
    increment = np.where(dead, -np.inf, increment)
    return MoveOutcome(proposal, increment)


def leapfrog(q, p, pi_t, eps, m, mass):
    """m leapfrog steps of the Hamiltonian -log pi_t(q) + p' M^-1 p / 2.

    mass is the diagonal of M (scalar or (d,)). Returns (q, p); m = 0 is
    the identity map.
    """
    q = np.array(np.atleast_2d(np.asarray(q, dtype=float)))
    p = np.array(np.atleast_2d(np.asarray(p, dtype=float)))
    inv_mass = 1.0 / np.atleast_1d(np.asarray(mass, dtype=float))
    grad = pi_t.grad_log_density(q)
    if not np.isfinite(grad).all():
        raise NumericalError("non-finite gradient at leapfrog step 0")
    for i in range(int(m)):
        p = p + 0.5 * eps * grad
        q = q + eps * inv_mass * p
        grad = pi_t.grad_log_density(q)
        if not np.isfinite(grad).all():
            raise NumericalError(f"non-finite gradient at leapfrog step {i + 1}",
                                 last_iterate=(q, p))
        p = p + 0.5 * eps * grad
    return q, p


def _kinetic(p, mass):
    return 0.5 * (p * p / mass).sum(axis=1)


def hmc_move(x, pi_t, spec, rng):
    """Hamiltonian move: full momentum refresh from N(0, M), leapfrog,
    accept with probability min(1, exp(H(start) - H(end)))."""
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    mass = 1.0 / _omega(spec, d)
    p0 = rng.standard_normal((n, d)) * np.sqrt(mass)
    q1, p1 = leapfrog(x, p0, pi_t, spec.step_size, spec.leapfrog_steps, mass)
    h0 = -pi_t.log_density(x) + _kinetic(p0, mass)
    h1 = -pi_t.log_density(q1) + _kinetic(p1, mass)
    accepted = np.log(rng.random(n)) < (h0 - h1)
    new = np.where(accepted[:, None], q1, x)
    return MoveOutcome(new, np.zeros(n), accepted=accepted)


def uhmc_move(x, pi_t, pi_prev, spec, rng, v_prev=None):
    """Unadjusted Hamiltonian move with its importance-weight increment.

    v_prev is accepted for signature compatibility and ignored: each
    step performs a single full momentum refresh. With a shared mass
    matrix the Gaussian momentum normalizers cancel, so

        increment = -H_t(x', v') + H_prev(x, v)
                  = log gamma_t(x') - log gamma_prev(x)
                    - kinetic(v') + kinetic(v).
    """
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    mass = 1.0 / _omega(spec, d)
    v0 = rng.standard_normal((n, d)) * np.sqrt(mass)
    q1, v1 = leapfrog(x, v0, pi_t, spec.step_size, spec.leapfrog_steps, mass)
    increment = (pi_t.log_density(q1) - pi_prev.log_density(x)
                 - _kinetic(v1, mass) + _kinetic(v0, mass))
    return MoveOutcome(q1, increment, momentum=v1)


def perfect_move(x, pi_t, spec, rng):
    """Test kernel: draw fresh particles exactly from pi_t."""
    if pi_t.gaussian is None:
        raise ConfigurationError("perfect kernel needs an exactly sampleable path point")
    n = np.asarray(x).shape[0]
    new = pi_t.gaussian.sample(rng, n)
    return MoveOutcome(new, np.zeros(n), accepted=np.ones(n, dtype=bool))


def move(x, pi_t, pi_prev, spec, rng):
    """Apply one kernel application of spec.kind."""
    if spec.kind == "rwmh":
        return rwmh_move(x, pi_t, spec, rng)
    if spec.kind == "mala":
        return mala_move(x, pi_t, spec, rng)
    if spec.kind == "hmc":
        return hmc_move(x, pi_t, spec, rng)
    if spec.kind == "ula":
        return ula_move(x, pi_t, pi_prev, spec, rng)
    if spec.kind == "uhmc":
        return uhmc_move(x, pi_t, pi_prev, spec, rng)
    if spec.kind == "perfect":
        return perfect_move(x, pi_t, spec, rng)
    raise ConfigurationError(f"unknown kernel kind {spec.kind!r}")


def adapt_preconditioner(positions, weights, previous=None):
    """Weighted marginal variances per coordinate, floored at 1e-8.

    weights is a WeightVector or a probability vector. With degenerate
    weights (ESS <= 1) the previous preconditioner is kept when given
    (with a warning); without one, the floored variances are returned.
    """
    x = np.asarray(positions, dtype=float)
    if isinstance(weights, WeightVector):
        w, wess = weights.normalized, weights.ess
    else:
        w = np.asarray(weights, dtype=float)
        w = w / w.sum()
        wess = 1.0 / (w * w).sum()
    if wess <= 1.0:
        warnings.warn("degenerate weights in preconditioner adaptation", RuntimeWarning,
                      stacklevel=2)
        if previous is not None:
            return np.asarray(previous, dtype=float)
    mean = w @ x
    var = w @ ((x - mean) ** 2)
    return np.maximum(var, PRECONDITIONER_FLOOR)


def default_step_size(dim, scaling_study=False):
    """Step-size rules: 0.3 d^(-1/4) for inference runs, d^(-1/4) for the
    Gaussian scaling benchmark."""
    base = float(dim) ** -0.25
    return base if scaling_study else 0.3 * base


def default_leapfrog_steps(step_size, dim, scaling_study=False):
    """ceil(1/eps) leapfrog steps for inference, ceil(d^(1/4)) for the
    scaling benchmark."""
    if scaling_study:
        return int(np.ceil(float(dim) ** 0.25))
    return int(np.ceil(1.0 / step_size))
