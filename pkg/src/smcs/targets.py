"""Target distributions: Gaussian targets, Bayesian logistic regression
with partial likelihoods, dataset loading, and Laplace initialization.

All densities are unnormalized log-kernels by default; normalizing
constants are optional metadata. Evaluation is vectorized: x may be a
single point (d,) or a batch (n, d); log densities return a scalar or
(n,), gradients match the input shape.
"""

import csv

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit

from .errors import ConfigurationError, NumericalError

_LOG_2PI = float(np.log(2.0 * np.pi))


def _as_batch(x, dim):
    """View x as (n, dim); returns (batch, had_batch_dim)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.size != dim:
            raise ConfigurationError(f"point has length {x.size}, expected {dim}")
        return x[None, :], False
    if x.ndim == 2:
        if x.shape[1] != dim:
            raise ConfigurationError(f"points have width {x.shape[1]}, expected {dim}")
        return x, True
    raise ConfigurationError(f"x must be (d,) or (n, d), got shape {x.shape}")


class TargetDensity:
    """Interface for an unnormalized density gamma on R^dim.

    Concrete targets provide log_density and grad_log_density, and may
    provide exact_log_normalizer (log integral of the kernel) and
    sample(rng, n) when the distribution is exactly sampleable.
    """

    dim = None
    exact_log_normalizer = None

    def log_density(self, x):
        raise NotImplementedError

    def grad_log_density(self, x):
        raise NotImplementedError


class GaussianTarget(TargetDensity):
    """Gaussian N(mean, cov) with diagonal or full covariance.

    log_density is the Normal log-kernel -(x-mean)' P (x-mean) / 2 by
    default, with exact_log_normalizer = (d/2) log(2 pi) + log det(cov) / 2
    so that log_density - exact_log_normalizer is the normalized log-pdf.
    With normalized=True the normalizer is folded into log_density and
    exact_log_normalizer becomes 0.

    Parameters
    ----------
    mean : array (d,)
    cov : scalar, array (d,) of variances, or SPD matrix (d, d)
    """

    def __init__(self, mean, cov, normalized=False):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        if mean.ndim != 1:
            raise ConfigurationError("mean must be a vector")
        self.mean = mean
        self.dim = mean.size
        cov = np.asarray(cov, dtype=float)
        if cov.ndim == 0:
            cov = np.full(self.dim, float(cov))
        if cov.ndim == 1:
            if cov.size != self.dim:
                raise ConfigurationError("covariance diagonal length mismatch")
            if not (cov > 0).all():
                raise ConfigurationError("covariance diagonal must be positive")
            self.cov_diag = cov
            self.cov = None
            self._prec_diag = 1.0 / cov
            self._sd_diag = np.sqrt(cov)
            logdet = float(np.log(cov).sum())
        elif cov.ndim == 2:
            if cov.shape != (self.dim, self.dim):
                raise ConfigurationError("covariance matrix shape mismatch")
            if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-12):
                raise ConfigurationError("covariance must be symmetric")
            try:
                self._chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise ConfigurationError("covariance not positive definite") from None
            self.cov = cov
            self.cov_diag = None
            self._prec = cho_solve((self._chol, True), np.eye(self.dim))
            logdet = float(2.0 * np.log(np.diag(self._chol)).sum())
        else:
            raise ConfigurationError("cov must be scalar, vector, or matrix")
        self.log_normalizer = 0.5 * (self.dim * _LOG_2PI + logdet)
        self.normalized = bool(normalized)
        self.exact_log_normalizer = 0.0 if self.normalized else self.log_normalizer

    def precision(self):
        """Full precision matrix (d, d)."""
        if self.cov_diag is not None:
            return np.diag(self._prec_diag)
        return self._prec

    def log_density(self, x):
        xb, batched = _as_batch(x, self.dim)
        delta = xb - self.mean
        if self.cov_diag is not None:
            quad = (delta * delta * self._prec_diag).sum(axis=1)
        else:
            quad = np.einsum("ni,ij,nj->n", delta, self._prec, delta)
        out = -0.5 * quad
        if self.normalized:
            out = out - self.log_normalizer
        return out if batched else float(out[0])

    def grad_log_density(self, x):
        xb, batched = _as_batch(x, self.dim)
        delta = xb - self.mean
        if self.cov_diag is not None:
            grad = -delta * self._prec_diag
        else:
            grad = -delta @ self._prec
        return grad if batched else grad[0]

    def hessian_log_density(self, x):
        """Constant Hessian -P, independent of x."""
        return -self.precision()

    def sample(self, rng, n):
        z = rng.standard_normal((int(n), self.dim))
        if self.cov_diag is not None:
            return self.mean + z * self._sd_diag
        return self.mean + z @ self._chol.T


def _log1p_exp(eta):
    """log(1 + exp(eta)), stable for large |eta|."""
    return np.logaddexp(0.0, eta)


class LogisticRegressionTarget(TargetDensity):
    """Bayesian logistic regression posterior (unnormalized).

    log gamma(beta) = log N(beta; prior_mean, diag(prior_variance))
                    + sum over the first active_count observations of
                      y_i eta_i - log(1 + exp(eta_i)),  eta_i = x_i . beta.

    The prior term is normalized, so the integral of gamma equals the
    marginal likelihood of the active observations.

    Parameters
    ----------
    covariates : array (m, d)
    outcomes : array (m,) with entries in {0, 1}
    prior_mean, prior_variance : scalar or (d,)
    active_count : observations conditioned on (default all m)
    """

    def __init__(self, covariates, outcomes, prior_mean=0.0, prior_variance=10.0,
                 active_count=None):
        X = np.asarray(covariates, dtype=float)
        y = np.asarray(outcomes, dtype=float)
        if X.ndim != 2:
            raise ConfigurationError("covariates must be a matrix (m, d)")
        if y.shape != (X.shape[0],):
            raise ConfigurationError("outcomes length must match covariate rows")
        if not np.isin(y, (0.0, 1.0)).all():
            raise ConfigurationError("outcomes must be 0 or 1")
        self.covariates = X
        self.outcomes = y
        self.n_observations, self.dim = X.shape
        self.prior_mean = np.broadcast_to(
            np.asarray(prior_mean, dtype=float), (self.dim,)).copy()
        self.prior_variance = np.broadcast_to(
            np.asarray(prior_variance, dtype=float), (self.dim,)).copy()
        if not (self.prior_variance > 0).all():
            raise ConfigurationError("prior variances must be positive")
        if active_count is None:
            active_count = self.n_observations
        if not 0 <= active_count <= self.n_observations:
            raise ConfigurationError(
                f"active_count must lie in [0, {self.n_observations}], got {active_count}")
        self.active_count = int(active_count)
        self._prior_log_norm = 0.5 * (self.dim * _LOG_2PI
                                      + np.log(self.prior_variance).sum())

    def with_active_count(self, t):
        """Copy of this target conditioned on the first t observations."""
        return LogisticRegressionTarget(
            self.covariates, self.outcomes, self.prior_mean,
            self.prior_variance, active_count=t)

    def prior_gaussian(self):
        """The prior as a normalized, sampleable GaussianTarget."""
        return GaussianTarget(self.prior_mean, self.prior_variance, normalized=True)

    def log_prior(self, x):
        xb, batched = _as_batch(x, self.dim)
        delta = xb - self.prior_mean
        out = -0.5 * (delta * delta / self.prior_variance).sum(axis=1) - self._prior_log_norm
        return out if batched else float(out[0])

    def log_likelihood_block(self, x, lo, hi):
        """Summed log-likelihood of observations [lo, hi) at each point of x."""
        if not 0 <= lo <= hi <= self.n_observations:
            raise ConfigurationError(f"block [{lo}, {hi}) out of range")
        xb, batched = _as_batch(x, self.dim)
        if lo == hi:
            out = np.zeros(xb.shape[0])
            return out if batched else float(out[0])
        X = self.covariates[lo:hi]
        y = self.outcomes[lo:hi]
        eta = xb @ X.T  # (n, hi-lo)
        out = (y * eta - _log1p_exp(eta)).sum(axis=1)
        return out if batched else float(out[0])

    def log_density(self, x):
        xb, batched = _as_batch(x, self.dim)
        out = self.log_prior(xb) + self.log_likelihood_block(xb, 0, self.active_count)
        return out if batched else float(out[0])

    def grad_log_density(self, x):
        xb, batched = _as_batch(x, self.dim)
        grad = -(xb - self.prior_mean) / self.prior_variance
        if self.active_count > 0:
            X = self.covariates[:self.active_count]
            y = self.outcomes[:self.active_count]
            eta = xb @ X.T
            grad = grad + (y - expit(eta)) @ X
        return grad if batched else grad[0]

    def hessian_log_density(self, x):
        """Hessian (d, d) of the log-posterior at a single point."""
        beta = np.asarray(x, dtype=float).reshape(self.dim)
        hess = -np.diag(1.0 / self.prior_variance)
        if self.active_count > 0:
            X = self.covariates[:self.active_count]
            p = expit(X @ beta)
            hess = hess - (X.T * (p * (1.0 - p))) @ X
        return hess


def load_logistic_dataset(path):
    """Load a logistic-regression dataset from a headed CSV file.

    The outcome column must be named 'y'; every other column is a
    numeric covariate. A leading intercept column of ones is prepended
    unless a column named 'intercept' already exists. Returns (X, y).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError(f"empty dataset file: {path}") from None
        header = [h.strip() for h in header]
        if "y" not in header:
            raise ConfigurationError(f"dataset {path} has no outcome column 'y'")
        y_col = header.index("y")
        rows = []
        for i, row in enumerate(reader):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise ConfigurationError(
                    f"non-numeric value in {path} at data row {i + 1}") from None
    if not rows:
        raise ConfigurationError(f"dataset {path} has a header but no rows")
    data = np.asarray(rows, dtype=float)
    if data.shape[1] != len(header):
        raise ConfigurationError(f"ragged rows in {path}")
    y = data[:, y_col]
    X = np.delete(data, y_col, axis=1)
    if "intercept" not in header:
        X = np.hstack([np.ones((X.shape[0], 1)), X])
    return X, y


def synthetic_logistic_dataset(n_rows, dim, beta, seed):
    """Standard-normal covariates and Bernoulli outcomes from a true beta.

    Returns (X, y) with X of shape (n_rows, dim).
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (dim,):
        raise ConfigurationError(f"true beta must have length {dim}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    X = rng.standard_normal((int(n_rows), int(dim)))
    y = (rng.random(int(n_rows)) < expit(X @ beta)).astype(float)
    return X, y


def laplace_initializer(target, max_iter=100, tol=1e-8):
    """Gaussian approximation of a posterior at its mode.

    Newton iterations on the log-posterior of `target` (which must
    expose grad_log_density and hessian_log_density); converged when the
    gradient norm drops below tol. Returns a normalized GaussianTarget
    with mean the mode and covariance the inverse negative Hessian.
    """
    if isinstance(target, LogisticRegressionTarget):
        if target.active_count < 1:
            raise ConfigurationError("Laplace initialization needs at least one observation")
        beta = target.prior_mean.copy()
    else:
        beta = np.zeros(target.dim)
    if not hasattr(target, "hessian_log_density"):
        raise ConfigurationError("target does not expose a Hessian")

    logp = float(target.log_density(beta))
    for _ in range(max_iter):
        grad = target.grad_log_density(beta)
        if float(np.linalg.norm(grad)) < tol:
            break
        neg_hess = -target.hessian_log_density(beta)
        try:
            factor = cho_factor(neg_hess)
        except np.linalg.LinAlgError:
            raise NumericalError("singular Hessian in Laplace initialization",
                                 last_iterate=beta) from None
        step = cho_solve(factor, grad)
        # backtracking: halve until the log-posterior does not decrease
        scale = 1.0
        for _ in range(40):
            candidate = beta + scale * step
            cand_logp = float(target.log_density(candidate))
            if cand_logp >= logp - 1e-12:
                break
            scale *= 0.5
        beta = beta + scale * step
        logp = float(target.log_density(beta))
    else:
        raise NumericalError(
            f"Newton did not reach gradient norm {tol} in {max_iter} iterations",
            last_iterate=beta)

    neg_hess = -target.hessian_log_density(beta)
    try:
        factor = cho_factor(neg_hess)
    except np.linalg.LinAlgError:
        raise NumericalError("singular Hessian at the mode", last_iterate=beta) from None
    cov = cho_solve(factor, np.eye(target.dim))
    cov = 0.5 * (cov + cov.T)  # symmetrize rounding
    return GaussianTarget(beta, cov, normalized=True)
