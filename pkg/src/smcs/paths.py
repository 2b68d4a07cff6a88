"""Bridging-distribution paths from a tractable initial distribution to
the target: geometric tempering, partial posteriors (optionally with
geometric sub-bridges between consecutive partial posteriors), and
truncation (level) paths.

The engine consumes a path as a list of legs. A "bridge" leg is a
geometric segment gamma_base^(1-s) gamma_next^s parameterized by a local
coordinate s in [0, 1], supporting adaptive tempering via its log_ratio.
A "chain" leg is an explicit sequence of path points stepped through one
per SMCS step (partial posteriors without bridges, truncation levels).
"""

import numpy as np

from .errors import ConfigurationError, NumericalError
from .targets import GaussianTarget, LogisticRegressionTarget, _as_batch


class PathPoint:
    """One bridging distribution on the path.

    param is the global path coordinate (inverse temperature,
    observation count, or truncation level). log_density and
    grad_log_density are vectorized like targets. gaussian, when set,
    is an exactly sampleable GaussianTarget equal to this distribution
    up to normalization (used by the perfect test kernel).
    """

    def __init__(self, param, log_density, grad_log_density, gaussian=None):
        self.param = float(param)
        self.log_density = log_density
        self.grad_log_density = grad_log_density
        self.gaussian = gaussian


class Leg:
    """One engine segment. kind is 'bridge' or 'chain'.

    Bridge legs expose point(s) and log_ratio(x) on the local coordinate
    s in [0, 1]; chain legs expose the list points. start_param and
    end_param are global path coordinates for trace records.
    """

    def __init__(self, kind, start_param, end_param, point=None, log_ratio=None,
                 points=None, local_schedule=None):
        self.kind = kind
        self.start_param = float(start_param)
        self.end_param = float(end_param)
        self.point = point
        self.log_ratio = log_ratio
        self.points = points
        self.local_schedule = local_schedule  # fixed s values for bridge legs, or None


def _check_lambda(lam):
    if not 0.0 <= lam <= 1.0:
        raise ConfigurationError(f"path parameter must lie in [0, 1], got {lam}")


class GeometricPath:
    """gamma_lam = gamma_0^(1 - lam) * gamma^lam for lam in [0, 1]."""

    kind = "geometric"

    def __init__(self, initial, terminal):
        if initial.dim != terminal.dim:
            raise ConfigurationError("path endpoints must share a dimension")
        self.initial = initial
        self.terminal = terminal
        self.dim = initial.dim

    def initial_target(self):
        return self.initial

    def log_density(self, lam, x):
        _check_lambda(lam)
        if lam == 0.0:
            return self.initial.log_density(x)
        if lam == 1.0:
            return self.terminal.log_density(x)
        return (1.0 - lam) * self.initial.log_density(x) + lam * self.terminal.log_density(x)

    def grad_log_density(self, lam, x):
        _check_lambda(lam)
        if lam == 0.0:
            return self.initial.grad_log_density(x)
        if lam == 1.0:
            return self.terminal.grad_log_density(x)
        return ((1.0 - lam) * self.initial.grad_log_density(x)
                + lam * self.terminal.grad_log_density(x))

    def log_ratio(self, x):
        """log gamma(x) - log gamma_0(x), the annealing direction."""
        return self.terminal.log_density(x) - self.initial.log_density(x)

    def exact_gaussian(self, lam):
        """The bridge distribution as a Gaussian, when both endpoints are.

        Precision mixes linearly: P(lam) = (1-lam) P0 + lam P1; the mean
        solves P(lam) m = (1-lam) P0 mu0 + lam P1 mu1. Returns None for
        non-Gaussian endpoints.
        """
        a, b = self.initial, self.terminal
        if not (isinstance(a, GaussianTarget) and isinstance(b, GaussianTarget)):
            return None
        _check_lambda(lam)
        if a.cov_diag is not None and b.cov_diag is not None:
            prec = (1.0 - lam) / a.cov_diag + lam / b.cov_diag
            mean = ((1.0 - lam) * a.mean / a.cov_diag + lam * b.mean / b.cov_diag) / prec
            return GaussianTarget(mean, 1.0 / prec)
        p0, p1 = a.precision(), b.precision()
        prec = (1.0 - lam) * p0 + lam * p1
        mean = np.linalg.solve(prec, (1.0 - lam) * p0 @ a.mean + lam * p1 @ b.mean)
        return GaussianTarget(mean, np.linalg.inv(prec))

    def point(self, lam):
        _check_lambda(lam)
        return PathPoint(
            lam,
            lambda x, _l=lam: self.log_density(_l, x),
            lambda x, _l=lam: self.grad_log_density(_l, x),
            gaussian=self.exact_gaussian(lam),
        )

    def initial_point(self):
        return self.point(0.0)

    def legs(self):
        return [Leg("bridge", 0.0, 1.0, point=self.point, log_ratio=self.log_ratio)]


class PartialPosteriorPath:
    """Data-tempered path through partial posteriors of a logistic
    target: the point after batch t conditions on the first b_t
    observations. With bridged=True consecutive partial posteriors are
    connected by geometric sub-bridges (the batch log-likelihood is the
    annealing direction); otherwise each batch is assimilated in one
    step.
    """

    def __init__(self, target, batch_size=10, bridged=False, boundaries=None):
        if not isinstance(target, LogisticRegressionTarget):
            raise ConfigurationError("partial-posterior paths need a logistic target")
        m = target.n_observations
        if boundaries is None:
            if batch_size < 1:
                raise ConfigurationError("batch_size must be >= 1")
            boundaries = list(range(0, m, int(batch_size)))[1:] + [m]
            boundaries = [b for b in boundaries if b <= m]
        boundaries = [0] + [int(b) for b in boundaries]
        if boundaries != sorted(set(boundaries)) or boundaries[-1] != m:
            raise ConfigurationError("batch boundaries must increase to the row count")
        self.target = target.with_active_count(m)
        self.boundaries = boundaries
        self.bridged = bool(bridged)
        self.dim = target.dim

    @property
    def kind(self):
        return "partial_with_bridges" if self.bridged else "partial_posterior"

    def initial_target(self):
        return self.target.prior_gaussian()

    def partial(self, t):
        """Partial posterior conditioned on the first boundaries[t] rows."""
        if not 0 <= t < len(self.boundaries):
            raise ConfigurationError(f"batch index {t} out of range")
        return self.target.with_active_count(self.boundaries[t])

    def log_density(self, t, x):
        return self.partial(t).log_density(x)

    def point_at(self, t):
        part = self.partial(t)
        return PathPoint(self.boundaries[t], part.log_density, part.grad_log_density)

    def initial_point(self):
        return self.point_at(0)

    def sub_bridge(self, t):
        """Geometric bridge between partial posteriors t-1 and t."""
        if t == 0:
            raise ConfigurationError("no sub-bridge before the first batch")
        return GeometricPath(self.partial(t - 1), self.partial(t))

    def legs(self):
        out = []
        for t in range(1, len(self.boundaries)):
            lo, hi = self.boundaries[t - 1], self.boundaries[t]
            bridge = self.sub_bridge(t)

            def make_point(bridge=bridge, lo=lo, hi=hi):
                def point(s):
                    inner = bridge.point(s)
                    inner.param = lo + s * (hi - lo)  # global coordinate
                    return inner
                return point

            # annealing direction equals the batch log-likelihood
            ratio = (lambda x, lo=lo, hi=hi: self.target.log_likelihood_block(x, lo, hi))
            out.append(Leg(
                "bridge", lo, hi, point=make_point(), log_ratio=ratio,
                local_schedule=None if self.bridged else [1.0],
            ))
        return out


class TruncatedPath:
    """Truncation path: log gamma_level(x) = log mu(x) if phi(x) >= level
    else -inf, stepped through a strictly increasing list of levels
    (an implicit level of -inf comes first).
    """

    kind = "truncated"

    def __init__(self, base, phi, levels):
        if not hasattr(base, "sample"):
            raise ConfigurationError("truncated paths need a sampleable base distribution")
        levels = [float(v) for v in levels]
        if not levels or sorted(levels) != levels or len(set(levels)) != len(levels):
            raise ConfigurationError("levels must be a strictly increasing nonempty list")
        self.base = base
        self.phi = phi
        self.levels = levels
        self.dim = base.dim

    def initial_target(self):
        return self.base

    def log_density(self, level, x):
        xb, batched = _as_batch(x, self.dim)
        out = np.where(self.phi(xb) >= level, self.base.log_density(xb), -np.inf)
        return out if batched else float(out[0])

    def point(self, level):
        def grad(x, _level=level):
            xb, _ = _as_batch(x, self.dim)
            if (self.phi(xb) < _level).any():
                raise NumericalError("gradient undefined outside support")
            return self.base.grad_log_density(x)

        return PathPoint(level, lambda x, _l=level: self.log_density(_l, x), grad)

    def initial_point(self):
        return PathPoint(-np.inf, self.base.log_density, self.base.grad_log_density)

    def legs(self):
        points = [self.point(level) for level in self.levels]
        return [Leg("chain", -np.inf, self.levels[-1], points=points)]
