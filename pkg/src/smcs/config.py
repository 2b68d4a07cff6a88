"""Flat TOML config parsing with defaults, plus builders that turn a
config into targets, paths, and kernel specs.

Configs are flat `section.key = value` TOML. Every key has a default,
so an empty config is valid. Unknown keys are rejected.
"""

import os

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import kernels as kernels_mod
from .errors import ConfigurationError
from .paths import GeometricPath, PartialPosteriorPath, TruncatedPath
from .targets import (GaussianTarget, LogisticRegressionTarget,
                      load_logistic_dataset, synthetic_logistic_dataset)

DEFAULTS = {
    # target.kind: gaussian_pair | logistic_synthetic | logistic_csv
    "target.kind": "gaussian_pair",
    "target.dim": 2,
    "target.mu0": 1.0,
    "target.var0": 0.5,
    "target.mu": 0.0,
    "target.var": 1.0,
    "target.normalized": True,
    "target.dataset": "",
    "target.rows": 200,
    "target.true_beta": [],  # empty: alternating +1/-1 pattern
    "target.data_seed": 7,
    "target.holdout": 0,
    "target.prior_mean": 0.0,
    "target.prior_variance": 10.0,
    # path.kind: geometric | partial_posterior | partial_with_bridges | truncated
    "path.kind": "geometric",
    "path.schedule": "adaptive",  # "adaptive" or a list of lambdas
    "path.batch_size": 10,
    "path.levels": [],
    "path.laplace_start": False,
    "kernel.kind": "hmc",
    "kernel.step_size": 0.0,  # 0: rule default for the dimension
    "kernel.leapfrog_steps": 0,  # 0: rule default from the step size
    "kernel.iterations": 2,
    "kernel.adapt": True,
    "run.n_particles": 1024,
    "run.seed": 1,
    "run.repeats": 1,
    "run.mode": "adaptive",  # adaptive | frozen_replay
    "schedule.kappa": 0.5,
    "schedule.resample_threshold": 1.0,
    "scaling.dimensions": [4, 16, 64],
    "scaling.regimes": ["fixed_N", "linear_N", "fixed_N_d_steps"],
    "scaling.repeats": 50,
    # applications per bridging step; high enough that the unit-length
    # trajectories decorrelate fully between reweighting steps at every d
    "scaling.iterations": 8,
    "pimh.iterations": 200,
    "output.timing": False,
}

_SCALAR_TYPES = {bool: (bool,), int: (int,), float: (int, float), str: (str,)}


def _flatten(mapping, prefix=""):
    out = {}
    for key, value in mapping.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, prefix=f"{dotted}."))
        else:
            out[dotted] = value
    return out


def parse_config(text):
    """Parse flat TOML text into a full config dict over DEFAULTS."""
    try:
        raw = _flatten(tomllib.loads(text))
    except tomllib.TOMLDecodeError as err:
        raise ConfigurationError(f"config parse error: {err}") from None
    cfg = dict(DEFAULTS)
    for key, value in raw.items():
        if key not in DEFAULTS:
            raise ConfigurationError(f"unknown config key {key!r}")
        default = DEFAULTS[key]
        if isinstance(default, list) or key == "path.schedule":
            if key == "path.schedule" and isinstance(value, str):
                if value != "adaptive":
                    raise ConfigurationError(
                        "path.schedule must be \"adaptive\" or a list of lambdas")
            elif not isinstance(value, list):
                raise ConfigurationError(f"config key {key!r} expects a list")
        else:
            expected = _SCALAR_TYPES[type(default)]
            if isinstance(value, bool) and not isinstance(default, bool):
                raise ConfigurationError(f"config key {key!r} has the wrong type")
            if not isinstance(value, expected):
                raise ConfigurationError(f"config key {key!r} has the wrong type")
        cfg[key] = value
    validate_config(cfg)
    return cfg


def load_config(path=None, overrides=None):
    """Read a config file (or use pure defaults) and apply overrides."""
    text = ""
    if path:
        if not os.path.exists(path):
            raise ConfigurationError(f"config file not found: {path}")
        with open(path) as fh:
            text = fh.read()
    cfg = parse_config(text)
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = value
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    if cfg["run.n_particles"] < 1:
        raise ConfigurationError("run.n_particles must be >= 1")
    if not 0.0 < cfg["schedule.kappa"] < 1.0:
        raise ConfigurationError("schedule.kappa must lie in (0, 1)")
    if not 0.0 < cfg["schedule.resample_threshold"] <= 1.0:
        raise ConfigurationError("schedule.resample_threshold must lie in (0, 1]")
    if cfg["run.repeats"] < 1:
        raise ConfigurationError("run.repeats must be >= 1")
    if cfg["run.mode"] not in ("adaptive", "frozen_replay"):
        raise ConfigurationError(f"unknown run.mode {cfg['run.mode']!r}")
    if cfg["target.dim"] < 1:
        raise ConfigurationError("target.dim must be >= 1")
    if cfg["path.batch_size"] < 1:
        raise ConfigurationError("path.batch_size must be >= 1")
    if cfg["pimh.iterations"] < 1:
        raise ConfigurationError("pimh.iterations must be >= 1")
    if cfg["scaling.repeats"] < 1:
        raise ConfigurationError("scaling.repeats must be >= 1")
    if cfg["scaling.iterations"] < 1:
        raise ConfigurationError("scaling.iterations must be >= 1")
    if not cfg["scaling.dimensions"] or any(int(d) < 1 for d in cfg["scaling.dimensions"]):
        raise ConfigurationError("scaling.dimensions must be a nonempty list of positive ints")
    if cfg["target.kind"] not in ("gaussian_pair", "logistic_synthetic", "logistic_csv"):
        raise ConfigurationError(f"unknown target.kind {cfg['target.kind']!r}")
    if cfg["path.kind"] not in ("geometric", "partial_posterior",
                                "partial_with_bridges", "truncated"):
        raise ConfigurationError(f"unknown path.kind {cfg['path.kind']!r}")
    if cfg["kernel.kind"] not in kernels_mod.KINDS:
        raise ConfigurationError(f"unknown kernel.kind {cfg['kernel.kind']!r}")
    if cfg["target.kind"] == "logistic_csv":
        dataset = cfg["target.dataset"]
        if not dataset:
            raise ConfigurationError("target.dataset required for logistic_csv")
        if not os.path.exists(dataset):
            raise ConfigurationError(f"dataset not found: {dataset}")
    return cfg


def default_true_beta(dim):
    """Alternating +1/-1 coefficients, a fixed synthetic ground truth."""
    return np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)


def build_target(cfg):
    """Concrete target for the config; returns (initial, terminal) for
    gaussian_pair and a LogisticRegressionTarget otherwise."""
    kind = cfg["target.kind"]
    if kind == "gaussian_pair":
        d = int(cfg["target.dim"])
        normalized = bool(cfg["target.normalized"])
        initial = GaussianTarget(np.full(d, float(cfg["target.mu0"])),
                                 np.full(d, float(cfg["target.var0"])),
                                 normalized=normalized)
        terminal = GaussianTarget(np.full(d, float(cfg["target.mu"])),
                                  np.full(d, float(cfg["target.var"])),
                                  normalized=normalized)
        return initial, terminal
    if kind == "logistic_synthetic":
        d = int(cfg["target.dim"])
        beta = cfg["target.true_beta"] or default_true_beta(d)
        beta = np.asarray(beta, dtype=float)
        if beta.size != d:
            raise ConfigurationError("target.true_beta length must equal target.dim")
        X, y = synthetic_logistic_dataset(int(cfg["target.rows"]), d, beta,
                                          int(cfg["target.data_seed"]))
    else:
        X, y = load_logistic_dataset(cfg["target.dataset"])
    holdout = int(cfg["target.holdout"])
    if holdout < 0 or holdout >= X.shape[0]:
        raise ConfigurationError("target.holdout must leave at least one training row")
    target = LogisticRegressionTarget(
        X[:X.shape[0] - holdout], y[:y.shape[0] - holdout],
        prior_mean=float(cfg["target.prior_mean"]),
        prior_variance=float(cfg["target.prior_variance"]))
    target.holdout = (X[X.shape[0] - holdout:], y[y.shape[0] - holdout:])
    return target


def build_path(cfg):
    kind = cfg["path.kind"]
    target = build_target(cfg)
    if kind == "geometric":
        if isinstance(target, tuple):
            initial, terminal = target
        else:
            if bool(cfg["path.laplace_start"]):
                from .targets import laplace_initializer
                initial = laplace_initializer(target)
            else:
                initial = target.prior_gaussian()
            terminal = target
        return GeometricPath(initial, terminal)
    if kind in ("partial_posterior", "partial_with_bridges"):
        if isinstance(target, tuple):
            raise ConfigurationError("partial-posterior paths need a logistic target")
        return PartialPosteriorPath(target, batch_size=int(cfg["path.batch_size"]),
                                    bridged=(kind == "partial_with_bridges"))
    # truncated: base is the initial Gaussian of a gaussian_pair config,
    # the score is the first coordinate, levels come from the config
    if not isinstance(target, tuple):
        raise ConfigurationError("truncated paths are configured on gaussian_pair targets")
    if not cfg["path.levels"]:
        raise ConfigurationError("path.levels required for truncated paths")
    base = target[1]
    return TruncatedPath(base, lambda x: x[:, 0], [float(v) for v in cfg["path.levels"]])


def build_kernel(cfg, dim, scaling_study=False):
    eps = float(cfg["kernel.step_size"])
    if eps == 0.0:
        eps = kernels_mod.default_step_size(dim, scaling_study=scaling_study)
    steps = int(cfg["kernel.leapfrog_steps"])
    if steps == 0:
        steps = kernels_mod.default_leapfrog_steps(eps, dim, scaling_study=scaling_study)
    kind = cfg["kernel.kind"]
    iterations = int(cfg["kernel.iterations"])
    if kind == "uhmc":
        iterations = 1  # single momentum refresh per step
    spec = kernels_mod.KernelSpec(kind=kind, step_size=eps, leapfrog_steps=steps,
                                  preconditioner=np.ones(dim), iterations=iterations)
    return spec.validate(dim)
