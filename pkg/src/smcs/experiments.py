"""Experiment drivers behind the CLI subcommands: single runs with CSV
artifacts, the Gaussian scaling benchmark, sequential logistic
regression, geometric-versus-partial path comparison, PIMH chains, and
multi-run combination.

Every driver is a deterministic function of (config, seed). Repeats fan
out over a process pool, but each job's random streams are keyed by the
job's identity, never by worker scheduling, so artifacts are
byte-identical for any thread count.
"""

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import logsumexp

from . import engine
from . import rng as rngmod
from .config import build_kernel, build_path, build_target
from .diagnostics import (MultiRunSet, RunSummary, combine_runs, combined_ci,
                          config_hash, pimh_chain)
from .engine import (FrozenPlan, PlanStep, weighted_estimate,
                     write_summary_csv, write_trace_csv)
from .errors import ConfigurationError, NumericalError
from .kernels import KernelSpec, default_leapfrog_steps, default_step_size
from .paths import GeometricPath, PartialPosteriorPath
from .targets import GaussianTarget

SCALING_REGIMES = ("fixed_N", "linear_N", "fixed_N_d_steps")
SCALING_HEADER = "d,regime,repeat,T,roots,mse_mean,log_z"
AGGREGATE_HEADER = "d,regime,T_mean,roots_mean,mse_mean,log_z_mean,log_z_var"
COMPARISON_HEADER = "path,step,param,coord,mean,var"


def _fmt(value):
    return repr(float(value))


def _write_csv(path, header, rows):
    lines = [header] + [",".join(row) for row in rows]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _map_jobs(fn, jobs, threads):
    """Order-preserving map, optionally over a process pool."""
    if threads <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, jobs, chunksize=1))


def _run_from_config(cfg, seed=None):
    """One engine run for a parsed config; honors run.mode."""
    path = build_path(cfg)
    kernel = build_kernel(cfg, path.dim)
    n = int(cfg["run.n_particles"])
    base_seed = int(cfg["run.seed"] if seed is None else seed)
    kwargs = dict(
        kappa=float(cfg["schedule.kappa"]),
        resample_threshold=float(cfg["schedule.resample_threshold"]),
        schedule=cfg["path.schedule"],
        adapt=bool(cfg["kernel.adapt"]),
    )
    if cfg["run.mode"] == "frozen_replay":
        pilot = engine.run(path, kernel, n,
                           rngmod.derive_seed(base_seed, rngmod.PILOT),
                           record_plan=True, **kwargs)
        return engine.run(path, kernel, n, base_seed, plan=pilot.plan)
    return engine.run(path, kernel, n, base_seed, **kwargs)


def run_single(cfg, out_dir):
    """Execute one run and write trace.csv plus summary.csv."""
    _ensure_dir(out_dir)
    result = _run_from_config(cfg)
    write_trace_csv(result.records, os.path.join(out_dir, "trace.csv"),
                    timing=bool(cfg["output.timing"]))
    write_summary_csv(result, os.path.join(out_dir, "summary.csv"))
    return result


def monotone_lambda_grid(lams, n_points):
    """Resample an increasing tempering schedule to n_points steps.

    Fits a monotone piecewise cubic through (t/T, lambda_t) with the
    implicit origin (0, 0) and evaluates it at t/n_points. The result is
    strictly increasing and ends exactly at 1.
    """
    lams = [float(v) for v in lams]
    T = len(lams)
    if T < 1 or sorted(set(lams)) != lams or lams[-1] != 1.0:
        raise ConfigurationError("schedule must increase strictly to 1.0")
    if n_points < 1:
        raise ConfigurationError("n_points must be >= 1")
    x = np.arange(T + 1) / T
    y = np.concatenate([[0.0], lams])
    grid = PchipInterpolator(x, y)(np.arange(1, n_points + 1) / n_points)
    grid = np.clip(grid, 0.0, 1.0)
    grid[-1] = 1.0
    if not (np.diff(np.concatenate([[0.0], grid])) > 0).all():
        raise NumericalError("interpolated schedule is not strictly increasing")
    return grid


def scaling_particles(regime, d):
    if regime == "linear_N":
        return 256 + 8 * int(d)
    return 256


def _scaling_job(args):
    """One (d, regime, repeat) cell of the scaling benchmark.

    Module-level so process pools can pickle it. Returns the raw row
    (d, regime, repeat, T, roots, mse_mean, log_z).
    """
    d, regime, repeat, master_seed, kappa, iterations = args
    initial = GaussianTarget(np.ones(d), np.full(d, 0.5), normalized=True)
    terminal = GaussianTarget(np.zeros(d), np.ones(d), normalized=True)
    path = GeometricPath(initial, terminal)
    eps = default_step_size(d, scaling_study=True)
    steps = default_leapfrog_steps(eps, d, scaling_study=True)
    kernel = KernelSpec("hmc", eps, steps, np.ones(d), iterations=iterations)
    n = scaling_particles(regime, d)
    seed = rngmod.derive_seed(master_seed, rngmod.RUN,
                              SCALING_REGIMES.index(regime), d, repeat)
    thresh = 0.5  # ESS-triggered resampling keeps distinct lineages alive
    if regime == "fixed_N_d_steps":
        # three passes: an adaptive pilot fixes the schedule length, a
        # tuning pass re-adapts the kernels on the refined d-point grid,
        # and the scored run replays that tuned plan frozen
        pilot = engine.run(path, kernel, n,
                           rngmod.derive_seed(seed, rngmod.PILOT, 0),
                           kappa=kappa, resample_threshold=thresh,
                           adapt=True, record_plan=True)
        grid = monotone_lambda_grid([r.lam for r in pilot.records], d)
        bare = FrozenPlan([PlanStep(0, float(v), None) for v in grid])
        tuning = engine.run(path, kernel, n,
                            rngmod.derive_seed(seed, rngmod.PILOT, 1),
                            resample_threshold=thresh,
                            adapt=True, plan=bare, record_plan=True)
        result = engine.run(path, kernel, n, seed,
                            resample_threshold=thresh, plan=tuning.plan)
    else:
        result = engine.run(path, kernel, n, seed, kappa=kappa,
                            resample_threshold=thresh, adapt=True)
    est = np.asarray(weighted_estimate(result.system))
    mse = float(np.mean(est * est))  # the target mean is the origin
    return (int(d), regime, int(repeat), int(result.n_steps),
            int(result.records[-1].root_count), mse, float(result.log_z))


def run_scaling_study(cfg, out_dir, threads=1):
    """Gaussian scaling benchmark over dimensions and particle regimes.

    Writes scaling.csv (one row per repeat, schema SCALING_HEADER) and
    aggregate.csv (means over repeats, sample variance for log_z).
    """
    _ensure_dir(out_dir)
    dims = [int(d) for d in cfg["scaling.dimensions"]]
    regimes = list(cfg["scaling.regimes"])
    for regime in regimes:
        if regime not in SCALING_REGIMES:
            raise ConfigurationError(f"unknown scaling regime {regime!r}")
    repeats = int(cfg["scaling.repeats"])
    seed = int(cfg["run.seed"])
    kappa = float(cfg["schedule.kappa"])
    iterations = int(cfg["scaling.iterations"])
    jobs = [(d, regime, rep, seed, kappa, iterations)
            for regime in regimes for d in dims for rep in range(repeats)]
    results = _map_jobs(_scaling_job, jobs, threads)
    rows = [[str(d), regime, str(rep), str(T), str(roots), _fmt(mse), _fmt(lz)]
            for d, regime, rep, T, roots, mse, lz in results]
    _write_csv(os.path.join(out_dir, "scaling.csv"), SCALING_HEADER, rows)
    agg_rows = []
    for regime in regimes:
        for d in dims:
            sub = [r for r in results if r[0] == d and r[1] == regime]
            lzs = np.array([r[6] for r in sub])
            agg_rows.append([
                str(d), regime,
                _fmt(np.mean([r[3] for r in sub])),
                _fmt(np.mean([r[4] for r in sub])),
                _fmt(np.mean([r[5] for r in sub])),
                _fmt(lzs.mean()),
                _fmt(lzs.var(ddof=1) if lzs.size > 1 else 0.0),
            ])
    _write_csv(os.path.join(out_dir, "aggregate.csv"), AGGREGATE_HEADER, agg_rows)
    return results


def _predictive_log_score(positions, weights_norm, x_held, y_held):
    """Sum over held-out rows of log of the weighted-average predictive
    probability of the observed label; nan when there is no holdout."""
    if x_held.shape[0] == 0:
        return float("nan")
    eta = positions @ x_held.T
    sign = np.where(np.asarray(y_held) > 0, 1.0, -1.0)
    log_p = -np.logaddexp(0.0, -sign * eta)
    with np.errstate(divide="ignore"):
        lw = np.log(weights_norm)[:, None]
    return float(logsumexp(lw + log_p, axis=0).sum())


def _moments(positions, weights_norm):
    mean = weights_norm @ positions
    var = weights_norm @ (positions - mean) ** 2
    return mean, var


def run_logistic_sequence(cfg, out_dir):
    """Assimilate a logistic dataset in batches and record, at every
    batch boundary, the cumulative log marginal likelihood, the
    predictive log-score on held-out rows, and per-coordinate posterior
    moments (sequence.csv). The usual trace.csv and summary.csv are
    written alongside.
    """
    _ensure_dir(out_dir)
    target = build_target(cfg)
    if isinstance(target, tuple):
        raise ConfigurationError("the sequential driver needs a logistic target")
    kind = cfg["path.kind"]
    if kind == "truncated":
        raise ConfigurationError("the sequential driver uses partial-posterior paths")
    # geometric (the global default) falls through to the bridged path
    bridged = kind != "partial_posterior"
    path = PartialPosteriorPath(target, batch_size=int(cfg["path.batch_size"]),
                                bridged=bridged)
    kernel = build_kernel(cfg, path.dim)
    n = int(cfg["run.n_particles"])
    seed = int(cfg["run.seed"])
    x_held, y_held = getattr(target, "holdout",
                             (np.zeros((0, path.dim)), np.zeros(0)))
    snapshots = []

    def snap(system, boundary):
        w = system.weights.normalized
        mean, var = _moments(system.positions, w)
        snapshots.append((int(boundary), float(system.cumulative_log_z),
                          _predictive_log_score(system.positions, w, x_held, y_held),
                          mean, var))

    # boundary 0: the prior population; initialize here draws the exact
    # same particles the run below starts from (same seed, same stream)
    snap(engine.initialize(path.initial_target(), n, seed), 0)

    def observer(system, point, leg_idx, leg_done):
        if leg_done:
            snap(system, path.boundaries[leg_idx + 1])

    result = engine.run(path, kernel, n, seed,
                        kappa=float(cfg["schedule.kappa"]),
                        resample_threshold=float(cfg["schedule.resample_threshold"]),
                        adapt=bool(cfg["kernel.adapt"]), observer=observer)
    d = path.dim
    header = ("observations,log_ml,pred_score,"
              + ",".join(f"mean_{j}" for j in range(d)) + ","
              + ",".join(f"var_{j}" for j in range(d)))
    rows = [[str(obs), _fmt(log_ml), _fmt(score)]
            + [_fmt(v) for v in mean] + [_fmt(v) for v in var]
            for obs, log_ml, score, mean, var in snapshots]
    _write_csv(os.path.join(out_dir, "sequence.csv"), header, rows)
    write_trace_csv(result.records, os.path.join(out_dir, "trace.csv"),
                    timing=bool(cfg["output.timing"]))
    write_summary_csv(result, os.path.join(out_dir, "summary.csv"))
    return result, snapshots


def run_path_comparison(cfg, out_dir):
    """Run the geometric and partial-posterior paths on one logistic
    target and record per-step coordinate moments (comparison.csv)."""
    _ensure_dir(out_dir)
    target = build_target(cfg)
    if isinstance(target, tuple):
        raise ConfigurationError("path comparison needs a logistic target")
    kernel = build_kernel(cfg, target.dim)
    n = int(cfg["run.n_particles"])
    seed = int(cfg["run.seed"])
    paths = (
        ("geometric", GeometricPath(target.prior_gaussian(), target)),
        ("partial_posterior",
         PartialPosteriorPath(target, batch_size=int(cfg["path.batch_size"]),
                              bridged=False)),
    )
    rows = []
    results = {}
    for name, path in paths:
        snaps = []

        def observer(system, point, leg_idx, leg_done, snaps=snaps):
            mean, var = _moments(system.positions, system.weights.normalized)
            snaps.append((system.t, float(point.param), mean, var))

        init = engine.initialize(path.initial_target(), n, seed)
        mean0, var0 = _moments(init.positions, init.weights.normalized)
        snaps.append((0, 0.0, mean0, var0))
        results[name] = engine.run(
            path, kernel, n, seed, kappa=float(cfg["schedule.kappa"]),
            resample_threshold=float(cfg["schedule.resample_threshold"]),
            adapt=bool(cfg["kernel.adapt"]), observer=observer)
        for t, param, mean, var in snaps:
            for j in range(path.dim):
                rows.append([name, str(t), _fmt(param), str(j),
                             _fmt(mean[j]), _fmt(var[j])])
    _write_csv(os.path.join(out_dir, "comparison.csv"), COMPARISON_HEADER, rows)
    return results


def run_pimh(cfg, out_dir):
    """Freeze a pilot run's schedule, then drive a PIMH chain whose
    proposals replay that plan with fresh seeds (chain.csv)."""
    _ensure_dir(out_dir)
    path = build_path(cfg)
    kernel = build_kernel(cfg, path.dim)
    n = int(cfg["run.n_particles"])
    seed = int(cfg["run.seed"])
    pilot = engine.run(path, kernel, n, rngmod.derive_seed(seed, rngmod.PILOT),
                       kappa=float(cfg["schedule.kappa"]),
                       resample_threshold=float(cfg["schedule.resample_threshold"]),
                       schedule=cfg["path.schedule"],
                       adapt=bool(cfg["kernel.adapt"]), record_plan=True)
    plan = pilot.plan

    def frozen_run(run_seed):
        return engine.run(path, kernel, n, run_seed, plan=plan)

    chain = pimh_chain(frozen_run, int(cfg["pimh.iterations"]), seed)
    d = path.dim
    header = "iter,log_z,accepted," + ",".join(f"coord_{j}" for j in range(d))
    rows = [[str(k), _fmt(chain.log_zs[k]), str(int(chain.accepted[k]))]
            + [_fmt(v) for v in chain.positions[k]]
            for k in range(chain.log_zs.size)]
    _write_csv(os.path.join(out_dir, "chain.csv"), header, rows)
    with open(os.path.join(out_dir, "acceptance.txt"), "w") as fh:
        fh.write(f"iterations={chain.log_zs.size}\n"
                 f"acceptance_rate={_fmt(chain.acceptance_rate)}\n")
    return chain


def _combine_job(args):
    cfg, run_seed = args
    result = _run_from_config(cfg, seed=run_seed)
    system = result.system
    return (float(result.log_z), system.positions, system.weights.normalized)


def run_combine(cfg, out_dir, threads=1):
    """run.repeats independent runs combined by their Z weights.

    Writes runs.csv (per-run log_z and coordinate estimates) and
    combined.txt (combined estimate with its normal-approximation CI).
    """
    _ensure_dir(out_dir)
    repeats = int(cfg["run.repeats"])
    if repeats < 2:
        raise ConfigurationError("combine needs run.repeats >= 2")
    seed = int(cfg["run.seed"])
    jobs = [(cfg, rngmod.derive_seed(seed, rngmod.RUN, r))
            for r in range(repeats)]
    outs = _map_jobs(_combine_job, jobs, threads)
    chash = config_hash(cfg)
    runs = MultiRunSet([RunSummary(lz, pos, w, chash) for lz, pos, w in outs])
    combined, log_mean_z = combine_runs(runs, lambda x: x)
    lo, hi = combined_ci(runs, lambda x: x, level=0.95)
    combined = np.atleast_1d(np.asarray(combined))
    lo = np.atleast_1d(np.asarray(lo))
    hi = np.atleast_1d(np.asarray(hi))
    d = outs[0][1].shape[1]
    header = "run,log_z," + ",".join(f"estimate_{j}" for j in range(d))
    rows = [[str(r), _fmt(lz)] + [_fmt(v) for v in (w @ pos)]
            for r, (lz, pos, w) in enumerate(outs)]
    _write_csv(os.path.join(out_dir, "runs.csv"), header, rows)
    lines = [f"runs={repeats}", f"level={_fmt(0.95)}",
             f"log_mean_z={_fmt(log_mean_z)}"]
    for j in range(d):
        lines.append(f"estimate_{j}={_fmt(combined[j])}")
        lines.append(f"ci_lo_{j}={_fmt(lo[j])}")
        lines.append(f"ci_hi_{j}={_fmt(hi[j])}")
    with open(os.path.join(out_dir, "combined.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return runs, combined, (lo, hi)
