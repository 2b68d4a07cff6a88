"""Particle-system driver: initialization from the path's initial
distribution, the per-step weight/resample/move loop, lineage tracking,
normalizing-constant accumulation, trace records, and freeze-and-replay
support.

Step order depends on the kernel class. Exact kernels (rwmh, mala, hmc,
perfect) have incremental weights that do not depend on the post-move
state, so each step weights at the pre-move positions, then resamples,
then moves. Unadjusted kernels (ula, uhmc) resample on the carried
weights first, then move, weighting with the kernel's own increments.
Both orders accumulate log Z as the log of the carried-weight average of
the unnormalized incremental weights, which reproduces the plain
product-of-averages estimator exactly when resampling fires every step.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import kernels as kernels_mod
from . import rng as rngmod
from .errors import ConfigurationError, ParticleDeathError
from .kernels import EXACT_KINDS, adapt_preconditioner
from .resampling import (ScheduleState, WeightVector, multinomial_ancestors,
                         next_lambda, should_resample)

TRACE_HEADER = "t,lambda,ess_fraction,resampled,log_inc_z,root_count,accept,wall_time"
SUMMARY_HEADER = "log_z,T,N,seed"


@dataclass
class RunRecord:
    """One trace row; accept holds the mean acceptance rate for exact
    kernels and the mean absolute log-weight increment for unadjusted
    ones."""

    t: int
    lam: float
    ess_fraction: float
    resampled: bool
    log_inc_z: float
    root_count: int
    accept: float
    wall_time: float


@dataclass
class ParticleSystem:
    """Weighted particle population with compressed lineage.

    roots[n] is the time-zero ancestor label of particle n (0-based);
    at t=0 roots[n] = n. resample_events counts resampling steps, which
    the genealogy variance estimators use as their exponent.
    """

    positions: np.ndarray
    weights: WeightVector
    roots: np.ndarray
    t: int
    cumulative_log_z: float
    rng_seed: int
    trace: list = field(default_factory=list)
    resample_events: int = 0

    @property
    def n(self):
        return self.positions.shape[0]

    @property
    def dim(self):
        return self.positions.shape[1]


@dataclass
class PlanStep:
    leg: int
    s: float  # leg-local coordinate for bridge legs, point index for chain legs
    preconditioner: np.ndarray = None


@dataclass
class FrozenPlan:
    """Schedule and adapted preconditioners recorded from one run, for
    exact non-adaptive replay."""

    steps: list = field(default_factory=list)


@dataclass
class RunResult:
    system: ParticleSystem
    records: list
    plan: FrozenPlan = None

    @property
    def log_z(self):
        return self.system.cumulative_log_z

    @property
    def n_steps(self):
        return self.system.t


def initialize(pi0, n_particles, seed):
    """N i.i.d. draws from pi0, equal weights, identity roots."""
    if not hasattr(pi0, "sample"):
        raise ConfigurationError("initial distribution must be exactly sampleable")
    if n_particles < 1:
        raise ConfigurationError("n_particles must be >= 1")
    gen = rngmod.substream(seed, rngmod.INIT)
    positions = np.asarray(pi0.sample(gen, int(n_particles)), dtype=float)
    return ParticleSystem(
        positions=positions,
        weights=WeightVector.equal(n_particles),
        roots=np.arange(n_particles, dtype=np.intp),
        t=0,
        cumulative_log_z=0.0,
        rng_seed=int(seed),
    )


def smcs_step(system, pi_prev, pi_t, kernel, policy):
    """Advance the system by one bridging step (see module docstring for
    the two step orders). Mutates and returns the system."""
    started = time.perf_counter()
    n = system.n
    step = system.t + 1
    seed = system.rng_seed
    exact = kernel.kind in EXACT_KINDS

    def resample():
        gen = rngmod.substream(seed, rngmod.RESAMPLE, step)
        ancestors = multinomial_ancestors(wv, n, gen)
        system.positions = system.positions[ancestors]
        system.roots = system.roots[ancestors]
        system.resample_events += 1
        return WeightVector.equal(n)

    try:
        if exact:
            logp_prev = np.atleast_1d(pi_prev.log_density(system.positions))
            logp_t = np.atleast_1d(pi_t.log_density(system.positions))
            with np.errstate(invalid="ignore"):
                inc = logp_t - logp_prev
            # a particle whose carried weight is already zero contributes
            # nothing; patch the indeterminate -inf minus -inf case
            dead = np.isnan(inc) & np.isneginf(system.weights.log_weights)
            inc = np.where(dead, 0.0, inc)
            log_inc_z = float(logsumexp(system.weights.log_weights + inc)
                              - system.weights.log_total)
            wv = system.weights.incremented(inc)
            ess_fraction = wv.ess / n
            resampled = bool(should_resample(wv, policy))
            if resampled:
                wv = resample()
            x = system.positions
            acc = []
            for i in range(kernel.iterations):
                out = kernels_mod.move(x, pi_t, pi_prev, kernel,
                                       rngmod.substream(seed, rngmod.MOVE, step, i))
                x = out.new_position
                acc.append(1.0 if out.accepted is None else float(np.mean(out.accepted)))
            system.positions = x
            accept = float(np.mean(acc))
        else:
            wv = system.weights
            ess_fraction = wv.ess / n
            resampled = bool(should_resample(wv, policy))
            if resampled:
                wv = resample()
            x = system.positions
            total_inc = np.zeros(n)
            prev_point = pi_prev
            for i in range(kernel.iterations):
                out = kernels_mod.move(x, pi_t, prev_point, kernel,
                                       rngmod.substream(seed, rngmod.MOVE, step, i))
                x = out.new_position
                total_inc = total_inc + out.log_weight_increment
                prev_point = pi_t  # later applications bridge pi_t to itself
            system.positions = x
            log_inc_z = float(logsumexp(wv.log_weights + total_inc) - wv.log_total)
            wv = wv.incremented(total_inc)
            accept = float(np.mean(np.abs(total_inc)))
    except ParticleDeathError as err:
        raise ParticleDeathError(
            f"{err} (step {step}, param {pi_t.param})", trace=list(system.trace)
        ) from None

    system.weights = wv
    system.t = step
    system.cumulative_log_z += log_inc_z
    system.trace.append(RunRecord(
        t=step,
        lam=float(pi_t.param),
        ess_fraction=float(ess_fraction),
        resampled=resampled,
        log_inc_z=log_inc_z,
        root_count=int(np.unique(system.roots).size),
        accept=accept,
        wall_time=time.perf_counter() - started,
    ))
    return system


def _validate_fixed_schedule(values):
    vals = [float(v) for v in values]
    if not vals or any(not 0.0 < v <= 1.0 for v in vals):
        raise ConfigurationError("fixed schedule entries must lie in (0, 1]")
    if sorted(set(vals)) != vals:
        raise ConfigurationError("fixed schedule must be strictly increasing")
    if vals[-1] != 1.0:
        raise ConfigurationError("fixed schedule must end at 1.0")
    return vals


def run(path, kernel, n_particles, seed, kappa=0.5, resample_threshold=1.0,
        schedule="adaptive", adapt=False, plan=None, record_plan=False,
        max_steps=100000, observer=None):
    """Drive the sampler along the whole path.

    schedule is "adaptive" or a fixed list of global parameters
    (geometric paths only). adapt re-estimates the kernel preconditioner
    from the population before every step. plan replays a FrozenPlan's
    schedule exactly; plan steps with a stored preconditioner use it,
    while steps without one fall back to adapt (when set), so a
    schedule-only plan can be replayed with fresh tuning. record_plan
    captures (leg, coordinate, preconditioner) per step into result.plan.
    observer(system, point, leg_index, leg_done) runs after every step.
    """
    kernel.validate(getattr(path, "dim", None))
    legs = path.legs()
    system = initialize(path.initial_target(), n_particles, seed)
    policy = ScheduleState(kappa=kappa, resample_threshold=resample_threshold)
    prev_point = path.initial_point()
    plan_out = FrozenPlan() if record_plan else None

    def leg_point(leg, s):
        if leg.kind == "bridge":
            return leg.point(s)
        return leg.points[int(s)]

    def one_step(leg_idx, s, point, leg_done):
        nonlocal prev_point
        kern = kernel
        omega = None
        ps = plan.steps[system.t] if plan is not None else None
        if ps is not None and ps.preconditioner is not None:
            omega = ps.preconditioner
            kern = kernel.with_preconditioner(omega)
        elif adapt:
            omega = adapt_preconditioner(
                system.positions, system.weights,
                np.atleast_1d(np.asarray(kern.preconditioner, dtype=float)))
            kern = kernel.with_preconditioner(omega)
        smcs_step(system, prev_point, point, kern, policy)
        policy.history.append(point.param)
        policy.current_lambda = point.param
        if plan_out is not None:
            plan_out.steps.append(PlanStep(leg_idx, s, omega))
        if observer is not None:
            observer(system, point, leg_idx, leg_done)
        prev_point = point

    if plan is not None:
        for k, ps in enumerate(plan.steps):
            leg = legs[ps.leg]
            point = leg_point(leg, ps.s)
            last_of_leg = (k + 1 == len(plan.steps)) or plan.steps[k + 1].leg != ps.leg
            one_step(ps.leg, ps.s, point, last_of_leg)
        return RunResult(system, system.trace, plan_out)

    fixed_global = None
    if schedule != "adaptive":
        if len(legs) != 1 or legs[0].kind != "bridge":
            raise ConfigurationError("fixed schedules apply to single-bridge (geometric) paths")
        fixed_global = _validate_fixed_schedule(schedule)

    for leg_idx, leg in enumerate(legs):
        if leg.kind == "chain":
            for j, point in enumerate(leg.points):
                one_step(leg_idx, j, point, j + 1 == len(leg.points))
        else:
            local = fixed_global if fixed_global is not None else leg.local_schedule
            if local is not None:
                for s in _validate_fixed_schedule(local):
                    one_step(leg_idx, s, leg.point(s), s == 1.0)
            else:
                s = 0.0
                while s < 1.0:
                    if system.t >= max_steps:
                        raise ConfigurationError(f"run exceeded max_steps={max_steps}")
                    ratios = leg.log_ratio(system.positions)
                    s_next = next_lambda(s, ratios, policy.kappa)
                    one_step(leg_idx, s_next, leg.point(s_next), s_next >= 1.0)
                    s = s_next
    return RunResult(system, system.trace, plan_out)


def weighted_estimate(system, phi=None):
    """Self-normalized weighted average of phi over the particles.

    phi maps (n, d) arrays to (n,) or (n, k); None averages positions.
    """
    vals = system.positions if phi is None else np.asarray(phi(system.positions), dtype=float)
    w = system.weights.normalized
    if vals.ndim == 1:
        return float(w @ vals)
    return w @ vals


def _fmt(value):
    return repr(float(value))


def write_trace_csv(records, out_path, timing=False):
    """Serialize trace records; wall_time is zeroed unless timing is
    set, so default artifacts are bit-identical across machines."""
    lines = [TRACE_HEADER]
    for r in records:
        wall = r.wall_time if timing else 0.0
        lines.append(",".join([
            str(r.t), _fmt(r.lam), _fmt(r.ess_fraction), str(int(r.resampled)),
            _fmt(r.log_inc_z), str(r.root_count), _fmt(r.accept), _fmt(wall),
        ]))
    with open(out_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary_csv(result, out_path):
    system = result.system
    lines = [SUMMARY_HEADER,
             ",".join([_fmt(system.cumulative_log_z), str(system.t),
                       str(system.n), str(system.rng_seed)])]
    with open(out_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
