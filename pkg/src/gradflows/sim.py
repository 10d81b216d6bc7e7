"""Fixed-step integration of flow laws with convergence detection.

The integer-order states advance by Heun's predictor-corrector; the
fractional gain advances by the memory channel on the same uniform grid.
Near the minimizer the regularized field becomes stiff for an explicit
scheme (its local rate scales like rho/delta^alpha), so each step carries a
guard: when the step looks oscillatory or the Lyapunov value would tick up
past a small fraction of its allowance, the step is redone with power-of-two
substeps until the ascent is resolved.  Substeps refine only the decision
vector's clock; the fractional memory stays on the coarse grid (its own
right-hand side is smooth through the terminal zone).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .caputo import CaputoChannel
from .flows import (
    BoundReport,
    FlowLaw,
    FlowState,
    FlowVariant,
    bound_finite_time,
    bound_fixed_time_fractional,
    bound_fixed_time_second_order,
    vector_field,
)
from .problems import Problem

__all__ = [
    "DivergenceError",
    "SimOptions",
    "Trajectory",
    "SweepEntry",
    "integrate",
    "applicable_bound",
    "sweep",
]

# state-norm ceiling beyond which the run is declared divergent
_NORM_CEILING = 1e8
# per-step Lyapunov uptick allowance, as a fraction of the initial value
_UPTICK_FRACTION = 1e-6
# the guard targets a quarter of the allowance so accepted steps keep margin
_UPTICK_TARGET = 0.25
# local rate-times-step estimate beyond which a step counts as oscillatory
_STIFFNESS_TRIGGER = 1.5
# substepped runs refine until their own rate-times-substep falls below this,
# keeping the inner map monotone-stable (no spurious period-two parking)
_SUBSTEP_RATE_CAP = 0.5
_MAX_SUBSTEPS = 1 << 16


class DivergenceError(RuntimeError):
    """The state left the finite range; carries the last valid time."""

    def __init__(self, message: str, last_valid_time: float):
        super().__init__(message)
        self.last_valid_time = last_valid_time


@dataclass(frozen=True)
class SimOptions:
    """Grid, horizon, detection tolerances, and recording stride."""

    step: float = 1e-4
    horizon: float = 5.0
    eps_x: float = 1e-3
    eps_g: float = 1e-3
    record_stride: int = 1

    def __post_init__(self):
        if not (isinstance(self.step, (int, float)) and 0.0 < self.step and math.isfinite(self.step)):
            raise ValueError("step must be a positive finite real, got %r" % (self.step,))
        if not (isinstance(self.horizon, (int, float)) and math.isfinite(self.horizon)):
            raise ValueError("horizon must be finite, got %r" % (self.horizon,))
        if not self.step < self.horizon:
            raise ValueError(
                "step %g must be smaller than the horizon %g" % (self.step, self.horizon)
            )
        if not (self.eps_x > 0 and self.eps_g > 0):
            raise ValueError("detection tolerances must be positive")
        if not (isinstance(self.record_stride, (int, np.integer)) and self.record_stride >= 1):
            raise ValueError("record stride must be a positive integer, got %r" % (self.record_stride,))


@dataclass(frozen=True)
class Trajectory:
    """Recorded history of one integration.

    `lyapunov` is the squared distance to the minimizer when it is known,
    None otherwise.  `convergence_time` is the first grid time meeting the
    detection tolerance, after which the state is frozen and recording stops.
    `diagnostics` reports the stiffness guard's activity.
    """

    times: np.ndarray
    states: np.ndarray
    gains: Optional[np.ndarray]
    lyapunov: Optional[np.ndarray]
    convergence_time: Optional[float]
    diagnostics: dict = field(default_factory=dict)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _converged(x, grad_norm_fn, xstar, opts) -> bool:
    if xstar is not None:
        return float(np.linalg.norm(x - xstar)) <= opts.eps_x
    return grad_norm_fn(x) <= opts.eps_g


def _substep_fixed_gain(law, problem, x, theta, h, m):
    """m Heun substeps of the decision vector with the gain held fixed.

    Also reports the worst rate-times-substep seen, so the caller can tell
    whether this resolution is inside the scheme's monotone-stable range.
    """
    hs = h / m
    worst = 0.0
    for _ in range(m):
        d1 = vector_field(law, problem, FlowState(x=x, theta=theta))
        xp = x + hs * d1.dx
        d2 = vector_field(law, problem, FlowState(x=xp, theta=theta))
        move = float(np.linalg.norm(xp - x))
        if move > 0.0:
            worst = max(worst, hs * float(np.linalg.norm(d2.dx - d1.dx)) / move)
        x = x + 0.5 * hs * (d1.dx + d2.dx)
    return x, theta, worst


def _substep_coupled(law, problem, x, theta, h, m):
    """m Heun substeps of the coupled vector-and-gain pair."""
    hs = h / m
    worst = 0.0
    for _ in range(m):
        d1 = vector_field(law, problem, FlowState(x=x, theta=theta))
        xp = x + hs * d1.dx
        tp = theta + hs * d1.dtheta
        d2 = vector_field(law, problem, FlowState(x=xp, theta=tp))
        move = float(np.linalg.norm(xp - x))
        if move > 0.0:
            worst = max(worst, hs * float(np.linalg.norm(d2.dx - d1.dx)) / move)
        x = x + 0.5 * hs * (d1.dx + d2.dx)
        theta = theta + 0.5 * hs * (d1.dtheta + d2.dtheta)
    return x, theta, worst


def integrate(law: FlowLaw, problem: Problem, x0, opts: Optional[SimOptions] = None) -> Trajectory:
    """Advance a flow law from x0, stopping at detection or the horizon.

    The gain state (when the law has one) always starts at zero; the
    fractional memory channel is created here and advances on the same grid.
    Raises DivergenceError when the state leaves the finite range and
    propagates SingularityError from unregularized fields.
    """
    if opts is None:
        opts = SimOptions()
    x = np.array(x0, dtype=float)
    if x.shape != (problem.dimension,):
        raise ValueError(
            "initial state shape %s does not match problem dimension %d"
            % (x.shape, problem.dimension)
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("initial state must be finite")

    xstar = problem.minimizer
    use_gain = law.uses_gain
    fractional = law.variant is FlowVariant.FIXED_TIME_FRACTIONAL
    channel = CaputoChannel(law.beta, 0.0) if fractional else None
    theta = 0.0 if use_gain else None
    h = opts.step
    n_steps = int(math.ceil(opts.horizon / h - 1e-9))

    def grad_norm(z):
        return float(np.linalg.norm(problem.gradient(z)))

    times = [0.0]
    states = [x.copy()]
    gains = [0.0] if use_gain else None
    lyap = None
    v_quarter = None
    if xstar is not None:
        v0 = float(np.linalg.norm(x - xstar) ** 2)
        lyap = [v0]
        v_quarter = _UPTICK_TARGET * _UPTICK_FRACTION * v0

    diagnostics = {"substepped_steps": 0, "max_substeps": 1, "residual_ascent_steps": 0}

    def build(convergence_time):
        return Trajectory(
            times=np.array(times),
            states=np.array(states),
            gains=np.array(gains) if gains is not None else None,
            lyapunov=np.array(lyap) if lyap is not None else None,
            convergence_time=convergence_time,
            diagnostics=diagnostics,
        )

    if _converged(x, grad_norm, xstar, opts):
        return build(0.0)

    if fractional:
        d0 = vector_field(law, problem, FlowState(x=x, theta=theta))
        channel.push(d0.dtheta)

    for k in range(1, n_steps + 1):
        t = k * h

        # one trial Heun step at the full grid spacing
        d1 = vector_field(law, problem, FlowState(x=x, theta=theta))
        xp = x + h * d1.dx
        if fractional:
            drive_pred = vector_field(law, problem, FlowState(x=xp, theta=theta)).dtheta
            theta_new = channel.correct(h, drive_pred)
            d2 = vector_field(law, problem, FlowState(x=xp, theta=theta_new))
            x_new = x + 0.5 * h * (d1.dx + d2.dx)
        elif use_gain:
            tp = theta + h * d1.dtheta
            d2 = vector_field(law, problem, FlowState(x=xp, theta=tp))
            x_new = x + 0.5 * h * (d1.dx + d2.dx)
            theta_new = theta + 0.5 * h * (d1.dtheta + d2.dtheta)
        else:
            d2 = vector_field(law, problem, FlowState(x=xp, theta=None))
            x_new = x + 0.5 * h * (d1.dx + d2.dx)
            theta_new = None

        # stiffness estimate: local rate times step, from the two stage slopes
        move = float(np.linalg.norm(xp - x))
        if move == 0.0:
            # no first-order motion (e.g. starting from rest): the Heun
            # correction itself is the motion, not an oscillation
            rate_times_step = 0.0
        else:
            rate_times_step = h * float(np.linalg.norm(d2.dx - d1.dx)) / move

        ascent = -math.inf
        if v_quarter is not None:
            ascent = float(np.linalg.norm(x_new - xstar) ** 2) - float(
                np.linalg.norm(x - xstar) ** 2
            )

        needs_guard = rate_times_step > _STIFFNESS_TRIGGER
        if v_quarter is not None and ascent > v_quarter:
            needs_guard = True

        if needs_guard:
            def run_substeps(count):
                if fractional:
                    # the gain is already corrected on the coarse grid; the
                    # memory stays there, only the vector clock refines
                    return _substep_fixed_gain(law, problem, x, theta_new, h, count)
                if use_gain:
                    return _substep_coupled(law, problem, x, theta, h, count)
                return _substep_fixed_gain(law, problem, x, None, h, count)

            def step_ascent(z):
                if v_quarter is None:
                    return -math.inf
                return float(np.linalg.norm(z - xstar) ** 2) - float(
                    np.linalg.norm(x - xstar) ** 2
                )

            m = 2
            while m * _UPTICK_TARGET < rate_times_step and m < _MAX_SUBSTEPS:
                m *= 2
            x_best, theta_best, sub_rate = run_substeps(m)
            # stability escalation: a substepped map still outside the
            # monotone range can park on a spurious cycle that never enters
            # the detection ball, so refine until the local rate is resolved
            while sub_rate > _SUBSTEP_RATE_CAP and m < _MAX_SUBSTEPS:
                m = min(m * 4, _MAX_SUBSTEPS)
                x_best, theta_best, sub_rate = run_substeps(m)

            best_ascent = step_ascent(x_best)
            while best_ascent > v_quarter and m < _MAX_SUBSTEPS:
                m_next = min(m * 4, _MAX_SUBSTEPS)
                x_try, theta_try, _ = run_substeps(m_next)
                try_ascent = step_ascent(x_try)
                improved = try_ascent <= 0.5 * best_ascent
                if try_ascent < best_ascent:
                    x_best, theta_best, best_ascent, m = x_try, theta_try, try_ascent, m_next
                if not improved:
                    break
            if best_ascent > v_quarter:
                diagnostics["residual_ascent_steps"] += 1
            x_new, theta_new = x_best, theta_best
            diagnostics["substepped_steps"] += 1
            diagnostics["max_substeps"] = max(diagnostics["max_substeps"], m)

        if not np.all(np.isfinite(x_new)) or float(np.linalg.norm(x_new)) > _NORM_CEILING:
            raise DivergenceError(
                "state norm left the finite range at t=%g (last valid t=%g)"
                % (t, times[-1]),
                last_valid_time=times[-1],
            )

        x = x_new
        theta = theta_new
        if fractional:
            drive = vector_field(law, problem, FlowState(x=x, theta=theta)).dtheta
            channel.push(drive)

        done = _converged(x, grad_norm, xstar, opts)
        if k % opts.record_stride == 0 or k == n_steps or done:
            times.append(t)
            states.append(x.copy())
            if gains is not None:
                gains.append(theta)
            if lyap is not None:
                lyap.append(float(np.linalg.norm(x - xstar) ** 2))
        if done:
            return build(t)

    return build(None)


def applicable_bound(law: FlowLaw, problem: Problem, x0) -> BoundReport:
    """The convergence-time guarantee matching a law, from problem constants.

    Raises InsufficientConstantsError (missing curvature constants or
    minimizer), ConditionNotMetError, or ZeroSearchError as appropriate.
    """
    from .flows import InsufficientConstantsError

    L = problem.lipschitz
    mu = problem.strong_convexity
    if L is None:
        raise InsufficientConstantsError("problem carries no gradient-continuity constant")
    if law.variant is FlowVariant.FINITE_TIME:
        if problem.minimizer is None:
            raise InsufficientConstantsError(
                "finite-time bound needs the minimizer to measure the initial distance"
            )
        d = float(np.linalg.norm(np.asarray(x0, dtype=float) - problem.minimizer))
        return bound_finite_time(L, law.rho, law.alpha, d, strong_convexity=mu)
    if mu is None:
        raise InsufficientConstantsError("problem carries no strong-convexity constant")
    if law.variant is FlowVariant.FIXED_TIME_SECOND_ORDER:
        return bound_fixed_time_second_order(L, mu, law.rho, law.alpha, lam=law.lam)
    return bound_fixed_time_fractional(L, mu, law.rho, law.alpha, law.beta)


@dataclass(frozen=True)
class SweepEntry:
    """One sweep run: its label, outcome, and matching bound when available."""

    label: str
    trajectory: Optional[Trajectory]
    bound: Optional[BoundReport]
    error: Optional[str] = None


_LAW_KEYS = {"variant", "rho", "alpha", "lam", "lambda", "beta", "delta"}


def _format_override(value) -> str:
    if isinstance(value, (list, tuple, np.ndarray)):
        return ",".join("%g" % v for v in np.asarray(value, dtype=float))
    if isinstance(value, float):
        return "%g" % value
    return str(value)


def sweep(law: FlowLaw, problem: Problem, variations, opts: Optional[SimOptions] = None, x0=None):
    """Run one trajectory per variation, collecting results in input order.

    Each variation is a mapping that may override law parameters
    (variant/rho/alpha/lambda/beta/delta), supply an initial state under
    'x0', and name itself under 'label'.  Failures are captured in the
    entry's error slot without aborting the remaining runs; bounds are
    attached when the problem's constants allow one.
    """
    entries = []
    for i, spec in enumerate(variations):
        spec = dict(spec)
        label = spec.pop("label", None)
        has_own_x0 = "x0" in spec
        run_x0 = spec.pop("x0", x0)
        if label is None:
            parts = ["%s=%s" % (k, _format_override(spec[k])) for k in sorted(spec)]
            if has_own_x0:
                parts.append("x0=%s" % _format_override(run_x0))
            label = "_".join(parts) if parts else "run_%d" % i
        try:
            unknown = set(spec) - _LAW_KEYS
            if unknown:
                raise ValueError("unknown variation keys: %s" % ", ".join(sorted(unknown)))
            overrides = dict(spec)
            if "lambda" in overrides:
                overrides["lam"] = overrides.pop("lambda")
            run_law = dataclasses.replace(law, **overrides) if overrides else law
            if run_x0 is None:
                raise ValueError("variation provides no initial state and no default given")
            traj = integrate(run_law, problem, run_x0, opts)
        except Exception as exc:  # per-run capture is the contract
            entries.append(SweepEntry(label=label, trajectory=None, bound=None, error=str(exc)))
            continue
        try:
            report = applicable_bound(run_law, problem, run_x0)
            if traj.convergence_time is not None:
                report = report.with_observed(traj.convergence_time)
        except Exception:
            report = None
        entries.append(SweepEntry(label=label, trajectory=traj, bound=report, error=None))
    return entries
