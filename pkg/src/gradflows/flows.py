"""Flow laws and convergence-time bound calculators.

Three continuous-time descent designs over a Problem:

* finite-time law: gradient direction rescaled by an inverse power of the
  gradient norm, optionally regularized near the minimum;
* fixed-time second-order law: the same normalized direction multiplied by an
  auxiliary gain that is itself driven by the gradient norm, with linear decay;
* fixed-time fractional law: the auxiliary gain driven through a fractional
  derivative of order beta in (0,1) instead.

The bound calculators are pure arithmetic over supplied curvature constants
and never inspect a Problem; each returns a BoundReport naming the rule that
produced it.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .problems import Problem
from .special import ZeroQuery, ml_first_positive_zero

__all__ = [
    "FlowVariant",
    "FlowLaw",
    "FlowState",
    "FlowDerivative",
    "BoundReport",
    "SingularityError",
    "ConditionNotMetError",
    "InsufficientConstantsError",
    "vector_field",
    "bound_finite_time",
    "bound_fixed_time_second_order",
    "bound_fixed_time_fractional",
]


class SingularityError(ArithmeticError):
    """The unregularized field was evaluated where the gradient vanishes."""


class ConditionNotMetError(ValueError):
    """A bound's validity condition fails for the supplied constants."""


class InsufficientConstantsError(ValueError):
    """A bound needs a curvature constant that was not supplied."""


class FlowVariant(Enum):
    """Which of the three descent designs a FlowLaw encodes."""

    FINITE_TIME = "finite_time"
    FIXED_TIME_SECOND_ORDER = "fixed_time_second_order"
    FIXED_TIME_FRACTIONAL = "fixed_time_fractional"


def _finite_pos(name, v):
    if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
        raise ValueError("%s must be a positive finite real, got %r" % (name, v))
    return float(v)


def _finite_nonneg(name, v):
    if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
        raise ValueError("%s must be a nonnegative finite real, got %r" % (name, v))
    return float(v)


def _norm_exponent(name, v):
    if not (isinstance(v, (int, float)) and math.isfinite(v) and 0.0 < v <= 2.0):
        raise ValueError("%s must lie in (0, 2], got %r" % (name, v))
    return float(v)


@dataclass(frozen=True)
class FlowLaw:
    """Parameters of one descent design.

    `lam` is the auxiliary gain's linear decay rate; it only enters the
    second-order law (the fractional design has no decay term, and the
    finite-time design has no gain), but is accepted everywhere so configs
    can carry it harmlessly.  `beta` is the fractional order and is required
    exactly for the fractional variant.  `delta` regularizes the x-equation
    denominator only.
    """

    variant: FlowVariant
    rho: float
    alpha: float
    lam: float = 0.0
    beta: Optional[float] = None
    delta: float = 0.01

    def __post_init__(self):
        if isinstance(self.variant, str):
            object.__setattr__(self, "variant", FlowVariant(self.variant))
        elif not isinstance(self.variant, FlowVariant):
            raise ValueError("unknown flow variant %r" % (self.variant,))
        object.__setattr__(self, "rho", _finite_pos("rho", self.rho))
        object.__setattr__(self, "alpha", _norm_exponent("alpha", self.alpha))
        object.__setattr__(self, "lam", _finite_nonneg("lambda", self.lam))
        object.__setattr__(self, "delta", _finite_nonneg("delta", self.delta))
        if self.variant is FlowVariant.FIXED_TIME_FRACTIONAL:
            if self.beta is None:
                raise ValueError("the fractional variant needs a fractional order beta")
            if not (
                isinstance(self.beta, (int, float))
                and math.isfinite(self.beta)
                and 0.0 < self.beta < 1.0
            ):
                raise ValueError("fractional order beta must lie in (0, 1), got %r" % (self.beta,))
            object.__setattr__(self, "beta", float(self.beta))
        elif self.beta is not None:
            raise ValueError(
                "beta only applies to the fractional variant, got beta=%r for %s"
                % (self.beta, self.variant.value)
            )

    @property
    def uses_gain(self) -> bool:
        """True when the law carries the auxiliary gain state."""
        return self.variant is not FlowVariant.FINITE_TIME


@dataclass
class FlowState:
    """Instantaneous state of a flow: decision vector plus optional gain.

    `memory` holds the fractional channel for the fractional variant; the
    simulator owns and wires it.
    """

    x: np.ndarray
    theta: Optional[float] = None
    memory: Optional[object] = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or len(x) == 0:
            raise ValueError("state vector must be one-dimensional and nonempty")
        self.x = x
        if self.theta is not None:
            self.theta = float(self.theta)


@dataclass(frozen=True)
class FlowDerivative:
    """Right-hand side returned by vector_field.

    For the fractional variant `dtheta` is the Caputo right-hand side, to be
    fed to the memory channel rather than integrated directly.
    """

    dx: np.ndarray
    dtheta: Optional[float] = None


def vector_field(law: FlowLaw, problem: Problem, state: FlowState) -> FlowDerivative:
    """Evaluate the chosen law's right-hand side at a state.

    Raises SingularityError when the gradient vanishes while delta = 0; the
    caller is expected to have detected convergence before that point.
    """
    x = np.asarray(state.x, dtype=float)
    if x.shape != (problem.dimension,):
        raise ValueError(
            "state dimension %s does not match problem dimension %d"
            % (x.shape, problem.dimension)
        )
    g = np.asarray(problem.gradient(x), dtype=float)
    norm_g = float(np.linalg.norm(g))
    if norm_g == 0.0 and law.delta == 0.0:
        raise SingularityError(
            "gradient vanished with delta=0; detect convergence before stepping"
        )
    scale = (norm_g + law.delta) ** law.alpha
    if law.variant is FlowVariant.FINITE_TIME:
        return FlowDerivative(dx=(-law.rho / scale) * g)
    if state.theta is None:
        raise ValueError("%s needs the auxiliary gain in the state" % law.variant.value)
    dx = (-state.theta / scale) * g
    drive = law.rho * norm_g ** law.alpha
    if law.variant is FlowVariant.FIXED_TIME_SECOND_ORDER:
        return FlowDerivative(dx=dx, dtheta=-law.lam * state.theta + drive)
    return FlowDerivative(dx=dx, dtheta=drive)


# ---------------------------------------------------------------------------
# convergence-time bounds

@dataclass(frozen=True)
class BoundReport:
    """A convergence-time guarantee with its provenance and inputs.

    `rule` names the formula that produced the bound; `inputs` echoes the
    constants used; `observed` may be filled in after a simulation; `extras`
    carries secondary numbers such as alternate formula variants.
    """

    rule: str
    bound: float
    inputs: dict
    observed: Optional[float] = None
    notes: tuple = ()
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if math.isnan(self.bound) or self.bound < 0.0:
            raise ValueError("bound must be nonnegative, got %r" % (self.bound,))

    def with_observed(self, t: float) -> "BoundReport":
        """Copy of this report carrying a measured convergence time."""
        return dataclasses.replace(self, observed=float(t))


def bound_finite_time(
    lipschitz: float,
    rho: float,
    alpha: float,
    initial_distance: float,
    strong_convexity: Optional[float] = None,
) -> BoundReport:
    """Convergence-time bound for the finite-time law.

    At alpha = 2 only the gradient-continuity constant enters:
    bound = lipschitz * d^2 / (2 rho).  For alpha in (0, 2) strong convexity
    is required and bound = lipschitz * d^alpha / (rho * mu^(2-alpha) * alpha)
    with mu the strong-convexity constant.  Both grow with the initial
    distance d — the guarantee is finite-time, not fixed-time.
    """
    lipschitz = _finite_pos("lipschitz", lipschitz)
    rho = _finite_pos("rho", rho)
    alpha = _norm_exponent("alpha", alpha)
    d = _finite_nonneg("initial_distance", initial_distance)
    if alpha == 2.0:
        inputs = {
            "lipschitz": lipschitz,
            "rho": rho,
            "alpha": alpha,
            "initial_distance": d,
        }
        return BoundReport(
            rule="finite_time_alpha2",
            bound=lipschitz * d * d / (2.0 * rho),
            inputs=inputs,
        )
    if strong_convexity is None:
        raise InsufficientConstantsError(
            "alpha=%g < 2 needs the strong-convexity constant" % alpha
        )
    mu = _finite_pos("strong_convexity", strong_convexity)
    inputs = {
        "lipschitz": lipschitz,
        "strong_convexity": mu,
        "rho": rho,
        "alpha": alpha,
        "initial_distance": d,
    }
    return BoundReport(
        rule="finite_time_general",
        bound=lipschitz * d ** alpha / (rho * mu ** (2.0 - alpha) * alpha),
        inputs=inputs,
    )


def bound_fixed_time_second_order(
    lipschitz: float,
    strong_convexity: float,
    rho: float,
    alpha: float,
    lam: float = 0.0,
) -> BoundReport:
    """Initial-condition-free bound for the second-order fixed-time law.

    Valid when lam^2 < 8 rho mu^2 / (alpha L); then
    bound = pi / sqrt(4 rho mu^2 / (alpha L) - lam^2 / 4).  At alpha = 2 an
    alternate stated form with coefficient 4 rho mu^2 / L (instead of the
    general formula's 2 rho mu^2 / L) circulates; it is reported under
    extras['alpha2_variant_bound'] with the general formula kept
    authoritative.
    """
    lipschitz = _finite_pos("lipschitz", lipschitz)
    mu = _finite_pos("strong_convexity", strong_convexity)
    rho = _finite_pos("rho", rho)
    alpha = _norm_exponent("alpha", alpha)
    lam = _finite_nonneg("lambda", lam)
    gate = 8.0 * rho * mu * mu / (alpha * lipschitz)
    if not lam * lam < gate:
        raise ConditionNotMetError(
            "decay rate fails the validity condition: lambda^2 = %g must stay below "
            "8*rho*mu^2/(alpha*L) = %g" % (lam * lam, gate)
        )
    radicand = 4.0 * rho * mu * mu / (alpha * lipschitz) - 0.25 * lam * lam
    inputs = {
        "lipschitz": lipschitz,
        "strong_convexity": mu,
        "rho": rho,
        "alpha": alpha,
        "lambda": lam,
    }
    notes = ()
    extras = {}
    if alpha == 2.0:
        variant = 4.0 * rho * mu * mu / lipschitz - 0.25 * lam * lam
        extras["alpha2_variant_bound"] = math.pi / math.sqrt(variant)
        notes = (
            "alpha=2 has an alternate stated form with coefficient 4*rho*mu^2/L; "
            "the general-formula value is authoritative",
        )
    return BoundReport(
        rule="fixed_time_second_order",
        bound=math.pi / math.sqrt(radicand),
        inputs=inputs,
        notes=notes,
        extras=extras,
    )


def bound_fixed_time_fractional(
    lipschitz: float,
    strong_convexity: float,
    rho: float,
    alpha: float,
    beta: float,
    zero_tol: float = 1e-6,
    horizon: float = 100.0,
) -> BoundReport:
    """Initial-condition-free bound for the fractional fixed-time law.

    The bound is the first positive zero of E_{beta+1,1}(-c t^(beta+1)) with
    drive coefficient c = 4 rho mu^2 / (alpha L).  Search failures from the
    zero finder propagate (raise the horizon for very small c).
    """
    lipschitz = _finite_pos("lipschitz", lipschitz)
    mu = _finite_pos("strong_convexity", strong_convexity)
    rho = _finite_pos("rho", rho)
    alpha = _norm_exponent("alpha", alpha)
    if not (isinstance(beta, (int, float)) and math.isfinite(beta) and 0.0 < beta < 1.0):
        raise ValueError("fractional order beta must lie in (0, 1), got %r" % (beta,))
    beta = float(beta)
    c = 4.0 * rho * mu * mu / (alpha * lipschitz)
    zero = ml_first_positive_zero(
        ZeroQuery(alpha=beta + 1.0, rho=c), tol=zero_tol, horizon=horizon
    )
    inputs = {
        "lipschitz": lipschitz,
        "strong_convexity": mu,
        "rho": rho,
        "alpha": alpha,
        "beta": beta,
    }
    return BoundReport(
        rule="fixed_time_fractional",
        bound=zero,
        inputs=inputs,
        extras={"drive_coefficient": c},
    )
