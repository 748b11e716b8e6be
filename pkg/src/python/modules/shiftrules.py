"""
Parameter-shift differentiation engines: single-gap PSR, full GPSR and the
approximate rule over K pseudo-gaps.

All three evaluate F_k = f(x + d_k) - f(x - d_k), solve M R = F with
M_ij = 4 sin(d_i g_j / 2) and return sum_k g_k R_k.
"""
import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from config import (AGPSR_CONDITION_TARGET, GPSR_CONDITION_TARGET, NUMERICS,
                    PSR_GAP, PSR_SHIFT, SHIFT_INTERVAL_PI, WIDENING_FACTOR,
                    WIDENING_MAX_STEPS)
from logging_config import SingularSystemError, ValidationError
from numerics import condition_estimate, invert, solve_linear
from quantum import EXACT, ShotModel
from spectral import GapSet, PseudoGapConfig, UniformStep, max_gap_count, pseudo_gaps
from utils import derive_seed, equidistant, format_float
from validation import validate_count, validate_gap_set, validate_positive, validate_shift_set

logger = logging.getLogger(__name__)

# Marker for "use the condition target configured for the rule kind"
KIND_DEFAULT = object()


class RuleKind(str, Enum):
    PSR = "psr"
    GPSR = "gpsr"
    AGPSR = "agpsr"


@dataclass(frozen=True)
class ShiftRuleSpec:
    """Everything needed to evaluate one derivative"""
    kind: RuleKind
    gaps: np.ndarray
    shifts: np.ndarray
    shot_model: ShotModel = EXACT
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def K(self) -> int:
        return int(self.gaps.size)

    def matrix(self) -> np.ndarray:
        return build_shift_matrix(self.gaps, self.shifts)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind.value,
            'gaps': self.gaps.tolist(),
            'shifts': self.shifts.tolist(),
            'shot_model': self.shot_model.to_dict(),
            'metadata': dict(self.metadata),
        }


@dataclass(frozen=True)
class DerivativeResult:
    estimate: float
    r_values: np.ndarray
    f_plus: np.ndarray
    f_minus: np.ndarray
    expectation_calls: int
    predicted_variance: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'estimate': self.estimate,
            'expectation_calls': self.expectation_calls,
            'r_values': self.r_values.tolist(),
            'f_plus': self.f_plus.tolist(),
            'f_minus': self.f_minus.tolist(),
            'F': (self.f_plus - self.f_minus).tolist(),
            'predicted_variance': self.predicted_variance,
        }


def build_shift_matrix(gaps, shifts) -> np.ndarray:
    """M_ij = 4 sin(shift_i * gap_j / 2)"""
    gaps = np.asarray(gaps, dtype=float)
    shifts = np.asarray(shifts, dtype=float)
    if gaps.shape != shifts.shape or gaps.ndim != 1:
        raise ValidationError(f"gaps and shifts must be equal-length vectors, got {gaps.shape} and {shifts.shape}")
    return 4.0 * np.sin(np.outer(shifts, gaps) / 2.0)


@dataclass(frozen=True)
class ShiftChoice:
    shifts: np.ndarray
    scale: float
    condition: float
    target_met: bool = True


def default_shifts(gaps, kind: RuleKind = RuleKind.AGPSR,
                   condition_target: Optional[float] = KIND_DEFAULT,
                   interval_pi: Tuple[float, float] = SHIFT_INTERVAL_PI,
                   widening_factor: float = WIDENING_FACTOR,
                   max_steps: int = WIDENING_MAX_STEPS) -> ShiftChoice:
    """
    K shifts equidistant in [pi*lo, pi*hi] / gamma_max, widened when needed.

    The base shifts keep every sine argument below pi/2. While the
    condition estimate of M exceeds condition_target the whole set is
    multiplied by widening_factor. Approximate rules stop widening once
    shift_K * gamma_max reaches pi; exact GPSR widens without limit. When
    the target is not met, the best-conditioned candidate is kept and
    flagged.
    condition_target None keeps the base shifts.
    """
    gaps = validate_gap_set(gaps)
    kind = RuleKind(kind)
    if condition_target is KIND_DEFAULT:
        condition_target = GPSR_CONDITION_TARGET if kind == RuleKind.GPSR else AGPSR_CONDITION_TARGET

    low, high = interval_pi
    base = equidistant(low * math.pi, high * math.pi, gaps.size) / gaps[-1]
    max_scale = math.inf if kind == RuleKind.GPSR else math.pi / (base[-1] * gaps[-1])

    best = None
    for step in range(max_steps + 1):
        scale = min(widening_factor ** step, max(max_scale, 1.0))
        shifts = base * scale
        condition = condition_estimate(build_shift_matrix(gaps, shifts))
        if best is None or condition < best.condition:
            best = ShiftChoice(shifts, scale, condition, target_met=False)
        if condition_target is None or condition <= condition_target:
            best = ShiftChoice(shifts, scale, condition)
            break
        if scale >= max_scale:
            break

    if not best.target_met:
        logger.warning(f"Default shifts for {kind.value} with K={gaps.size} miss the condition target "
                       f"{condition_target:.1e} (best {best.condition:.3e} at scale {best.scale:.4g})")
    elif best.scale != 1.0:
        logger.debug(f"Widened default shifts by {best.scale:.4g} (condition {best.condition:.3e})")
    return best


def make_spec(kind: RuleKind, gaps, shifts=None, shot_model: ShotModel = EXACT,
              condition_limit: float = NUMERICS.condition_limit,
              metadata: Optional[Dict[str, Any]] = None) -> ShiftRuleSpec:
    """
    Build a validated ShiftRuleSpec; missing shifts use default_shifts

    Raises:
        ValidationError: On invalid gaps or shifts
        SingularSystemError: When M is singular or its condition estimate
                             reaches condition_limit
    """
    kind = RuleKind(kind)
    gaps = validate_gap_set(gaps)
    if kind == RuleKind.PSR and gaps.size != 1:
        raise ValidationError(f"PSR uses exactly one gap, got {gaps.size}")

    info = dict(metadata or {})
    if shifts is None:
        choice = default_shifts(gaps, kind)
        shifts = choice.shifts
        info.update({'shift_source': 'default', 'shift_scale': choice.scale,
                     'condition_target_met': choice.target_met})
    else:
        info.setdefault('shift_source', 'explicit')
    shifts = validate_shift_set(shifts, expected_length=gaps.size)

    condition = condition_estimate(build_shift_matrix(gaps, shifts))
    if not condition < condition_limit:
        raise SingularSystemError(
            f"Shift matrix for {kind.value} with K={gaps.size} is ill-conditioned",
            condition_estimate=condition,
            hint="change the shifts or pseudo-gaps",
        )
    info['condition'] = condition
    return ShiftRuleSpec(kind, gaps, shifts, shot_model, info)


def accepts_seed(f: Callable) -> bool:
    """True when f's class declares `seeded: ClassVar[bool] = True`"""
    return getattr(type(f), 'seeded', False) is True


def _evaluate(f: Callable, x: float, seed: Optional[int]) -> float:
    if accepts_seed(f):
        return float(f(x, seed=seed))
    return float(f(x))


def g_value(gaps, shifts) -> float:
    """sum_s sum_k gap_s^2 a_sk^2 with a = M^-1"""
    a = invert(build_shift_matrix(gaps, shifts))
    return float(np.sum((np.asarray(gaps, dtype=float)[:, None] * a) ** 2))


def estimate_derivative(f: Callable, x: float, spec: ShiftRuleSpec, seed: Optional[int] = None,
                        executor: Optional[Executor] = None) -> DerivativeResult:
    """
    Derivative of f at x from 2K shifted evaluations.

    Args:
        f: Callable f(x); instances of classes declaring
           `seeded: ClassVar[bool] = True` are called as f(x, seed=...)
           with one derived seed per evaluation
        x: Evaluation point
        spec: Shift rule to apply
        seed: Base seed for finite-shot evaluations (defaults to the shot model's seed)
        executor: Optional executor running the shifted evaluations concurrently

    Raises:
        SingularSystemError: If M cannot be solved
    """
    x = float(x)
    K = spec.K
    base_seed = spec.shot_model.rng_seed if seed is None else int(seed)
    exact = spec.shot_model.is_exact
    if not exact and hasattr(f, 'with_shots'):
        f = f.with_shots(spec.shot_model)

    tasks: List[Tuple[float, Optional[int]]] = []
    for k, shift in enumerate(spec.shifts):
        for sign in (1, -1):
            task_seed = None if exact else derive_seed(base_seed, k, sign)
            tasks.append((x + sign * shift, task_seed))

    if executor is not None:
        values = list(executor.map(lambda task: _evaluate(f, *task), tasks))
    else:
        values = [_evaluate(f, point, task_seed) for point, task_seed in tasks]

    values = np.asarray(values, dtype=float)
    f_plus, f_minus = values[0::2], values[1::2]

    try:
        r_values = solve_linear(spec.matrix(), f_plus - f_minus)
    except SingularSystemError as e:
        raise SingularSystemError(
            f"Cannot solve the {spec.kind.value} system at x={x:g}",
            condition_estimate=e.condition_estimate,
            hint="change the shifts or pseudo-gaps",
        ) from e

    predicted = None
    if not exact and hasattr(f, 'sigma0_sq'):
        sigma0_sq = f.sigma0_sq(x)
        predicted = 2.0 * sigma0_sq / spec.shot_model.n_shots * g_value(spec.gaps, spec.shifts)

    return DerivativeResult(
        estimate=float(spec.gaps @ r_values),
        r_values=r_values,
        f_plus=f_plus,
        f_minus=f_minus,
        expectation_calls=2 * K,
        predicted_variance=predicted,
    )


def psr_single_gap(f: Callable, x: float, gap: float, shift: float, seed: Optional[int] = None,
                   shot_model: ShotModel = EXACT) -> DerivativeResult:
    """gap * (f(x + d) - f(x - d)) / (4 sin(d gap / 2))"""
    gap = validate_positive(gap, 'gap')
    shift = validate_positive(shift, 'shift')
    if shift >= 2 * math.pi / gap:
        raise ValidationError(f"shift must lie in (0, 2*pi/gap), got {shift}")
    if abs(math.sin(shift * gap / 2)) < 1e-12:
        raise ValidationError("sin(shift * gap / 2) vanishes; choose another shift")
    spec = ShiftRuleSpec(RuleKind.PSR, np.array([gap]), np.array([shift]), shot_model,
                         {'shift_source': 'explicit'})
    return estimate_derivative(f, x, spec, seed=seed)


def count_full_gpsr_cost(n_qubits: int) -> int:
    """Shifted evaluations full GPSR needs for a generic N-qubit generator"""
    return 2 * max_gap_count(n_qubits)


def shift_rule_coefficients(spec: ShiftRuleSpec) -> np.ndarray:
    """c with estimate = sum_k c_k F_k, i.e. c = M^-T gaps"""
    return solve_linear(spec.matrix().T, spec.gaps)


# Method descriptors shared by the CLI and the VQE harness

@dataclass(frozen=True)
class DiffMethod:
    """How to differentiate a parameter: psr, gpsr or agpsr(K, step_a)"""
    kind: RuleKind
    K: Optional[int] = None
    step_a: Optional[float] = None
    shifts: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', RuleKind(self.kind))
        if self.kind == RuleKind.AGPSR:
            validate_count(self.K, 'K')
        if self.step_a is not None:
            validate_positive(self.step_a, 'step_a')

    @property
    def label(self) -> str:
        if self.kind != RuleKind.AGPSR:
            return self.kind.value
        if self.step_a is None:
            return f"agpsr_k{self.K}"
        return f"agpsr_k{self.K}_a{format_float(self.step_a)}"

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DiffMethod':
        try:
            shifts = data.get('shifts')
            step = data.get('a', data.get('step_a'))
            return cls(RuleKind(str(data['kind']).lower()), data.get('K'),
                       None if step is None else float(step),
                       None if shifts is None else tuple(float(s) for s in shifts))
        except (KeyError, ValueError) as e:
            raise ValidationError(f"Invalid differentiation method {data!r}: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        data = {'kind': self.kind.value}
        if self.K is not None:
            data['K'] = self.K
        if self.step_a is not None:
            data['a'] = self.step_a
        if self.shifts is not None:
            data['shifts'] = list(self.shifts)
        return data


def spec_for_gaps(gap_set: GapSet, method: DiffMethod, shot_model: ShotModel = EXACT) -> ShiftRuleSpec:
    """
    Shift rule for a parameter with the given true gaps.

    The approximate rule only replaces GPSR when the parameter has more
    unique gaps than equations; otherwise the exact rule is used.
    """
    if method.kind == RuleKind.PSR:
        shifts = method.shifts or (PSR_SHIFT,)
        return make_spec(RuleKind.PSR, [PSR_GAP], shifts, shot_model)

    if len(gap_set) == 0:
        raise ValidationError("Generator has no spectral gaps; its derivative is identically zero")

    if method.kind == RuleKind.GPSR or len(gap_set) <= method.K:
        spec = make_spec(RuleKind.GPSR, gap_set.gaps, method.shifts, shot_model)
        return spec

    step = method.step_a if method.step_a is not None else gap_set.maximum / method.K
    gammas = pseudo_gaps(PseudoGapConfig(method.K, UniformStep(step)))
    return make_spec(RuleKind.AGPSR, gammas, method.shifts, shot_model,
                     metadata={'pseudo_gap_step': step, 'true_gap_count': len(gap_set)})
