"""
Shot-noise variance of shift-rule derivatives and variance-minimising shifts

With every shifted expectation carrying variance sigma0^2 / N_shots, the
derivative variance is predicted as 2 sigma0^2 / N_shots * g where
g = sum_s sum_k gap_s^2 a_sk^2 and a = M^-1.
"""
import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from config import (OPTIMIZER_FATOL, OPTIMIZER_MAX_ITERATIONS, OPTIMIZER_XATOL,
                    SHIFT_LOWER_BOUND, SWEEP_FACTORS)
from erroranalysis import StepScore, sweep_step
from logging_config import SingularSystemError, ValidationError
from numerics import invert
from performance import monitor_performance
from quantum import EXACT, Generator, ShotModel
from shiftrules import (RuleKind, ShiftRuleSpec, build_shift_matrix, default_shifts,
                        estimate_derivative, g_value, make_spec, shift_rule_coefficients)
from spectral import unique_gaps
from utils import derive_seed
from validation import (validate_count, validate_gap_set, validate_interval,
                        validate_positive, validate_shift_set)

logger = logging.getLogger(__name__)

# Shifts closer than this are treated as coincident by the optimiser
DUPLICATE_SHIFT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class VariancePrediction:
    sigma0_sq: float
    n_shots: Optional[int]
    g_value: float
    sigma_d_sq: float
    # Variance including the cross terms between shifted evaluations
    full_sigma_d_sq: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sigma0_sq': self.sigma0_sq,
            'n_shots': self.n_shots if self.n_shots is not None else 'inf',
            'g_value': self.g_value,
            'sigma_d_sq': self.sigma_d_sq,
            'full_sigma_d_sq': self.full_sigma_d_sq,
        }


@dataclass(frozen=True)
class ShiftOptimizationReport:
    gaps: np.ndarray
    initial_shifts: np.ndarray
    optimal_shifts: np.ndarray
    initial_g: float
    optimal_g: float
    iterations: int
    converged: bool
    bounds: Tuple[float, float]
    message: str = ""

    @property
    def improvement(self) -> float:
        """initial_g / optimal_g; inf when the starting shifts were singular"""
        if not math.isfinite(self.initial_g) or self.optimal_g <= 0:
            return math.inf
        return self.initial_g / self.optimal_g

    def to_dict(self) -> Dict[str, Any]:
        return {
            'gaps': self.gaps.tolist(),
            'initial_shifts': self.initial_shifts.tolist(),
            'optimal_shifts': self.optimal_shifts.tolist(),
            'initial_g': self.initial_g,
            'optimal_g': self.optimal_g,
            'iterations': self.iterations,
            'converged': self.converged,
            'bounds': list(self.bounds),
            'optimizer': 'Nelder-Mead',
            'message': self.message,
        }


def g_objective(gaps, shifts) -> float:
    """
    sum_s sum_k gap_s^2 a_sk^2, or +inf where M cannot be inverted

    The infinite value lets the simplex walk around singular configurations.
    """
    try:
        value = g_value(gaps, shifts)
    except SingularSystemError:
        return math.inf
    return value if math.isfinite(value) else math.inf


def default_bounds(gaps) -> Tuple[float, float]:
    """(SHIFT_LOWER_BOUND, pi / gamma_max)"""
    gaps = validate_gap_set(gaps)
    return SHIFT_LOWER_BOUND, math.pi / gaps[-1]


def _repaired(x: np.ndarray, low: float, high: float) -> Optional[np.ndarray]:
    shifts = np.sort(np.clip(np.asarray(x, dtype=float), low, high))
    if shifts.size > 1 and np.min(np.diff(shifts)) <= DUPLICATE_SHIFT_TOLERANCE:
        return None
    return shifts


def optimize_shifts(gaps, initial_shifts, bounds: Optional[Sequence[float]] = None,
                    max_iterations: int = OPTIMIZER_MAX_ITERATIONS) -> ShiftOptimizationReport:
    """
    Minimise g over the shifts with a bounded Nelder-Mead simplex.

    Candidates are sorted and clipped into the bounds before evaluation and
    coincident shifts score +inf. The result is never worse than the
    starting point.

    Args:
        gaps: Gap or pseudo-gap values defining M
        initial_shifts: Starting shifts, one per gap
        bounds: Shift interval; defaults to (SHIFT_LOWER_BOUND, pi / gamma_max)
        max_iterations: Simplex iteration cap

    Returns:
        ShiftOptimizationReport
    """
    gaps = validate_gap_set(gaps)
    initial = validate_shift_set(initial_shifts, expected_length=gaps.size)
    low, high = validate_interval(bounds if bounds is not None else default_bounds(gaps),
                                  'shift bounds', positive=True)
    if high >= 2 * math.pi / gaps[0]:
        raise ValidationError(f"Upper shift bound {high:g} must stay below 2*pi/min gap = {2 * math.pi / gaps[0]:g}")

    initial_g = g_objective(gaps, initial)

    def objective(x):
        shifts = _repaired(x, low, high)
        return math.inf if shifts is None else g_objective(gaps, shifts)

    start = np.clip(initial, low, high)
    if _repaired(start, low, high) is None:
        # Clipping merged shifts; restart from an even spread inside the bounds
        start = np.linspace(low, high, gaps.size + 2)[1:-1]

    result = minimize(
        objective, start, method='Nelder-Mead',
        bounds=[(low, high)] * gaps.size,
        options={'xatol': OPTIMIZER_XATOL, 'fatol': OPTIMIZER_FATOL,
                 'maxiter': validate_count(max_iterations, 'max_iterations')},
    )

    candidate = _repaired(result.x, low, high)
    candidate_g = math.inf if candidate is None else g_objective(gaps, candidate)

    if candidate is not None and candidate_g <= initial_g:
        optimal, optimal_g = candidate, candidate_g
    else:
        optimal, optimal_g = initial, initial_g

    converged = bool(result.success) and math.isfinite(optimal_g)
    if not converged:
        logger.warning(f"Shift optimisation did not converge: {result.message}")
    logger.info(f"Optimised {gaps.size} shifts: g {initial_g:.6g} -> {optimal_g:.6g} in {result.nit} iterations")

    return ShiftOptimizationReport(
        gaps=gaps,
        initial_shifts=initial,
        optimal_shifts=optimal,
        initial_g=initial_g,
        optimal_g=optimal_g,
        iterations=int(result.nit),
        converged=converged,
        bounds=(low, high),
        message=str(result.message),
    )


def r_variances(gaps, shifts, sigma0_sq: float, n_shots: int) -> np.ndarray:
    """Var(R_s) = 2 sigma0^2 / N sum_k a_sk^2"""
    a = invert(build_shift_matrix(gaps, shifts))
    n_shots = validate_count(n_shots, 'n_shots')
    return 2.0 * float(sigma0_sq) / n_shots * np.sum(a ** 2, axis=1)


def predict_variance(spec: ShiftRuleSpec, sigma0_sq: float) -> VariancePrediction:
    """
    2 sigma0^2 / N_shots * g for the spec's shot model; zero for exact evaluation
    """
    sigma0_sq = float(sigma0_sq)
    if sigma0_sq < 0:
        raise ValidationError(f"sigma0_sq must be non-negative, got {sigma0_sq}")

    g = g_value(spec.gaps, spec.shifts)
    n_shots = spec.shot_model.n_shots
    if n_shots is None:
        return VariancePrediction(sigma0_sq, None, g, 0.0, 0.0)

    coefficients = shift_rule_coefficients(spec)
    prefactor = 2.0 * sigma0_sq / n_shots
    return VariancePrediction(sigma0_sq, n_shots, g, prefactor * g,
                              prefactor * float(coefficients @ coefficients))


def sigma0_sq_at(f, x: float) -> float:
    """Single-shot variance of the measured observable at x"""
    if not hasattr(f, 'sigma0_sq'):
        raise ValidationError("Expectation function does not expose sigma0_sq")
    return float(f.sigma0_sq(x))


@dataclass(frozen=True)
class MonteCarloVariance:
    mean: float
    variance: float
    trials: int
    estimates: np.ndarray = field(repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {'mean': self.mean, 'variance': self.variance, 'trials': self.trials}


@monitor_performance("monte_carlo")
def monte_carlo_variance(f: Callable, x: float, spec: ShiftRuleSpec, trials: int, seed: int,
                         executor: Optional[Executor] = None) -> MonteCarloVariance:
    """
    Empirical variance of seeded finite-shot derivative estimates.

    Trial t uses base seed derive_seed(seed, t), so two specs evaluated with
    the same seed see paired noise streams.
    """
    trials = validate_count(trials, 'trials', minimum=2)
    if spec.shot_model.is_exact:
        raise ValidationError("Monte Carlo variance needs a finite shot model")

    def run(trial: int) -> float:
        return estimate_derivative(f, x, spec, seed=derive_seed(seed, trial)).estimate

    if executor is not None:
        estimates = np.array(list(executor.map(run, range(trials))))
    else:
        estimates = np.array([run(t) for t in range(trials)])

    return MonteCarloVariance(float(np.mean(estimates)), float(np.var(estimates, ddof=1)), trials, estimates)


@dataclass(frozen=True)
class PipelineResult:
    spec: ShiftRuleSpec
    report: ShiftOptimizationReport
    sweep: List[StepScore]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'spec': self.spec.to_dict(),
            'report': self.report.to_dict(),
            'sweep': [{'a': s.step, 'score': s.score} for s in self.sweep],
        }


def run_pipeline(generator: Generator, K: int, step_a: Optional[float] = None,
                 bounds: Optional[Sequence[float]] = None, shot_model: ShotModel = EXACT,
                 sweep_factors: Sequence[float] = SWEEP_FACTORS) -> PipelineResult:
    """
    Four-stage shift-rule construction for a generator:

    1. pick uniform pseudo-gaps k*a by scoring a around step_a on the true gaps
    2. build M and a = M^-1 for those pseudo-gaps
    3. minimise g over the shifts
    4. emit the ready-to-use ShiftRuleSpec

    When K reaches the number of true gaps the true gaps are used and the
    result is an exact GPSR spec.
    """
    K = validate_count(K, 'K')
    gap_set = unique_gaps(generator.eig)
    if len(gap_set) == 0:
        raise ValidationError("Generator has no spectral gaps; nothing to differentiate")

    sweep: List[StepScore] = []
    if K >= len(gap_set):
        kind = RuleKind.GPSR
        gammas = gap_set.gaps
        initial = default_shifts(gammas, kind).shifts
        metadata = {'true_gap_count': len(gap_set), 'pseudo_gap_step': None}
    else:
        kind = RuleKind.AGPSR
        center = validate_positive(step_a, 'step_a') if step_a is not None else gap_set.maximum / K
        sweep = sweep_step(gap_set, K, [center * factor for factor in sweep_factors])
        best = min(sweep, key=lambda s: s.score)
        gammas, initial = best.gammas, best.shifts
        metadata = {'true_gap_count': len(gap_set), 'pseudo_gap_step': best.step, 'pseudo_gap_score': best.score}
        logger.info(f"Selected pseudo-gap step a={best.step:.6g} (score {best.score:.4e}) for K={K}")

    report = optimize_shifts(gammas, initial, bounds)
    metadata.update({'shift_source': 'optimized', 'g_value': report.optimal_g,
                     'optimizer_converged': report.converged})
    spec = make_spec(kind, gammas, report.optimal_shifts, shot_model, metadata=metadata)
    return PipelineResult(spec, report, sweep)


def full_pipeline(generator: Generator, K: int, step_a: Optional[float] = None,
                  bounds: Optional[Sequence[float]] = None, shot_model: ShotModel = EXACT) -> ShiftRuleSpec:
    """Ready-to-use shift rule with optimised pseudo-gaps and shifts"""
    return run_pipeline(generator, K, step_a, bounds, shot_model).spec
