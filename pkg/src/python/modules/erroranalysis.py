"""
Error analysis of the approximate shift rule.

A true gap D is seen by the truncated system through
    sum_k sin(d_i g_k / 2) eta_k = sin(d_i D / 2),     xi(D) = sum_k g_k eta_k,
and Q_K(D) = xi(D) - D is the per-gap error. Q_K vanishes on the pseudo-gaps
and, for shifts d = alpha * d', behaves like alpha^(2K) near alpha = 0.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import sympy as sp

from logging_config import ValidationError
from numerics import cramer_solve, solve_linear
from shiftrules import build_shift_matrix, default_shifts
from spectral import GapSet, PseudoGapConfig, UniformStep, pseudo_gaps
from validation import validate_count, validate_gap_set, validate_shift_set

logger = logging.getLogger(__name__)

EXTENDED_DIGITS = 50
# Below this |Q| a double-precision fit only sees rounding noise
FLOATING_POINT_FLOOR = 1e-13


def _config(gammas, shifts):
    gammas = validate_gap_set(gammas, 'pseudo-gaps')
    shifts = validate_shift_set(shifts, expected_length=gammas.size)
    return gammas, shifts


def _sine_matrix(gammas, shifts) -> np.ndarray:
    return build_shift_matrix(gammas, shifts) / 4.0


def _eta_extended(delta: float, gammas: np.ndarray, shifts: np.ndarray,
                  digits: int = EXTENDED_DIGITS) -> List[sp.Float]:
    d = [sp.Float(float(v), digits) for v in shifts]
    g = [sp.Float(float(v), digits) for v in gammas]
    target = sp.Float(float(delta), digits)
    K = len(g)
    matrix = sp.Matrix(K, K, lambda i, j: sp.sin(d[i] * g[j] / 2))
    rhs = sp.Matrix(K, 1, lambda i, _: sp.sin(d[i] * target / 2))
    return list(matrix.LUsolve(rhs))


def eta(delta_true: float, gammas, shifts, precision: str = "double") -> np.ndarray:
    """
    eta coefficients from the pivoted linear solve.

    A true gap equal to a pseudo-gap gives the unit vector exactly.
    precision "extended" solves in 50-digit arithmetic.
    """
    gammas, shifts = _config(gammas, shifts)
    delta_true = float(delta_true)
    matches = np.flatnonzero(gammas == delta_true)
    if matches.size:
        unit = np.zeros(gammas.size)
        unit[matches[0]] = 1.0
        return unit
    if precision == "extended":
        return np.array([float(v) for v in _eta_extended(delta_true, gammas, shifts)])
    if precision != "double":
        raise ValidationError(f"Unknown precision: {precision!r}")
    return solve_linear(_sine_matrix(gammas, shifts), np.sin(shifts * delta_true / 2.0))


def eta_cramer(delta_true: float, gammas, shifts) -> np.ndarray:
    """eta_k = det(M with column k replaced by the right-hand side) / det(M)"""
    gammas, shifts = _config(gammas, shifts)
    return cramer_solve(_sine_matrix(gammas, shifts), np.sin(shifts * float(delta_true) / 2.0))


def eta_closed_form_k2(delta_true: float, gammas, shifts) -> np.ndarray:
    """Explicit two-equation solution for K = 2"""
    gammas, shifts = _config(gammas, shifts)
    if gammas.size != 2:
        raise ValidationError("eta_closed_form_k2 needs exactly two pseudo-gaps")
    (g1, g2), (d1, d2) = gammas, shifts
    s = lambda d, v: math.sin(d * v / 2.0)
    denominator = s(d1, g1) * s(d2, g2) - s(d1, g2) * s(d2, g1)
    eta1 = (s(d1, delta_true) * s(d2, g2) - s(d2, delta_true) * s(d1, g2)) / denominator
    eta2 = (s(d1, g1) * s(d2, delta_true) - s(d2, g1) * s(d1, delta_true)) / denominator
    return np.array([eta1, eta2])


def _xi_extended(delta: float, gammas: np.ndarray, shifts: np.ndarray) -> sp.Float:
    values = _eta_extended(delta, gammas, shifts)
    return sum(sp.Float(float(g), EXTENDED_DIGITS) * v for g, v in zip(gammas, values))


def xi(delta_true: float, gammas, shifts, precision: str = "double") -> float:
    """Effective gap seen by the truncated system"""
    gammas, shifts = _config(gammas, shifts)
    if precision == "extended" and not np.any(gammas == float(delta_true)):
        return float(_xi_extended(float(delta_true), gammas, shifts))
    return float(gammas @ eta(delta_true, gammas, shifts, precision))


def xi_cramer(delta_true: float, gammas, shifts) -> float:
    gammas, shifts = _config(gammas, shifts)
    return float(gammas @ eta_cramer(delta_true, gammas, shifts))


def q_error(delta_true: float, gammas, shifts, precision: str = "double") -> float:
    """Q_K(D) = xi(D) - D"""
    if precision == "extended":
        gammas, shifts = _config(gammas, shifts)
        if np.any(gammas == float(delta_true)):
            return 0.0
        total = _xi_extended(float(delta_true), gammas, shifts)
        return float(total - sp.Float(float(delta_true), EXTENDED_DIGITS))
    return xi(delta_true, gammas, shifts, precision) - float(delta_true)


def q_values(deltas, gammas, shifts) -> np.ndarray:
    """Q_K at many true gaps with one factorisation of the sine matrix"""
    gammas, shifts = _config(gammas, shifts)
    deltas = np.asarray(deltas, dtype=float)
    etas = np.zeros((gammas.size, deltas.size))
    # Gaps sitting exactly on a pseudo-gap are reproduced exactly, without a solve
    on_grid = np.isin(deltas, gammas)
    for column in np.flatnonzero(on_grid):
        etas[np.flatnonzero(gammas == deltas[column])[0], column] = 1.0
    if not np.all(on_grid):
        off_grid = deltas[~on_grid]
        rhs = np.sin(np.outer(shifts, off_grid) / 2.0)
        etas[:, ~on_grid] = solve_linear(_sine_matrix(gammas, shifts), rhs)
    return gammas @ etas - deltas


@dataclass(frozen=True)
class ErrorFunctionCurve:
    K: int
    pseudo_gaps: np.ndarray
    shifts: np.ndarray
    deltas: np.ndarray
    values: np.ndarray

    @property
    def samples(self):
        return list(zip(self.deltas.tolist(), self.values.tolist()))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'delta': self.deltas, 'qk': self.values})

    def low_error_width(self, tolerance: float) -> float:
        """Largest sampled D such that |Q_K| <= tolerance on every sample in [0, D]"""
        order = np.argsort(self.deltas)
        deltas, values = self.deltas[order], np.abs(self.values[order])
        inside = deltas >= 0
        deltas, values = deltas[inside], values[inside]
        failing = np.flatnonzero(values > tolerance)
        if failing.size == 0:
            return float(deltas[-1])
        if failing[0] == 0:
            return 0.0
        return float(deltas[failing[0] - 1])


def error_curve(K: int, gammas, shifts, deltas) -> ErrorFunctionCurve:
    """Sample Q_K over a grid of true gaps"""
    K = validate_count(K, 'K')
    gammas, shifts = _config(gammas, shifts)
    if gammas.size != K:
        raise ValidationError(f"Expected {K} pseudo-gaps, got {gammas.size}")
    deltas = np.asarray(deltas, dtype=float)
    return ErrorFunctionCurve(K, gammas, shifts, deltas, q_values(deltas, gammas, shifts))


def leading_error_terms(K: int, delta_true: float, gammas, shifts_prime) -> Dict[int, float]:
    """
    Series coefficients of Q_K in powers of alpha for shifts alpha * d'.

    Returns {power: coefficient}; K=1 has the alpha^2, alpha^4 and alpha^6
    terms, K=2 the alpha^4 and alpha^6 terms, K=3 the alpha^6 term.
    """
    g = np.asarray(gammas, dtype=float)
    d = np.asarray(shifts_prime, dtype=float)
    D = float(delta_true)
    if g.size != K or d.size != K:
        raise ValidationError(f"Expected {K} pseudo-gaps and shifts")

    if K == 1:
        (g1,), (d1,) = g, d
        base = D * (g1 ** 2 - D ** 2)
        return {
            2: d1 ** 2 * base / 24.0,
            4: d1 ** 4 * base * (7 * g1 ** 2 - 3 * D ** 2) / 5760.0,
            6: d1 ** 6 * base * (31 * g1 ** 4 - 18 * g1 ** 2 * D ** 2 + 3 * D ** 4) / 967680.0,
        }
    if K == 2:
        (g1, g2), (d1, d2) = g, d
        base = d1 ** 2 * d2 ** 2 * D * (g1 ** 2 - D ** 2) * (D ** 2 - g2 ** 2)
        return {
            4: base / 1920.0,
            6: -(d1 ** 2 + d2 ** 2) * base * (10 * D ** 2 - 11 * (g1 ** 2 + g2 ** 2)) / 3225600.0,
        }
    if K == 3:
        product = np.prod(d ** 2) * D * np.prod(g ** 2 - D ** 2)
        return {6: float(product) / 322560.0}
    raise ValidationError(f"Closed-form error terms exist for K in {{1, 2, 3}}, got {K}")


@dataclass
class ExpansionReport:
    K: int
    alphas: np.ndarray
    slopes: List[float] = field(default_factory=list)
    coefficient_ratios: List[float] = field(default_factory=list)

    @property
    def mean_slope(self) -> float:
        return float(np.mean(self.slopes)) if self.slopes else float('nan')

    def to_dict(self):
        return {
            'K': self.K,
            'alphas': self.alphas.tolist(),
            'slopes': self.slopes,
            'mean_slope': self.mean_slope,
            'coefficient_ratios': self.coefficient_ratios,
        }


def _separated_draw(rng, low, high, count, separation):
    while True:
        values = np.sort(rng.uniform(low, high, count))
        if count == 1 or np.min(np.diff(values)) >= separation:
            return values


def verify_expansion_orders(K: int, trials: int, seed: int = 0, alphas: Optional[Sequence[float]] = None,
                            precision: str = "extended") -> ExpansionReport:
    """
    Fit the power of alpha in |Q_K| for random configurations.

    Each trial draws pseudo-gaps, a true gap kept away from them, and base
    shifts d'. The slope of log|Q_K| against log(alpha) is fitted over the
    alpha grid, and Q_K at the smallest alpha is compared with the leading
    closed-form term. Double precision drops points under the rounding floor.
    """
    K = validate_count(K, 'K', maximum=3)
    trials = validate_count(trials, 'trials')
    alphas = np.geomspace(0.02, 0.2, 10) if alphas is None else np.asarray(alphas, dtype=float)
    rng = np.random.default_rng(seed)
    report = ExpansionReport(K, alphas)

    for trial in range(trials):
        gammas = _separated_draw(rng, 0.5, 3.0, K, 0.2)
        while True:
            delta = float(rng.uniform(0.5, 3.0))
            if np.min(np.abs(gammas - delta)) >= 0.2:
                break
        base_shifts = _separated_draw(rng, 0.5, 1.5, K, 0.1)

        errors = np.array([abs(q_error(delta, gammas, alpha * base_shifts, precision)) for alpha in alphas])
        mask = errors > (FLOATING_POINT_FLOOR if precision == "double" else 0.0)
        if np.count_nonzero(mask) < 2:
            logger.warning(f"Trial {trial}: too few points above the floating-point floor")
            continue
        slope = float(np.polyfit(np.log(alphas[mask]), np.log(errors[mask]), 1)[0])
        report.slopes.append(slope)

        leading_power = min(leading_error_terms(K, delta, gammas, base_shifts))
        coefficient = leading_error_terms(K, delta, gammas, base_shifts)[leading_power]
        alpha = float(alphas[0])
        signed = q_error(delta, gammas, alpha * base_shifts, precision)
        report.coefficient_ratios.append(signed / (coefficient * alpha ** leading_power))

    logger.info(f"K={K}: mean fitted order {report.mean_slope:.3f} over {len(report.slopes)} trials")
    return report


def score_pseudo_gaps(gaps: GapSet, cfg: PseudoGapConfig, shifts=None) -> float:
    """
    sum_s multiplicity_s * Q_K(D_s)^2 over the true gaps; lower is better.

    Missing shifts use the default shift rule for the pseudo-gaps.
    """
    gammas = pseudo_gaps(cfg)
    if shifts is None:
        shifts = default_shifts(gammas).shifts
    values = q_values(gaps.gaps, gammas, shifts)
    return float(np.sum(gaps.multiplicities * values ** 2))


@dataclass(frozen=True)
class StepScore:
    step: float
    score: float
    gammas: np.ndarray
    shifts: np.ndarray


def sweep_step(gaps: GapSet, K: int, steps: Sequence[float]) -> List[StepScore]:
    """Score uniform pseudo-gap steps a on a true gap set with default shifts"""
    K = validate_count(K, 'K')
    results = []
    for step in steps:
        cfg = PseudoGapConfig(K, UniformStep(float(step)))
        gammas = pseudo_gaps(cfg)
        shifts = default_shifts(gammas).shifts
        score = score_pseudo_gaps(gaps, cfg, shifts)
        logger.debug(f"Step a={step:g}: score {score:.4e}")
        results.append(StepScore(float(step), score, gammas, shifts))
    return results


def sweep_to_frame(results: Sequence[StepScore]) -> pd.DataFrame:
    return pd.DataFrame({'a': [r.step for r in results], 'score': [r.score for r in results]})
