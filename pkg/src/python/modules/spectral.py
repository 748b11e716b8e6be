"""
Spectral gaps of generators, gap histograms and pseudo-gap strategies
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from config import NUMERICS
from logging_config import ValidationError
from numerics import EigenDecomposition
from validation import validate_count, validate_gap_set, validate_positive

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GapSet:
    """Unique positive eigenvalue differences with their multiplicities"""
    gaps: np.ndarray
    multiplicities: np.ndarray
    degenerate: bool = False

    def __len__(self) -> int:
        return int(self.gaps.size)

    @property
    def maximum(self) -> float:
        return float(self.gaps[-1]) if self.gaps.size else 0.0

    def to_frame(self) -> pd.DataFrame:
        return gap_set_to_frame(self)


def max_gap_count(n_qubits: int) -> int:
    """Upper bound 2^N (2^N - 1) / 2 on the number of unique gaps"""
    dim = 2 ** validate_count(n_qubits, 'n_qubits')
    return dim * (dim - 1) // 2


def unique_gaps(eig: Union[EigenDecomposition, Sequence[float]], tol: Optional[float] = None) -> GapSet:
    """
    All positive differences lambda_i - lambda_j, merged when within tol.

    Args:
        eig: Eigendecomposition or plain eigenvalue list
        tol: Merge tolerance; defaults to gap_tolerance times the spectral spread

    Returns:
        GapSet in ascending order; empty and flagged degenerate when the
        spectrum has fewer than two distinct eigenvalues
    """
    eigenvalues = np.sort(np.asarray(getattr(eig, 'eigenvalues', eig), dtype=float))
    spread = float(eigenvalues[-1] - eigenvalues[0]) if eigenvalues.size else 0.0
    if tol is None:
        tol = NUMERICS.gap_tolerance * spread

    if eigenvalues.size < 2 or spread <= tol:
        logger.warning("Degenerate spectrum: no positive spectral gaps")
        return GapSet(np.array([]), np.array([], dtype=int), degenerate=True)

    upper = np.triu_indices(eigenvalues.size, k=1)
    differences = np.sort((eigenvalues[None, :] - eigenvalues[:, None])[upper])
    differences = differences[differences > tol]

    # Consecutive differences closer than tol belong to the same gap
    breaks = np.flatnonzero(np.diff(differences) > tol) + 1
    starts = np.concatenate(([0], breaks))
    gaps = differences[starts]
    multiplicities = np.diff(np.concatenate((starts, [differences.size])))

    logger.debug(f"Found {gaps.size} unique gaps from {eigenvalues.size} eigenvalues")
    return GapSet(gaps, multiplicities.astype(int))


def max_gap(eig: Union[EigenDecomposition, Sequence[float]]) -> float:
    """lambda_max - lambda_min, 0 with a warning for a degenerate spectrum"""
    eigenvalues = np.asarray(getattr(eig, 'eigenvalues', eig), dtype=float)
    if eigenvalues.size < 2:
        logger.warning("Spectrum has a single eigenvalue; maximal gap is 0")
        return 0.0
    spread = float(np.max(eigenvalues) - np.min(eigenvalues))
    if spread == 0:
        logger.warning("Degenerate spectrum; maximal gap is 0")
    return spread


# Pseudo-gap strategies

@dataclass(frozen=True)
class UniformStep:
    """gamma_k = k * a for k = 1..K"""
    a: float


@dataclass(frozen=True)
class EpsilonInteger:
    """gamma = {eps, 1, 2, ..., K-1}"""
    epsilon: float


@dataclass(frozen=True)
class Explicit:
    values: tuple = field(default_factory=tuple)


Strategy = Union[UniformStep, EpsilonInteger, Explicit]


@dataclass(frozen=True)
class PseudoGapConfig:
    K: int
    strategy: Strategy
    delta_max: Optional[float] = None

    def describe(self) -> str:
        if isinstance(self.strategy, UniformStep):
            return f"uniform(a={self.strategy.a:g})"
        if isinstance(self.strategy, EpsilonInteger):
            return f"epsilon-integer(eps={self.strategy.epsilon:g})"
        return "explicit"


def pseudo_gaps(cfg: PseudoGapConfig) -> np.ndarray:
    """
    Pseudo-gaps gamma_1 < ... < gamma_K for a strategy

    Raises:
        ValidationError: On zero or repeated gaps, a wrong length, or gaps
                         above delta_max
    """
    K = validate_count(cfg.K, 'K')
    strategy = cfg.strategy

    if isinstance(strategy, UniformStep):
        step = validate_positive(strategy.a, 'step a')
        values = step * np.arange(1, K + 1)
    elif isinstance(strategy, EpsilonInteger):
        epsilon = validate_positive(strategy.epsilon, 'epsilon')
        if K > 1 and epsilon >= 1:
            raise ValidationError(f"epsilon must be below 1 when K > 1, got {epsilon}")
        values = np.concatenate(([epsilon], np.arange(1, K, dtype=float)))
    elif isinstance(strategy, Explicit):
        values = np.asarray(strategy.values, dtype=float)
        if values.size != K:
            raise ValidationError(f"Explicit pseudo-gaps must have length K={K}, got {values.size}")
    else:
        raise ValidationError(f"Unknown pseudo-gap strategy: {strategy!r}")

    values = validate_gap_set(values, 'pseudo-gaps')
    if cfg.delta_max is not None and values[-1] > cfg.delta_max * (1 + 1e-12):
        raise ValidationError(f"Pseudo-gap {values[-1]:g} exceeds delta_max {cfg.delta_max:g}")
    return values


# Histograms and export

@dataclass(frozen=True)
class GapHistogram:
    """Right-closed bins (e_i, e_{i+1}] over [0, delta_max]; mass sums to 1"""
    edges: np.ndarray
    mass: np.ndarray

    @property
    def density(self) -> np.ndarray:
        return self.mass / np.diff(self.edges)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'bin_low': self.edges[:-1],
            'bin_high': self.edges[1:],
            'mass': self.mass,
            'density': self.density,
        })


def gap_histogram(gaps: GapSet, bins: int, weighted: bool = False) -> GapHistogram:
    """
    Normalised distribution of gaps over [0, delta_max]

    Args:
        gaps: Nonempty GapSet
        bins: Number of equal-width bins
        weighted: Weight each gap by its multiplicity instead of counting it once
    """
    bins = validate_count(bins, 'bins')
    if len(gaps) == 0:
        raise ValidationError("Cannot histogram an empty gap set")

    top = gaps.maximum
    edges = np.linspace(0.0, top, bins + 1)
    width = top / bins
    index = np.clip(np.ceil(gaps.gaps / width - 1e-12).astype(int) - 1, 0, bins - 1)
    weights = gaps.multiplicities.astype(float) if weighted else np.ones(len(gaps))
    mass = np.bincount(index, weights=weights, minlength=bins)
    return GapHistogram(edges, mass / mass.sum())


def gap_set_to_frame(gaps: GapSet) -> pd.DataFrame:
    """`gap,multiplicity` table"""
    return pd.DataFrame({'gap': gaps.gaps, 'multiplicity': gaps.multiplicities.astype(int)})
