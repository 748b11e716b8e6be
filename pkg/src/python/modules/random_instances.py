"""
Seeded random problem instances for tests and property checks
"""
import math

import numpy as np

from config import NUMERICS
from logging_config import ValidationError
from numerics import condition_estimate
from quantum import CostOperator, Generator, QuantumState, random_state
from shiftrules import build_shift_matrix
from validation import validate_count


def random_hermitian(dim: int, seed: int, scale: float = 1.0) -> np.ndarray:
    """(A + A^dagger) / 2 for a complex Gaussian A"""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2


def random_unitary(dim: int, seed: int) -> np.ndarray:
    """Haar unitary from the QR decomposition of a complex Gaussian matrix"""
    rng = np.random.default_rng(seed)
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def generator_with_spectrum(eigenvalues, seed: int) -> Generator:
    """V diag(eigenvalues) V^dagger for a Haar-random V"""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    v = random_unitary(eigenvalues.size, seed)
    return Generator.from_matrix((v * eigenvalues) @ v.conj().T)


def separated_spectrum(dim: int, seed: int, low: float = -3.0, high: float = 3.0,
                       min_gap_separation: float = 0.01, max_attempts: int = 1000) -> np.ndarray:
    """
    Sorted eigenvalues in [low, high] whose pairwise differences are all at
    least min_gap_separation apart from each other and from zero
    """
    dim = validate_count(dim, 'dim', minimum=2)
    rng = np.random.default_rng(seed)
    upper = np.triu_indices(dim, k=1)
    for _ in range(max_attempts):
        eigenvalues = np.sort(rng.uniform(low, high, size=dim))
        gaps = np.sort((eigenvalues[None, :] - eigenvalues[:, None])[upper])
        if gaps[0] >= min_gap_separation and np.min(np.diff(gaps), initial=np.inf) >= min_gap_separation:
            return eigenvalues
    raise ValidationError(f"No spectrum with gap separation {min_gap_separation} after {max_attempts} draws")


def random_generator(n_qubits: int, seed: int, min_gap_separation: float = 0.01) -> Generator:
    """Generic generator on n qubits with the full set of 2^N(2^N-1)/2 distinct gaps"""
    dim = 2 ** validate_count(n_qubits, 'n_qubits')
    spectrum = separated_spectrum(dim, seed, min_gap_separation=min_gap_separation)
    return generator_with_spectrum(spectrum, seed + 1)


def random_cost(n_qubits: int, seed: int) -> CostOperator:
    return CostOperator.from_matrix(random_hermitian(2 ** n_qubits, seed))


def random_input_state(n_qubits: int, seed: int) -> QuantumState:
    return random_state(n_qubits, seed)


def random_shift_configuration(K: int, seed: int, gap_range=(0.5, 3.0), shift_range=(0.1, 1.0),
                               separation: float = 0.1,
                               condition_limit: float = NUMERICS.condition_limit,
                               max_attempts: int = 1000):
    """
    (pseudo-gaps, shifts), both ascending, whose shift matrix is usable.

    Shifts are drawn as fractions shift_range of K * pi / gamma_max, the
    span that resolves K pseudo-gaps about gamma_max / K apart. Draws whose
    condition estimate reaches condition_limit are rejected.
    """
    K = validate_count(K, 'K')
    rng = np.random.default_rng(seed)

    def draw(low, high, min_separation):
        while True:
            values = np.sort(rng.uniform(low, high, size=K))
            if K == 1 or np.min(np.diff(values)) >= min_separation:
                return values

    for _ in range(max_attempts):
        gammas = draw(*gap_range, separation)
        shifts = draw(*shift_range, separation / K) * K * math.pi / gammas[-1]
        if condition_estimate(build_shift_matrix(gammas, shifts)) < condition_limit:
            return gammas, shifts
    raise ValidationError(f"No K={K} configuration below condition {condition_limit:.1e} "
                          f"after {max_attempts} draws")
