"""
Statevector simulation for parameterised evolutions U(x) = exp(-i x G / 2)

Generators and cost operators are dense Hermitian matrices with a cached
eigendecomposition; evolution goes through that decomposition, and finite
shot sampling measures in the cost operator's eigenbasis.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, Optional, Union

import numpy as np

from config import GENERIC_JITTER, OMEGA, STRONG_RATIO, WEAK_RATIO
from logging_config import DimensionMismatchError, ValidationError
from numerics import EigenDecomposition, hermitian_eig
from performance import monitor_performance
from utils import PAULI_X, PAULI_Z, single_qubit_sum
from validation import (validate_count, validate_positive,
                        validate_shot_count, validate_symmetric_interactions)

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-10


def _qubits_for_dimension(dimension: int) -> int:
    n_qubits = int(round(math.log2(dimension))) if dimension > 0 else -1
    if n_qubits < 0 or 2 ** n_qubits != dimension:
        raise DimensionMismatchError(f"Dimension {dimension} is not a power of two")
    return n_qubits


@dataclass(frozen=True)
class QuantumState:
    """Normalised statevector on n qubits"""
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if amplitudes.shape != (2 ** self.n_qubits,):
            raise DimensionMismatchError(
                f"State of {self.n_qubits} qubits needs {2 ** self.n_qubits} amplitudes, got {amplitudes.shape}")
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValidationError(f"State is not normalised: sum |a|^2 = {norm:.12f}")
        object.__setattr__(self, 'amplitudes', amplitudes)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> 'QuantumState':
        vector = np.asarray(amplitudes, dtype=complex)
        if normalize:
            norm = np.linalg.norm(vector)
            if norm == 0:
                raise ValidationError("Cannot normalise the zero vector")
            vector = vector / norm
        return cls(_qubits_for_dimension(vector.size), vector)

    @property
    def dimension(self) -> int:
        return 2 ** self.n_qubits


@dataclass(frozen=True)
class HermitianOperator:
    matrix: np.ndarray
    eig: EigenDecomposition = field(repr=False)

    @classmethod
    def from_matrix(cls, matrix):
        dense = np.asarray(matrix, dtype=complex)
        return cls(matrix=dense, eig=hermitian_eig(dense))

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def n_qubits(self) -> int:
        return _qubits_for_dimension(self.dimension)


class Generator(HermitianOperator):
    """Hermitian generator G of U(x) = exp(-i x G / 2)"""


class CostOperator(HermitianOperator):
    """Hermitian observable C measured after the evolution"""


@dataclass(frozen=True)
class ShotModel:
    """n_shots None means exact expectation values"""
    n_shots: Optional[int] = None
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'n_shots', validate_shot_count(self.n_shots))

    @property
    def is_exact(self) -> bool:
        return self.n_shots is None

    def with_seed(self, seed: int) -> 'ShotModel':
        return ShotModel(self.n_shots, int(seed))

    def to_dict(self) -> Dict[str, Any]:
        return {'n_shots': self.n_shots if self.n_shots is not None else 'inf', 'rng_seed': self.rng_seed}


EXACT = ShotModel()


def generator_from_matrix(matrix) -> Generator:
    return Generator.from_matrix(matrix)


def cost_from_matrix(matrix) -> CostOperator:
    return CostOperator.from_matrix(matrix)


def zero_state(n_qubits: int) -> QuantumState:
    """|0...0>"""
    n_qubits = validate_count(n_qubits, 'n_qubits')
    amplitudes = np.zeros(2 ** n_qubits, dtype=complex)
    amplitudes[0] = 1.0
    return QuantumState(n_qubits, amplitudes)


def random_state(n_qubits: int, seed: int) -> QuantumState:
    """Haar-random state from normalised complex Gaussian amplitudes"""
    n_qubits = validate_count(n_qubits, 'n_qubits')
    rng = np.random.default_rng(seed)
    dim = 2 ** n_qubits
    vector = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return QuantumState.from_amplitudes(vector, normalize=True)


def _check_dimensions(*operators, state: QuantumState):
    for operator in operators:
        if operator.dimension != state.dimension:
            raise DimensionMismatchError(
                f"Operator dimension {operator.dimension} does not match state dimension {state.dimension}")


def _evolve_amplitudes(g: Generator, x: float, amplitudes: np.ndarray) -> np.ndarray:
    vectors = g.eig.eigenvectors
    phases = np.exp(-0.5j * float(x) * g.eig.eigenvalues)
    return vectors @ (phases * (vectors.conj().T @ amplitudes))


def evolve(g: Generator, x: float, psi0: QuantumState) -> QuantumState:
    """psi(x) = V diag(exp(-i x lambda / 2)) V^dagger psi0"""
    _check_dimensions(g, state=psi0)
    amplitudes = _evolve_amplitudes(g, x, psi0.amplitudes)
    # Renormalise the rounding drift so chains of evolutions stay valid states
    amplitudes = amplitudes / np.linalg.norm(amplitudes)
    return QuantumState(psi0.n_qubits, amplitudes)


def unitary(g: Generator, x: float) -> np.ndarray:
    """Dense exp(-i x G / 2)"""
    vectors = g.eig.eigenvectors
    phases = np.exp(-0.5j * float(x) * g.eig.eigenvalues)
    return (vectors * phases) @ vectors.conj().T


def exact_value(c: CostOperator, psi: QuantumState) -> float:
    """<psi|C|psi>"""
    _check_dimensions(c, state=psi)
    return float(np.vdot(psi.amplitudes, c.matrix @ psi.amplitudes).real)


def cost_variance(c: CostOperator, psi: QuantumState) -> float:
    """<C^2> - <C>^2, the single-shot variance of measuring C"""
    _check_dimensions(c, state=psi)
    weights = np.abs(c.eig.eigenvectors.conj().T @ psi.amplitudes) ** 2
    mean = float(weights @ c.eig.eigenvalues)
    second = float(weights @ c.eig.eigenvalues ** 2)
    return max(second - mean ** 2, 0.0)


def sample_mean(c: CostOperator, psi: QuantumState, n_shots: int, seed: int) -> float:
    """Mean of n_shots outcomes of C drawn from the Born distribution"""
    probabilities = np.abs(c.eig.eigenvectors.conj().T @ psi.amplitudes) ** 2
    probabilities = probabilities / probabilities.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n_shots, probabilities)
    return float(counts @ c.eig.eigenvalues) / n_shots


@monitor_performance("expectation")
def expectation(g: Generator, c: CostOperator, x: float, psi0: QuantumState,
                shots: ShotModel = EXACT) -> float:
    """
    f(x) = <psi0| U(x)^dagger C U(x) |psi0>

    Finite shot models return the seeded sample mean instead of the exact value.
    """
    psi = evolve(g, x, psi0)
    _check_dimensions(c, state=psi)
    if shots.is_exact:
        return exact_value(c, psi)
    return sample_mean(c, psi, shots.n_shots, shots.rng_seed)


def exact_derivative_oracle(g: Generator, c: CostOperator, x: float, psi0: QuantumState) -> float:
    """Analytic derivative (i/2) <psi(x)|[G, C]|psi(x)>"""
    psi = evolve(g, x, psi0)
    _check_dimensions(c, state=psi)
    commutator = g.matrix @ c.matrix - c.matrix @ g.matrix
    value = 0.5j * np.vdot(psi.amplitudes, commutator @ psi.amplitudes)
    return float(value.real)


@dataclass(frozen=True)
class ExpectationFunction:
    """f(x) as a value: generator, cost operator, initial state and shot model"""
    generator: Generator
    cost: CostOperator
    psi0: QuantumState
    shots: ShotModel = EXACT
    # estimate_derivative passes seed= to callables whose class sets this
    seeded: ClassVar[bool] = True

    def __post_init__(self):
        _check_dimensions(self.generator, self.cost, state=self.psi0)

    def __call__(self, x: float, seed: Optional[int] = None) -> float:
        shots = self.shots if seed is None else self.shots.with_seed(seed)
        return expectation(self.generator, self.cost, x, self.psi0, shots)

    def derivative(self, x: float) -> float:
        return exact_derivative_oracle(self.generator, self.cost, x, self.psi0)

    def sigma0_sq(self, x: float) -> float:
        return cost_variance(self.cost, evolve(self.generator, x, self.psi0))

    def with_shots(self, shots: ShotModel) -> 'ExpectationFunction':
        return ExpectationFunction(self.generator, self.cost, self.psi0, shots)


# Neutral-atom generators

@dataclass(frozen=True)
class LatticeSpec:
    """Atoms on a unit-spaced rows x cols lattice with J_ij = c6 / r_ij^6"""
    rows: int
    cols: int
    c6: float
    jitter: float = 0.0
    seed: int = 0

    @property
    def n_qubits(self) -> int:
        return self.rows * self.cols

    def positions(self) -> np.ndarray:
        grid = np.array([(r, c) for r in range(self.rows) for c in range(self.cols)], dtype=float)
        if self.jitter > 0:
            rng = np.random.default_rng(self.seed)
            grid = grid + rng.uniform(-self.jitter, self.jitter, size=grid.shape)
        return grid

    def interactions(self) -> np.ndarray:
        return lattice_interactions(self.rows, self.cols, self.c6, self.jitter, self.seed)


def lattice_interactions(rows: int, cols: int, c6: float, jitter: float = 0.0, seed: int = 0) -> np.ndarray:
    """Van der Waals couplings J_ij = c6 / r_ij^6 on a (possibly jittered) lattice"""
    rows = validate_count(rows, 'rows')
    cols = validate_count(cols, 'cols')
    if jitter < 0 or jitter >= 0.5:
        raise ValidationError(f"jitter must lie in [0, 0.5), got {jitter}")
    positions = LatticeSpec(rows, cols, c6, jitter, seed).positions()
    n = positions.shape[0]
    couplings = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            distance = np.linalg.norm(positions[i] - positions[j])
            couplings[i, j] = couplings[j, i] = c6 / distance ** 6
    return couplings


def regime_ratio(regime: Union[str, float]) -> float:
    """Nearest-neighbour J / Omega for a named regime or an explicit ratio"""
    if isinstance(regime, str):
        named = {'weak': WEAK_RATIO, 'strong': STRONG_RATIO}
        if regime.lower() not in named:
            raise ValidationError(f"Unknown interaction regime: {regime!r}")
        return named[regime.lower()]
    ratio = float(regime)
    if ratio < 0:
        raise ValidationError(f"Interaction ratio must be non-negative, got {ratio}")
    return ratio


def regime_c6(regime: Union[str, float], omega: float = OMEGA) -> float:
    """C6 giving the regime's nearest-neighbour J / Omega at unit spacing"""
    return regime_ratio(regime) * validate_positive(omega, 'omega')


def neutral_atom_generator(n_qubits: int, omega: float,
                           interactions: Union[None, np.ndarray, LatticeSpec] = None) -> Generator:
    """
    G = 2H / Omega for H = sum (Omega/2) X_i + sum_{j<i} J_ij n_i n_j

    Args:
        n_qubits: Number of atoms
        omega: Drive amplitude (> 0)
        interactions: Symmetric J matrix, a LatticeSpec, or None for no interactions

    Raises:
        ValidationError: On a non-positive omega or an invalid J matrix
    """
    n_qubits = validate_count(n_qubits, 'n_qubits')
    omega = validate_positive(omega, 'omega')

    if interactions is None:
        couplings = np.zeros((n_qubits, n_qubits))
    elif isinstance(interactions, LatticeSpec):
        if interactions.n_qubits != n_qubits:
            raise ValidationError(f"Lattice holds {interactions.n_qubits} atoms, expected {n_qubits}")
        couplings = interactions.interactions()
    else:
        couplings = validate_symmetric_interactions(interactions, n_qubits)

    dim = 2 ** n_qubits
    indices = np.arange(dim)
    # n = (Z + I) / 2 is 1 on |0> and 0 on |1>
    occupation = np.array([1 - ((indices >> (n_qubits - 1 - q)) & 1) for q in range(n_qubits)], dtype=float)
    diagonal = np.zeros(dim)
    for i in range(n_qubits):
        for j in range(i + 1, n_qubits):
            if couplings[i, j] != 0:
                diagonal += couplings[i, j] * occupation[i] * occupation[j]

    matrix = single_qubit_sum(PAULI_X, n_qubits) + np.diag((2.0 / omega) * diagonal)
    logger.debug(f"Built neutral-atom generator: n={n_qubits}, omega={omega}, max J={np.max(couplings):.4g}")
    return Generator.from_matrix(matrix)


def total_z(n_qubits: int) -> CostOperator:
    """sum_i Z_i"""
    return CostOperator.from_matrix(single_qubit_sum(PAULI_Z, validate_count(n_qubits, 'n_qubits')))


def lattice_generator(rows: int, cols: int, regime: Union[str, float], omega: float = OMEGA,
                      jitter: float = 0.0, seed: int = 0) -> Generator:
    """Neutral-atom generator on a rows x cols lattice in a named regime"""
    lattice = LatticeSpec(rows, cols, regime_c6(regime, omega), jitter, seed)
    return neutral_atom_generator(lattice.n_qubits, omega, lattice)


def generic_lattice_generator(rows: int, cols: int, regime: Union[str, float], omega: float = OMEGA,
                              seed: int = 0) -> Generator:
    """Jittered lattice whose spectrum has no symmetry-induced degeneracies"""
    return lattice_generator(rows, cols, regime, omega, jitter=GENERIC_JITTER, seed=seed)


# JSON import / export

@dataclass(frozen=True)
class NeutralAtomDescriptor:
    """Serializable neutral-atom generator description"""
    n_qubits: int
    omega: float
    interactions: tuple

    @classmethod
    def from_lattice(cls, lattice: LatticeSpec, omega: float = OMEGA) -> 'NeutralAtomDescriptor':
        couplings = lattice.interactions()
        return cls(lattice.n_qubits, float(omega), tuple(tuple(row) for row in couplings.tolist()))

    def to_dict(self) -> Dict[str, Any]:
        return {'n_qubits': self.n_qubits, 'omega': self.omega, 'J': [list(row) for row in self.interactions]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'NeutralAtomDescriptor':
        try:
            n_qubits = int(data['n_qubits'])
            couplings = data.get('J') or [[0.0] * n_qubits for _ in range(n_qubits)]
            return cls(n_qubits, float(data.get('omega', OMEGA)), tuple(tuple(float(v) for v in row) for row in couplings))
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Invalid neutral-atom descriptor: {e}") from e

    def build(self) -> Generator:
        return neutral_atom_generator(self.n_qubits, self.omega, np.array(self.interactions, dtype=float))


def matrix_to_dict(matrix) -> Dict[str, Any]:
    """Dense matrix dump with separate real and imaginary parts"""
    dense = np.asarray(matrix, dtype=complex)
    return {'real': dense.real.tolist(), 'imag': dense.imag.tolist()}


def matrix_from_dict(data: Union[Dict[str, Any], list]) -> np.ndarray:
    """Inverse of matrix_to_dict; a bare nested list is read as a real matrix"""
    if isinstance(data, dict):
        real = np.asarray(data.get('real'), dtype=float)
        imag = np.asarray(data.get('imag', np.zeros_like(real)), dtype=float)
        if real.shape != imag.shape:
            raise ValidationError("Real and imaginary parts must have the same shape")
        return real + 1j * imag
    return np.asarray(data, dtype=complex)
