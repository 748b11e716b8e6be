"""
Dense linear algebra layer: Hermitian eigendecomposition, pivoted solves,
inverses, determinants and condition estimates.

Shift-rule systems are real; complex arithmetic only enters through the
Hermitian eigensolver used by the quantum layer.
"""
import logging
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from config import NUMERICS, NumericsConfig
from logging_config import (ConvergenceError, DimensionMismatchError,
                            NonHermitianError, SingularSystemError,
                            ValidationError)

logger = logging.getLogger(__name__)

SINGULAR_HINT = "choose different shifts or pseudo-gaps"


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in ascending order with orthonormal eigenvector columns"""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dimension(self) -> int:
        return int(self.eigenvalues.size)

    def reconstruct(self) -> np.ndarray:
        """V diag(lambda) V^dagger"""
        vectors = self.eigenvectors
        return (vectors * self.eigenvalues) @ vectors.conj().T


def _as_square(a, name="matrix", dtype=float) -> np.ndarray:
    array = np.asarray(a, dtype=dtype)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {array.shape}")
    if array.shape[0] == 0:
        raise ValidationError(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(array)):
        raise ValidationError(f"{name} contains non-finite entries")
    return array


def hermitian_error(m) -> float:
    """Largest entry of |M - M^dagger|"""
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def hermitian_eig(m, numerics: NumericsConfig = NUMERICS) -> EigenDecomposition:
    """
    Eigendecomposition of a Hermitian matrix.

    Args:
        m: Hermitian matrix (real or complex)
        numerics: Tolerance record

    Returns:
        EigenDecomposition with ascending eigenvalues

    Raises:
        NonHermitianError: If m deviates from its adjoint beyond tolerance
        ConvergenceError: If LAPACK fails or the reconstruction check fails
    """
    matrix = _as_square(m, dtype=complex)
    scale = float(np.max(np.abs(matrix)))
    deviation = hermitian_error(matrix)
    if deviation > numerics.hermitian_tolerance * max(1.0, scale):
        raise NonHermitianError(f"Matrix is not Hermitian: max |M - M^dagger| = {deviation:.3e}")

    # Symmetrize away rounding noise before handing over to LAPACK
    matrix = (matrix + matrix.conj().T) / 2
    if not np.any(matrix.imag):
        matrix = matrix.real

    try:
        eigenvalues, eigenvectors = sla.eigh(matrix, check_finite=False, driver="evd")
    except (sla.LinAlgError, ValueError):
        logger.warning("Divide-and-conquer eigensolver failed, retrying with the QR driver")
        try:
            eigenvalues, eigenvectors = sla.eigh(matrix, check_finite=False, driver="ev")
        except sla.LinAlgError as e:
            raise ConvergenceError(f"Hermitian eigensolver did not converge: {e}") from e

    decomposition = EigenDecomposition(
        eigenvalues=np.asarray(eigenvalues, dtype=float),
        eigenvectors=np.asarray(eigenvectors, dtype=complex),
    )

    residual = float(np.max(np.abs(decomposition.reconstruct() - matrix)))
    if residual > numerics.reconstruction_tolerance * max(scale, np.finfo(float).tiny):
        raise ConvergenceError(
            f"Eigendecomposition residual {residual:.3e} exceeds tolerance for scale {scale:.3e}"
        )

    return decomposition


def _lu_factor(a: np.ndarray):
    with warnings.catch_warnings():
        # Exactly singular factors are reported through the pivot check below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return sla.lu_factor(a, check_finite=False)


def _condition_from_lu(lu_piv, a: np.ndarray) -> float:
    lu, _ = lu_piv
    if np.any(np.diag(lu) == 0):
        return float('inf')
    rcond, info = lapack.dgecon(lu, np.linalg.norm(a, 1), norm='1')
    if info != 0 or rcond <= 0:
        return float('inf')
    return float(1.0 / rcond)


def condition_estimate(a) -> float:
    """1-norm condition number estimate of a real square matrix (inf when singular)"""
    matrix = _as_square(a)
    return _condition_from_lu(_lu_factor(matrix), matrix)


def _checked_lu(a: np.ndarray, numerics: NumericsConfig):
    lu_piv = _lu_factor(a)
    scale = float(np.max(np.abs(a)))
    smallest_pivot = float(np.min(np.abs(np.diag(lu_piv[0]))))
    if scale == 0 or smallest_pivot <= numerics.pivot_tolerance * scale:
        raise SingularSystemError(
            f"Linear system is singular or nearly so (smallest pivot {smallest_pivot:.3e})",
            condition_estimate=_condition_from_lu(lu_piv, a),
            hint=SINGULAR_HINT,
        )
    return lu_piv


def solve_linear(a, b, numerics: NumericsConfig = NUMERICS) -> np.ndarray:
    """
    Solve a x = b with partial pivoting.

    b may be a vector or a matrix of right-hand sides.

    Raises:
        DimensionMismatchError: If a and b disagree in size
        SingularSystemError: If a pivot falls below pivot_tolerance times max|a|
    """
    matrix = _as_square(a)
    rhs = np.asarray(b, dtype=float)
    if rhs.shape[0] != matrix.shape[0]:
        raise DimensionMismatchError(f"Right-hand side length {rhs.shape[0]} does not match dimension {matrix.shape[0]}")
    lu_piv = _checked_lu(matrix, numerics)
    return sla.lu_solve(lu_piv, rhs, check_finite=False)


def invert(a, numerics: NumericsConfig = NUMERICS) -> np.ndarray:
    """Inverse of a nonsingular real matrix via its pivoted LU factors"""
    matrix = _as_square(a)
    lu_piv = _checked_lu(matrix, numerics)
    return sla.lu_solve(lu_piv, np.eye(matrix.shape[0]), check_finite=False)


def determinant(a) -> float:
    """Sign-correct determinant by pivoted elimination; 0 for singular input"""
    matrix = _as_square(a)
    lu, piv = _lu_factor(matrix)
    diagonal = np.diag(lu)
    if np.any(diagonal == 0):
        return 0.0
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    sign = -1.0 if swaps % 2 else 1.0
    return float(sign * np.prod(diagonal))


def cramer_solve(a, b) -> np.ndarray:
    """
    Solve a x = b with x_k = det(a with column k replaced by b) / det(a).

    Kept as an independent cross-check of the pivoted solve.
    """
    matrix = _as_square(a)
    rhs = np.asarray(b, dtype=float)
    if rhs.shape != (matrix.shape[0],):
        raise DimensionMismatchError(f"Right-hand side must have length {matrix.shape[0]}")
    denominator = determinant(matrix)
    if denominator == 0:
        raise SingularSystemError("Determinant is zero", condition_estimate=float('inf'), hint=SINGULAR_HINT)
    solution = np.empty(matrix.shape[0])
    for k in range(matrix.shape[0]):
        replaced = matrix.copy()
        replaced[:, k] = rhs
        solution[k] = determinant(replaced) / denominator
    return solution


def residual_norm(a, x, b) -> Tuple[float, float]:
    """Return (||a x - b||_inf, ||a|| ||x|| + ||b||) for residual checks"""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    residual = float(np.max(np.abs(a @ x - b)))
    reference = float(np.linalg.norm(a, np.inf) * np.max(np.abs(x)) + np.max(np.abs(b)))
    return residual, reference
