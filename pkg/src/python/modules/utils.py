"""
Utility functions for the aGPSR toolkit
"""
import numpy as np

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PROJECTOR_ONE = np.array([[0, 0], [0, 1]], dtype=complex)


def embed_single(op, qubit, n_qubits):
    """Embed a 2x2 operator on one qubit of an n-qubit register (qubit 0 is most significant)."""
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} outside register of {n_qubits}")
    left = np.eye(2 ** qubit, dtype=complex)
    right = np.eye(2 ** (n_qubits - qubit - 1), dtype=complex)
    return np.kron(np.kron(left, op), right)


def single_qubit_sum(op, n_qubits):
    """Sum of the same single-qubit operator acting on every qubit."""
    dim = 2 ** n_qubits
    total = np.zeros((dim, dim), dtype=complex)
    for qubit in range(n_qubits):
        total += embed_single(op, qubit, n_qubits)
    return total


def controlled_generator(control, target, n_qubits, op=PAULI_X):
    """Generator |1><1|_control (x) op_target of a controlled rotation."""
    return embed_single(PROJECTOR_ONE, control, n_qubits) @ embed_single(op, target, n_qubits)


def equidistant(low, high, count):
    """count equidistant points in [low, high]; a single point sits at the upper end."""
    if count == 1:
        return np.array([float(high)])
    return np.linspace(float(low), float(high), count)


def derive_seed(base_seed, index, sign=1):
    """Deterministic per-evaluation seed from (base seed, index, sign)."""
    sequence = np.random.SeedSequence([int(base_seed), int(index), 0 if sign > 0 else 1])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def grid_shape(n_qubits):
    """Rectangular lattice used for an n-atom register: two rows when n is even."""
    if n_qubits >= 4 and n_qubits % 2 == 0:
        return 2, n_qubits // 2
    return 1, n_qubits


def mean_relative_error(estimates, exact, guard=1e-6):
    """
    Mean of |estimate - exact| / |exact| over a scan.

    Points where |exact| < guard are excluded. Returns (error, excluded_count).
    """
    estimates = np.asarray(estimates, dtype=float)
    exact = np.asarray(exact, dtype=float)
    mask = np.abs(exact) >= guard
    excluded = int(np.count_nonzero(~mask))
    if not np.any(mask):
        return float('nan'), excluded
    ratios = np.abs(estimates[mask] - exact[mask]) / np.abs(exact[mask])
    return float(np.mean(ratios)), excluded


def format_float(value):
    """Compact string for floats in column labels (4.0 -> '4', 0.25 -> '0.25')."""
    return f"{float(value):g}"
