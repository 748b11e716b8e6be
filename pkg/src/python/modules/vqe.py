"""
Variational quantum eigensolver harness

Digital and analog ansatzes minimising the energy of sum_i Z_i with Adam,
gradients assembled parameter by parameter from shift rules, and exact
bookkeeping of expectation calls.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import (ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON, DEFAULT_THREADS, OMEGA,
                    VQE_INIT_RANGE, VQE_ITERATIONS, VQE_LAYERS, VQE_LEARNING_RATE,
                    VQE_RUNS)
from logging_config import DimensionMismatchError, ValidationError
from performance import get_performance_monitor, monitor_performance
from quantum import (EXACT, CostOperator, ExpectationFunction, Generator, QuantumState,
                     ShotModel, exact_value, generic_lattice_generator, sample_mean,
                     total_z, unitary, zero_state)
from shiftrules import DiffMethod, RuleKind, ShiftRuleSpec, estimate_derivative, spec_for_gaps
from spectral import GapSet, unique_gaps
from utils import PAULI_X, controlled_generator, derive_seed, embed_single, grid_shape
from validation import validate_count, validate_positive, validate_qubit_range

logger = logging.getLogger(__name__)

DIGITAL = "digital"
ANALOG = "analog"


def build_cost_hamiltonian(n_qubits: int) -> CostOperator:
    """sum_i Z_i; ground energy -N on |1...1>"""
    return total_z(n_qubits)


@dataclass(frozen=True)
class Gate:
    """One parameterised evolution exp(-i theta G / 2)"""
    label: str
    generator: Generator = field(repr=False)
    gaps: GapSet = field(repr=False)


@dataclass(frozen=True)
class Ansatz:
    kind: str
    n_qubits: int
    gates: Tuple[Gate, ...]
    cost: CostOperator = field(repr=False)
    layers: int = 1

    @property
    def parameter_count(self) -> int:
        return len(self.gates)

    def _check(self, params) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.parameter_count,):
            raise DimensionMismatchError(
                f"{self.kind} ansatz takes {self.parameter_count} parameters, got shape {params.shape}")
        return params

    def state(self, params) -> QuantumState:
        params = self._check(params)
        amplitudes = zero_state(self.n_qubits).amplitudes
        for gate, theta in zip(self.gates, params):
            amplitudes = unitary(gate.generator, theta) @ amplitudes
        return QuantumState.from_amplitudes(amplitudes, normalize=True)

    def energy(self, params, shots: ShotModel = EXACT) -> float:
        """<psi(params)| sum Z |psi(params)>, sampled for finite shot models"""
        psi = self.state(params)
        if shots.is_exact:
            return exact_value(self.cost, psi)
        return sample_mean(self.cost, psi, shots.n_shots, shots.rng_seed)

    def parameter_functions(self, params, shots: ShotModel = EXACT) -> List[ExpectationFunction]:
        """
        f_i(x) = energy with parameter i replaced by x, one per parameter.

        Gates before i are folded into the initial state and gates after i
        into the measured operator, so f_i is a single-generator expectation.
        """
        params = self._check(params)
        unitaries = [unitary(gate.generator, theta) for gate, theta in zip(self.gates, params)]

        prefixes = []
        amplitudes = zero_state(self.n_qubits).amplitudes
        for u in unitaries:
            prefixes.append(QuantumState.from_amplitudes(amplitudes, normalize=True))
            amplitudes = u @ amplitudes

        functions: List[Optional[ExpectationFunction]] = [None] * len(self.gates)
        suffix = np.eye(2 ** self.n_qubits, dtype=complex)
        for i in reversed(range(len(self.gates))):
            if i == len(self.gates) - 1:
                cost = self.cost
            else:
                cost = CostOperator.from_matrix(suffix.conj().T @ self.cost.matrix @ suffix)
            functions[i] = ExpectationFunction(self.gates[i].generator, cost, prefixes[i], shots)
            suffix = suffix @ unitaries[i]
        return functions


def _gate(label: str, matrix: np.ndarray) -> Gate:
    generator = Generator.from_matrix(matrix)
    return Gate(label, generator, unique_gaps(generator.eig))


def build_ansatz(kind: str, n_qubits: int, layers: int = VQE_LAYERS, regime='strong',
                 omega: float = OMEGA, seed: int = 0) -> Ansatz:
    """
    Digital: `layers` repetitions of RX on every qubit followed by a
    controlled-RX chain (q -> q+1). Analog: a single parameter driving the
    jittered neutral-atom generator of the grid_shape(n) lattice.
    """
    n_qubits = validate_qubit_range(n_qubits, minimum=2, maximum=8)
    kind = str(kind).lower()
    cost = build_cost_hamiltonian(n_qubits)

    if kind == DIGITAL:
        layers = validate_count(layers, 'layers')
        rotations = [_gate(f"rx_{q}", embed_single(PAULI_X, q, n_qubits)) for q in range(n_qubits)]
        entanglers = [_gate(f"crx_{q}_{q + 1}", controlled_generator(q, q + 1, n_qubits))
                      for q in range(n_qubits - 1)]
        gates = []
        for layer in range(layers):
            gates.extend(Gate(f"l{layer}_{g.label}", g.generator, g.gaps) for g in rotations)
            gates.extend(Gate(f"l{layer}_{g.label}", g.generator, g.gaps) for g in entanglers)
        return Ansatz(DIGITAL, n_qubits, tuple(gates), cost, layers)

    if kind == ANALOG:
        rows, cols = grid_shape(n_qubits)
        generator = generic_lattice_generator(rows, cols, regime, omega, seed=seed)
        gate = Gate("analog", generator, unique_gaps(generator.eig))
        return Ansatz(ANALOG, n_qubits, (gate,), cost, 1)

    raise ValidationError(f"Unknown ansatz kind: {kind!r}")


def equations_for(gaps: GapSet, method: DiffMethod) -> int:
    """Number of shift pairs the method spends on one parameter"""
    if method.kind == RuleKind.PSR:
        return 1
    if method.kind == RuleKind.GPSR:
        return len(gaps)
    return min(method.K, len(gaps))


def calls_per_gradient(ansatz: Ansatz, method: DiffMethod) -> int:
    """sum over parameters of 2 * K_param"""
    return sum(2 * equations_for(gate.gaps, method) for gate in ansatz.gates)


@dataclass(frozen=True)
class VqeConfig:
    ansatz: Ansatz
    method: DiffMethod
    learning_rate: float = VQE_LEARNING_RATE
    iterations: int = VQE_ITERATIONS
    runs: int = VQE_RUNS
    seed: int = 0
    shots: ShotModel = EXACT
    threads: int = DEFAULT_THREADS

    def __post_init__(self):
        validate_positive(self.learning_rate, 'learning_rate')
        validate_count(self.iterations, 'iterations', minimum=0)
        validate_count(self.runs, 'runs')
        validate_count(self.threads, 'threads')

    @property
    def n_qubits(self) -> int:
        return self.ansatz.n_qubits


@dataclass(frozen=True)
class GradientResult:
    values: np.ndarray
    expectation_calls: int


@dataclass(frozen=True)
class GradientPlan:
    """Shift rule per parameter, fixed for a whole training run"""
    method: DiffMethod
    specs: Tuple[ShiftRuleSpec, ...]

    @property
    def calls(self) -> int:
        return sum(2 * spec.K for spec in self.specs)


def build_gradient_plan(ansatz: Ansatz, method: DiffMethod, shots: ShotModel = EXACT) -> GradientPlan:
    # Gates sharing a generator share a rule
    cache: Dict[int, ShiftRuleSpec] = {}
    specs = []
    for gate in ansatz.gates:
        key = id(gate.generator)
        if key not in cache:
            cache[key] = spec_for_gaps(gate.gaps, method, shots)
        specs.append(cache[key])
    plan = GradientPlan(method, tuple(specs))
    logger.debug(f"Gradient plan {method.label}: {plan.calls} expectation calls per gradient")
    return plan


def gradient(config: VqeConfig, params, plan: Optional[GradientPlan] = None,
             seed: Optional[int] = None) -> GradientResult:
    """
    Shift-rule gradient of the ansatz energy at params

    Args:
        config: Ansatz, differentiation method and shot model
        params: Parameter vector
        plan: Precomputed shift rules; built from config when omitted
        seed: Base seed for finite-shot evaluations
    """
    if plan is None:
        plan = build_gradient_plan(config.ansatz, config.method, config.shots)
    functions = config.ansatz.parameter_functions(params, config.shots)
    params = np.asarray(params, dtype=float)

    values = np.empty(len(functions))
    calls = 0
    for i, (f, spec) in enumerate(zip(functions, plan.specs)):
        parameter_seed = None if seed is None else derive_seed(seed, i)
        result = estimate_derivative(f, params[i], spec, seed=parameter_seed)
        values[i] = result.estimate
        calls += result.expectation_calls
    return GradientResult(values, calls)


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> 'AdamState':
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_step(state: AdamState, grad, lr: float, beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2,
              epsilon: float = ADAM_EPSILON) -> Tuple[np.ndarray, AdamState]:
    """Bias-corrected Adam update; returns (parameter delta, next state)"""
    grad = np.asarray(grad, dtype=float)
    t = state.t + 1
    m = beta1 * state.m + (1 - beta1) * grad
    v = beta2 * state.v + (1 - beta2) * grad ** 2
    m_hat = m / (1 - beta1 ** t)
    v_hat = v / (1 - beta2 ** t)
    delta = -lr * m_hat / (np.sqrt(v_hat) + epsilon)
    return delta, AdamState(m, v, t)


@dataclass(frozen=True)
class TrainTrace:
    run_index: int
    run_seed: int
    method: str
    energies: List[float]
    cumulative_calls: List[int]
    final_params: np.ndarray = field(repr=False, default=None)

    @property
    def final_energy(self) -> float:
        return self.energies[-1]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'iteration': np.arange(len(self.energies)),
            'energy': self.energies,
            'cumulative_calls': self.cumulative_calls,
        })


def initial_parameters(ansatz: Ansatz, seed: int, run_index: int) -> Tuple[int, np.ndarray]:
    run_seed = derive_seed(seed, run_index)
    rng = np.random.default_rng(run_seed)
    low, high = VQE_INIT_RANGE
    return run_seed, rng.uniform(low, high, size=ansatz.parameter_count)


def _train(config: VqeConfig, plan: GradientPlan, run_index: int) -> TrainTrace:
    run_seed, params = initial_parameters(config.ansatz, config.seed, run_index)
    state = AdamState.zeros(params.size)

    energies = [config.ansatz.energy(params)]
    calls = [0]
    for iteration in range(config.iterations):
        grad_seed = None if config.shots.is_exact else derive_seed(run_seed, iteration)
        result = gradient(config, params, plan, seed=grad_seed)
        delta, state = adam_step(state, result.values, config.learning_rate)
        params = params + delta
        energies.append(config.ansatz.energy(params))
        calls.append(calls[-1] + result.expectation_calls)

    logger.debug(f"Run {run_index} ({plan.method.label}): energy {energies[0]:.6f} -> {energies[-1]:.6f}")
    return TrainTrace(run_index, run_seed, plan.method.label, energies, calls, params)


@monitor_performance("vqe")
def run_vqe(config: VqeConfig) -> List[TrainTrace]:
    """
    Independent seeded training runs, executed in parallel.

    Run r starts from parameters uniform in VQE_INIT_RANGE drawn with
    derive_seed(config.seed, r), identical across differentiation methods.
    """
    plan = build_gradient_plan(config.ansatz, config.method, config.shots)
    logger.info(f"Running {config.runs} VQE runs, {config.ansatz.kind} ansatz, N={config.n_qubits}, "
                f"method {config.method.label}, {plan.calls} calls per gradient")

    workers = min(config.threads, config.runs)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            traces = list(executor.map(lambda r: _train(config, plan, r), range(config.runs)))
    else:
        traces = [_train(config, plan, r) for r in range(config.runs)]

    get_performance_monitor().record_system_metrics()
    return traces


@dataclass(frozen=True)
class RunSummary:
    method: str
    runs: int
    mean_final_energy: float
    min_final_energy: float
    total_calls: int
    calls_per_gradient: int
    gpsr_calls_per_gradient: int

    @property
    def savings_factor(self) -> float:
        return self.gpsr_calls_per_gradient / self.calls_per_gradient

    def to_dict(self) -> Dict[str, Any]:
        return {
            'method': self.method,
            'runs': self.runs,
            'mean_final_energy': self.mean_final_energy,
            'min_final_energy': self.min_final_energy,
            'total_calls': self.total_calls,
            'calls_per_gradient': self.calls_per_gradient,
            'gpsr_calls_per_gradient': self.gpsr_calls_per_gradient,
            'savings_factor': self.savings_factor,
        }


def summarize_runs(traces: Sequence[TrainTrace], ansatz: Ansatz, method: DiffMethod) -> RunSummary:
    """Mean and best final energy across runs and the call savings against GPSR"""
    if not traces:
        raise ValidationError("No VQE traces to summarize")
    finals = np.array([trace.final_energy for trace in traces])
    return RunSummary(
        method=method.label,
        runs=len(traces),
        mean_final_energy=float(finals.mean()),
        min_final_energy=float(finals.min()),
        total_calls=int(sum(trace.cumulative_calls[-1] for trace in traces)),
        calls_per_gradient=calls_per_gradient(ansatz, method),
        gpsr_calls_per_gradient=calls_per_gradient(ansatz, DiffMethod(RuleKind.GPSR)),
    )
