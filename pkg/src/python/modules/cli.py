"""
Command-line front end: derivative scans, error-function curves, scaling
studies, shift optimisation, VQE runs and gap dumps.

Every subcommand reads an optional run file (JSON or YAML), lets flags
override its fields, writes CSV / JSON artifacts into the output directory
and always finishes with a manifest.json.
"""
import argparse
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd
import yaml

from config import (DEFAULT_OUT_DIR, DEFAULT_SEED, DEFAULT_THREADS, DERIVATIVE_GUARD,
                    EPSILON_GAP, HISTOGRAM_BINS, LATTICE, MONTE_CARLO_TRIALS, OMEGA,
                    SCALING_K_GRID, SCALING_RATIO, SCALING_TARGET, SCAN_INTERVAL,
                    SCAN_POINTS, TOOL_VERSION, GENERIC_JITTER, VQE_ITERATIONS, VQE_LAYERS,
                    VQE_LEARNING_RATE, VQE_RUNS)
from config_loader import get_environment
from erroranalysis import error_curve, sweep_to_frame
from export import (RunManifest, scaling_frame, scan_frame, traces_frame, write_csv, write_json,
                    write_manifest)
from logging_config import ConfigurationError, SingularSystemError, ValidationError, log_performance
from performance import get_performance_monitor, reset_performance_monitor
from quantum import (CostOperator, ExpectationFunction, Generator, NeutralAtomDescriptor,
                     QuantumState, ShotModel, cost_from_matrix, generator_from_matrix,
                     lattice_generator, matrix_from_dict, random_state, total_z, zero_state)
from shiftrules import (DiffMethod, RuleKind, default_shifts, estimate_derivative, make_spec,
                        spec_for_gaps)
from spectral import (EpsilonInteger, Explicit, PseudoGapConfig, UniformStep, gap_histogram,
                      pseudo_gaps, unique_gaps)
from utils import derive_seed, grid_shape, mean_relative_error
from validation import (validate_count, validate_interval, validate_qubit_range,
                        validate_run_config)
from varianceopt import monte_carlo_variance, predict_variance, run_pipeline
from vqe import VqeConfig, build_ansatz, run_vqe, summarize_runs

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2

DEFAULT_SCAN_METHODS = [{'kind': 'psr'}, {'kind': 'agpsr', 'K': 4}]
DEFAULT_VQE_METHODS = [{'kind': 'gpsr'}, {'kind': 'agpsr', 'K': 4}]
ERROR_CURVE_POINTS = 401
ERROR_CURVE_TOLERANCE = 1e-3


@dataclass
class RunContext:
    seed: int
    out_dir: Path
    threads: int
    manifest: RunManifest
    resolved: Dict[str, Any] = field(default_factory=dict)

    def output(self, name: str) -> Path:
        return self.out_dir / name

    def record(self, path: Path):
        self.manifest.add_output(path)

    def executor(self) -> Optional[ThreadPoolExecutor]:
        return ThreadPoolExecutor(max_workers=self.threads) if self.threads > 1 else None


def _map(ctx: RunContext, func: Callable, items) -> list:
    executor = ctx.executor()
    if executor is None:
        return [func(item) for item in items]
    with executor:
        return list(executor.map(func, items))


# Run-file building blocks

def load_run_config(path: Optional[str]) -> Dict[str, Any]:
    """Parse a JSON or YAML run file; no path means an empty configuration"""
    if not path:
        return {}
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ValidationError(f"Cannot read run file {path}: {str(e)}") from e
    except yaml.YAMLError as e:
        raise ValidationError(f"Run file {path} is not valid JSON/YAML: {str(e)}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValidationError(f"Run file {path} must contain a mapping")
    return data


def build_generator(spec: Optional[Dict[str, Any]], seed: int = 0) -> Generator:
    """
    Generator from a run-file description.

    Supported types: `lattice` (rows, cols, regime, omega, jitter, seed),
    `neutral_atom` (n_qubits, omega, J) and `matrix` (matrix).
    """
    spec = dict(spec or {'type': 'lattice'})
    kind = str(spec.get('type', 'lattice')).lower()

    if kind == 'lattice':
        rows, cols = spec.get('rows', LATTICE[0]), spec.get('cols', LATTICE[1])
        if 'n_qubits' in spec:
            rows, cols = grid_shape(validate_qubit_range(spec['n_qubits']))
        return lattice_generator(validate_count(rows, 'rows'), validate_count(cols, 'cols'),
                                 spec.get('regime', 'weak'), float(spec.get('omega', OMEGA)),
                                 jitter=float(spec.get('jitter', 0.0)), seed=int(spec.get('seed', seed)))
    if kind == 'neutral_atom':
        return NeutralAtomDescriptor.from_dict(spec).build()
    if kind == 'matrix':
        if 'matrix' not in spec:
            raise ValidationError("Matrix generator needs a 'matrix' field")
        return generator_from_matrix(matrix_from_dict(spec['matrix']))
    raise ValidationError(f"Unknown generator type: {kind!r}")


def build_observable(spec, n_qubits: int) -> CostOperator:
    if spec is None or spec == 'total_z':
        return total_z(n_qubits)
    if isinstance(spec, dict) and 'matrix' in spec:
        return cost_from_matrix(matrix_from_dict(spec['matrix']))
    raise ValidationError(f"Unknown observable: {spec!r}")


def build_state(kind: str, n_qubits: int, seed: int) -> QuantumState:
    kind = str(kind or 'zero').lower()
    if kind == 'zero':
        return zero_state(n_qubits)
    if kind == 'random':
        return random_state(n_qubits, seed)
    raise ValidationError(f"Unknown initial state: {kind!r}")


def parse_methods(entries) -> List[DiffMethod]:
    if not isinstance(entries, list) or not entries:
        raise ValidationError("methods must be a non-empty list")
    methods = [DiffMethod.from_dict(entry if isinstance(entry, dict) else {'kind': entry}) for entry in entries]
    labels = [m.label for m in methods]
    if len(set(labels)) != len(labels):
        raise ValidationError(f"Duplicate differentiation methods: {labels}")
    return methods


# Subcommands

@log_performance
def cmd_derivative_scan(run: Dict[str, Any], ctx: RunContext) -> None:
    """`x, exact, <method>...` derivative table over a scan grid"""
    generator = build_generator(run.get('generator'), ctx.seed)
    n_qubits = generator.n_qubits
    psi0 = build_state(run.get('initial_state', 'zero'), n_qubits, int(run.get('state_seed', ctx.seed)))
    cost = build_observable(run.get('observable'), n_qubits)
    f = ExpectationFunction(generator, cost, psi0)
    shots = ShotModel(run.get('shots'), ctx.seed)
    methods = parse_methods(run.get('methods', DEFAULT_SCAN_METHODS))
    low, high = validate_interval(run.get('x_range', SCAN_INTERVAL), 'x_range')
    points = validate_count(run.get('points', SCAN_POINTS), 'points', minimum=2)
    guard = float(run.get('derivative_guard', DERIVATIVE_GUARD))

    gap_set = unique_gaps(generator.eig)
    xs = np.linspace(low, high, points)
    exact = np.array(_map(ctx, f.derivative, xs))
    logger.info(f"Scanning {points} points for N={n_qubits} ({len(gap_set)} unique gaps)")

    columns, summary = {}, {}
    for m_index, method in enumerate(methods):
        spec = spec_for_gaps(gap_set, method, shots)
        method_seed = derive_seed(ctx.seed, m_index)

        def point(i, spec=spec, method_seed=method_seed):
            return estimate_derivative(f, xs[i], spec, seed=derive_seed(method_seed, i)).estimate

        estimates = np.array(_map(ctx, point, range(points)))
        error, excluded = mean_relative_error(estimates, exact, guard)
        columns[method.label] = estimates
        summary[method.label] = {
            'spec': spec.to_dict(),
            'mean_relative_error': error,
            'excluded_points': excluded,
            'calls_per_point': 2 * spec.K,
        }
        logger.info(f"{method.label}: mean relative error {error:.4e} ({excluded} points excluded)")

    ctx.resolved.update({'n_qubits': n_qubits, 'gap_count': len(gap_set), 'x_range': [low, high],
                         'points': points, 'methods': [m.to_dict() for m in methods],
                         'shots': shots.to_dict(), 'derivative_guard': guard})
    ctx.record(write_csv(scan_frame(xs, exact, columns), ctx.output('scan.csv')))
    ctx.record(write_json(summary, ctx.output('scan_summary.json')))


def _error_curve_gammas(run: Dict[str, Any], K: int) -> np.ndarray:
    if 'gammas' in run:
        return pseudo_gaps(PseudoGapConfig(K, Explicit(tuple(run['gammas']))))
    strategy = str(run.get('strategy', 'epsilon')).lower()
    if strategy == 'epsilon':
        return pseudo_gaps(PseudoGapConfig(K, EpsilonInteger(float(run.get('epsilon', EPSILON_GAP)))))
    if strategy == 'uniform':
        return pseudo_gaps(PseudoGapConfig(K, UniformStep(float(run.get('step', 1.0)))))
    raise ValidationError(f"Unknown pseudo-gap strategy: {strategy!r}")


@log_performance
def cmd_error_curve(run: Dict[str, Any], ctx: RunContext) -> None:
    """`delta,qk` samples of the error function for one pseudo-gap configuration"""
    K = validate_count(run.get('K', 3), 'K')
    gammas = _error_curve_gammas(run, K)
    shifts = run.get('shifts')
    if shifts is None:
        shifts = default_shifts(gammas).shifts
    # Rejects singular or ill-conditioned configurations
    spec = make_spec(RuleKind.AGPSR, gammas, shifts)

    low, high = validate_interval(run.get('delta_range', [0.0, 2.0 * gammas[-1]]), 'delta_range')
    points = validate_count(run.get('points', ERROR_CURVE_POINTS), 'points', minimum=2)
    curve = error_curve(K, spec.gaps, spec.shifts, np.linspace(low, high, points))

    ctx.resolved.update({'K': K, 'gammas': spec.gaps.tolist(), 'shifts': spec.shifts.tolist(),
                         'delta_range': [low, high], 'points': points})
    ctx.record(write_csv(curve.to_frame(), ctx.output('error_curve.csv')))
    ctx.record(write_json({
        'K': K,
        'gammas': spec.gaps,
        'shifts': spec.shifts,
        'condition': spec.metadata['condition'],
        'low_error_width': curve.low_error_width(ERROR_CURVE_TOLERANCE),
        'tolerance': ERROR_CURVE_TOLERANCE,
        'max_abs_qk': float(np.max(np.abs(curve.values))),
    }, ctx.output('error_curve_summary.json')))


@log_performance
def cmd_scaling(run: Dict[str, Any], ctx: RunContext) -> None:
    """Gap counts and relative derivative error r(K, N) over lattice sizes"""
    n_low, n_high = (int(v) for v in run.get('n_range', [3, 5]))
    n_values = [validate_qubit_range(n, minimum=2, maximum=7) for n in range(n_low, n_high + 1)]
    if not n_values:
        raise ValidationError(f"Empty n_range [{n_low}, {n_high}]")
    k_grid = sorted({validate_count(k, 'K') for k in run.get('k_grid', SCALING_K_GRID)})
    target = float(run.get('target', SCALING_TARGET))
    points = validate_count(run.get('points', SCAN_POINTS), 'points', minimum=2)
    low, high = validate_interval(run.get('x_range', SCAN_INTERVAL), 'x_range')
    ratio = float(run.get('ratio', SCALING_RATIO))
    jitter = float(run.get('jitter', GENERIC_JITTER))
    xs = np.linspace(low, high, points)

    rows, summary = [], []
    for n_qubits in n_values:
        lattice_rows, lattice_cols = grid_shape(n_qubits)
        generator = lattice_generator(lattice_rows, lattice_cols, ratio, jitter=jitter, seed=ctx.seed)
        psi0 = build_state(run.get('initial_state', 'zero'), n_qubits, ctx.seed)
        f = ExpectationFunction(generator, total_z(n_qubits), psi0)
        gap_set = unique_gaps(generator.eig)
        exact = np.array(_map(ctx, f.derivative, xs))

        min_k = None
        for K in k_grid:
            try:
                spec = spec_for_gaps(gap_set, DiffMethod(RuleKind.AGPSR, K))
            except SingularSystemError as e:
                logger.warning(f"N={n_qubits}, K={K}: no usable shift rule ({e}); skipping")
                rows.append({'n_qubits': n_qubits, 'S': len(gap_set), 'K': K,
                             'relative_error': float('nan'), 'excluded_points': points})
                continue
            estimates = np.array(_map(ctx, lambda x, spec=spec: estimate_derivative(f, x, spec).estimate, xs))
            error, excluded = mean_relative_error(estimates, exact, DERIVATIVE_GUARD)
            rows.append({'n_qubits': n_qubits, 'S': len(gap_set), 'K': K,
                         'relative_error': error, 'excluded_points': excluded})
            if min_k is None and error <= target:
                min_k = K
        summary.append({'n_qubits': n_qubits, 'S': len(gap_set), 'min_K': min_k,
                        'gpsr_calls': 2 * len(gap_set)})
        logger.info(f"N={n_qubits}: S={len(gap_set)}, minimal K for r<={target:g}: {min_k}")

    ctx.resolved.update({'n_range': [n_low, n_high], 'k_grid': k_grid, 'target': target,
                         'points': points, 'x_range': [low, high], 'ratio': ratio, 'jitter': jitter})
    ctx.record(write_csv(scaling_frame(rows), ctx.output('scaling.csv')))
    ctx.record(write_csv(pd.DataFrame(summary), ctx.output('scaling_summary.csv')))


@log_performance
def cmd_variance_opt(run: Dict[str, Any], ctx: RunContext) -> None:
    """Pseudo-gap selection plus variance-optimal shifts, with an optional Monte Carlo A/B check"""
    generator = build_generator(run.get('generator', {'type': 'lattice', 'rows': 1, 'cols': 3}), ctx.seed)
    n_qubits = generator.n_qubits
    K = validate_count(run.get('K', 4), 'K')
    step_a = run.get('step_a')
    bounds = run.get('bounds')
    shots = ShotModel(run.get('shots', 1000), ctx.seed)
    x = float(run.get('x', math.pi / 4))
    psi0 = build_state(run.get('initial_state', 'zero'), n_qubits, ctx.seed)
    f = ExpectationFunction(generator, total_z(n_qubits), psi0)

    result = run_pipeline(generator, K, None if step_a is None else float(step_a), bounds, shots)
    sigma0_sq = f.sigma0_sq(x)
    report: Dict[str, Any] = {
        'pipeline': result.to_dict(),
        'x': x,
        'prediction': predict_variance(result.spec, sigma0_sq).to_dict(),
    }

    if run.get('monte_carlo', False):
        trials = validate_count(run.get('trials', MONTE_CARLO_TRIALS), 'trials', minimum=2)
        baseline = make_spec(result.spec.kind, result.spec.gaps,
                             default_shifts(result.spec.gaps, result.spec.kind).shifts, shots)
        executor = ctx.executor()
        try:
            optimized_mc = monte_carlo_variance(f, x, result.spec, trials, ctx.seed, executor)
            baseline_mc = monte_carlo_variance(f, x, baseline, trials, ctx.seed, executor)
        finally:
            if executor is not None:
                executor.shutdown()
        report['monte_carlo'] = {
            'trials': trials,
            'optimized': optimized_mc.to_dict(),
            'default': baseline_mc.to_dict(),
            'default_shifts': baseline.shifts,
            'default_prediction': predict_variance(baseline, sigma0_sq).to_dict(),
            'variance_ratio': baseline_mc.variance / optimized_mc.variance if optimized_mc.variance > 0 else None,
        }

    ctx.resolved.update({'n_qubits': n_qubits, 'K': K, 'step_a': step_a, 'bounds': list(result.report.bounds),
                         'shots': shots.to_dict(), 'x': x})
    if result.sweep:
        ctx.record(write_csv(sweep_to_frame(result.sweep), ctx.output('pseudo_gap_sweep.csv')))
    ctx.record(write_json(report, ctx.output('variance_report.json')))


@log_performance
def cmd_vqe(run: Dict[str, Any], ctx: RunContext) -> None:
    """Training traces per method and run, plus the aggregate comparison"""
    n_qubits = validate_qubit_range(run.get('n_qubits', 3), minimum=2, maximum=8)
    kind = str(run.get('ansatz', 'analog')).lower()
    methods = parse_methods(run.get('methods', DEFAULT_VQE_METHODS))
    ansatz = build_ansatz(kind, n_qubits, layers=int(run.get('layers', VQE_LAYERS)), seed=ctx.seed)
    shots = ShotModel(run.get('shots'), ctx.seed)

    summaries = []
    all_traces = []
    for method in methods:
        config = VqeConfig(
            ansatz=ansatz,
            method=method,
            learning_rate=float(run.get('learning_rate', VQE_LEARNING_RATE)),
            iterations=int(run.get('iterations', VQE_ITERATIONS)),
            runs=int(run.get('runs', VQE_RUNS)),
            seed=ctx.seed,
            shots=shots,
            threads=ctx.threads,
        )
        traces = run_vqe(config)
        all_traces.extend(traces)
        for trace in traces:
            ctx.record(write_csv(trace.to_frame(), ctx.output(f"vqe_{method.label}_run{trace.run_index}.csv")))
        summary = summarize_runs(traces, ansatz, method)
        summaries.append(summary.to_dict())
        logger.info(f"{method.label}: mean final energy {summary.mean_final_energy:.6f}, "
                    f"savings factor {summary.savings_factor:g}")

    ctx.resolved.update({'n_qubits': n_qubits, 'ansatz': kind, 'parameter_count': ansatz.parameter_count,
                         'methods': [m.to_dict() for m in methods], 'shots': shots.to_dict()})
    ctx.record(write_json({'ansatz': kind, 'n_qubits': n_qubits, 'parameter_count': ansatz.parameter_count,
                           'ground_energy': -float(n_qubits), 'methods': summaries},
                          ctx.output('vqe_summary.json')))
    ctx.record(write_csv(traces_frame(all_traces), ctx.output('vqe_traces.csv')))


@log_performance
def cmd_gaps(run: Dict[str, Any], ctx: RunContext) -> None:
    """GapSet table and gap histogram of a generator"""
    generator = build_generator(run.get('generator'), ctx.seed)
    gap_set = unique_gaps(generator.eig)
    if len(gap_set) == 0:
        raise ValidationError("Generator spectrum is degenerate; no gaps to export")
    bins = validate_count(run.get('bins', HISTOGRAM_BINS), 'bins')

    ctx.resolved.update({'n_qubits': generator.n_qubits, 'gap_count': len(gap_set), 'bins': bins})
    ctx.record(write_csv(gap_set.to_frame(), ctx.output('gaps.csv')))
    ctx.record(write_csv(gap_histogram(gap_set, bins).to_frame(), ctx.output('gap_histogram.csv')))


COMMANDS: Dict[str, Callable[[Dict[str, Any], RunContext], None]] = {
    'scan': cmd_derivative_scan,
    'error-curve': cmd_error_curve,
    'scaling': cmd_scaling,
    'variance-opt': cmd_variance_opt,
    'vqe': cmd_vqe,
    'gaps': cmd_gaps,
}

# Command-specific flags: (flag, run-file key, type)
COMMAND_FLAGS = {
    'scan': [('--points', 'points', int), ('--shots', 'shots', int)],
    'error-curve': [('--K', 'K', int), ('--points', 'points', int)],
    'scaling': [('--target', 'target', float), ('--points', 'points', int)],
    'variance-opt': [('--K', 'K', int), ('--shots', 'shots', int), ('--trials', 'trials', int)],
    'vqe': [('--n-qubits', 'n_qubits', int), ('--ansatz', 'ansatz', str),
            ('--runs', 'runs', int), ('--iterations', 'iterations', int)],
    'gaps': [('--bins', 'bins', int)],
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON or YAML run file')
    common.add_argument('--seed', type=int, help='Base seed (overrides the run file)')
    common.add_argument('--out-dir', help='Output directory (overrides the run file)')
    common.add_argument('--threads', type=int, help='Worker threads (overrides the run file)')

    parser = argparse.ArgumentParser(prog='agpsr', description='Approximate generalized parameter-shift rule toolkit')
    parser.add_argument('--version', action='version', version=f"%(prog)s {TOOL_VERSION}")
    subparsers = parser.add_subparsers(dest='command', required=True)

    for name, func in COMMANDS.items():
        sub = subparsers.add_parser(name, parents=[common], help=(func.__doc__ or '').strip().splitlines()[0])
        for flag, key, kind in COMMAND_FLAGS[name]:
            sub.add_argument(flag, dest=key, type=kind)
        if name == 'variance-opt':
            sub.add_argument('--monte-carlo', dest='monte_carlo', action='store_true', default=None,
                             help='Run the seed-paired variance comparison against default shifts')
    return parser


def resolve_run_config(args: argparse.Namespace) -> Dict[str, Any]:
    """Run file fields overridden by explicitly given flags"""
    run = load_run_config(args.config)
    overrides = {key: getattr(args, key) for _, key, _ in COMMAND_FLAGS[args.command]}
    overrides['monte_carlo'] = getattr(args, 'monte_carlo', None)
    overrides.update({'seed': args.seed, 'out_dir': args.out_dir, 'threads': args.threads})
    run.update({key: value for key, value in overrides.items() if value is not None})
    return validate_run_config(args.command, run)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    start_time = time.time()
    reset_performance_monitor()

    out_dir = Path(args.out_dir or DEFAULT_OUT_DIR)
    manifest = RunManifest(command=args.command, config={}, seed=args.seed if args.seed is not None else DEFAULT_SEED,
                           environment=get_environment())
    exit_code = EXIT_OK
    ctx = None

    try:
        run = resolve_run_config(args)
        out_dir = Path(run.get('out_dir', out_dir))
        seed = int(run.get('seed', DEFAULT_SEED))
        threads = validate_count(run.get('threads', DEFAULT_THREADS), 'threads', maximum=256)
        manifest.seed = seed
        manifest.config = {'run': dict(run)}
        ctx = RunContext(seed, out_dir, threads, manifest)

        logger.info(f"Running '{args.command}' with seed {seed}, {threads} threads, output in {out_dir}")
        COMMANDS[args.command](run, ctx)

    except (ValidationError, ConfigurationError, SingularSystemError) as e:
        logger.error(f"Invalid configuration for '{args.command}': {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        manifest.error = str(e)
        exit_code = EXIT_INVALID

    except Exception as e:
        logger.error(f"'{args.command}' failed: {str(e)}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        manifest.error = f"{type(e).__name__}: {e}"
        exit_code = EXIT_FAILURE

    finally:
        if ctx is not None:
            manifest.config['resolved'] = ctx.resolved
        monitor = get_performance_monitor()
        monitor.record_system_metrics()
        manifest.performance = monitor.get_metrics_summary()
        manifest.wall_time_seconds = time.time() - start_time
        try:
            write_manifest(manifest, out_dir)
        except Exception as e:
            logger.error(f"Failed to write manifest: {str(e)}")
            exit_code = exit_code or EXIT_FAILURE

    return exit_code


if __name__ == '__main__':
    sys.exit(main())
