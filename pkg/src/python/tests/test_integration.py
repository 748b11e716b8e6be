"""
End-to-end checks of the differentiation toolkit on the neutral-atom and
random-generator workloads. Set AGPSR_RUN_SLOW=1 to include the long runs.
"""
import os
import unittest

import numpy as np

from config import DEFAULT_SEED, SCALING_RATIO
from erroranalysis import q_values
from quantum import ExpectationFunction, lattice_generator, total_z, zero_state
from random_instances import (random_cost, random_generator, random_input_state,
                              random_shift_configuration)
from shiftrules import DiffMethod, RuleKind, estimate_derivative, make_spec, spec_for_gaps
from spectral import max_gap_count, unique_gaps
from utils import grid_shape, mean_relative_error
from vqe import ANALOG, VqeConfig, build_ansatz, run_vqe, summarize_runs

RUN_SLOW = os.environ.get('AGPSR_RUN_SLOW') == '1'

# Explicit shifts spanning [0.4, 0.8] on the 2 x 3 strong lattice (gamma_max about 34.9)
STRONG_SHIFTS = {K: tuple(np.linspace(0.4, 0.8, K)) for K in (4, 8)}


def relative_scan_error(generator, method, points=50):
    f = ExpectationFunction(generator, total_z(generator.n_qubits), zero_state(generator.n_qubits))
    spec = spec_for_gaps(unique_gaps(generator.eig), method)
    xs = np.linspace(0.0, np.pi, points)
    exact = np.array([f.derivative(x) for x in xs])
    estimates = np.array([estimate_derivative(f, x, spec).estimate for x in xs])
    return mean_relative_error(estimates, exact)[0]


def gpsr_max_error(n_qubits, seeds, separation):
    worst = 0.0
    for seed in seeds:
        g = random_generator(n_qubits, seed, min_gap_separation=separation)
        f = ExpectationFunction(g, random_cost(n_qubits, seed + 1000), random_input_state(n_qubits, seed + 2000))
        spec = make_spec(RuleKind.GPSR, unique_gaps(g.eig).gaps)
        for x in (-0.8, 0.4, 2.1):
            worst = max(worst, abs(estimate_derivative(f, x, spec).estimate - f.derivative(x)))
    return worst


class TestExactRules(unittest.TestCase):

    def test_gpsr_matches_oracle(self):
        """50 random generators on one and two qubits"""
        self.assertLessEqual(gpsr_max_error(1, range(5), 0.1), 1e-8)
        self.assertLessEqual(gpsr_max_error(2, range(45), 0.1), 1e-8)

    @unittest.skipUnless(RUN_SLOW, "three-qubit GPSR exactness")
    def test_gpsr_matches_oracle_three_qubits(self):
        self.assertLessEqual(gpsr_max_error(3, range(5), 0.02), 1e-8)

    def test_full_rank_recovery(self):
        for seed in range(20):
            g = random_generator(2, seed, min_gap_separation=0.1)
            f = ExpectationFunction(g, random_cost(2, seed), random_input_state(2, seed))
            gaps = unique_gaps(g.eig).gaps
            gpsr = make_spec(RuleKind.GPSR, gaps)
            agpsr = make_spec(RuleKind.AGPSR, gaps, gpsr.shifts)
            x = 0.1 * seed
            self.assertEqual(estimate_derivative(f, x, gpsr).estimate, estimate_derivative(f, x, agpsr).estimate)

    def test_error_function_zeros(self):
        for seed in range(100):
            K = 1 + seed % 8
            gammas, shifts = random_shift_configuration(K, seed)
            self.assertLessEqual(np.max(np.abs(q_values(gammas, gammas, shifts))), 1e-9)

    def test_random_configurations_are_solvable(self):
        for seed in range(10):
            for K in (7, 8):
                gammas, shifts = random_shift_configuration(K, seed)
                self.assertEqual(make_spec(RuleKind.AGPSR, gammas, shifts).K, K)
                midpoints = (gammas[:-1] + gammas[1:]) / 2
                self.assertTrue(np.all(np.isfinite(q_values(midpoints, gammas, shifts))))


class TestNeutralAtomLattice(unittest.TestCase):

    def test_weak_regime_four_pseudo_gaps(self):
        generator = lattice_generator(2, 3, 'weak')
        error = relative_scan_error(generator, DiffMethod(RuleKind.AGPSR, 4, 4.0))
        self.assertLessEqual(error, 0.01)

    def test_strong_regime_approximate_rule_beats_psr(self):
        generator = lattice_generator(2, 3, 'strong')
        psr = relative_scan_error(generator, DiffMethod(RuleKind.PSR))
        agpsr = relative_scan_error(generator, DiffMethod(RuleKind.AGPSR, 8, shifts=STRONG_SHIFTS[8]))
        self.assertLess(agpsr, psr)

    def test_strong_regime_needs_eight_pseudo_gaps(self):
        generator = lattice_generator(2, 3, 'strong')
        four = relative_scan_error(generator, DiffMethod(RuleKind.AGPSR, 4, shifts=STRONG_SHIFTS[4]))
        eight = relative_scan_error(generator, DiffMethod(RuleKind.AGPSR, 8, shifts=STRONG_SHIFTS[8]))
        self.assertGreater(four, 0.01)
        self.assertLessEqual(eight, 0.01)

    def test_gap_counts(self):
        sizes = range(3, 7) if RUN_SLOW else range(3, 6)
        for n_qubits in sizes:
            rows, cols = grid_shape(n_qubits)
            generator = lattice_generator(rows, cols, SCALING_RATIO, jitter=0.05, seed=DEFAULT_SEED)
            self.assertEqual(len(unique_gaps(generator.eig)), max_gap_count(n_qubits), msg=f"N={n_qubits}")


@unittest.skipUnless(RUN_SLOW, "analog VQE comparison")
class TestAnalogVqe(unittest.TestCase):

    def test_approximate_rule_matches_gpsr_energy(self):
        for n_qubits in (3, 4):
            ansatz = build_ansatz(ANALOG, n_qubits)
            finals = {}
            for method in (DiffMethod(RuleKind.GPSR), DiffMethod(RuleKind.AGPSR, 4)):
                traces = run_vqe(VqeConfig(ansatz, method, iterations=100, runs=10, seed=DEFAULT_SEED))
                finals[method.label] = summarize_runs(traces, ansatz, method).mean_final_energy
            self.assertLessEqual(abs(finals['gpsr'] - finals['agpsr_k4']), 1e-3 * n_qubits, msg=f"N={n_qubits}")


if __name__ == '__main__':
    unittest.main()
