"""
Unit tests for shot-noise variance prediction and shift optimisation
"""
import math
import unittest

import numpy as np

from logging_config import ValidationError
from quantum import EXACT, ExpectationFunction, ShotModel, generator_from_matrix, total_z, zero_state
from random_instances import random_generator, random_input_state
from shiftrules import RuleKind, default_shifts, g_value, make_spec
from utils import PAULI_X, controlled_generator
from varianceopt import (full_pipeline, g_objective, monte_carlo_variance, optimize_shifts,
                         predict_variance, r_variances, run_pipeline, sigma0_sq_at)


def cosine_function():
    return ExpectationFunction(generator_from_matrix(PAULI_X), total_z(1), zero_state(1))


class TestGValue(unittest.TestCase):

    def test_single_gap(self):
        self.assertAlmostEqual(g_value([2.0], [math.pi / 2]), 0.25)
        self.assertAlmostEqual(g_objective([2.0], [math.pi / 2]), 0.25)

    def test_singular_configuration_scores_infinity(self):
        self.assertEqual(g_objective([2.0, 4.0], [math.pi / 2, math.pi]), math.inf)

    def test_r_variances(self):
        np.testing.assert_allclose(r_variances([2.0], [math.pi / 2], 1.0, 100), [2.0 / 100 / 16])


class TestOptimizeShifts(unittest.TestCase):

    def test_single_gap_optimum(self):
        report = optimize_shifts([2.0], [0.3], bounds=(0.01, 3.1))
        self.assertAlmostEqual(report.optimal_shifts[0], math.pi / 2, delta=1e-3)
        self.assertAlmostEqual(report.optimal_g, 0.25, places=6)
        self.assertTrue(report.converged)
        self.assertGreater(report.improvement, 1.0)

    def test_never_worse_than_start(self):
        report = optimize_shifts([2.0], [math.pi / 2], bounds=(0.01, 3.1))
        self.assertLessEqual(report.optimal_g, report.initial_g)

    def test_two_gap_improvement(self):
        initial = default_shifts([1.0, 2.0], condition_target=None).shifts
        report = optimize_shifts([1.0, 2.0], initial)
        self.assertLess(report.optimal_g, report.initial_g)
        self.assertTrue(np.all(np.diff(report.optimal_shifts) > 0))
        low, high = report.bounds
        self.assertTrue(np.all((report.optimal_shifts >= low) & (report.optimal_shifts <= high)))
        self.assertEqual(report.to_dict()['optimizer'], 'Nelder-Mead')

    def test_upper_bound_checked(self):
        with self.assertRaises(ValidationError):
            optimize_shifts([2.0], [0.3], bounds=(0.01, 4.0))
        with self.assertRaises(ValidationError):
            optimize_shifts([2.0], [0.3], bounds=(1.0, 0.5))


class TestVariancePrediction(unittest.TestCase):

    def test_psr_example(self):
        spec = make_spec(RuleKind.PSR, [2.0], [math.pi / 2], ShotModel(100))
        prediction = predict_variance(spec, 1.0)
        self.assertAlmostEqual(prediction.sigma_d_sq, 0.005)
        self.assertAlmostEqual(prediction.full_sigma_d_sq, 0.005)
        self.assertEqual(prediction.to_dict()['n_shots'], 100)

    def test_inverse_shot_scaling(self):
        small = predict_variance(make_spec(RuleKind.GPSR, [1.0, 2.0], shot_model=ShotModel(100)), 0.7)
        large = predict_variance(make_spec(RuleKind.GPSR, [1.0, 2.0], shot_model=ShotModel(400)), 0.7)
        self.assertAlmostEqual(small.sigma_d_sq / large.sigma_d_sq, 4.0)

    def test_exact_shots_predict_zero(self):
        prediction = predict_variance(make_spec(RuleKind.PSR, [2.0], [math.pi / 2], EXACT), 1.0)
        self.assertEqual(prediction.sigma_d_sq, 0.0)
        self.assertEqual(prediction.to_dict()['n_shots'], 'inf')

    def test_negative_variance_rejected(self):
        with self.assertRaises(ValidationError):
            predict_variance(make_spec(RuleKind.PSR, [2.0], [math.pi / 2]), -1.0)

    def test_sigma0_sq(self):
        self.assertAlmostEqual(sigma0_sq_at(cosine_function(), math.pi / 4), 0.5)
        with self.assertRaises(ValidationError):
            sigma0_sq_at(lambda x: 0.0, 0.1)


class TestMonteCarlo(unittest.TestCase):

    def test_psr_variance_matches_prediction(self):
        spec = make_spec(RuleKind.PSR, [2.0], [math.pi / 2], ShotModel(1000))
        f = cosine_function()
        x = math.pi / 4
        predicted = predict_variance(spec, sigma0_sq_at(f, x)).sigma_d_sq
        self.assertAlmostEqual(predicted, 2.5e-4)
        result = monte_carlo_variance(f, x, spec, trials=2000, seed=17)
        self.assertAlmostEqual(result.variance / predicted, 1.0, delta=0.15)
        self.assertAlmostEqual(result.mean, -math.sin(x), delta=0.01)

    def test_exact_shots_rejected(self):
        with self.assertRaises(ValidationError):
            monte_carlo_variance(cosine_function(), 0.1, make_spec(RuleKind.PSR, [2.0], [math.pi / 2]), 10, 0)

    def test_optimised_shifts_beat_default_shifts(self):
        """Paired A/B comparison on a two-gap controlled rotation"""
        generator = generator_from_matrix(controlled_generator(0, 1, 2))
        f = ExpectationFunction(generator, total_z(2), random_input_state(2, 3))
        shots = ShotModel(1000)
        optimised = full_pipeline(generator, 2, shot_model=shots)
        baseline = make_spec(RuleKind.GPSR, [1.0, 2.0],
                             default_shifts([1.0, 2.0], condition_target=None).shifts, shots)
        x = 0.6
        a = monte_carlo_variance(f, x, optimised, trials=300, seed=5)
        b = monte_carlo_variance(f, x, baseline, trials=300, seed=5)
        self.assertLess(a.variance, b.variance)


class TestPipeline(unittest.TestCase):

    def test_single_gap_generator(self):
        spec = full_pipeline(generator_from_matrix(PAULI_X), 1)
        self.assertEqual(spec.kind, RuleKind.GPSR)
        np.testing.assert_allclose(spec.gaps, [2.0])
        self.assertAlmostEqual(spec.shifts[0], math.pi / 2, delta=1e-3)
        self.assertEqual(spec.metadata['shift_source'], 'optimized')

    def test_approximate_rule_for_many_gaps(self):
        result = run_pipeline(random_generator(2, 0, min_gap_separation=0.1), 2)
        self.assertEqual(result.spec.kind, RuleKind.AGPSR)
        self.assertEqual(result.spec.K, 2)
        self.assertEqual(len(result.sweep), 8)
        self.assertIn(result.spec.metadata['pseudo_gap_step'], [s.step for s in result.sweep])
        self.assertLessEqual(result.report.optimal_g, result.report.initial_g)
        self.assertIn('report', result.to_dict())

    def test_gapless_generator_rejected(self):
        with self.assertRaises(ValidationError):
            run_pipeline(generator_from_matrix(np.eye(2)), 1)


if __name__ == '__main__':
    unittest.main()
