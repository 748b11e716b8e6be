"""
Unit tests for spectral gaps, pseudo-gap strategies and gap histograms
"""
import unittest

import numpy as np

from logging_config import ValidationError
from quantum import generator_from_matrix
from random_instances import random_generator
from spectral import (EpsilonInteger, Explicit, PseudoGapConfig, UniformStep, gap_histogram,
                      max_gap, max_gap_count, pseudo_gaps, unique_gaps)
from utils import PAULI_X, controlled_generator


class TestUniqueGaps(unittest.TestCase):

    def test_pauli_x_single_gap(self):
        gaps = unique_gaps(generator_from_matrix(PAULI_X).eig)
        np.testing.assert_allclose(gaps.gaps, [2.0])
        np.testing.assert_array_equal(gaps.multiplicities, [1])

    def test_controlled_rotation_gaps(self):
        """|1><1| (x) X has eigenvalues {-1, 0, 0, 1}: gaps {1, 2}"""
        g = generator_from_matrix(controlled_generator(0, 1, 2))
        gaps = unique_gaps(g.eig)
        np.testing.assert_allclose(gaps.gaps, [1.0, 2.0], atol=1e-12)
        np.testing.assert_array_equal(gaps.multiplicities, [4, 1])

    def test_equidistant_spectrum_merges(self):
        gaps = unique_gaps([0.0, 1.0, 2.0, 3.0])
        np.testing.assert_allclose(gaps.gaps, [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(gaps.multiplicities, [3, 2, 1])
        self.assertEqual(gaps.maximum, 3.0)

    def test_degenerate_spectrum(self):
        gaps = unique_gaps([1.0, 1.0, 1.0])
        self.assertEqual(len(gaps), 0)
        self.assertTrue(gaps.degenerate)
        self.assertEqual(max_gap([1.0, 1.0]), 0.0)

    def test_generic_generator_reaches_bound(self):
        for seed in range(3):
            g = random_generator(2, seed)
            self.assertEqual(len(unique_gaps(g.eig)), max_gap_count(2))

    def test_max_gap_count(self):
        self.assertEqual([max_gap_count(n) for n in range(3, 7)], [28, 120, 496, 2016])


class TestPseudoGaps(unittest.TestCase):

    def test_uniform(self):
        np.testing.assert_allclose(pseudo_gaps(PseudoGapConfig(4, UniformStep(0.5))), [0.5, 1.0, 1.5, 2.0])

    def test_epsilon_integer(self):
        np.testing.assert_allclose(pseudo_gaps(PseudoGapConfig(3, EpsilonInteger(0.1))), [0.1, 1.0, 2.0])
        np.testing.assert_allclose(pseudo_gaps(PseudoGapConfig(1, EpsilonInteger(0.1))), [0.1])

    def test_epsilon_must_stay_below_one(self):
        with self.assertRaises(ValidationError):
            pseudo_gaps(PseudoGapConfig(3, EpsilonInteger(1.5)))

    def test_explicit_length_checked(self):
        with self.assertRaises(ValidationError):
            pseudo_gaps(PseudoGapConfig(3, Explicit((1.0, 2.0))))

    def test_repeated_or_zero_gaps_rejected(self):
        with self.assertRaises(ValidationError):
            pseudo_gaps(PseudoGapConfig(2, Explicit((1.0, 1.0))))
        with self.assertRaises(ValidationError):
            pseudo_gaps(PseudoGapConfig(2, Explicit((0.0, 1.0))))

    def test_delta_max(self):
        with self.assertRaises(ValidationError):
            pseudo_gaps(PseudoGapConfig(4, UniformStep(1.0), delta_max=3.0))


class TestGapHistogram(unittest.TestCase):

    def test_mass_sums_to_one(self):
        gaps = unique_gaps([0.0, 1.0, 2.0, 3.0])
        hist = gap_histogram(gaps, bins=3)
        self.assertAlmostEqual(float(hist.mass.sum()), 1.0)
        # Right-closed bins (0, 1], (1, 2], (2, 3]
        np.testing.assert_allclose(hist.mass, [1 / 3, 1 / 3, 1 / 3])

    def test_weighted(self):
        gaps = unique_gaps([0.0, 1.0, 2.0, 3.0])
        hist = gap_histogram(gaps, bins=3, weighted=True)
        np.testing.assert_allclose(hist.mass, [3 / 6, 2 / 6, 1 / 6])
        self.assertEqual(list(hist.to_frame().columns), ['bin_low', 'bin_high', 'mass', 'density'])

    def test_empty_rejected(self):
        with self.assertRaises(ValidationError):
            gap_histogram(unique_gaps([1.0, 1.0]), bins=4)

    def test_gap_frame(self):
        frame = unique_gaps([0.0, 1.0, 3.0]).to_frame()
        self.assertEqual(list(frame.columns), ['gap', 'multiplicity'])
        self.assertEqual(frame['gap'].tolist(), [1.0, 2.0, 3.0])


if __name__ == '__main__':
    unittest.main()
