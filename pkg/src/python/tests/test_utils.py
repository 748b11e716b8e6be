"""
Unit tests for utils, performance and export helpers
"""
import json
import math
import os
import shutil
import tempfile
import unittest

import numpy as np
import pandas as pd

from export import (RunManifest, scaling_frame, scan_frame, to_json_text, write_csv,
                    write_json, write_manifest)
from logging_config import ExportError, SingularSystemError
from performance import get_performance_monitor, monitor_performance, reset_performance_monitor
from utils import (PAULI_X, PAULI_Z, controlled_generator, derive_seed, embed_single,
                   equidistant, format_float, grid_shape, mean_relative_error, single_qubit_sum)


class TestOperators(unittest.TestCase):

    def test_embed_single_ordering(self):
        """Qubit 0 is the most significant bit"""
        z0 = embed_single(PAULI_Z, 0, 2)
        np.testing.assert_array_equal(np.diag(z0).real, [1, 1, -1, -1])
        z1 = embed_single(PAULI_Z, 1, 2)
        np.testing.assert_array_equal(np.diag(z1).real, [1, -1, 1, -1])
        with self.assertRaises(IndexError):
            embed_single(PAULI_Z, 2, 2)

    def test_single_qubit_sum(self):
        np.testing.assert_array_equal(np.diag(single_qubit_sum(PAULI_Z, 2)).real, [2, 0, 0, -2])

    def test_controlled_generator(self):
        g = controlled_generator(0, 1, 2)
        expected = np.zeros((4, 4), dtype=complex)
        expected[2:, 2:] = PAULI_X
        np.testing.assert_array_equal(g, expected)


class TestHelpers(unittest.TestCase):

    def test_equidistant(self):
        np.testing.assert_allclose(equidistant(1.0, 2.0, 3), [1.0, 1.5, 2.0])
        np.testing.assert_allclose(equidistant(1.0, 2.0, 1), [2.0])

    def test_derive_seed(self):
        self.assertEqual(derive_seed(5, 3, 1), derive_seed(5, 3, 1))
        self.assertNotEqual(derive_seed(5, 3, 1), derive_seed(5, 3, -1))
        self.assertNotEqual(derive_seed(5, 3), derive_seed(5, 4))
        self.assertNotEqual(derive_seed(5, 3), derive_seed(6, 3))

    def test_grid_shape(self):
        self.assertEqual([grid_shape(n) for n in range(2, 8)],
                         [(1, 2), (1, 3), (2, 2), (1, 5), (2, 3), (1, 7)])

    def test_mean_relative_error(self):
        error, excluded = mean_relative_error([1.1, 2.0, 5.0], [1.0, 2.0, 0.0])
        self.assertAlmostEqual(error, 0.05)
        self.assertEqual(excluded, 1)
        error, excluded = mean_relative_error([1.0], [0.0])
        self.assertTrue(math.isnan(error))
        self.assertEqual(excluded, 1)

    def test_format_float(self):
        self.assertEqual(format_float(4.0), '4')
        self.assertEqual(format_float(0.25), '0.25')


class TestPerformanceMonitor(unittest.TestCase):

    def setUp(self):
        reset_performance_monitor()

    def test_decorator_counts_calls(self):
        @monitor_performance("expectation")
        def evaluate(x):
            return x * 2

        for i in range(3):
            evaluate(i)
        monitor = get_performance_monitor()
        self.assertEqual(monitor.expectation_calls, 3)
        summary = monitor.get_metrics_summary()
        self.assertEqual(summary['calls_by_operation'], {'expectation': 3})
        self.assertGreater(summary['peak_memory_mb'], 0.0)

    def test_failures_are_not_counted(self):
        @monitor_performance("solve")
        def failing():
            raise SingularSystemError("singular")

        with self.assertRaises(SingularSystemError):
            failing()
        self.assertEqual(get_performance_monitor().get_metrics().calls_by_operation, {})


class TestExport(unittest.TestCase):

    def setUp(self):
        self.out_dir = tempfile.mkdtemp(prefix='agpsr_export_')

    def tearDown(self):
        shutil.rmtree(self.out_dir, ignore_errors=True)

    def test_csv_keeps_full_precision(self):
        frame = scan_frame([0.1, 1 / 3], [math.pi, -math.e], {'psr': [1e-17, 2.0]})
        path = write_csv(frame, os.path.join(self.out_dir, 'nested', 'scan.csv'))
        with open(path, 'rb') as f:
            raw = f.read()
        self.assertNotIn(b'\r\n', raw)
        self.assertTrue(raw.startswith(b'x,exact,psr\n'))
        loaded = pd.read_csv(path, float_precision='round_trip')
        self.assertEqual(loaded['exact'].tolist(), [math.pi, -math.e])
        self.assertEqual(loaded['x'].tolist(), [0.1, 1 / 3])

    def test_json_handles_numpy_and_non_finite(self):
        text = to_json_text({'b': np.array([1.0, 2.0]), 'a': np.int64(3), 'c': math.inf})
        data = json.loads(text)
        self.assertEqual(data, {'a': 3, 'b': [1.0, 2.0], 'c': 'inf'})
        self.assertLess(text.index('"a"'), text.index('"b"'))

    def test_write_failure_raises_export_error(self):
        blocker = os.path.join(self.out_dir, 'file')
        with open(blocker, 'w', encoding='utf-8') as f:
            f.write('x')
        with self.assertRaises(ExportError):
            write_json({'a': 1}, os.path.join(blocker, 'out.json'))
        with self.assertRaises(ExportError):
            write_csv(pd.DataFrame({'a': [1]}), os.path.join(blocker, 'out.csv'))

    def test_manifest(self):
        manifest = RunManifest(command='gaps', config={'run': {}}, seed=7, environment='ci')
        manifest.add_output(os.path.join(self.out_dir, 'gaps.csv'))
        path = write_manifest(manifest, self.out_dir)
        with open(path, encoding='utf-8') as f:
            data = json.load(f)
        self.assertEqual(data['outputs'], ['gaps.csv'])
        self.assertEqual(data['seed'], 7)
        self.assertIsNone(data['error'])

    def test_scaling_frame_sorted(self):
        frame = scaling_frame([
            {'n_qubits': 4, 'S': 120, 'K': 2, 'relative_error': 0.1, 'excluded_points': 0},
            {'n_qubits': 3, 'S': 28, 'K': 8, 'relative_error': 0.01, 'excluded_points': 0},
            {'n_qubits': 3, 'S': 28, 'K': 2, 'relative_error': 0.2, 'excluded_points': 1},
        ])
        self.assertEqual(list(zip(frame['n_qubits'], frame['K'])), [(3, 2), (3, 8), (4, 2)])


if __name__ == '__main__':
    unittest.main()
