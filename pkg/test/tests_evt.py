import math
import unittest

import numpy as np
from scipy.stats import weibull_min

from domaindiv.errors import DegenerateSampleError, InsufficientSamplesError
from domaindiv.evt import WeibullParams, fit_evt, fit_evt_model, fit_weibull, \
    reverse_weibull_cdf, select_tail, statistics_matrix, weibull_cdf, wsvm_statistic

# Show full diff in unittest
unittest.util._MAX_LENGTH = 2000


class WeibullCdf(unittest.TestCase):

    def test_known_value(self):
        params = WeibullParams(scale=1.0, location=0.0, shape=1.0)
        self.assertAlmostEqual(float(weibull_cdf(1.0, params)), 1.0 - math.exp(-1.0), places=15)
        self.assertEqual(float(weibull_cdf(-0.5, params)), 0.0)
        self.assertEqual(float(weibull_cdf(0.0, params)), 0.0)

    def test_reverse_is_complement(self):
        params = WeibullParams(scale=1.3, location=-0.2, shape=2.5)
        z = np.linspace(-3.0, 5.0, 101)
        np.testing.assert_allclose(reverse_weibull_cdf(z, params) + weibull_cdf(z, params),
                                   1.0, rtol=0, atol=1e-15)

    def test_reverse_keeps_deep_tail(self):
        params = WeibullParams(scale=1.0, location=0.0, shape=2.0)
        tail = float(reverse_weibull_cdf(7.0, params))
        self.assertGreater(tail, 0.0)
        self.assertAlmostEqual(tail / math.exp(-49.0), 1.0, places=12)
        self.assertEqual(float(reverse_weibull_cdf(-1.0, params)), 1.0)

    def test_monotone(self):
        params = WeibullParams(scale=0.7, location=0.1, shape=1.7)
        values = weibull_cdf(np.linspace(-1.0, 4.0, 200), params)
        self.assertTrue(np.all(np.diff(values) >= 0))
        self.assertTrue(np.all((values >= 0) & (values <= 1)))

    def test_invalid_parameters(self):
        self.assertRaises(ValueError, lambda: WeibullParams(0.0, 0.0, 1.0))
        self.assertRaises(ValueError, lambda: WeibullParams(1.0, 0.0, -1.0))


class WsvmStatistic(unittest.TestCase):

    def test_known_value(self):
        pos = WeibullParams(scale=1.0, location=0.0, shape=1.0)
        neg = WeibullParams(scale=1.0, location=-2.0, shape=1.0)
        expected = (1.0 - math.exp(-1.0)) * math.exp(-1.0)
        self.assertAlmostEqual(float(wsvm_statistic(1.0, pos, neg)), expected, places=15)

    def test_range(self):
        pos = WeibullParams(1.0, -0.5, 2.0)
        neg = WeibullParams(1.0, 0.5, 2.0)
        m = wsvm_statistic(np.linspace(-4.0, 4.0, 81), pos, neg)
        self.assertTrue(np.all((m >= 0) & (m <= 1)))
        self.assertEqual(float(wsvm_statistic(-0.5, pos, neg)), 0.0)


class WeibullFit(unittest.TestCase):

    def test_select_tail(self):
        np.testing.assert_array_equal(select_tail([5, 1, 4, 2, 3], 0.5), [1, 2, 3])
        np.testing.assert_array_equal(select_tail([5, 1, 4], 0.01), [1])

    def test_recovers_known_location(self):
        shapes, scales = [], []
        for seed in range(5):
            sample = weibull_min.rvs(c=1.5, scale=2.0, size=5000, random_state=seed)
            params = fit_weibull(sample, location=0.0)
            shapes.append(params.shape)
            scales.append(params.scale)
        self.assertLess(abs(np.mean(shapes) - 1.5) / 1.5, 0.03)
        self.assertLess(abs(np.mean(scales) - 2.0) / 2.0, 0.03)

    def test_recovers_with_estimated_location(self):
        shapes, scales = [], []
        for seed in range(5):
            sample = weibull_min.rvs(c=1.5, scale=2.0, size=5000, random_state=seed)
            params = fit_weibull(sample)
            self.assertLess(params.location, sample.min())
            shapes.append(params.shape)
            scales.append(params.scale)
        self.assertLess(abs(np.mean(shapes) - 1.5) / 1.5, 0.05)
        self.assertLess(abs(np.mean(scales) - 2.0) / 2.0, 0.05)

    def test_single_sample_recovery(self):
        sample = weibull_min.rvs(c=1.5, scale=2.0, size=5000, random_state=42)
        params = fit_weibull(sample, location=0.0)
        self.assertLess(abs(params.shape - 1.5) / 1.5, 0.05)
        self.assertLess(abs(params.scale - 2.0) / 2.0, 0.05)
        params = fit_weibull(sample)
        self.assertLess(abs(params.shape - 1.5) / 1.5, 0.08)
        self.assertLess(abs(params.scale - 2.0) / 2.0, 0.08)

    def test_error_shrinks_with_sample_size(self):
        def mean_error(size):
            errors = []
            for seed in range(10):
                sample = weibull_min.rvs(c=1.5, scale=2.0, size=size, random_state=100 + seed)
                params = fit_weibull(sample)
                errors.append(abs(params.shape - 1.5) / 1.5 + abs(params.scale - 2.0) / 2.0)
            return np.mean(errors)

        self.assertLess(mean_error(5000), mean_error(500))

    def test_fit_is_deterministic(self):
        sample = weibull_min.rvs(c=2.0, scale=1.0, size=300, random_state=11)
        self.assertEqual(fit_weibull(sample, 0.5), fit_weibull(sample, 0.5))

    def test_too_few_samples(self):
        self.assertRaises(InsufficientSamplesError, lambda: fit_weibull([1, 2, 3, 4, 5]))
        self.assertRaises(InsufficientSamplesError,
                          lambda: fit_weibull(np.arange(15.0), tail_fraction=0.5))

    def test_degenerate_samples(self):
        self.assertRaises(DegenerateSampleError, lambda: fit_weibull(np.ones(20)))
        self.assertRaises(DegenerateSampleError,
                          lambda: fit_weibull(np.r_[np.arange(19.0), np.nan]))
        self.assertRaises(DegenerateSampleError,
                          lambda: fit_weibull(np.arange(1.0, 21.0), location=1.0))


class EvtModelFit(unittest.TestCase):

    def setUp(self) -> None:
        rng = np.random.default_rng(5)
        self.labels = np.repeat([0, 1], 60)
        self.scores = np.column_stack([
            np.where(self.labels == 0, 1.0, -1.0) + 0.3 * rng.standard_normal(120),
            np.where(self.labels == 1, 1.0, -1.0) + 0.3 * rng.standard_normal(120),
        ])

    def test_negative_tail_is_negated(self):
        evt = fit_evt(self.scores[:60, 0], self.scores[60:, 0])
        self.assertLess(evt.positive.location, self.scores[:60, 0].min())
        self.assertLess(evt.negative.location, -self.scores[60:, 0].max())

    def test_statistics_matrix(self):
        evt = fit_evt_model(("a", "b"), self.scores, self.labels)
        m = statistics_matrix(evt, self.scores)
        self.assertEqual(m.shape, (120, 2))
        self.assertTrue(np.all((m >= 0) & (m <= 1)))
        # own-class statistics dominate
        self.assertGreater(m[:60, 0].mean(), m[60:, 0].mean())
        self.assertGreater(m[60:, 1].mean(), m[:60, 1].mean())
        self.assertEqual(evt.for_class("b"), evt.params[1])

    def test_tail_fraction(self):
        whole = fit_evt_model(("a", "b"), self.scores, self.labels, tail_fraction=1.0)
        half = fit_evt_model(("a", "b"), self.scores, self.labels, tail_fraction=0.5)
        self.assertEqual((whole.tail_fraction, half.tail_fraction), (1.0, 0.5))
        self.assertNotEqual(whole.params[0].positive, half.params[0].positive)
        for evt in (whole, half):
            m = statistics_matrix(evt, self.scores)
            self.assertTrue(np.all((m >= 0) & (m <= 1)))
            self.assertGreater(m[:60, 0].mean(), m[60:, 0].mean())


if __name__ == '__main__':
    unittest.main()
