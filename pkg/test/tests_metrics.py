import json
import unittest

from domaindiv.data import ClassSplit
from domaindiv.embedding import NOVEL
from domaindiv.errors import CoverageError
from domaindiv.metrics import GzslReport, dumps_report, evaluate_gzsl, evaluate_osl, \
    harmonic_mean, percent

# Show full diff in unittest
unittest.util._MAX_LENGTH = 2000

SPLIT = ClassSplit(("s0", "s1"), ("u0", "u1"))


def _fixture():
    """Six seen instances (five right) and four unseen ones (two right)."""
    truth, predictions = {}, {}
    for i in range(6):
        truth[f"s{i}"] = "s0" if i < 3 else "s1"
        predictions[f"s{i}"] = truth[f"s{i}"] if i < 5 else "s0"
    for i in range(4):
        truth[f"u{i}"] = "u0" if i < 2 else "u1"
        predictions[f"u{i}"] = truth[f"u{i}"] if i % 2 == 0 else "s1"
    return predictions, truth


class HarmonicMean(unittest.TestCase):

    def test_reference_values(self):
        self.assertEqual(percent(harmonic_mean(0.536, 0.904)), "67.3")
        self.assertEqual(percent(harmonic_mean(0.660, 0.912)), "76.6")
        self.assertEqual(percent(harmonic_mean(0.057, 0.541)), "10.3")

    def test_bounds(self):
        for a, b in [(0.1, 0.9), (0.5, 0.5), (0.99, 0.01), (0.3, 0.7)]:
            h = harmonic_mean(a, b)
            self.assertLessEqual(h, 2 * min(a, b) + 1e-12)
            self.assertLessEqual(h, (a + b) / 2 + 1e-12)

    def test_zero(self):
        self.assertEqual(harmonic_mean(0.0, 0.7), 0.0)
        self.assertEqual(harmonic_mean(0.0, 0.0), 0.0)
        self.assertRaises(ValueError, lambda: harmonic_mean(-0.1, 0.5))


class Gzsl(unittest.TestCase):

    def test_fixture(self):
        predictions, truth = _fixture()
        report = evaluate_gzsl(predictions, truth, SPLIT)
        self.assertEqual(report.acc_u_to_t, 0.5)
        self.assertAlmostEqual(report.acc_s_to_t, 5 / 6)
        self.assertAlmostEqual(report.H, 0.625)
        self.assertEqual(report.headline, report.H)

    def test_unseen_predicted_as_seen(self):
        truth = {"a": "s0", "b": "u0", "c": "u1"}
        predictions = {"a": "s0", "b": "s0", "c": "s1"}
        report = evaluate_gzsl(predictions, truth, SPLIT)
        self.assertEqual((report.acc_u_to_t, report.acc_s_to_t, report.H), (0.0, 1.0, 0.0))

    def test_permutation_invariance(self):
        predictions, truth = _fixture()
        shuffled = dict(reversed(list(predictions.items())))
        self.assertEqual(evaluate_gzsl(predictions, truth, SPLIT),
                         evaluate_gzsl(shuffled, dict(reversed(list(truth.items()))), SPLIT))

    def test_per_class_averaging(self):
        truth = {"a": "s0", "b": "s0", "c": "s0", "d": "s1", "e": "u0"}
        predictions = {"a": "s0", "b": "s0", "c": "s0", "d": "s0", "e": "u0"}
        micro = evaluate_gzsl(predictions, truth, SPLIT)
        macro = evaluate_gzsl(predictions, truth, SPLIT, per_class=True)
        self.assertEqual(micro.acc_s_to_t, 0.75)
        self.assertEqual(macro.acc_s_to_t, 0.5)
        self.assertEqual(macro.averaging, "per_class")

    def test_missing_prediction(self):
        predictions, truth = _fixture()
        del predictions["u3"]
        self.assertRaises(CoverageError, lambda: evaluate_gzsl(predictions, truth, SPLIT))

    def test_no_unseen_instances(self):
        truth = {"a": "s0"}
        with self.assertLogs("domaindiv.metrics", level="WARNING"):
            report = evaluate_gzsl({"a": "s0"}, truth, SPLIT)
        self.assertEqual(report.acc_u_to_t, 0.0)


class Osl(unittest.TestCase):

    def test_perfect(self):
        truth = {"a": "s0", "b": "s1", "c": "u0"}
        report = evaluate_osl({"a": "s0", "b": "s1", "c": NOVEL}, truth, SPLIT)
        self.assertEqual((report.seen_class_accuracy, report.unseen_prediction_accuracy,
                          report.F1), (1.0, 1.0, 1.0))

    def test_everything_novel(self):
        truth = {"a": "s0", "b": "s1", "c": "u0"}
        report = evaluate_osl({k: NOVEL for k in truth}, truth, SPLIT)
        self.assertEqual(report.seen_class_accuracy, 0.0)
        self.assertEqual(report.unseen_prediction_accuracy, 1.0)
        self.assertEqual(report.F1, 0.0)

    def test_equal_rates(self):
        truth, predictions = {}, {}
        for i in range(1000):
            truth[f"s{i}"], predictions[f"s{i}"] = "s0", ("s0" if i < 937 else "s1")
            truth[f"u{i}"], predictions[f"u{i}"] = "u0", (NOVEL if i < 937 else "s0")
        report = evaluate_osl(predictions, truth, SPLIT)
        self.assertAlmostEqual(report.F1, 0.937)

    def test_unseen_label_is_not_novel(self):
        report = evaluate_osl({"c": "u0"}, {"c": "u0"}, SPLIT)
        self.assertEqual(report.unseen_prediction_accuracy, 0.0)


class Serialization(unittest.TestCase):

    def test_stable_json(self):
        report = GzslReport(0.5, 0.75, 0.6, {"known": 1}, {"seed": 3}, 3, {"s0": 0})
        text = dumps_report(report)
        self.assertEqual(text, dumps_report(report))
        payload = json.loads(text)
        self.assertEqual(payload["task"], "gzsl")
        self.assertEqual(list(payload), sorted(payload))
        self.assertEqual(payload["acc_s_to_t"], 0.75)


if __name__ == '__main__':
    unittest.main()
