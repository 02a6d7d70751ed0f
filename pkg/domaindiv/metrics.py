"""
Evaluation metrics of the G-ZSL and OSL settings.
"""
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence

import numpy as np

from .data import ClassSplit
from .embedding import NOVEL
from .errors import CoverageError

logger = logging.getLogger(__name__)


def harmonic_mean(a: float, b: float) -> float:
    """``2ab / (a + b)``, 0 when ``a + b == 0``."""
    if a < 0 or b < 0:
        raise ValueError("harmonic_mean takes non-negative values.")
    return 0.0 if a + b == 0 else 2.0 * a * b / (a + b)


@dataclass(frozen=True)
class GzslReport:
    acc_u_to_t: float
    acc_s_to_t: float
    H: float
    domain_counts: Dict[str, int] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    classes: Dict[str, int] = field(default_factory=dict)
    averaging: str = "micro"

    @property
    def headline(self) -> float:
        return self.H

    def to_dict(self) -> Dict[str, Any]:
        return {"task": "gzsl", **asdict(self)}


@dataclass(frozen=True)
class OslReport:
    seen_class_accuracy: float
    unseen_prediction_accuracy: float
    F1: float
    domain_counts: Dict[str, int] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    classes: Dict[str, int] = field(default_factory=dict)
    averaging: str = "micro"

    @property
    def headline(self) -> float:
        return self.F1

    def to_dict(self) -> Dict[str, Any]:
        return {"task": "osl", **asdict(self)}


def dumps_report(report) -> str:
    """Stable JSON rendering: sorted keys, full precision, no timestamps."""
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def _check_coverage(predictions: Mapping[str, str], ground_truth: Mapping[str, str]) -> None:
    missing = [iid for iid in ground_truth if iid not in predictions]
    if missing:
        raise CoverageError(f"{len(missing)} test instances have no prediction, e.g. "
                            f"{sorted(missing)[:5]}.")


def _accuracy(correct: Sequence[bool], truth: Sequence[str], per_class: bool) -> float:
    if not correct:
        return 0.0
    correct = np.asarray(correct, dtype=bool)
    if not per_class:
        return float(correct.mean())
    truth = np.asarray(truth)
    return float(np.mean([correct[truth == c].mean() for c in sorted(set(truth.tolist()))]))


def _grouped(predictions: Mapping[str, str], ground_truth: Mapping[str, str],
             classes: Sequence[str], correct_label):
    members = set(classes)
    correct, truth = [], []
    for iid in sorted(ground_truth):
        label = ground_truth[iid]
        if label in members:
            correct.append(predictions[iid] == correct_label(label))
            truth.append(label)
    if not truth:
        logger.warning("No test instances among %d classes; accuracy reported as 0",
                       len(members))
    return correct, truth


def evaluate_gzsl(predictions: Mapping[str, str], ground_truth: Mapping[str, str],
                  split: ClassSplit, per_class: bool = False, **extra) -> GzslReport:
    """
    Top-1 accuracies on unseen (U->T) and seen (S->T) test instances and their harmonic mean.

    :param predictions: Predicted class id per instance id.
    :param ground_truth: True class id per test instance id.
    :param split: Seen/unseen class split.
    :param per_class: Average per-class accuracies instead of per-instance.
    :param extra: Report fields echoed verbatim (``domain_counts``, ``config``, ``seed``,
        ``classes``).
    """
    _check_coverage(predictions, ground_truth)
    acc_u = _accuracy(*_grouped(predictions, ground_truth, split.unseen, lambda c: c),
                      per_class)
    acc_s = _accuracy(*_grouped(predictions, ground_truth, split.seen, lambda c: c),
                      per_class)
    report = GzslReport(acc_u, acc_s, harmonic_mean(acc_u, acc_s),
                        averaging="per_class" if per_class else "micro", **extra)
    logger.info("G-ZSL: U->T %.4f, S->T %.4f, H %.4f", acc_u, acc_s, report.H)
    return report


def evaluate_osl(predictions: Mapping[str, str], ground_truth: Mapping[str, str],
                 split: ClassSplit, per_class: bool = False, **extra) -> OslReport:
    """
    Seen instances are correct with their exact class, unseen ones when labelled
    ``novel``; F1 is the harmonic mean of the two rates.
    """
    _check_coverage(predictions, ground_truth)
    seen_acc = _accuracy(*_grouped(predictions, ground_truth, split.seen, lambda c: c),
                         per_class)
    unseen_acc = _accuracy(*_grouped(predictions, ground_truth, split.unseen,
                                     lambda c: NOVEL), per_class)
    report = OslReport(seen_acc, unseen_acc, harmonic_mean(seen_acc, unseen_acc),
                       averaging="per_class" if per_class else "micro", **extra)
    logger.info("OSL: seen %.4f, unseen %.4f, F1 %.4f", seen_acc, unseen_acc, report.F1)
    return report


def percent(value: float) -> str:
    return f"{100.0 * value:.1f}"
