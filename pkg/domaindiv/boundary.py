"""
Per-class acceptance thresholds: the bootstrap estimate of the initial threshold
and the Kolmogorov-Smirnov shrinking of the known-domain boundary.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .config import BootstrapConfig, ShrinkConfig
from .errors import EmptySampleError

logger = logging.getLogger(__name__)

# keeps one resampling block under ~8M draws
_BLOCK_DRAWS = 1 << 23


@dataclass(frozen=True)
class KsResult:
    statistic: float
    critical_value: float
    reject: bool
    n_train: int
    n_test: int
    alpha: float


@dataclass(frozen=True)
class ShrinkStep:
    step: int
    delta: float
    n_test: int
    statistic: float
    critical_value: float
    reject: bool


@dataclass(frozen=True)
class ClassBoundary:
    """
    Outcome of boundary estimation for one seen class.

    ``initial_delta`` is the acceptance threshold (bootstrap or fixed); ``delta`` is the
    threshold after shrinking. ``ks_applied`` is False when the K-S step is disabled or
    the class accepted no test instance.
    """
    class_id: str
    initial_delta: float
    delta: float
    ks_accepted: bool = True
    ks_applied: bool = True
    shrink_steps: int = 0
    final_accept_set: Tuple[str, ...] = ()
    uncertain_set: Tuple[str, ...] = ()
    history: Tuple[ShrinkStep, ...] = ()

    def __post_init__(self):
        if set(self.final_accept_set) & set(self.uncertain_set):
            raise ValueError("Accept and uncertain sets overlap.")
        if not math.isfinite(self.delta):
            raise ValueError("Threshold must be finite.")


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def quantile_rank(alpha: float, n: int) -> int:
    """1-based rank ``max(Round[alpha * n], 1)`` of the extracted order statistic."""
    return min(max(round_half_up(alpha * n), 1), n)


def bootstrap_threshold(train_scores: Sequence[float], cfg: BootstrapConfig) -> float:
    """
    Mean over repetitions of the bootstrap alpha-quantile.

    Each repetition draws ``n`` values with replacement, sorts them and extracts the
    ``max(Round[alpha * n], 1)``-th smallest.

    :param train_scores: m-statistics of the training instances of one class.
    :param cfg: Bootstrap configuration.
    :return: The threshold delta_c.
    """
    scores = np.asarray(train_scores, dtype=np.float64)
    if scores.size == 0:
        raise EmptySampleError("Bootstrap needs a nonempty score list.")
    n = cfg.n_resamples or scores.size
    repetitions = cfg.n_repetitions or n
    rank = quantile_rank(cfg.alpha, n)
    rng = np.random.default_rng(cfg.rng_seed)
    block = max(1, _BLOCK_DRAWS // n)
    total = 0.0
    done = 0
    while done < repetitions:
        size = min(block, repetitions - done)
        draws = rng.choice(scores, size=(size, n), replace=True)
        total += float(np.partition(draws, rank - 1, axis=1)[:, rank - 1].sum())
        done += size
    delta = total / repetitions
    return float(min(max(delta, scores.min()), scores.max()))


@dataclass(frozen=True)
class EmpiricalCdf:
    """Right-continuous step function of a sample."""
    sorted_sample: np.ndarray

    def __call__(self, z):
        z = np.asarray(z, dtype=np.float64)
        counts = np.searchsorted(self.sorted_sample, z, side="right")
        return counts / self.sorted_sample.size


def ecdf(sample: Sequence[float]) -> EmpiricalCdf:
    values = np.sort(np.asarray(sample, dtype=np.float64))
    if values.size == 0:
        raise EmptySampleError("ecdf of an empty sample.")
    return EmpiricalCdf(values)


def ks_critical_value(n_train: int, n_test: int, alpha: float) -> float:
    """Asymptotic rejection bound ``sqrt(-(n + m) / (2nm) * ln(alpha / 2))``."""
    return math.sqrt(-((n_train + n_test) / (2.0 * n_train * n_test)) * math.log(alpha / 2.0))


def ks_two_sample(tr_scores: Sequence[float], te_scores: Sequence[float],
                  alpha: float) -> KsResult:
    """
    Two-sample K-S test: ``K = sup |F_tr - F_te|`` against :func:`ks_critical_value`.
    """
    f_tr, f_te = ecdf(tr_scores), ecdf(te_scores)
    support = np.concatenate([f_tr.sorted_sample, f_te.sorted_sample])
    statistic = float(np.max(np.abs(f_tr(support) - f_te(support))))
    n_train, n_test = f_tr.sorted_sample.size, f_te.sorted_sample.size
    critical = ks_critical_value(n_train, n_test, alpha)
    return KsResult(statistic, critical, statistic > critical, n_train, n_test, alpha)


def shrink_boundary(class_id: str, train_scores: Sequence[float],
                    accepted_test: Sequence[Tuple[str, float]], alpha: float,
                    shrink_cfg: ShrinkConfig,
                    initial_delta: Optional[float] = None) -> ClassBoundary:
    """
    Shrink the known-domain boundary of one class with repeated K-S tests.

    While the test-side statistics differ from the training ones, the lowest
    ``step_fraction`` of the accepted test instances moves to the uncertain set and
    the threshold rises to the smallest surviving statistic. If the test never
    accepts (steps exhausted, sample emptied or too small), every accepted test
    instance of the class is uncertain.

    :param class_id: Seen class id.
    :param train_scores: m-statistics of the training instances of the class.
    :param accepted_test: ``(instance id, m-statistic)`` pairs accepted by the class.
    :param alpha: Significance level.
    :param shrink_cfg: Step size, step budget and minimum sample size.
    :param initial_delta: Threshold that produced ``accepted_test``.
    """
    train = np.asarray(train_scores, dtype=np.float64)
    if train.size == 0:
        raise EmptySampleError(f"No training statistics for class '{class_id}'.")
    delta = float(initial_delta) if initial_delta is not None else float(train.min())
    if not accepted_test:
        return ClassBoundary(class_id, delta, delta, ks_applied=False)
    ordered = sorted(accepted_test, key=lambda item: (item[1], item[0]))
    all_ids = tuple(iid for iid, _ in ordered)
    ids = [iid for iid, _ in ordered]
    values = np.array([v for _, v in ordered], dtype=np.float64)

    def _fail(steps: int, history, reason: str) -> ClassBoundary:
        logger.info("Class %s: K-S %s; %d test instances marked uncertain", class_id, reason,
                    len(all_ids))
        return ClassBoundary(class_id, delta, current_delta, False, True, steps, (), all_ids,
                             tuple(history))

    history = []
    current_delta = delta
    start = 0
    for step in range(shrink_cfg.max_steps + 1):
        remaining = values.size - start
        if remaining < shrink_cfg.min_samples or train.size < shrink_cfg.min_samples:
            if step == 0:
                logger.warning("Class %s: K-S skipped (%d train / %d test statistics)",
                               class_id, train.size, remaining)
            return _fail(step, history, "sample too small")
        result = ks_two_sample(train, values[start:], alpha)
        history.append(ShrinkStep(step, current_delta, remaining, result.statistic,
                                  result.critical_value, result.reject))
        if not result.reject:
            logger.info("Class %s: K-S accepted after %d shrink steps (K=%.4f, crit=%.4f)",
                        class_id, step, result.statistic, result.critical_value)
            return ClassBoundary(class_id, delta, current_delta, True, True, step,
                                 tuple(ids[start:]), tuple(ids[:start]), tuple(history))
        if step == shrink_cfg.max_steps:
            break
        start += max(1, int(math.ceil(shrink_cfg.step_fraction * remaining)))
        if start >= values.size:
            return _fail(step + 1, history, "emptied the accepted set")
        current_delta = max(current_delta, float(values[start]))
    return _fail(shrink_cfg.max_steps, history, "rejected at every step")
