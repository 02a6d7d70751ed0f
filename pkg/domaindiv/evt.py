"""
Extreme-value calibration of classifier scores.

Positive scores of a class are modelled by a Weibull on their lower tail (G);
scores of the other classes by a reverse Weibull on their upper tail (rG). The
negative tail is fitted on negated scores, so ``rG = 1 - G`` holds by
construction and ``P_rG(not E2 | z) = reverse_weibull_cdf(-z, neg)``.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateSampleError, InsufficientSamplesError, NonConvergenceError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

MIN_TAIL_SAMPLES = 10
MAX_ITERATIONS = 200
GRADIENT_TOLERANCE = 1e-8
LOCATION_OFFSET = 1e-6


@dataclass(frozen=True)
class WeibullParams:
    scale: float
    location: float
    shape: float

    def __post_init__(self):
        if not (self.scale > 0 and self.shape > 0 and math.isfinite(self.location)):
            raise ValueError(f"Invalid Weibull parameters {self}.")


@dataclass(frozen=True)
class ClassEvt:
    positive: WeibullParams
    negative: WeibullParams


@dataclass(frozen=True)
class EvtModel:
    classes: Tuple[str, ...]
    params: Tuple[ClassEvt, ...]
    tail_fraction: float

    def for_class(self, class_id: str) -> ClassEvt:
        return self.params[self.classes.index(class_id)]


def weibull_cdf(z: ArrayLike, params: WeibullParams) -> np.ndarray:
    """
    ``G(z) = 1 - exp(-((z - nu) / lambda)^kappa)`` for ``z > nu``, 0 otherwise.
    """
    z = np.asarray(z, dtype=np.float64)
    shifted = np.maximum(z - params.location, 0.0) / params.scale
    return np.where(z > params.location, -np.expm1(-shifted ** params.shape), 0.0)


def reverse_weibull_cdf(z: ArrayLike, params: WeibullParams) -> np.ndarray:
    """
    ``rG = 1 - G = exp(-((z - nu) / lambda)^kappa)``, evaluated directly so that deep-tail
    values stay positive instead of cancelling to 0.
    """
    z = np.asarray(z, dtype=np.float64)
    shifted = np.maximum(z - params.location, 0.0) / params.scale
    return np.where(z > params.location, np.exp(-shifted ** params.shape), 1.0)


def select_tail(sample: np.ndarray, tail_fraction: float) -> np.ndarray:
    """Lowest ``tail_fraction`` of the sample, ascending."""
    ordered = np.sort(np.asarray(sample, dtype=np.float64))
    size = max(1, int(math.ceil(tail_fraction * ordered.size)))
    return ordered[:size]


def _profile(kappa: float, log_x: np.ndarray) -> Tuple[float, float]:
    """
    Profile score equation of the 2-parameter Weibull and its derivative in kappa.
    """
    weights = np.exp(kappa * log_x - logsumexp(kappa * log_x))
    weighted_mean = float(weights @ log_x)
    weighted_var = float(weights @ (log_x - weighted_mean) ** 2)
    value = weighted_mean - 1.0 / kappa - float(np.mean(log_x))
    return value, weighted_var + 1.0 / kappa ** 2


def _solve_shape(log_x: np.ndarray) -> float:
    # safeguarded Newton inside a sign-change bracket; the profile equation is increasing
    lo, hi = 0.5, 2.0
    while _profile(lo, log_x)[0] > 0:
        lo /= 2.0
    while _profile(hi, log_x)[0] < 0:
        hi *= 2.0
    spread = float(np.std(log_x))
    kappa = min(max(1.2 / spread if spread > 0 else 1.0, lo), hi)
    for iteration in range(1, MAX_ITERATIONS + 1):
        value, slope = _profile(kappa, log_x)
        logger.debug("Weibull shape iteration %d: kappa=%.12g, score=%.3e", iteration, kappa,
                     value)
        if abs(value) < GRADIENT_TOLERANCE:
            return kappa
        if value < 0:
            lo = kappa
        else:
            hi = kappa
        step = kappa - value / slope
        kappa = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo < 1e-15 * hi:
            return kappa
    raise NonConvergenceError("Weibull shape MLE did not converge", MAX_ITERATIONS, kappa)


def fit_weibull(sample: ArrayLike, tail_fraction: float = 1.0,
                location: Optional[float] = None) -> WeibullParams:
    """
    Fit a Weibull to the lower tail of a sample by maximum likelihood.

    The location is fixed just below the tail minimum (``min - 1e-6 * range``) unless
    given; scale and shape then come from the profile likelihood.

    :param sample: Observed values.
    :param tail_fraction: Fraction of the lowest values used for fitting.
    :param location: Optional fixed location.
    :return: The fitted parameters.
    """
    values = np.asarray(sample, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise DegenerateSampleError("Scores must be finite.")
    tail = select_tail(values, tail_fraction)
    if tail.size < MIN_TAIL_SAMPLES:
        raise InsufficientSamplesError(
            f"{tail.size} samples in the tail, need at least {MIN_TAIL_SAMPLES}.")
    spread = float(tail[-1] - tail[0])
    if spread <= 0:
        raise DegenerateSampleError("Tail sample has zero variance.")
    if location is None:
        location = float(tail[0] - LOCATION_OFFSET * spread)
    elif location >= tail[0]:
        raise DegenerateSampleError("Fixed location must lie below the tail minimum.")
    log_x = np.log(tail - location)
    shape = _solve_shape(log_x)
    scale = math.exp((float(logsumexp(shape * log_x)) - math.log(log_x.size)) / shape)
    return WeibullParams(scale, location, shape)


def fit_evt(scores_pos: ArrayLike, scores_neg: ArrayLike,
            tail_fraction: float = 0.5) -> ClassEvt:
    """
    Fit the positive (Weibull) and negative (reverse Weibull) tails of one class.

    :param scores_pos: Scores of instances of the class.
    :param scores_neg: Scores of instances of the other seen classes.
    :param tail_fraction: Fraction of each sample forming its tail.
    """
    positive = fit_weibull(scores_pos, tail_fraction)
    negative = fit_weibull(-np.asarray(scores_neg, dtype=np.float64), tail_fraction)
    return ClassEvt(positive, negative)


def fit_evt_model(classes: Sequence[str], scores: np.ndarray, labels: np.ndarray,
                  tail_fraction: float = 0.5) -> EvtModel:
    """
    Fit every seen class from a ``(n_instances, n_seen)`` score matrix.
    """
    params = []
    for c, class_id in enumerate(classes):
        member = labels == c
        fitted = fit_evt(scores[member, c], scores[~member, c], tail_fraction)
        logger.debug("EVT %s: G%s rG%s", class_id, fitted.positive, fitted.negative)
        params.append(fitted)
    logger.info("Fitted EVT tails for %d classes (tail fraction %.2f)", len(classes),
                tail_fraction)
    return EvtModel(tuple(classes), tuple(params), tail_fraction)


def wsvm_statistic(z: ArrayLike, pos: WeibullParams, neg: WeibullParams) -> np.ndarray:
    """
    W-SVM statistic ``m = P_rG(not E2 | z) * P_G(E1 | z)``.
    """
    z = np.asarray(z, dtype=np.float64)
    return reverse_weibull_cdf(-z, neg) * weibull_cdf(z, pos)


def statistics_matrix(evt: EvtModel, scores: np.ndarray) -> np.ndarray:
    """
    m-statistics for a ``(n_instances, n_seen)`` score matrix.
    """
    columns = [wsvm_statistic(scores[:, c], p.positive, p.negative)
               for c, p in enumerate(evt.params)]
    return np.column_stack(columns) if columns else np.zeros((scores.shape[0], 0))
