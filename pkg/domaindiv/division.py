"""
Assignment of test instances to the known, unknown and uncertain domains, and
generation of surrogate unseen prototypes for open-set recognition.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .boundary import ClassBoundary, bootstrap_threshold, shrink_boundary
from .config import BootstrapConfig, DivisionConfig, ShrinkConfig
from .data import Dataset, PrototypeTable
from .errors import BudgetExhaustedError, InsufficientSamplesError, UnfittedModelError
from .evt import EvtModel, statistics_matrix
from .scorer import ScorerModel, argmax_index, score_batch

logger = logging.getLogger(__name__)


class Domain(str, Enum):
    KNOWN = "known"
    UNKNOWN = "unknown"
    UNCERTAIN = "uncertain"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DomainDecision:
    """
    Domain of one test instance.

    ``candidate_class`` is c*, the argmax of the raw scores, and is always set;
    ``calibrated_class`` is the argmax of the m-statistics, kept for diagnostics.
    """
    instance_id: str
    domain: Domain
    candidate_class: str
    candidate_score: float
    statistics: Tuple[float, ...]
    calibrated_class: str


@dataclass(frozen=True, eq=False)
class GeneratedPrototypes:
    vectors: np.ndarray
    epsilon: float

    @property
    def class_ids(self) -> Tuple[str, ...]:
        return tuple(f"novel{i:02d}" for i in range(self.vectors.shape[0]))

    def as_table(self) -> PrototypeTable:
        return PrototypeTable(self.class_ids, self.vectors)


def initial_thresholds(classes: Sequence[str], train_statistics: Sequence[np.ndarray],
                       bootstrap_cfg: BootstrapConfig,
                       division_cfg: DivisionConfig) -> List[float]:
    """
    delta_c per class: the bootstrap estimate, or the fixed W-SVM threshold when disabled.
    """
    if not division_cfg.use_bootstrap:
        logger.info("Bootstrap disabled; fixed threshold %.4f for all classes",
                    division_cfg.fixed_delta)
        return [division_cfg.fixed_delta] * len(classes)
    seeds = np.random.SeedSequence(bootstrap_cfg.rng_seed).generate_state(len(classes))
    deltas = []
    for class_id, stats, seed in zip(classes, train_statistics, seeds):
        cfg = bootstrap_cfg.model_copy(update={"rng_seed": int(seed)})
        deltas.append(bootstrap_threshold(stats, cfg))
        logger.info("Class %s: bootstrap threshold %.6f from %d statistics", class_id,
                    deltas[-1], len(stats))
    return deltas


def fit_boundaries(classes: Sequence[str], train_statistics: Sequence[np.ndarray],
                   deltas: Sequence[float], instance_ids: Sequence[str], scores: np.ndarray,
                   statistics: np.ndarray, alpha: float, shrink_cfg: ShrinkConfig,
                   use_ks: bool = True) -> Dict[str, ClassBoundary]:
    """
    Build the boundary of every seen class on a scored test set.

    The test-side sample of class c holds the instances whose c* is c and whose m_c
    exceeds delta_c.
    """
    candidates = argmax_index(scores)
    boundaries = {}
    for c, class_id in enumerate(classes):
        rows = np.flatnonzero((candidates == c) & (statistics[:, c] > deltas[c]))
        accepted = [(instance_ids[i], float(statistics[i, c])) for i in rows]
        if use_ks:
            boundaries[class_id] = shrink_boundary(class_id, train_statistics[c], accepted,
                                                   alpha, shrink_cfg, deltas[c])
        else:
            boundaries[class_id] = ClassBoundary(
                class_id, float(deltas[c]), float(deltas[c]), True, False, 0,
                tuple(iid for iid, _ in accepted)
            )
    return boundaries


def _domain(instance_id: str, accepted_any: bool, boundary: ClassBoundary,
            use_ks: bool) -> Domain:
    if not accepted_any:
        return Domain.UNKNOWN
    if boundary.ks_applied and not boundary.ks_accepted:
        return Domain.UNCERTAIN
    if instance_id in boundary.uncertain_set:
        return Domain.UNCERTAIN
    if instance_id in boundary.final_accept_set:
        return Domain.KNOWN
    # accepted only by classes other than c*
    return Domain.UNCERTAIN if use_ks else Domain.KNOWN


def divide_scored(instance_ids: Sequence[str], scores: np.ndarray, statistics: np.ndarray,
                  classes: Sequence[str],
                  boundaries: Mapping[str, ClassBoundary],
                  use_ks: bool = True) -> List[DomainDecision]:
    """
    :func:`divide` on precomputed score and m-statistic matrices.
    """
    missing = [c for c in classes if c not in boundaries]
    if missing:
        raise UnfittedModelError(f"No boundary for classes {missing}.")
    deltas = np.array([boundaries[c].initial_delta for c in classes])
    accepted_any = np.any(statistics > deltas[None, :], axis=1)
    candidates = argmax_index(scores)
    calibrated = argmax_index(statistics)
    decisions = []
    for i, instance_id in enumerate(instance_ids):
        c = int(candidates[i])
        boundary = boundaries[classes[c]]
        domain = _domain(instance_id, bool(accepted_any[i]), boundary, use_ks)
        decisions.append(DomainDecision(
            instance_id, domain, classes[c],
            float(scores[i, c]), tuple(statistics[i].tolist()), classes[int(calibrated[i])]
        ))
    disagreements = int(np.sum(accepted_any & (candidates != calibrated)))
    if disagreements:
        logger.warning("%d accepted instances have c* different from the calibrated argmax",
                       disagreements)
    counts = domain_counts(decisions)
    logger.info("Division: %d known, %d unknown, %d uncertain", counts["known"],
                counts["unknown"], counts["uncertain"])
    return decisions


def divide(test: Dataset, scorer: ScorerModel, evt: EvtModel,
           boundaries: Mapping[str, ClassBoundary],
           use_ks: bool = True) -> List[DomainDecision]:
    """
    Assign every test instance to the known, unknown or uncertain domain.

    Instances accepted by no class are unknown. Otherwise the boundary of c* decides:
    its final accept set is known, its shrunk-off part (or a class that failed the
    K-S step) is uncertain. Instances accepted only by classes other than c* are
    uncertain when the K-S step ran and known when it was disabled.

    :param test: Test instances.
    :param scorer: Fitted scorers.
    :param evt: Fitted EVT tails, same classes as ``scorer``.
    :param boundaries: Boundary per seen class.
    :param use_ks: Whether the boundaries went through the K-S step.
    :return: One decision per test instance, in input order.
    """
    if tuple(evt.classes) != tuple(scorer.classes):
        raise UnfittedModelError("Scorer and EVT model cover different classes.")
    scores = score_batch(scorer, test.features)
    return divide_scored(test.instance_ids, scores, statistics_matrix(evt, scores),
                         scorer.classes, boundaries, use_ks)


def domain_counts(decisions: Sequence[DomainDecision]) -> Dict[str, int]:
    counts = {str(d): 0 for d in Domain}
    for decision in decisions:
        counts[str(decision.domain)] += 1
    return counts


def generate_osl_prototypes(seen: PrototypeTable, count: int, rng_seed: int,
                            max_attempts: int = 10000) -> GeneratedPrototypes:
    """
    Draw ``count`` random semantic vectors farther than epsilon from every seen prototype.

    epsilon is the smallest pairwise distance among seen prototypes; candidates are
    uniform in the seen bounding box inflated by 2 * epsilon on every side.

    :param seen: Seen-class prototypes.
    :param count: Number of vectors to generate.
    :param rng_seed: Seed of the sampler.
    :param max_attempts: Maximum number of candidate draws.
    """
    if len(seen) < 2:
        raise InsufficientSamplesError("Need at least two seen prototypes.")
    epsilon = float(pdist(seen.vectors).min())
    if count == 0:
        return GeneratedPrototypes(np.zeros((0, seen.width)), epsilon)
    low = seen.vectors.min(axis=0) - 2.0 * epsilon
    high = seen.vectors.max(axis=0) + 2.0 * epsilon
    rng = np.random.default_rng(rng_seed)
    accepted = []
    for attempt in range(max_attempts):
        candidate = rng.uniform(low, high)
        if cdist(candidate[None, :], seen.vectors).min() > epsilon:
            accepted.append(candidate)
            if len(accepted) == count:
                logger.info("Generated %d OSL prototypes (epsilon=%.4f) in %d draws", count,
                            epsilon, attempt + 1)
                return GeneratedPrototypes(np.array(accepted), epsilon)
    raise BudgetExhaustedError(f"Only {len(accepted)} of {count} prototypes found in "
                               f"{max_attempts} draws.")
