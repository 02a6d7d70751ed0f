"""
Staged orchestration of a run: fitting on the training split and applying the fitted
models to a test set.

Every stage runs inside :func:`stage`, which tags any propagated
:class:`~domaindiv.errors.DomainDivisionError` with the stage name.
"""
import dataclasses
import logging
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Dict, Iterator, Mapping, Optional, Tuple

import numpy as np

from .boundary import ClassBoundary
from .config import DivisionConfig, PipelineConfig
from .data import ClassSplit, Dataset, PrototypeTable, load_dataset, load_prototypes
from .division import Domain, DomainDecision, GeneratedPrototypes, divide_scored, \
    domain_counts, fit_boundaries, generate_osl_prototypes, initial_thresholds
from .embedding import NOVEL, EmbeddingModel, PrototypeRecognizer, collapse_novel, \
    compute_feature_prototypes, fit_embedding, osl_table
from .errors import DataError, DomainDivisionError, EmptySampleError
from .evt import EvtModel, fit_evt_model, statistics_matrix
from .metrics import evaluate_gzsl, evaluate_osl
from .scorer import ScorerModel, calibration_scores, score_batch, train_scorers
from .synthetic import generate_synthetic

logger = logging.getLogger(__name__)

STAGES = ("data", "scorer", "evt", "bootstrap", "ks", "divide", "recognize", "evaluate",
          "artifacts")
_SEED_STREAMS = ("scorer", "bootstrap", "osl")


@contextmanager
def stage(name: str) -> Iterator[None]:
    logger.debug("Entering stage '%s'", name)
    try:
        yield
    except DomainDivisionError as e:
        if e.stage is None:
            e.stage = name
        raise


def derive_seeds(seed: int) -> Dict[str, int]:
    """Independent child seeds of one run seed."""
    states = np.random.SeedSequence(seed).generate_state(len(_SEED_STREAMS))
    return {name: int(state) for name, state in zip(_SEED_STREAMS, states)}


@dataclass(frozen=True, eq=False)
class FittedPipeline:
    """
    Everything fitted on the training split; the content of a model file.
    """
    config: PipelineConfig
    seen: Tuple[str, ...]
    unseen: Tuple[str, ...]
    scorer: ScorerModel
    evt: EvtModel
    bootstrap_deltas: Tuple[float, ...]
    train_statistics: Tuple[np.ndarray, ...]
    embedding: EmbeddingModel
    prototypes: PrototypeTable
    boundaries: Optional[Mapping[str, ClassBoundary]] = None

    @property
    def classes(self) -> Tuple[str, ...]:
        return self.seen + self.unseen

    def with_boundaries(self, boundaries: Mapping[str, ClassBoundary]) -> 'FittedPipeline':
        return dataclasses.replace(self, boundaries=dict(boundaries))


@dataclass(frozen=True, eq=False)
class PipelineOutcome:
    task: str
    division: DivisionConfig
    decisions: Tuple[DomainDecision, ...]
    predictions: Dict[str, str]
    boundaries: Dict[str, ClassBoundary]
    thresholds: Tuple[float, ...]
    generated: Optional[GeneratedPrototypes] = None


def load_inputs(cfg: PipelineConfig) -> Tuple[Dataset, ClassSplit, PrototypeTable]:
    """
    Read the dataset, split and prototypes named by ``cfg.data``, or generate them from
    ``cfg.synthetic``.
    """
    with stage("data"):
        if cfg.synthetic is not None:
            return generate_synthetic(cfg.synthetic)
        dataset, split = load_dataset(cfg.data.features, cfg.data.labels, cfg.data.split)
        prototypes = load_prototypes(cfg.data.prototypes)
        return dataset, split, prototypes


def fit_pipeline(dataset: Dataset, split: ClassSplit, prototypes: PrototypeTable,
                 cfg: PipelineConfig) -> FittedPipeline:
    """
    Train scorers, fit EVT tails, bootstrap thresholds and the embedding.

    Calibration (EVT, bootstrap and the training side of the K-S test) uses out-of-fold
    scores of the training instances.

    :param dataset: All instances; ``classes`` must list seen classes first.
    :param split: Class split with train/test indices.
    :param prototypes: Semantic prototypes covering every class of the split.
    :param cfg: Run configuration.
    """
    seeds = derive_seeds(cfg.seed)
    seen = split.seen
    with stage("data"):
        if not split.train_idx:
            raise EmptySampleError("The split has no training instances.")
        if dataset.classes[:len(seen)] != seen:
            raise DataError("Dataset class table must start with the seen classes.")
        semantic = prototypes.subset(split.classes)
        if cfg.embedding.normalize_prototypes:
            semantic = semantic.normalized()
        train = dataset.subset(split.train_idx)
    with stage("scorer"):
        scorer = train_scorers(train, seen, cfg.scorer, seeds["scorer"], cfg.n_jobs)
        calibration = calibration_scores(train, scorer, cfg.scorer, seeds["scorer"],
                                         cfg.n_jobs)
    with stage("evt"):
        evt = fit_evt_model(seen, calibration, train.labels, cfg.evt.tail_fraction)
        statistics = statistics_matrix(evt, calibration)
        train_statistics = tuple(statistics[train.labels == c, c] for c in range(len(seen)))
    with stage("bootstrap"):
        bootstrap_cfg = cfg.bootstrap.model_copy(update={"rng_seed": seeds["bootstrap"]})
        deltas = initial_thresholds(seen, train_statistics, bootstrap_cfg,
                                    cfg.division.model_copy(update={"use_bootstrap": True}))
    with stage("recognize"):
        embedding = fit_embedding(compute_feature_prototypes(train, seen), semantic,
                                  cfg.embedding.ridge)
    return FittedPipeline(cfg, seen, split.unseen, scorer, evt, tuple(deltas),
                          train_statistics, embedding, semantic)


def _osl_labels(fitted: FittedPipeline, decisions, projected, seed: int):
    cfg = fitted.config.osl
    count = cfg.prototype_count if cfg.prototype_count is not None else len(fitted.unseen)
    seen_table = fitted.prototypes.subset(fitted.seen)
    generated = generate_osl_prototypes(seen_table, count, seed, cfg.max_attempts)
    recognizer = PrototypeRecognizer(fitted.scorer, fitted.embedding,
                                     osl_table(seen_table, generated), generated.class_ids)
    labels = []
    for decision, point in zip(decisions, projected):
        if decision.domain is Domain.UNKNOWN:
            labels.append(NOVEL)
        else:
            labels.append(collapse_novel(recognizer.label_point(decision, point), fitted.seen))
    return labels, generated


@dataclass(frozen=True, eq=False)
class Division:
    decisions: Tuple[DomainDecision, ...]
    boundaries: Dict[str, ClassBoundary]
    thresholds: Tuple[float, ...]


def divide_pipeline(fitted: FittedPipeline, test: Dataset,
                    division: Optional[DivisionConfig] = None) -> Division:
    """
    Threshold, shrink and divide a test set with fitted models.

    :param fitted: Fitted models.
    :param test: Test instances.
    :param division: Ablation switches; defaults to the fitted configuration.
    """
    cfg = fitted.config
    division = division or cfg.division
    seen = fitted.seen
    with stage("divide"):
        scores = score_batch(fitted.scorer, test.features)
        statistics = statistics_matrix(fitted.evt, scores)
    with stage("bootstrap"):
        deltas = list(fitted.bootstrap_deltas) if division.use_bootstrap \
            else [division.fixed_delta] * len(seen)
    with stage("ks"):
        boundaries = fit_boundaries(seen, fitted.train_statistics, deltas, test.instance_ids,
                                    scores, statistics, cfg.alpha, cfg.shrink,
                                    division.use_ks)
    with stage("divide"):
        decisions = divide_scored(test.instance_ids, scores, statistics, seen, boundaries,
                                  division.use_ks)
    return Division(tuple(decisions), boundaries, tuple(float(d) for d in deltas))


def apply_pipeline(fitted: FittedPipeline, test: Dataset,
                   division: Optional[DivisionConfig] = None,
                   task: Optional[str] = None) -> PipelineOutcome:
    """
    Divide a test set into domains and recognize every instance.

    :param fitted: Fitted models.
    :param test: Test instances.
    :param division: Ablation switches; defaults to the fitted configuration.
    :param task: ``gzsl`` or ``osl``; defaults to the fitted configuration.
    """
    cfg = fitted.config
    division = division or cfg.division
    task = task or cfg.task
    divided = divide_pipeline(fitted, test, division)
    decisions = divided.decisions
    with stage("recognize"):
        projected = fitted.embedding.project(test.features)
        generated = None
        if task == "osl":
            labels, generated = _osl_labels(fitted, decisions, projected,
                                            derive_seeds(cfg.seed)["osl"])
        else:
            recognizer = PrototypeRecognizer(fitted.scorer, fitted.embedding,
                                             fitted.prototypes, fitted.unseen)
            labels = [recognizer.label_point(d, p) for d, p in zip(decisions, projected)]
    predictions = dict(zip(test.instance_ids, labels))
    return PipelineOutcome(task, division, decisions, predictions, divided.boundaries,
                           divided.thresholds, generated)


def evaluate_outcome(fitted: FittedPipeline, test: Dataset, outcome: PipelineOutcome,
                     per_class: Optional[bool] = None):
    """
    Score an outcome against the ground-truth labels of ``test``.

    The report echoes the configuration actually applied (task and ablation switches).
    """
    per_class = fitted.config.per_class if per_class is None else per_class
    applied = fitted.config.model_copy(update={"task": outcome.task,
                                               "division": outcome.division,
                                               "per_class": per_class})
    with stage("evaluate"):
        ground_truth = dict(zip(test.instance_ids, test.label_names()))
        extra = dict(domain_counts=domain_counts(outcome.decisions), config=applied.to_dict(),
                     seed=applied.seed, classes={c: i for i, c in enumerate(fitted.classes)})
        split = ClassSplit(fitted.seen, fitted.unseen)
        evaluate = evaluate_osl if outcome.task == "osl" else evaluate_gzsl
        return evaluate(outcome.predictions, ground_truth, split, per_class, **extra)


def held_out(dataset: Dataset, split: ClassSplit) -> Dataset:
    if not split.test_idx:
        raise EmptySampleError("The split has no test instances.")
    return dataset.subset(split.test_idx)
