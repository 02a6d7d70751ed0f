"""
Linear feature-to-prototype embedding ``g(x) = w^T x`` and per-domain recognition.

Known-domain instances keep the supervised prediction ``argmax_c f_c(x)``. Unknown
instances go to the nearest unseen prototype, uncertain ones to the nearest among
``{c*}`` and the unseen prototypes.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .data import Dataset, PrototypeTable
from .division import Domain, DomainDecision, GeneratedPrototypes
from .errors import DimensionMismatchError, EmptyClassError, MissingPrototypeError, \
    NumericalError, SingularSystemError
from .scorer import ScorerModel, argmax_score

logger = logging.getLogger(__name__)

NOVEL = "novel"
STATIONARITY_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class ClassPrototypeStats:
    """Feature prototype (mean training vector) per seen class."""
    classes: Tuple[str, ...]
    vectors: np.ndarray
    counts: Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class EmbeddingModel:
    weights: np.ndarray
    ridge: float

    def __post_init__(self):
        if self.weights.ndim != 2 or not np.all(np.isfinite(self.weights)):
            raise NumericalError("Embedding weights must be a finite matrix.")

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.weights.shape[1]

    def project(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise DimensionMismatchError(f"Expected {self.n_features} features, "
                                         f"got {X.shape[1]}.")
        return X @ self.weights


def compute_feature_prototypes(train: Dataset, seen: Sequence[str]) -> ClassPrototypeStats:
    """
    Mean feature vector of the training instances of every seen class.

    :param train: Training instances; ``labels`` index into ``train.classes``.
    :param seen: Seen class ids, in the order of the returned rows.
    """
    index = {c: i for i, c in enumerate(train.classes)}
    rows, counts = [], []
    for class_id in seen:
        member = train.labels == index[class_id]
        if not np.any(member):
            raise EmptyClassError(f"Class '{class_id}' has no training instances.")
        rows.append(train.features[member].mean(axis=0))
        counts.append(int(member.sum()))
    return ClassPrototypeStats(tuple(seen), np.array(rows), tuple(counts))


def embedding_objective(weights: np.ndarray, features: np.ndarray, targets: np.ndarray,
                        ridge: float) -> float:
    """``||X w - Y||_F^2 + ridge * ||w||_F^2``."""
    residual = features @ weights - targets
    return float(np.sum(residual ** 2) + ridge * np.sum(weights ** 2))


def embedding_gradient(weights: np.ndarray, features: np.ndarray, targets: np.ndarray,
                       ridge: float) -> np.ndarray:
    return 2.0 * features.T @ (features @ weights - targets) + 2.0 * ridge * weights


def fit_embedding(prototypes: ClassPrototypeStats, semantic: PrototypeTable,
                  ridge: float = 1e-3) -> EmbeddingModel:
    """
    Ridge regression from feature prototypes to semantic prototypes.

    Solves ``(X^T X + ridge * I) w = X^T Y`` over the seen classes and verifies that the
    gradient of :func:`embedding_objective` vanishes at the solution.

    :param prototypes: Feature prototypes of the seen classes.
    :param semantic: Semantic prototypes; must cover every seen class.
    :param ridge: Regularization strength, ``>= 0``.
    :return: The fitted embedding.
    """
    if ridge < 0:
        raise ValueError("ridge must be non-negative.")
    X = prototypes.vectors
    Y = semantic.matrix(prototypes.classes)
    n_dims = X.shape[1]
    if ridge == 0:
        rank = int(np.linalg.matrix_rank(X))
        if rank < n_dims:
            raise SingularSystemError(f"Prototype Gram matrix has rank {rank} < {n_dims}; "
                                      f"use ridge > 0.")
    gram = X.T @ X + ridge * np.eye(n_dims)
    try:
        weights = scipy.linalg.solve(gram, X.T @ Y)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise SingularSystemError(f"Normal equations are singular: {e}") from e
    gradient = embedding_gradient(weights, X, Y, ridge)
    reference = max(1.0, float(np.linalg.norm(X.T @ Y)))
    if np.linalg.norm(gradient) > STATIONARITY_TOLERANCE * reference:
        raise NumericalError(f"Embedding solve is not stationary (gradient norm "
                             f"{np.linalg.norm(gradient):.3e}).")
    logger.info("Fitted %dx%d embedding on %d class prototypes (ridge=%g)", n_dims,
                Y.shape[1], X.shape[0], ridge)
    return EmbeddingModel(weights, float(ridge))


def nearest_prototype(point: np.ndarray, table: PrototypeTable,
                      candidates: Sequence[str]) -> str:
    """Candidate with the smallest Euclidean distance; ties go to the earliest candidate."""
    if not candidates:
        raise MissingPrototypeError("Empty candidate pool.")
    distances = cdist(np.asarray(point, dtype=np.float64)[None, :], table.matrix(candidates))
    return candidates[int(np.argmin(distances[0]))]


class Recognizer(Protocol):
    """Labels one instance given its domain decision."""

    def recognize(self, decision: DomainDecision, x: np.ndarray) -> str:
        ...


class PrototypeRecognizer:
    """
    Nearest-prototype recognizer in the embedded semantic space.

    :param scorer: Seen-class scorers (known-domain prediction).
    :param embedding: Feature-to-prototype embedding.
    :param semantic: Prototypes of the seen classes and of the candidate pool.
    :param pool: Candidate classes for unknown instances; defaults to every class of
        ``semantic`` that the scorer does not know.
    """

    def __init__(self, scorer: ScorerModel, embedding: EmbeddingModel,
                 semantic: PrototypeTable, pool: Optional[Sequence[str]] = None):
        if embedding.n_attributes != semantic.width:
            raise DimensionMismatchError(f"Embedding maps to {embedding.n_attributes} "
                                         f"attributes, prototypes have {semantic.width}.")
        self.scorer = scorer
        self.embedding = embedding
        self.semantic = semantic
        seen = set(scorer.classes)
        self.pool = tuple(pool) if pool is not None \
            else tuple(c for c in semantic.classes if c not in seen)
        for class_id in self.pool:
            semantic.vector(class_id)

    def label_point(self, decision: DomainDecision, point: np.ndarray) -> str:
        """Label an instance from its embedded point ``g(x)``."""
        if decision.domain is Domain.KNOWN:
            return decision.candidate_class
        if decision.domain is Domain.UNKNOWN:
            return nearest_prototype(point, self.semantic, self.pool)
        return nearest_prototype(point, self.semantic, (decision.candidate_class,) + self.pool)

    def recognize(self, decision: DomainDecision, x: np.ndarray) -> str:
        if decision.domain is Domain.KNOWN:
            return argmax_score(self.scorer, x)[0]
        return self.label_point(decision, self.embedding.project(x)[0])

    def recognize_batch(self, decisions: Sequence[DomainDecision],
                        X: np.ndarray) -> List[str]:
        if len(decisions) != np.atleast_2d(X).shape[0]:
            raise DimensionMismatchError("One decision per instance is required.")
        projected = self.embedding.project(X)
        return [self.label_point(d, p) for d, p in zip(decisions, projected)]


def recognize(decision: DomainDecision, x: np.ndarray, scorer: ScorerModel,
              embedding: EmbeddingModel, semantic: PrototypeTable) -> str:
    """
    Label one instance: seen-class argmax when known, nearest unseen prototype when
    unknown, nearest among ``c*`` and the unseen prototypes when uncertain.

    Unseen candidates are the classes of ``semantic`` that ``scorer`` was not trained on.
    """
    return PrototypeRecognizer(scorer, embedding, semantic).recognize(decision, x)


def osl_table(seen: PrototypeTable, generated: GeneratedPrototypes) -> PrototypeTable:
    """Seen prototypes followed by the generated ones."""
    vectors = np.vstack([seen.vectors, generated.vectors]) if len(generated.vectors) \
        else seen.vectors
    return PrototypeTable(seen.classes + generated.class_ids, vectors)


def collapse_novel(label: str, seen: Sequence[str]) -> str:
    return label if label in seen else NOVEL


def recognize_osl(decision: DomainDecision, x: np.ndarray, scorer: ScorerModel,
                  embedding: EmbeddingModel, seen: PrototypeTable,
                  generated: GeneratedPrototypes) -> str:
    """
    Open-set label: a seen class id, or ``novel`` for unknown instances and for matches
    to a generated prototype.
    """
    if decision.domain is Domain.UNKNOWN:
        return NOVEL
    recognizer = PrototypeRecognizer(scorer, embedding, osl_table(seen, generated),
                                     generated.class_ids)
    return collapse_novel(recognizer.recognize(decision, x), scorer.classes)
