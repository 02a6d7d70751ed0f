"""
One-vs-rest confidence scorers ``z^c = f_c(x)``, one per seen class.

The fitted model keeps only the numbers needed to evaluate the decision function
(support vectors or weight vector, dual coefficients, intercept, kernel width),
so it can be persisted and reloaded without pickling estimator objects.
"""
import logging
import warnings
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from sklearn.exceptions import ConvergenceWarning
from sklearn.metrics.pairwise import linear_kernel, rbf_kernel
from sklearn.model_selection import GridSearchCV, StratifiedKFold
from sklearn.svm import SVC, LinearSVC

from .config import ScorerConfig
from .data import Dataset
from .errors import DegenerateClassError, DimensionMismatchError, NonConvergenceError

logger = logging.getLogger(__name__)

_LINEAR_MAX_ITER = 1000


@dataclass(frozen=True, eq=False)
class ClassScorer:
    """
    Decision function ``f(x) = sum_i dual_coef[i] * K(support[i], x) + intercept``.

    In linear mode ``support`` holds the single weight vector and ``dual_coef`` is ``[1]``.
    """
    support: np.ndarray
    dual_coef: np.ndarray
    intercept: float
    gamma: float
    C: float


@dataclass(frozen=True, eq=False)
class ScorerModel:
    classes: Tuple[str, ...]
    kernel: str
    n_dims: int
    scorers: Tuple[ClassScorer, ...]
    cv_folds: int = 0
    seed: int = 0

    def _kernel(self, X: np.ndarray, scorer: ClassScorer) -> np.ndarray:
        if self.kernel == "linear":
            return linear_kernel(X, scorer.support)
        return rbf_kernel(X, scorer.support, gamma=scorer.gamma)


def gamma_scale(X: np.ndarray) -> float:
    variance = float(np.var(X))
    return 1.0 / (X.shape[1] * variance) if variance > 0 else 1.0


def _estimator(cfg: ScorerConfig, C: float, gamma: float, seed: int):
    if cfg.kernel == "linear":
        max_iter = cfg.max_iter if cfg.max_iter > 0 else _LINEAR_MAX_ITER
        return LinearSVC(C=C, class_weight="balanced", dual=False, max_iter=max_iter,
                         random_state=seed)
    return SVC(kernel="rbf", C=C, gamma=gamma, class_weight="balanced",
               max_iter=cfg.max_iter)


def _fit_binary(X: np.ndarray, positive: np.ndarray, cfg: ScorerConfig, scale: float,
                seed: int, C: Optional[float] = None,
                gamma: Optional[float] = None) -> ClassScorer:
    y = positive.astype(np.int64)
    search_grid = cfg.cross_validate and C is None and gamma is None
    C = cfg.C if C is None else C
    gamma = (cfg.gamma or scale) if gamma is None else gamma
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        if search_grid:
            grid = {"C": list(cfg.C_grid)}
            if cfg.kernel == "rbf":
                grid["gamma"] = [f * scale for f in cfg.gamma_factors]
            folds = StratifiedKFold(cfg.cv_folds, shuffle=True, random_state=seed)
            search = GridSearchCV(_estimator(cfg, C, gamma, seed), grid, cv=folds)
            search.fit(X, y)
            estimator = search.best_estimator_
            C = float(search.best_params_["C"])
            gamma = float(search.best_params_.get("gamma", gamma))
        else:
            estimator = _estimator(cfg, C, gamma, seed)
            estimator.fit(X, y)
    if any(issubclass(w.category, ConvergenceWarning) for w in caught):
        n_iter = int(np.max(np.atleast_1d(getattr(estimator, "n_iter_", cfg.max_iter))))
        raise NonConvergenceError("Scorer training did not converge", n_iter)
    if cfg.kernel == "linear":
        support = np.array(estimator.coef_[0], dtype=np.float64)[None, :]
        dual_coef = np.ones(1)
    else:
        support = np.array(estimator.support_vectors_, dtype=np.float64)
        dual_coef = np.array(estimator.dual_coef_[0], dtype=np.float64)
    return ClassScorer(support, dual_coef, float(estimator.intercept_[0]), float(gamma),
                       float(C))


def _check_training(train: Dataset, n_seen: int) -> None:
    if n_seen < 2:
        raise DegenerateClassError("At least two seen classes are needed to train scorers.")
    counts = np.bincount(train.labels, minlength=n_seen)
    if np.any(train.labels >= n_seen):
        raise DegenerateClassError("Scorer training data contains unseen-class instances.")
    for c in range(n_seen):
        if counts[c] < 2:
            raise DegenerateClassError(
                f"Class '{train.classes[c]}' has {counts[c]} training instances, need 2.")


def train_scorers(train: Dataset, seen: Sequence[str], cfg: ScorerConfig, seed: int = 0,
                  n_jobs: int = 1) -> ScorerModel:
    """
    Train one binary scorer per seen class; negatives are the other seen classes.

    :param train: Training instances, labelled with seen classes only.
    :param seen: Seen class ids, in index order.
    :param cfg: Scorer configuration.
    :param seed: Seed for cross-validation folds and liblinear.
    :param n_jobs: Number of parallel per-class fits.
    :return: The fitted scorer model.
    """
    n_seen = len(seen)
    _check_training(train, n_seen)
    X = train.features
    scale = gamma_scale(X)
    scorers = Parallel(n_jobs=n_jobs)(
        delayed(_fit_binary)(X, train.labels == c, cfg, scale, seed) for c in range(n_seen)
    )
    model = ScorerModel(tuple(seen), cfg.kernel, X.shape[1], tuple(scorers),
                        cfg.cv_folds if cfg.cross_validate else 0, seed)
    for class_id, scorer in zip(seen, scorers):
        logger.debug("Scorer %s: %d support rows, C=%g, gamma=%g", class_id,
                     scorer.support.shape[0], scorer.C, scorer.gamma)
    logger.info("Trained %d %s scorers on %d instances", n_seen, cfg.kernel, train.n_instances)
    return model


def calibration_scores(train: Dataset, model: ScorerModel, cfg: ScorerConfig,
                       seed: int = 0, n_jobs: int = 1) -> np.ndarray:
    """
    Out-of-fold decision values of the training instances.

    Each fold refits every class scorer with the hyperparameters selected for ``model``
    and scores the held-out instances, so calibration never sees resubstituted scores.

    :return: Matrix of shape ``(n_train, n_seen)``.
    """
    n_seen = len(model.classes)
    counts = np.bincount(train.labels, minlength=n_seen)
    n_folds = max(2, min(cfg.calibration_folds, int(counts.min())))
    folds = StratifiedKFold(n_folds, shuffle=True, random_state=seed)
    X, labels = train.features, train.labels
    scores = np.empty((train.n_instances, n_seen))
    scale = gamma_scale(X)
    for fit_idx, held_idx in folds.split(X, labels):
        fold_model = ScorerModel(model.classes, model.kernel, model.n_dims, tuple(
            Parallel(n_jobs=n_jobs)(
                delayed(_fit_binary)(X[fit_idx], labels[fit_idx] == c, cfg, scale, seed,
                                     C=s.C, gamma=s.gamma)
                for c, s in enumerate(model.scorers)
            )
        ))
        scores[held_idx] = score_batch(fold_model, X[held_idx])
    return scores


def score_batch(model: ScorerModel, X: np.ndarray) -> np.ndarray:
    """
    Score a batch of instances against every seen class.

    :return: Matrix of shape ``(n_instances, n_seen)``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_dims:
        raise DimensionMismatchError(f"Expected {model.n_dims} features, got {X.shape[1]}.")
    columns = [model._kernel(X, s) @ s.dual_coef + s.intercept for s in model.scorers]
    return np.column_stack(columns)


def score(model: ScorerModel, x: np.ndarray) -> Dict[str, float]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatchError("score() takes a single feature vector.")
    row = score_batch(model, x[None, :])[0]
    return dict(zip(model.classes, row.tolist()))


def argmax_index(scores: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest class index."""
    return np.argmax(scores, axis=-1)


def argmax_score(model: ScorerModel, x: np.ndarray) -> Tuple[str, float]:
    """
    The maximizing seen class and its score. Ties go to the lowest class index.
    """
    row = score_batch(model, np.asarray(x, dtype=np.float64)[None, :])[0]
    best = int(argmax_index(row))
    return model.classes[best], float(row[best])
