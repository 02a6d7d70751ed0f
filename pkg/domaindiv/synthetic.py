"""
Synthetic Gaussian-cluster benchmark with informative class attributes.

Cluster centers are points of the integer lattice of a ``latent_dim``-dimensional
subspace of the feature space, scaled by :func:`center_spacing`. Seen classes take the
lattice points closest to the origin and unseen classes the next shell, so every
unseen class lies outside the seen core. The attribute map (an isometric projection
of the centers plus noise) is learnable from seen classes alone.
"""
import logging
import math
from typing import List, Tuple

import numpy as np

from .config import SyntheticConfig
from .data import ClassSplit, Dataset, PrototypeTable

logger = logging.getLogger(__name__)


def _orthonormal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q[:, :cols]


def _lattice_ball(dims: int, radius2: int) -> List[Tuple[int, ...]]:
    """Integer points with squared norm at most ``radius2``."""
    if dims == 0:
        return [()]
    reach = math.isqrt(radius2)
    return [(v,) + rest for v in range(-reach, reach + 1)
            for rest in _lattice_ball(dims - 1, radius2 - v * v)]


def lattice_centers(rng: np.random.Generator, count: int, dims: int) -> np.ndarray:
    """
    The ``count`` integer lattice points closest to the origin, nearest first.

    Points at equal distance are ordered at random. Distinct points are at least 1
    apart, and two of them are exactly 1 apart whenever ``count >= 2``.
    """
    radius2 = 0
    points = _lattice_ball(dims, radius2)
    while len(points) < count:
        radius2 += 1
        points = _lattice_ball(dims, radius2)
    points = np.array(points, dtype=np.float64).reshape(len(points), dims)
    order = np.lexsort((rng.random(len(points)), np.sum(points ** 2, axis=1)))
    return points[order[:count]]


def latent_dim_for(cfg: SyntheticConfig) -> int:
    limit = min(cfg.dim_feature, cfg.dim_attr)
    if cfg.latent_dim is not None:
        return min(cfg.latent_dim, limit)
    return min(limit, max(1, cfg.n_seen // 2))


def center_spacing(cfg: SyntheticConfig) -> float:
    """Minimum distance between two cluster centers."""
    return cfg.separation / (1.0 + cfg.overlap)


def generate_synthetic(cfg: SyntheticConfig) -> Tuple[Dataset, ClassSplit, PrototypeTable]:
    """
    Generate a dataset with one Gaussian cluster per class.

    The random stream does not depend on ``overlap``: changing it only rescales the
    lattice, so ``center_spacing / cluster_std`` is set by ``overlap`` alone.

    :param cfg: Generator configuration.
    :return: A tuple of (dataset, split, prototype table covering seen and unseen classes).
    """
    rng = np.random.default_rng(cfg.rng_seed)
    n_classes = cfg.n_seen + cfg.n_unseen
    k = latent_dim_for(cfg)
    latent = lattice_centers(rng, n_classes, k) * center_spacing(cfg)
    to_features = _orthonormal(rng, cfg.dim_feature, k)
    to_attributes = _orthonormal(rng, cfg.dim_attr, k)
    centers = latent @ to_features.T
    attributes = latent @ to_attributes.T \
        + cfg.attribute_noise * rng.standard_normal((n_classes, cfg.dim_attr))

    seen = tuple(f"seen{c:02d}" for c in range(cfg.n_seen))
    unseen = tuple(f"unseen{c:02d}" for c in range(cfg.n_unseen))
    classes = seen + unseen

    blocks, labels = [], []
    for c in range(cfg.n_seen):
        blocks.append(centers[c] + cfg.cluster_std
                      * rng.standard_normal((cfg.per_class_train, cfg.dim_feature)))
        labels.extend([c] * cfg.per_class_train)
    n_train = len(labels)
    for c in range(n_classes):
        blocks.append(centers[c] + cfg.cluster_std
                      * rng.standard_normal((cfg.per_class_test, cfg.dim_feature)))
        labels.extend([c] * cfg.per_class_test)

    features = np.vstack(blocks)
    ids = tuple(f"x{i:05d}" for i in range(features.shape[0]))
    dataset = Dataset(features, np.array(labels, dtype=np.int64), ids, classes)
    split = ClassSplit(seen, unseen, tuple(range(n_train)),
                       tuple(range(n_train, features.shape[0])))
    logger.info("Generated %d train / %d test instances, %d classes, latent dim %d, "
                "spacing %.3f", n_train, features.shape[0] - n_train, n_classes, k,
                center_spacing(cfg))
    return dataset, split, PrototypeTable(classes, attributes)
