import os
import shutil
import tempfile
import unittest
from pathlib import Path
from typing import Optional

from domaindiv.config import PipelineConfig, SyntheticConfig


def small_synthetic(**overrides) -> SyntheticConfig:
    """Four seen and three unseen well-separated classes."""
    payload = dict(n_seen=4, n_unseen=3, dim_feature=8, dim_attr=6, per_class_train=30,
                   per_class_test=20, overlap=0.0, rng_seed=1)
    payload.update(overrides)
    return SyntheticConfig(**payload)


def pipeline_config(synthetic: Optional[SyntheticConfig] = None, **overrides) -> PipelineConfig:
    """
    Pipeline configuration on a synthetic dataset, with the RBF width pinned to
    ``1 / (2 * dim_feature)`` and the scorer grid search switched off.
    """
    synthetic = synthetic or small_synthetic()
    scorer = {"gamma": 1.0 / (2 * synthetic.dim_feature), "cross_validate": False}
    scorer.update(overrides.pop("scorer", {}))
    payload = dict(synthetic=synthetic.model_dump(), scorer=scorer)
    payload.update(overrides)
    return PipelineConfig.model_validate(payload)


def overlapping_line(seed: int, overlap: float = 3.0, per_class: int = 100) -> PipelineConfig:
    """
    Three seen classes on a line with two unseen classes beyond each end.

    At the default overlap the centers are three cluster widths apart, so the unseen
    classes next to the seen core intrude into its end classes. Attributes are the
    one-dimensional class coordinates.
    """
    synthetic = small_synthetic(n_seen=3, n_unseen=4, dim_feature=8, dim_attr=1,
                                per_class_train=per_class, per_class_test=per_class,
                                overlap=overlap, rng_seed=seed)
    return pipeline_config(synthetic, seed=seed, scorer={"gamma": 0.25},
                           embedding={"ridge": 1.0})


def slow_tests_enabled() -> bool:
    return os.environ.get("DOMAINDIV_SLOW_TESTS") == "1"


class TemporaryDirectoryTestCase(unittest.TestCase):

    def setUp(self) -> None:
        self.tmp = Path(tempfile.mkdtemp(prefix="domaindiv-test-"))

    def tearDown(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)
