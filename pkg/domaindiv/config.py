"""
Configuration models for the domain division pipeline.

Every knob of a run is declared here and validated on construction. A whole run
is reproduced by one :class:`PipelineConfig` (which embeds its own seed).
"""
import json
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SyntheticConfig(_Model):
    """Configuration of the synthetic Gaussian-cluster generator.

    Attributes:
        n_seen: Number of seen classes.
        n_unseen: Number of unseen classes.
        dim_feature: Feature dimensionality.
        dim_attr: Attribute (prototype) dimensionality.
        per_class_train: Training instances per seen class.
        per_class_test: Test instances per class (seen and unseen).
        overlap: Controls cluster spacing; larger means more overlap.
        rng_seed: Seed of the generator.
        separation: Minimum inter-center distance at ``overlap=0``.
        cluster_std: Per-dimension standard deviation of each cluster.
        attribute_noise: Standard deviation of the noise added to attribute vectors.
        latent_dim: Dimensionality of the subspace holding the cluster centers.
    """
    n_seen: int = Field(2, ge=1)
    n_unseen: int = Field(1, ge=1)
    dim_feature: int = Field(8, ge=1)
    dim_attr: int = Field(6, ge=1)
    per_class_train: int = Field(40, ge=1)
    per_class_test: int = Field(20, ge=1)
    overlap: float = Field(0.0, ge=0.0)
    rng_seed: int = 0
    separation: float = Field(12.0, gt=0.0)
    cluster_std: float = Field(1.0, gt=0.0)
    attribute_noise: float = Field(0.01, ge=0.0)
    latent_dim: Optional[int] = Field(None, ge=1)


class ScorerConfig(_Model):
    kernel: Literal["rbf", "linear"] = "rbf"
    C: float = Field(1.0, gt=0.0)
    # None means "scale": 1 / (n_dims * Var(X))
    gamma: Optional[float] = Field(None, gt=0.0)
    cross_validate: bool = True
    cv_folds: int = Field(3, ge=2)
    C_grid: Tuple[float, ...] = (0.1, 1.0, 10.0, 100.0)
    gamma_factors: Tuple[float, ...] = (0.1, 1.0, 10.0)
    calibration_folds: int = Field(5, ge=2)
    max_iter: int = -1


class EvtConfig(_Model):
    tail_fraction: float = Field(0.5, gt=0.0, le=1.0)


class BootstrapConfig(_Model):
    """Bootstrap threshold parameters.

    Attributes:
        n_resamples: Draws per bootstrap sample; defaults to the size of the score list.
        n_repetitions: Outer repetitions; defaults to ``n_resamples``.
        alpha: Significance level selecting the extracted order statistic.
        rng_seed: Seed of the resampling.
    """
    n_resamples: Optional[int] = Field(None, ge=1)
    n_repetitions: Optional[int] = Field(None, ge=1)
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    rng_seed: int = 0


class ShrinkConfig(_Model):
    step_fraction: float = Field(0.05, gt=0.0, le=1.0)
    max_steps: int = Field(20, ge=0)
    min_samples: int = Field(5, ge=1)


class DivisionConfig(_Model):
    use_bootstrap: bool = True
    use_ks: bool = True
    fixed_delta: float = Field(0.5, ge=0.0, le=1.0)


class EmbeddingConfig(_Model):
    ridge: float = Field(1e-3, ge=0.0)
    normalize_prototypes: bool = False


class OslConfig(_Model):
    prototype_count: Optional[int] = Field(None, ge=0)
    max_attempts: int = Field(10000, ge=1)


class DataConfig(_Model):
    features: str
    prototypes: str
    split: str
    labels: Optional[str] = None


class PipelineConfig(_Model):
    task: Literal["gzsl", "osl"] = "gzsl"
    seed: int = 0
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    per_class: bool = False
    n_jobs: int = 1
    data: Optional[DataConfig] = None
    synthetic: Optional[SyntheticConfig] = None
    scorer: ScorerConfig = ScorerConfig()
    evt: EvtConfig = EvtConfig()
    bootstrap: BootstrapConfig = BootstrapConfig()
    shrink: ShrinkConfig = ShrinkConfig()
    division: DivisionConfig = DivisionConfig()
    embedding: EmbeddingConfig = EmbeddingConfig()
    osl: OslConfig = OslConfig()

    @model_validator(mode="after")
    def _one_data_source(self) -> "PipelineConfig":
        if (self.data is None) == (self.synthetic is None):
            raise ValueError("exactly one of 'data' and 'synthetic' must be given")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def validate(model: type, payload: Dict[str, Any]) -> Any:
    try:
        return model.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(f"Invalid {model.__name__}: {e}") from e


def read_json(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        with open(path) as fin:
            payload = json.load(fin)
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}: malformed JSON: {e.msg}") from e
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    return payload


def load_config(path: Union[str, Path]) -> PipelineConfig:
    """
    Load a :class:`PipelineConfig` from a JSON file.

    :param path: Path of the JSON document.
    :return: The validated configuration.
    """
    return validate(PipelineConfig, read_json(path))


def load_synthetic_config(path: Union[str, Path]) -> SyntheticConfig:
    """
    Load a :class:`SyntheticConfig`, given either bare or under the ``synthetic`` key of a
    pipeline config.
    """
    payload = read_json(path)
    if "synthetic" in payload:
        payload = payload["synthetic"]
    return validate(SyntheticConfig, payload)
