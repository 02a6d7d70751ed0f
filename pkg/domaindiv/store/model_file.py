"""
The model file: a SQLite database holding a :class:`~domaindiv.pipeline.FittedPipeline`.

Arrays are stored as little-endian float64 BLOBs next to their shapes; instance-id
lists as JSON text.
"""
import json
import logging
import os
import sqlite3 as sql
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np

from ..boundary import ClassBoundary
from ..config import PipelineConfig, validate
from ..data import PrototypeTable
from ..embedding import EmbeddingModel
from ..errors import ConfigError, DataError, ModelFormatError
from ..evt import ClassEvt, EvtModel, WeibullParams
from ..pipeline import FittedPipeline
from ..scorer import ClassScorer, ScorerModel
from .commons import bound, table_exists
from .constraints import Primary, Unique
from .decorator import record, remove_all
from .fetch import fetch_all, fetch_from
from .mass_actions import create_many

logger = logging.getLogger(__name__)

FORMAT_TAG = "domaindiv-model"
FORMAT_VERSION = 1

_FLOAT = np.dtype("<f8")


def pack(array: np.ndarray) -> bytes:
    return np.ascontiguousarray(array, dtype=_FLOAT).tobytes()


def unpack(blob: bytes, *shape: int) -> np.ndarray:
    values = np.frombuffer(blob, dtype=_FLOAT).astype(np.float64)
    if values.size != int(np.prod(shape)):
        raise ModelFormatError(f"BLOB holds {values.size} values, expected shape {shape}.")
    return values.reshape(shape)


@record("model_info")
@dataclass
class ModelInfo:
    tag: Primary[str]
    version: int
    kernel: str
    n_features: int
    n_attributes: int
    cv_folds: int
    seed: int
    tail_fraction: float
    config: str


@record("class_entry")
@dataclass
class ClassEntry:
    position: Primary[int]
    class_id: Unique[str]
    seen: int


@record("scorer_entry")
@dataclass
class ScorerEntry:
    class_index: Primary[int]
    n_rows: int
    n_cols: int
    support: bytes
    dual_coef: bytes
    intercept: float
    gamma: float
    C: float


@record("evt_entry")
@dataclass
class EvtEntry:
    class_index: Primary[int]
    scale: float
    location: float
    shape: float
    neg_scale: float
    neg_location: float
    neg_shape: float


@record("calibration_entry")
@dataclass
class CalibrationEntry:
    class_index: Primary[int]
    bootstrap_delta: float
    n_statistics: int
    statistics: bytes


@record("boundary_entry")
@dataclass
class BoundaryEntry:
    class_index: Primary[int]
    initial_delta: float
    delta: float
    ks_accepted: int
    ks_applied: int
    shrink_steps: int
    accept_ids: str
    uncertain_ids: str


@record("embedding_entry")
@dataclass
class EmbeddingEntry:
    name: Primary[str]
    n_rows: int
    n_cols: int
    weights: bytes
    ridge: float


@record("prototype_entry")
@dataclass
class PrototypeEntry:
    class_index: Primary[int]
    width: int
    vector: bytes


RECORDS = (ModelInfo, ClassEntry, ScorerEntry, EvtEntry, CalibrationEntry, BoundaryEntry,
           EmbeddingEntry, PrototypeEntry)


def _boundary_entries(fitted: FittedPipeline,
                      boundaries: Mapping[str, ClassBoundary]):
    index = {c: i for i, c in enumerate(fitted.seen)}
    return [
        BoundaryEntry(index[b.class_id], b.initial_delta, b.delta, int(b.ks_accepted),
                      int(b.ks_applied), b.shrink_steps, json.dumps(list(b.final_accept_set)),
                      json.dumps(list(b.uncertain_set)))
        for b in (boundaries[c] for c in fitted.seen if c in boundaries)
    ]


def save_model(path: Union[str, Path], fitted: FittedPipeline) -> None:
    """
    Write a fitted pipeline to ``path``, replacing any existing file.
    """
    if os.path.exists(path):
        os.remove(path)
    scorer, evt = fitted.scorer, fitted.evt
    try:
        conn = sql.connect(str(path))
    except sql.Error as e:
        raise DataError(f"Cannot create model file {path}: {e}") from e
    try:
        with bound(conn, *RECORDS):
            ModelInfo(FORMAT_TAG, FORMAT_VERSION, scorer.kernel, scorer.n_dims,
                      fitted.embedding.n_attributes, scorer.cv_folds, scorer.seed,
                      evt.tail_fraction,
                      json.dumps(fitted.config.to_dict(), sort_keys=True)).create_entry()
            create_many([ClassEntry(i, c, int(i < len(fitted.seen)))
                         for i, c in enumerate(fitted.classes)])
            create_many([
                ScorerEntry(i, s.support.shape[0], s.support.shape[1], pack(s.support),
                            pack(s.dual_coef), s.intercept, s.gamma, s.C)
                for i, s in enumerate(scorer.scorers)
            ])
            create_many([
                EvtEntry(i, p.positive.scale, p.positive.location, p.positive.shape,
                         p.negative.scale, p.negative.location, p.negative.shape)
                for i, p in enumerate(evt.params)
            ])
            create_many([
                CalibrationEntry(i, float(d), int(stats.size), pack(stats))
                for i, (d, stats) in enumerate(zip(fitted.bootstrap_deltas,
                                                   fitted.train_statistics))
            ])
            if fitted.boundaries:
                create_many(_boundary_entries(fitted, fitted.boundaries))
            weights = fitted.embedding.weights
            EmbeddingEntry("w", weights.shape[0], weights.shape[1], pack(weights),
                           fitted.embedding.ridge).create_entry()
            index = {c: i for i, c in enumerate(fitted.classes)}
            create_many([PrototypeEntry(index[c], fitted.prototypes.width,
                                        pack(fitted.prototypes.vector(c)))
                         for c in fitted.classes])
    finally:
        conn.close()
    logger.info("Saved model with %d seen / %d unseen classes to %s", len(fitted.seen),
                len(fitted.unseen), path)


def save_boundaries(path: Union[str, Path], fitted: FittedPipeline,
                    boundaries: Mapping[str, ClassBoundary]) -> None:
    """Replace the boundaries stored in an existing model file."""
    conn = _open(path)
    try:
        with bound(conn, BoundaryEntry):
            remove_all(BoundaryEntry)
            create_many(_boundary_entries(fitted, boundaries))
    finally:
        conn.close()


def _open(path: Union[str, Path]) -> sql.Connection:
    if not os.path.isfile(path):
        raise ModelFormatError(f"Model file {path} does not exist.")
    conn = sql.connect(str(path))
    try:
        missing = [c.__record_table__ for c in RECORDS
                   if not table_exists(conn, c.__record_table__)]
    except sql.DatabaseError as e:
        conn.close()
        raise ModelFormatError(f"{path} is not a model file: {e}") from e
    if missing:
        conn.close()
        raise ModelFormatError(f"{path} is not a model file (missing tables {missing}).")
    return conn


def _read_boundaries(classes, entries) -> Dict[str, ClassBoundary]:
    return {
        classes[e.class_index]: ClassBoundary(
            classes[e.class_index], e.initial_delta, e.delta, bool(e.ks_accepted),
            bool(e.ks_applied), e.shrink_steps, tuple(json.loads(e.accept_ids)),
            tuple(json.loads(e.uncertain_ids)))
        for e in entries
    }


def load_model(path: Union[str, Path]) -> FittedPipeline:
    """
    Read a model file written by :func:`save_model`.

    :raise ModelFormatError: if the file is not a model file, or has another format version.
    """
    conn = _open(path)
    try:
        with bound(conn, *RECORDS, create=False):
            try:
                info = fetch_from(ModelInfo, FORMAT_TAG)
            except KeyError:
                raise ModelFormatError(f"{path}: missing '{FORMAT_TAG}' header.")
            if info.version != FORMAT_VERSION:
                raise ModelFormatError(f"{path}: format version {info.version}, expected "
                                       f"{FORMAT_VERSION}.")
            class_entries = fetch_all(ClassEntry)
            scorer_entries = fetch_all(ScorerEntry)
            evt_entries = fetch_all(EvtEntry)
            calibration = fetch_all(CalibrationEntry)
            boundary_entries = fetch_all(BoundaryEntry)
            embedding = fetch_from(EmbeddingEntry, "w")
            prototype_entries = fetch_all(PrototypeEntry)
    finally:
        conn.close()
    try:
        config = validate(PipelineConfig, json.loads(info.config))
    except (ConfigError, json.JSONDecodeError) as e:
        raise ModelFormatError(f"{path}: stored configuration is invalid: {e}") from e
    classes = tuple(e.class_id for e in class_entries)
    seen = tuple(e.class_id for e in class_entries if e.seen)
    unseen = tuple(e.class_id for e in class_entries if not e.seen)
    if classes != seen + unseen or len(scorer_entries) != len(seen) \
            or len(evt_entries) != len(seen) or len(calibration) != len(seen):
        raise ModelFormatError(f"{path}: per-class tables are inconsistent.")
    scorer = ScorerModel(seen, info.kernel, info.n_features, tuple(
        ClassScorer(unpack(e.support, e.n_rows, e.n_cols), unpack(e.dual_coef, e.n_rows),
                    e.intercept, e.gamma, e.C)
        for e in scorer_entries
    ), info.cv_folds, info.seed)
    evt = EvtModel(seen, tuple(
        ClassEvt(WeibullParams(e.scale, e.location, e.shape),
                 WeibullParams(e.neg_scale, e.neg_location, e.neg_shape))
        for e in evt_entries
    ), info.tail_fraction)
    prototypes = PrototypeTable(
        tuple(classes[e.class_index] for e in prototype_entries),
        np.stack([unpack(e.vector, e.width) for e in prototype_entries])
    )
    return FittedPipeline(
        config, seen, unseen, scorer, evt,
        tuple(e.bootstrap_delta for e in calibration),
        tuple(unpack(e.statistics, e.n_statistics) for e in calibration),
        EmbeddingModel(unpack(embedding.weights, embedding.n_rows, embedding.n_cols),
                       embedding.ridge),
        prototypes,
        _read_boundaries(seen, boundary_entries) or None
    )
