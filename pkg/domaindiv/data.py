"""
Core data containers and their file formats.

Class ids are strings in every file and dense integer indices in memory: index
``i`` refers to ``classes[i]``, seen classes first (in split-file order), then
unseen ones.
"""
import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DataError, DimensionMismatchError, DuplicateClassError, \
    MissingPrototypeError, ParseError, UnknownLabelError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MATRIX_MAGIC = b"DDIV"
_HEADER_DTYPE = np.dtype("<u4")
_VALUE_DTYPE = np.dtype("<f8")


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ClassSplit:
    seen: Tuple[str, ...]
    unseen: Tuple[str, ...]
    train_idx: Tuple[int, ...] = ()
    test_idx: Tuple[int, ...] = ()

    def __post_init__(self):
        overlap = set(self.seen) & set(self.unseen)
        if overlap:
            raise DataError(f"Classes {sorted(overlap)} are both seen and unseen.")
        if len(set(self.seen)) != len(self.seen) or len(set(self.unseen)) != len(self.unseen):
            raise DuplicateClassError("Split lists a class more than once.")

    @property
    def classes(self) -> Tuple[str, ...]:
        return self.seen + self.unseen


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Dense feature matrix with per-instance labels.

    ``labels[i]`` indexes into ``classes``.
    """
    features: np.ndarray
    labels: np.ndarray
    instance_ids: Tuple[str, ...]
    classes: Tuple[str, ...]

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise DimensionMismatchError(f"Features must be a matrix, got {features.ndim} dims.")
        if not np.all(np.isfinite(features)):
            rows = np.flatnonzero(~np.all(np.isfinite(features), axis=1))
            raise DataError(f"Non-finite feature values in rows {rows[:5].tolist()}.")
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (features.shape[0],) or len(self.instance_ids) != features.shape[0]:
            raise DimensionMismatchError("Features, labels and instance ids differ in length.")
        if labels.size and (labels.min() < 0 or labels.max() >= len(self.classes)):
            raise UnknownLabelError("Label index outside of the class table.")
        object.__setattr__(self, "features", _frozen_array(features))
        object.__setattr__(self, "labels", _frozen_array(labels, np.int64))
        object.__setattr__(self, "instance_ids", tuple(self.instance_ids))
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def n_instances(self) -> int:
        return self.features.shape[0]

    @property
    def n_dims(self) -> int:
        return self.features.shape[1]

    def label_names(self) -> Tuple[str, ...]:
        return tuple(self.classes[i] for i in self.labels)

    def subset(self, indices: Iterable[int]) -> 'Dataset':
        indices = np.asarray(list(indices), dtype=np.int64)
        return Dataset(
            self.features[indices],
            self.labels[indices],
            tuple(self.instance_ids[i] for i in indices),
            self.classes
        )

    def index_of(self) -> Dict[str, int]:
        return {iid: i for i, iid in enumerate(self.instance_ids)}


@dataclass(frozen=True, eq=False)
class PrototypeTable:
    """
    Semantic vector ``y_c`` per class id.
    """
    classes: Tuple[str, ...]
    vectors: np.ndarray
    _index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(self.classes):
            raise DimensionMismatchError("Prototype matrix does not match the class list.")
        if not np.all(np.isfinite(vectors)):
            raise DataError("Non-finite prototype entries.")
        index: Dict[str, int] = {}
        for i, class_id in enumerate(self.classes):
            if class_id in index:
                raise DuplicateClassError(f"Duplicate class id '{class_id}' in prototype table.")
            index[class_id] = i
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "vectors", _frozen_array(vectors))
        object.__setattr__(self, "_index", index)

    @property
    def width(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.classes)

    def __contains__(self, class_id: str) -> bool:
        return class_id in self._index

    def vector(self, class_id: str) -> np.ndarray:
        try:
            return self.vectors[self._index[class_id]]
        except KeyError:
            raise MissingPrototypeError(f"No prototype for class '{class_id}'.")

    def matrix(self, class_ids: Sequence[str]) -> np.ndarray:
        return np.stack([self.vector(c) for c in class_ids]) if class_ids \
            else np.zeros((0, self.width))

    def subset(self, class_ids: Sequence[str]) -> 'PrototypeTable':
        return PrototypeTable(tuple(class_ids), self.matrix(class_ids))

    def normalized(self) -> 'PrototypeTable':
        norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return PrototypeTable(self.classes, self.vectors / norms)


def _parse_floats(path: PathLike, line: int, cells: Sequence[str]) -> List[float]:
    try:
        return [float(c) for c in cells]
    except ValueError as e:
        raise ParseError(str(path), line, f"not a number ({e})")


def _read_rows(path: PathLike) -> List[Tuple[int, List[str]]]:
    try:
        with open(path, newline="") as fin:
            return [(n, row) for n, row in enumerate(csv.reader(fin), start=1) if row]
    except OSError as e:
        raise DataError(f"Cannot read {path}: {e}") from e


def read_features_csv(path: PathLike) -> Tuple[List[str], List[str], np.ndarray]:
    """
    Read a features CSV (no header, rows ``instance_id,label,v1,...,vd``).

    :param path: Path of the CSV.
    :return: A tuple of (instance ids, label names, feature matrix).
    """
    ids, labels, values = [], [], []
    width: Optional[int] = None
    for row_index, (line, row) in enumerate(_read_rows(path)):
        if len(row) < 3:
            raise ParseError(str(path), line, "expected instance_id,label,v1,...")
        if width is None:
            width = len(row) - 2
        elif len(row) - 2 != width:
            raise DimensionMismatchError(
                f"{path}: row {row_index} (line {line}) has {len(row) - 2} features, "
                f"expected {width}.")
        ids.append(row[0].strip())
        labels.append(row[1].strip())
        values.append(_parse_floats(path, line, row[2:]))
    if not ids:
        raise DataError(f"{path}: no rows.")
    return ids, labels, np.array(values, dtype=np.float64)


def read_labels_csv(path: PathLike) -> Tuple[List[str], List[str]]:
    ids, labels = [], []
    for line, row in _read_rows(path):
        if len(row) != 2:
            raise ParseError(str(path), line, "expected instance_id,label")
        ids.append(row[0].strip())
        labels.append(row[1].strip())
    return ids, labels


def read_matrix(path: PathLike) -> np.ndarray:
    """
    Read a matrix in the binary ``DDIV`` format (magic, u32 rows, u32 cols, LE float64
    row-major).
    """
    try:
        with open(path, "rb") as fin:
            blob = fin.read()
    except OSError as e:
        raise DataError(f"Cannot read {path}: {e}") from e
    if len(blob) < 12 or blob[:4] != MATRIX_MAGIC:
        raise DataError(f"{path}: not a DDIV matrix file.")
    rows, cols = np.frombuffer(blob, dtype=_HEADER_DTYPE, count=2, offset=4)
    expected = 12 + int(rows) * int(cols) * _VALUE_DTYPE.itemsize
    if len(blob) != expected:
        raise DataError(f"{path}: expected {expected} bytes, found {len(blob)}.")
    return np.frombuffer(blob, dtype=_VALUE_DTYPE, offset=12) \
        .reshape(int(rows), int(cols)).astype(np.float64)


def write_matrix(path: PathLike, matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype=np.float64)
    with open(path, "wb") as fout:
        fout.write(MATRIX_MAGIC)
        fout.write(np.array(matrix.shape, dtype=_HEADER_DTYPE).tobytes())
        fout.write(np.ascontiguousarray(matrix, dtype=_VALUE_DTYPE).tobytes())


def read_split(path: PathLike) -> Dict[str, List[str]]:
    try:
        with open(path) as fin:
            payload = json.load(fin)
    except OSError as e:
        raise DataError(f"Cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(str(path), e.lineno, e.msg)
    keys = ("seen_classes", "unseen_classes", "train_ids", "test_ids")
    missing = [k for k in keys if k not in payload]
    if missing:
        raise DataError(f"{path}: missing keys {missing}.")
    return {k: [str(v) for v in payload[k]] for k in keys}


def make_dataset(ids: Sequence[str], label_names: Sequence[str], features: np.ndarray,
                 classes: Sequence[str]) -> Dataset:
    """
    Build a :class:`Dataset`, mapping label names to class indices.
    """
    index = {c: i for i, c in enumerate(classes)}
    labels = []
    for iid, name in zip(ids, label_names):
        if name not in index:
            raise UnknownLabelError(f"Instance '{iid}' has label '{name}' which is not in "
                                    f"the split.")
        labels.append(index[name])
    return Dataset(features, np.array(labels, dtype=np.int64), tuple(ids), tuple(classes))


def load_dataset(features_path: PathLike, labels_path: Optional[PathLike],
                 split_path: PathLike) -> Tuple[Dataset, ClassSplit]:
    """
    Load a dataset and its seen/unseen, train/test split.

    :param features_path: Features CSV, or a DDIV binary matrix.
    :param labels_path: ``instance_id,label`` CSV, required with DDIV features.
    :param split_path: JSON split document.
    :return: A tuple of (dataset, split).
    """
    if Path(features_path).suffix.lower() == ".ddiv":
        if labels_path is None:
            raise DataError("DDIV features need a labels CSV.")
        ids, names = read_labels_csv(labels_path)
        features = read_matrix(features_path)
        if features.shape[0] != len(ids):
            raise DimensionMismatchError(f"{features_path} has {features.shape[0]} rows, "
                                         f"{labels_path} has {len(ids)}.")
    else:
        ids, names, features = read_features_csv(features_path)
    raw = read_split(split_path)
    split = ClassSplit(tuple(raw["seen_classes"]), tuple(raw["unseen_classes"]))
    dataset = make_dataset(ids, names, features, split.classes)
    position = dataset.index_of()
    if len(position) != len(ids):
        raise DataError(f"{features_path}: duplicate instance ids.")

    def _indices(key: str) -> Tuple[int, ...]:
        try:
            return tuple(position[iid] for iid in raw[key])
        except KeyError as e:
            raise DataError(f"{split_path}: '{key}' references unknown instance {e}.")

    train_idx, test_idx = _indices("train_ids"), _indices("test_ids")
    n_seen = len(split.seen)
    bad = [dataset.instance_ids[i] for i in train_idx if dataset.labels[i] >= n_seen]
    if bad:
        raise DataError(f"Training instances with unseen labels: {bad[:5]}.")
    split = ClassSplit(split.seen, split.unseen, train_idx, test_idx)
    logger.info("Loaded %d instances (%d dims), %d seen / %d unseen classes",
                dataset.n_instances, dataset.n_dims, len(split.seen), len(split.unseen))
    return dataset, split


def write_dataset(dataset: Dataset, split: ClassSplit, features_path: PathLike,
                  split_path: PathLike) -> None:
    """
    Write a dataset as features CSV plus split JSON. Values are written with 17
    significant digits so that :func:`load_dataset` reads them back exactly.
    """
    names = dataset.label_names()
    with open(features_path, "w", newline="") as fout:
        writer = csv.writer(fout)
        for iid, name, row in zip(dataset.instance_ids, names, dataset.features):
            writer.writerow([iid, name] + [format(v, ".17g") for v in row])
    payload = {
        "seen_classes": list(split.seen),
        "unseen_classes": list(split.unseen),
        "train_ids": [dataset.instance_ids[i] for i in split.train_idx],
        "test_ids": [dataset.instance_ids[i] for i in split.test_idx],
    }
    with open(split_path, "w") as fout:
        json.dump(payload, fout, indent=2)


def load_prototypes(path: PathLike, normalize: bool = False) -> PrototypeTable:
    """
    Load a prototypes CSV (no header, rows ``class_id,a1,...,am``).

    :param path: Path of the CSV.
    :param normalize: Scale every vector to unit L2 norm.
    :return: The prototype table.
    """
    classes, values = [], []
    width: Optional[int] = None
    for line, row in _read_rows(path):
        if len(row) < 2:
            raise ParseError(str(path), line, "expected class_id,a1,...")
        if width is None:
            width = len(row) - 1
        elif len(row) - 1 != width:
            raise DimensionMismatchError(f"{path}: line {line} has width {len(row) - 1}, "
                                         f"expected {width}.")
        class_id = row[0].strip()
        if class_id in classes:
            raise DuplicateClassError(f"{path}: line {line} repeats class id '{class_id}'.")
        classes.append(class_id)
        values.append(_parse_floats(path, line, row[1:]))
    if not classes:
        raise DataError(f"{path}: no rows.")
    table = PrototypeTable(tuple(classes), np.array(values, dtype=np.float64))
    return table.normalized() if normalize else table


def write_prototypes(table: PrototypeTable, path: PathLike) -> None:
    with open(path, "w", newline="") as fout:
        writer = csv.writer(fout)
        for class_id, row in zip(table.classes, table.vectors):
            writer.writerow([class_id] + [format(v, ".17g") for v in row])
