import json
import unittest

import numpy as np

from domaindiv.config import SyntheticConfig
from domaindiv.data import ClassSplit, Dataset, PrototypeTable, load_dataset, \
    load_prototypes, read_features_csv, read_matrix, write_dataset, write_matrix, \
    write_prototypes
from domaindiv.errors import DataError, DimensionMismatchError, DuplicateClassError, \
    MissingPrototypeError, ParseError, UnknownLabelError
from domaindiv.synthetic import generate_synthetic
from test.commons import TemporaryDirectoryTestCase

# Show full diff in unittest
unittest.util._MAX_LENGTH = 2000


class Containers(unittest.TestCase):

    def test_dataset_is_read_only(self):
        data = Dataset(np.zeros((2, 3)), [0, 1], ("a", "b"), ("c0", "c1"))
        self.assertFalse(data.features.flags.writeable)
        self.assertEqual(data.label_names(), ("c0", "c1"))
        self.assertEqual(data.subset([1]).instance_ids, ("b",))

    def test_dataset_rejects_non_finite(self):
        features = np.array([[0.0, 1.0], [np.nan, 0.0]])
        self.assertRaises(DataError, lambda: Dataset(features, [0, 0], ("a", "b"), ("c",)))

    def test_dataset_rejects_bad_labels(self):
        self.assertRaises(UnknownLabelError,
                          lambda: Dataset(np.zeros((1, 2)), [3], ("a",), ("c0", "c1")))
        self.assertRaises(DimensionMismatchError,
                          lambda: Dataset(np.zeros((2, 2)), [0], ("a", "b"), ("c0",)))

    def test_split_rejects_overlap(self):
        self.assertRaises(DataError, lambda: ClassSplit(("a", "b"), ("b",)))
        self.assertRaises(DuplicateClassError, lambda: ClassSplit(("a", "a"), ("b",)))

    def test_prototype_table(self):
        table = PrototypeTable(("a", "b"), np.array([[3.0, 4.0], [0.0, 0.0]]))
        self.assertIn("a", table)
        self.assertNotIn("c", table)
        self.assertEqual(table.width, 2)
        np.testing.assert_allclose(table.normalized().vector("a"), [0.6, 0.8])
        np.testing.assert_array_equal(table.normalized().vector("b"), [0.0, 0.0])
        self.assertEqual(table.matrix([]).shape, (0, 2))
        self.assertRaises(MissingPrototypeError, lambda: table.vector("c"))
        self.assertRaises(DuplicateClassError,
                          lambda: PrototypeTable(("a", "a"), np.zeros((2, 2))))


class Files(TemporaryDirectoryTestCase):

    def write(self, name: str, text: str):
        path = self.tmp / name
        path.write_text(text)
        return path

    def test_ragged_features_row(self):
        path = self.write("features.csv", "x0,a,1,2\nx1,a,1,2\nx2,b,1\n")
        with self.assertRaises(DimensionMismatchError) as ctx:
            read_features_csv(path)
        self.assertIn("row 2", str(ctx.exception))

    def test_unparseable_value(self):
        path = self.write("features.csv", "x0,a,1,2\nx1,a,1,two\n")
        with self.assertRaises(ParseError) as ctx:
            read_features_csv(path)
        self.assertEqual(ctx.exception.line, 2)

    def test_missing_file(self):
        self.assertRaises(DataError, lambda: read_features_csv(self.tmp / "absent.csv"))

    def test_dataset_round_trip(self):
        dataset, split, prototypes = generate_synthetic(SyntheticConfig(rng_seed=3))
        write_dataset(dataset, split, self.tmp / "features.csv", self.tmp / "split.json")
        write_prototypes(prototypes, self.tmp / "prototypes.csv")
        loaded, loaded_split = load_dataset(self.tmp / "features.csv", None,
                                            self.tmp / "split.json")
        np.testing.assert_array_equal(loaded.features, dataset.features)
        np.testing.assert_array_equal(loaded.labels, dataset.labels)
        self.assertEqual(loaded_split.seen, split.seen)
        self.assertEqual(loaded_split.train_idx, split.train_idx)
        self.assertEqual(loaded_split.test_idx, split.test_idx)
        loaded_prototypes = load_prototypes(self.tmp / "prototypes.csv")
        np.testing.assert_array_equal(loaded_prototypes.vectors, prototypes.vectors)

    def test_binary_matrix_with_labels(self):
        features = np.arange(6, dtype=np.float64).reshape(3, 2) / 7.0
        write_matrix(self.tmp / "features.ddiv", features)
        np.testing.assert_array_equal(read_matrix(self.tmp / "features.ddiv"), features)
        labels = self.write("labels.csv", "x0,a\nx1,b\nx2,a\n")
        split = self.write("split.json", json.dumps({
            "seen_classes": ["a"], "unseen_classes": ["b"],
            "train_ids": ["x0"], "test_ids": ["x1", "x2"]}))
        dataset, loaded_split = load_dataset(self.tmp / "features.ddiv", labels, split)
        self.assertEqual(dataset.label_names(), ("a", "b", "a"))
        self.assertEqual(loaded_split.test_idx, (1, 2))
        self.assertRaises(DataError,
                          lambda: load_dataset(self.tmp / "features.ddiv", None, split))

    def test_truncated_binary_matrix(self):
        write_matrix(self.tmp / "m.ddiv", np.ones((2, 2)))
        blob = (self.tmp / "m.ddiv").read_bytes()
        (self.tmp / "m.ddiv").write_bytes(blob[:-8])
        self.assertRaises(DataError, lambda: read_matrix(self.tmp / "m.ddiv"))

    def test_split_with_unseen_training_instance(self):
        features = self.write("features.csv", "x0,a,1,2\nx1,b,3,4\n")
        split = self.write("split.json", json.dumps({
            "seen_classes": ["a"], "unseen_classes": ["b"],
            "train_ids": ["x0", "x1"], "test_ids": []}))
        self.assertRaises(DataError, lambda: load_dataset(features, None, split))

    def test_label_outside_split(self):
        features = self.write("features.csv", "x0,a,1,2\nx1,z,3,4\n")
        split = self.write("split.json", json.dumps({
            "seen_classes": ["a"], "unseen_classes": ["b"],
            "train_ids": ["x0"], "test_ids": ["x1"]}))
        self.assertRaises(UnknownLabelError, lambda: load_dataset(features, None, split))

    def test_duplicate_prototype(self):
        path = self.write("prototypes.csv", "a,1,2\nb,3,4\na,5,6\n")
        self.assertRaises(DuplicateClassError, lambda: load_prototypes(path))

    def test_normalized_prototypes(self):
        path = self.write("prototypes.csv", "a,3,4\nb,0,2\n")
        table = load_prototypes(path, normalize=True)
        np.testing.assert_allclose(np.linalg.norm(table.vectors, axis=1), [1.0, 1.0])


if __name__ == '__main__':
    unittest.main()
