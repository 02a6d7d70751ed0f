import csv
import io
import json
import unittest
from contextlib import redirect_stderr, redirect_stdout

from domaindiv import __version__
from domaindiv.cli import build_argparser, main
from domaindiv.store.model_file import load_model
from test.commons import TemporaryDirectoryTestCase, pipeline_config, small_synthetic

# Show full diff in unittest
unittest.util._MAX_LENGTH = 2000


class CommandLine(TemporaryDirectoryTestCase):

    def setUp(self) -> None:
        super().setUp()
        self.synthetic = small_synthetic(n_seen=3, n_unseen=2)
        self.synth_config = self.tmp / "synthetic.json"
        self.synth_config.write_text(json.dumps(self.synthetic.model_dump()))
        self.train_config = self.tmp / "train.json"
        self.train_config.write_text(json.dumps({"scorer": {"gamma": 1.0 / 16,
                                                            "cross_validate": False}}))
        self.data = self.tmp / "data"

    def run_main(self, *argv):
        stderr = io.StringIO()
        with redirect_stderr(stderr):
            code = main(["-q"] + [str(a) for a in argv])
        return code, stderr.getvalue()

    def synth(self):
        code, _ = self.run_main("synth", "--config", self.synth_config, "--out", self.data)
        self.assertEqual(code, 0)

    def train(self, *extra):
        return self.run_main("train", "--features", self.data / "features.csv",
                             "--prototypes", self.data / "prototypes.csv",
                             "--split", self.data / "split.json",
                             "--config", self.train_config,
                             "--out", self.tmp / "model.bin", *extra)

    def test_synth(self):
        self.synth()
        for name in ("features.csv", "split.json", "prototypes.csv"):
            self.assertTrue((self.data / name).exists())
        split = json.loads((self.data / "split.json").read_text())
        self.assertEqual(split["seen_classes"], ["seen00", "seen01", "seen02"])

    def test_train_divide_eval(self):
        self.synth()
        code, _ = self.train("--seed", 3)
        self.assertEqual(code, 0)
        fitted = load_model(self.tmp / "model.bin")
        self.assertEqual(fitted.config.seed, 3)
        self.assertEqual(fitted.seen, ("seen00", "seen01", "seen02"))
        self.assertEqual(fitted.scorer.cv_folds, 0)

        code, _ = self.run_main("divide", "--model", self.tmp / "model.bin",
                                "--features", self.data / "features.csv",
                                "--out", self.tmp / "decisions.csv",
                                "--dump-boundaries", self.tmp / "boundaries.csv")
        self.assertEqual(code, 0)
        with open(self.tmp / "decisions.csv", newline="") as fin:
            rows = list(csv.reader(fin))
        self.assertEqual(rows[0], ["instance_id", "domain", "c_star", "z_star"])
        n_instances = 3 * 30 + 5 * 20
        self.assertEqual(len(rows) - 1, n_instances)
        self.assertTrue({r[1] for r in rows[1:]} <= {"known", "unknown", "uncertain"})
        self.assertIsNotNone(load_model(self.tmp / "model.bin").boundaries)
        self.assertTrue((self.tmp / "boundaries.csv").exists())

        code, _ = self.run_main("eval", "--task", "gzsl", "--model", self.tmp / "model.bin",
                                "--features", self.data / "features.csv",
                                "--out", self.tmp / "report.json",
                                "--predictions", self.tmp / "predictions.csv", "--no-ks")
        self.assertEqual(code, 0)
        report = json.loads((self.tmp / "report.json").read_text())
        self.assertEqual(report["task"], "gzsl")
        self.assertFalse(report["config"]["division"]["use_ks"])
        self.assertEqual(sum(report["domain_counts"].values()), n_instances)
        self.assertTrue(0.0 <= report["H"] <= 1.0)

        code, _ = self.run_main("eval", "--task", "osl", "--model", self.tmp / "model.bin",
                                "--features", self.data / "features.csv",
                                "--out", self.tmp / "osl.json", "--per-class")
        self.assertEqual(code, 0)
        report = json.loads((self.tmp / "osl.json").read_text())
        self.assertEqual(report["averaging"], "per_class")
        self.assertIn("F1", report)

    def test_cv_flag_overrides_config(self):
        self.synth()
        code, _ = self.train("--cv")
        self.assertEqual(code, 0)
        self.assertEqual(load_model(self.tmp / "model.bin").scorer.cv_folds, 3)

    def test_run_and_ablate(self):
        config = self.tmp / "pipeline.json"
        config.write_text(json.dumps(pipeline_config(self.synthetic).to_dict()))
        code, _ = self.run_main("run", "--config", config, "--out", self.tmp / "run")
        self.assertEqual(code, 0)
        for name in ("model.bin", "decisions.csv", "predictions.csv", "boundaries.csv",
                     "report.json"):
            self.assertTrue((self.tmp / "run" / name).exists())

        code, _ = self.run_main("ablate", "--config", config, "--out", self.tmp / "table.csv")
        self.assertEqual(code, 0)
        with open(self.tmp / "table.csv", newline="", encoding="utf-8") as fin:
            table = list(csv.reader(fin))
        self.assertEqual([row[0] for row in table], ["K-S test", "Bootstrap", "OSL", "G-ZSL"])
        self.assertTrue(all(len(row) == 5 for row in table))

    def test_config_error(self):
        bad = self.tmp / "bad.json"
        bad.write_text("{ not json")
        code, message = self.run_main("run", "--config", bad, "--out", self.tmp / "run")
        self.assertEqual(code, 2)
        self.assertIn("ConfigError", message)

        unknown_key = self.tmp / "unknown.json"
        unknown_key.write_text(json.dumps({"synthetic": {}, "colour": "blue"}))
        code, _ = self.run_main("run", "--config", unknown_key, "--out", self.tmp / "run")
        self.assertEqual(code, 2)

    def test_data_error(self):
        self.synth()
        code, message = self.run_main("train", "--features", self.tmp / "absent.csv",
                                      "--prototypes", self.data / "prototypes.csv",
                                      "--split", self.data / "split.json",
                                      "--out", self.tmp / "model.bin")
        self.assertEqual(code, 3)
        self.assertIn("[data]", message)

        code, _ = self.run_main("divide", "--model", self.tmp / "absent.bin",
                                "--features", self.data / "features.csv",
                                "--out", self.tmp / "decisions.csv")
        self.assertEqual(code, 3)

    def test_numerical_error(self):
        self.synth()
        code, message = self.train("--ridge", 0)
        self.assertEqual(code, 4)
        self.assertIn("SingularSystemError", message)

    def test_version(self):
        stdout = io.StringIO()
        with redirect_stdout(stdout), self.assertRaises(SystemExit):
            build_argparser().parse_args(["--version"])
        self.assertIn(__version__, stdout.getvalue())


if __name__ == '__main__':
    unittest.main()
