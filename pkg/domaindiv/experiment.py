"""
End-to-end experiments: a single configured run with its artifacts, and the
four-variant ablation of the bootstrap and K-S steps.
"""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .boundary import ClassBoundary
from .config import DivisionConfig, PipelineConfig
from .division import DomainDecision
from .metrics import GzslReport, OslReport, dumps_report, percent
from .pipeline import FittedPipeline, PipelineOutcome, apply_pipeline, evaluate_outcome, \
    fit_pipeline, held_out, load_inputs, stage
from .store.model_file import save_model

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Report = Union[GzslReport, OslReport]


@dataclass(frozen=True)
class AblationSpec:
    use_bootstrap: bool
    use_ks: bool

    def division(self, base: DivisionConfig) -> DivisionConfig:
        return base.model_copy(update={"use_bootstrap": self.use_bootstrap,
                                       "use_ks": self.use_ks})

    @property
    def name(self) -> str:
        return f"bootstrap={'on' if self.use_bootstrap else 'off'}," \
               f"ks={'on' if self.use_ks else 'off'}"


ABLATION_VARIANTS: Tuple[AblationSpec, ...] = (
    AblationSpec(use_bootstrap=True, use_ks=True),
    AblationSpec(use_bootstrap=False, use_ks=True),
    AblationSpec(use_bootstrap=True, use_ks=False),
    AblationSpec(use_bootstrap=False, use_ks=False),
)


@dataclass(frozen=True, eq=False)
class ExperimentArtifacts:
    fitted: FittedPipeline
    outcome: PipelineOutcome
    files: Dict[str, Path] = field(default_factory=dict)


@dataclass(frozen=True)
class AblationRow:
    spec: AblationSpec
    gzsl: GzslReport
    osl: OslReport
    domain_counts: Dict[str, int]


@dataclass(frozen=True)
class AblationTable:
    rows: Tuple[AblationRow, ...]

    def row(self, use_bootstrap: bool, use_ks: bool) -> AblationRow:
        for row in self.rows:
            if (row.spec.use_bootstrap, row.spec.use_ks) == (use_bootstrap, use_ks):
                return row
        raise KeyError((use_bootstrap, use_ks))

    def layout(self) -> List[List[str]]:
        """Rows ``K-S test``, ``Bootstrap``, ``OSL``, ``G-ZSL``; one column per variant."""

        def _mark(flag: bool) -> str:
            return "√" if flag else "×"

        return [
            ["K-S test"] + [_mark(r.spec.use_ks) for r in self.rows],
            ["Bootstrap"] + [_mark(r.spec.use_bootstrap) for r in self.rows],
            ["OSL"] + [percent(r.osl.F1) for r in self.rows],
            ["G-ZSL"] + [percent(r.gzsl.H) for r in self.rows],
        ]


def write_decisions(path: PathLike, decisions: Sequence[DomainDecision]) -> None:
    with open(path, "w", newline="") as fout:
        writer = csv.writer(fout)
        writer.writerow(["instance_id", "domain", "c_star", "z_star"])
        for d in decisions:
            writer.writerow([d.instance_id, str(d.domain), d.candidate_class,
                             format(d.candidate_score, ".17g")])


def write_predictions(path: PathLike, decisions: Sequence[DomainDecision],
                      predictions: Mapping[str, str]) -> None:
    with open(path, "w", newline="") as fout:
        writer = csv.writer(fout)
        writer.writerow(["instance_id", "predicted_class", "domain"])
        for d in decisions:
            writer.writerow([d.instance_id, predictions[d.instance_id], str(d.domain)])


def write_boundaries(path: PathLike, boundaries: Mapping[str, ClassBoundary]) -> None:
    """
    One row per class and K-S step; classes without a K-S step get a single row.
    """
    with open(path, "w", newline="") as fout:
        writer = csv.writer(fout)
        writer.writerow(["class_id", "initial_delta", "delta", "ks_applied", "ks_accepted",
                         "shrink_steps", "n_accept", "n_uncertain", "step", "step_delta",
                         "n_test", "statistic", "critical_value", "reject"])
        for class_id in sorted(boundaries):
            b = boundaries[class_id]
            head = [class_id, format(b.initial_delta, ".17g"), format(b.delta, ".17g"),
                    int(b.ks_applied), int(b.ks_accepted), b.shrink_steps,
                    len(b.final_accept_set), len(b.uncertain_set)]
            if not b.history:
                writer.writerow(head + [""] * 6)
            for s in b.history:
                writer.writerow(head + [s.step, format(s.delta, ".17g"), s.n_test,
                                        format(s.statistic, ".17g"),
                                        format(s.critical_value, ".17g"), int(s.reject)])


def write_report(path: PathLike, report: Report) -> None:
    with open(path, "w") as fout:
        fout.write(dumps_report(report))


def write_ablation_table(path: PathLike, table: AblationTable) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fout:
        csv.writer(fout).writerows(table.layout())


def run_experiment(cfg: PipelineConfig,
                   out_dir: Optional[PathLike] = None) -> Tuple[Report, ExperimentArtifacts]:
    """
    Run the whole pipeline on the configured data.

    With ``out_dir`` the model file, decisions, predictions, boundaries and the report
    are written there.

    :param cfg: Run configuration (carries its own seed).
    :param out_dir: Optional artifact directory, created if missing.
    :return: A tuple of (report, artifacts).
    """
    dataset, split, prototypes = load_inputs(cfg)
    with stage("data"):
        test = held_out(dataset, split)
    fitted = fit_pipeline(dataset, split, prototypes, cfg)
    outcome = apply_pipeline(fitted, test)
    report = evaluate_outcome(fitted, test, outcome)
    files: Dict[str, Path] = {}
    if out_dir is not None:
        with stage("artifacts"):
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            files = {name: out / name for name in
                     ("model.bin", "decisions.csv", "predictions.csv", "boundaries.csv",
                      "report.json")}
            save_model(files["model.bin"], fitted.with_boundaries(outcome.boundaries))
            write_decisions(files["decisions.csv"], outcome.decisions)
            write_predictions(files["predictions.csv"], outcome.decisions, outcome.predictions)
            write_boundaries(files["boundaries.csv"], outcome.boundaries)
            write_report(files["report.json"], report)
            logger.info("Wrote artifacts to %s", out)
    return report, ExperimentArtifacts(fitted, outcome, files)


def run_ablation_suite(cfg: PipelineConfig,
                       variants: Sequence[AblationSpec] = ABLATION_VARIANTS) -> AblationTable:
    """
    Evaluate every (bootstrap, K-S) variant on the same data and the same fitted scorers.

    Scorers, EVT tails and bootstrap thresholds are fitted once; only the boundary
    logic differs between variants.
    """
    dataset, split, prototypes = load_inputs(cfg)
    with stage("data"):
        test = held_out(dataset, split)
    fitted = fit_pipeline(dataset, split, prototypes, cfg)
    rows = []
    for spec in variants:
        division = spec.division(cfg.division)
        reports = {}
        counts = {}
        for task in ("gzsl", "osl"):
            outcome = apply_pipeline(fitted, test, division, task)
            reports[task] = evaluate_outcome(fitted, test, outcome)
            counts = reports[task].domain_counts
        logger.info("Ablation %s: G-ZSL H %.4f, OSL F1 %.4f", spec.name, reports["gzsl"].H,
                    reports["osl"].F1)
        rows.append(AblationRow(spec, reports["gzsl"], reports["osl"], counts))
    return AblationTable(tuple(rows))
