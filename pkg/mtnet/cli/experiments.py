"""
Experiment runners behind the command-line subcommands.

Each runner is a pure function of the configuration and its input files:
reruns write byte-identical outputs. Reports embed the resolved
configuration, and every (method, seed) cell trains its own model.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from ..data import (EncodedCohort, SplitIndices, generate_synthetic, impute_and_encode, load_encoded,
                    load_raw_cohort, save_encoded, save_raw_cohort, stratified_split, stratified_subsample)
from ..diffcore import make_rng
from ..exceptions import DataFileError, SubsampleError
from ..metrics import METRIC_NAMES, EvalResult, RunReport, aggregate_runs, evaluate
from ..trainer import (ABLATIONS, BASELINE, FULL_MODEL, TrainConfig, load_checkpoint, predict,
                       save_checkpoint, train)
from ..utils.helpers import run_cells
from .config import ExperimentConfig

logger = logging.getLogger(__name__)

STREAM_SUBSAMPLE = 11
COHORT_DIR = "cohort"
CHECKPOINT_DIR = "checkpoints"
EFFICIENCY_METHODS = {"MTNet": FULL_MODEL, "LSTM": BASELINE}


@dataclass(eq=False)
class Dataset:
    cohort: EncodedCohort
    split: SplitIndices

    def part(self, name: str) -> EncodedCohort:
        return self.cohort.subset(getattr(self.split, name))


@dataclass(eq=False)
class ReportRow:
    """One aggregated report plus the labels that identify it in tables"""
    name: str
    labels: Dict[str, object]
    report: RunReport
    seeds: Sequence[int]


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    data = cfg.data
    if data.path:
        path = Path(data.path)
        if path.is_dir():
            raw, schema = load_raw_cohort(path)
            cohort = impute_and_encode(raw, schema, data.screen_missing, data.max_missing)
        elif path.is_file():
            cohort = load_encoded(path)
        else:
            raise DataFileError(f"data path {path} does not exist")
    else:
        raw, schema, _ = generate_synthetic(data.synth)
        cohort = impute_and_encode(raw, schema, data.screen_missing, data.max_missing)
    if data.waves_window is not None and data.waves_window != cohort.w:
        logger.warning("Keeping waves 1..%d of %d", data.waves_window, cohort.w)
        cohort = cohort.window(data.waves_window)
    split = stratified_split(cohort.labels, data.split_ratios, make_rng(data.split_seed))
    logger.info("Dataset: %d subjects (%d positive), %d waves x %d features; split %d/%d/%d",
                cohort.N, cohort.n_positive, cohort.w, cohort.D,
                split.train.size, split.val.size, split.test.size)
    return Dataset(cohort, split)


def _evaluate_model(model, cohort: EncodedCohort, threshold: float) -> EvalResult:
    return evaluate(predict(model, cohort.data), cohort.labels, threshold)


def _checkpoint_path(out: Path, seed: int) -> Path:
    return out / CHECKPOINT_DIR / f"seed_{seed}.ckpt"


def write_report(out: Path, stem: str, cfg: ExperimentConfig, rows: List[ReportRow]):
    """JSON document with the echoed config plus a CSV table with one row per (report, seed)"""
    doc = {
        "mode": stem,
        "config": cfg.to_dict(),
        "reports": [
            {"name": row.name, **row.labels, "seeds": list(row.seeds), **row.report.to_dict()} for row in rows
        ],
    }
    records = []
    for row in rows:
        for seed, result in zip(row.seeds, row.report.results):
            records.append({"method": row.name, **row.labels, "seed": seed,
                            **{m: getattr(result, m) for m in METRIC_NAMES}})
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{stem}.json").write_text(json.dumps(doc, indent=2))
        pd.DataFrame(records).to_csv(out / f"{stem}.csv", index=False, float_format="%.6g")
    except OSError as e:
        raise DataFileError(f"cannot write report into {out}: {e}") from e
    for row in rows:
        logger.info("%s: AUC-ROC %.3f±%.3f AUC-PR %.3f±%.3f F %.3f", row.name,
                    row.report.mean["auc_roc"], row.report.std["auc_roc"],
                    row.report.mean["auc_pr"], row.report.std["auc_pr"], row.report.mean["f_score"])
    return doc


def _train_and_score(dataset: Dataset, train_cfg: TrainConfig, train_idx, eval_name: str, threshold: float):
    train_part = dataset.cohort.subset(train_idx)
    model, _ = train(train_part, train_cfg)
    return model, _evaluate_model(model, dataset.part(eval_name), threshold)


def run_generate(cfg: ExperimentConfig, out) -> Path:
    out = Path(out)
    raw, schema, truth = generate_synthetic(cfg.data.synth)
    target = out / COHORT_DIR
    save_raw_cohort(raw, schema, target, truth)
    return target


def run_preprocess(cfg: ExperimentConfig, out) -> Path:
    out = Path(out)
    dataset = load_dataset(cfg)
    save_encoded(dataset.cohort, out / "encoded.bin")
    try:
        (out / "split.json").write_text(json.dumps(dataset.split.to_dict()))
    except OSError as e:
        raise DataFileError(f"cannot write split into {out}: {e}") from e
    return out / "encoded.bin"


def run_train(cfg: ExperimentConfig, out, dataset: Optional[Dataset] = None):
    out = Path(out)
    dataset = dataset or load_dataset(cfg)
    seeds = list(cfg.eval.seeds)

    def cell(seed):
        model, result = _train_and_score(dataset, cfg.train_config(seed), dataset.split.train,
                                         cfg.eval.split, cfg.eval.threshold)
        save_checkpoint(model, _checkpoint_path(out, seed))
        return result, _evaluate_model(model, dataset.part("val"), cfg.eval.threshold)

    outcomes = run_cells(seeds, cell, cfg.experiment.workers)
    rows = [
        ReportRow("train", {"split": cfg.eval.split}, aggregate_runs([o[0] for o in outcomes]), seeds),
        ReportRow("train", {"split": "val"}, aggregate_runs([o[1] for o in outcomes]), seeds),
    ]
    return write_report(out, "train", cfg, rows)


def run_evaluate(cfg: ExperimentConfig, out, dataset: Optional[Dataset] = None):
    out = Path(out)
    seeds = list(cfg.eval.seeds)
    paths = [_checkpoint_path(out, seed) for seed in seeds]
    missing = [str(p) for p in paths if not p.is_file()]
    if missing:
        raise DataFileError(f"missing checkpoints {missing}; run the train subcommand first")
    dataset = dataset or load_dataset(cfg)
    part = dataset.part(cfg.eval.split)
    results = [_evaluate_model(load_checkpoint(p), part, cfg.eval.threshold) for p in paths]
    rows = [ReportRow("evaluate", {"split": cfg.eval.split}, aggregate_runs(results), seeds)]
    return write_report(out, "evaluate", cfg, rows)


def run_ablate(cfg: ExperimentConfig, out, dataset: Optional[Dataset] = None):
    out = Path(out)
    dataset = dataset or load_dataset(cfg)
    seeds = list(cfg.eval.seeds)
    cells = [(name, seed) for name in ABLATIONS for seed in seeds]

    def cell(item):
        name, seed = item
        return _train_and_score(dataset, cfg.train_config(seed).ablation(name), dataset.split.train,
                                cfg.eval.split, cfg.eval.threshold)[1]

    results = run_cells(cells, cell, cfg.experiment.workers)
    rows = []
    for k, name in enumerate(ABLATIONS):
        chunk = results[k * len(seeds):(k + 1) * len(seeds)]
        use_l_a, use_l_o, use_aug = ABLATIONS[name]
        labels = {"use_l_a": use_l_a, "use_l_o": use_l_o, "use_augmentation": use_aug}
        rows.append(ReportRow(name, labels, aggregate_runs(chunk), seeds))
    return write_report(out, "ablate", cfg, rows)


def run_sample_efficiency(cfg: ExperimentConfig, out, dataset: Optional[Dataset] = None):
    """
    Train the full model and the LSTM baseline on nested stratified fractions
    of the training split; every cell is scored on the same test split.
    """
    out = Path(out)
    dataset = dataset or load_dataset(cfg)
    seeds = list(cfg.eval.seeds)
    train_labels = dataset.cohort.labels[dataset.split.train]
    cells = [(fraction, method, seed)
             for fraction in cfg.experiment.fractions for method in EFFICIENCY_METHODS for seed in seeds]

    def cell(item):
        fraction, method, seed = item
        # a fresh, identically seeded stream per fraction keeps the subsets nested
        picked = stratified_subsample(train_labels, fraction, make_rng(seed, STREAM_SUBSAMPLE))
        train_idx = dataset.split.train[picked]
        train_cfg = cfg.train_config(seed).ablation(EFFICIENCY_METHODS[method])
        n_pos = int(train_labels[picked].sum())
        if train_cfg.use_augmentation and n_pos < 2:
            raise SubsampleError(f"fraction {fraction} leaves {n_pos} positive in the training split; "
                                 "augmentation needs at least 2")
        return _train_and_score(dataset, train_cfg, train_idx, "test", cfg.eval.threshold)[1]

    results = run_cells(cells, cell, cfg.experiment.workers)
    rows = []
    for k in range(0, len(cells), len(seeds)):
        fraction, method, _ = cells[k]
        rows.append(ReportRow(method, {"fraction": fraction}, aggregate_runs(results[k:k + len(seeds)]), seeds))
    return write_report(out, "sample_efficiency", cfg, rows)


def run_sensitivity(cfg: ExperimentConfig, out, dataset: Optional[Dataset] = None):
    """Vary alpha with beta at its default, then beta with alpha at its default"""
    out = Path(out)
    dataset = dataset or load_dataset(cfg)
    seeds = list(cfg.eval.seeds)
    grid: List[Tuple[str, float]] = [("alpha", a) for a in cfg.experiment.alpha_grid]
    grid += [("beta", b) for b in cfg.experiment.beta_grid]
    cells = [(param, value, seed) for param, value in grid for seed in seeds]

    def cell(item):
        param, value, seed = item
        base = cfg.train_config(seed).ablation(FULL_MODEL)
        train_cfg = replace(base, loss=replace(base.loss, **{param: value}))
        return _train_and_score(dataset, train_cfg, dataset.split.train, cfg.eval.split, cfg.eval.threshold)[1]

    results = run_cells(cells, cell, cfg.experiment.workers)
    rows = []
    for k, (param, value) in enumerate(grid):
        chunk = results[k * len(seeds):(k + 1) * len(seeds)]
        rows.append(ReportRow(f"{param}={value:g}", {"parameter": param, "value": value},
                              aggregate_runs(chunk), seeds))
    return write_report(out, "sensitivity", cfg, rows)


RUNNERS = {
    "train": run_train,
    "evaluate": run_evaluate,
    "ablate": run_ablate,
    "sample-efficiency": run_sample_efficiency,
    "sensitivity": run_sensitivity,
}
