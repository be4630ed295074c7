"""
Two-stage run: PLS-SEM (measurement, structural model, bootstrap, mediation and
moderation) followed by the neural network on the significant predictors.
Every stage runs under a label that errors carry; the output directory is
published atomically.
"""
import logging
import os
import shutil
import tempfile
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

import config
from ann_stage import (ann_target, check_sample_size, default_hidden_nodes, fold_table, kfold_cv,
                       select_inputs, sensitivity, variance_explained)
from bootstrap import chain_label, run_bootstrap
from dataset import load_dataset, screen_cases, standardize
from diagnostics import assess_measurement, threshold_report
from effects import enumerate_indirect, indirect_report, moderation_report, nested_models, total_effects
from model_spec import check_columns, expand_higher_order, load_spec
from pls_engine import fit
from report import (FrpsaReport, cross_loading_table, emit_report, formative_weights_table, indirect_table,
                    library_versions, reliability_table, structural_table)
from utils import SpecError, make_sure_dir_exists, stage

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunOptions:
    threads: int = 1
    fmt: str = "csv"
    skip_bootstrap: bool = False
    timing: bool = False
    delimiter: str = ","


@dataclass(frozen=True)
class PlsStage:
    spec: object  # expanded ModelSpec
    screening: object
    data: object  # StandardizedDataset
    estimate: object
    measurement: object
    verdicts: pd.DataFrame
    bootstrap: object  # None when skipped
    indirect: list
    totals: pd.DataFrame
    moderation: pd.DataFrame
    nested: list = ()

    def tables(self):
        return {"reliability": reliability_table(self.measurement, self.verdicts),
                "cross_loadings": cross_loading_table(self.measurement.cross_loadings),
                "formative_weights": formative_weights_table(self.spec, self.estimate, self.bootstrap,
                                                             self.measurement),
                "structural": structural_table(self.spec, self.estimate, self.bootstrap, self.totals,
                                               self.moderation),
                "indirect": indirect_table(self.indirect)}

    def scores_frame(self):
        return pd.DataFrame(self.estimate.scores, columns=self.estimate.construct_names)


@dataclass(frozen=True)
class AnnStage:
    inputs: list
    target: str
    hidden_nodes: int
    cv: object
    variance_explained: float
    sensitivity: object

    def tables(self, timing=False):
        return {"ann_folds": fold_table(self.cv.folds, timing), "sensitivity": self.sensitivity.to_frame()}


@contextmanager
def atomic_directory(out_dir):
    """
    Yields a temporary sibling of out_dir that replaces out_dir on success and is
    removed on failure
    """
    out_dir = Path(out_dir)
    parent = make_sure_dir_exists(out_dir.absolute().parent)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if out_dir.exists():
        shutil.rmtree(out_dir)
    os.replace(tmp, out_dir)


def apply_overrides(m, overrides):
    """
    Command-line values win over the spec; None means not given
    """
    if not overrides:
        return m
    return m.with_overrides(**overrides)

#-------------------- Stage One --------------------#

def run_pls_stage(m, raw, options=RunOptions()):
    with stage("screen"):
        data, screening = screen_cases(raw)
    with stage("standardize"):
        check_columns(m, data.columns)
        d = standardize(data)
    with stage("expand"):
        m = expand_higher_order(m)
    with stage("estimate"):
        e = fit(m, d)
        logger.info("PLS converged after %d iterations", e.iterations_used)
    with stage("diagnostics"):
        measurement = assess_measurement(m, e, d)
        verdicts = threshold_report(measurement)
        failing = verdicts.index[verdicts["verdict"] == "fail"]
        if len(failing):
            logger.warning("measurement thresholds not met for %s", ", ".join(failing))
    chains = enumerate_indirect(m)
    with stage("bootstrap"):
        if options.skip_bootstrap:
            logger.info("bootstrap skipped; inference columns stay empty")
            b = None
        else:
            b = run_bootstrap(m, d, m.bootstrap_reps, m.seed, threads=options.threads,
                              level=m.confidence_level, chains=chains)
    with stage("effects"):
        indirect = indirect_report(m, e, b)
        totals = total_effects(e, m)
        moderation = moderation_report(e, b, m)
        nested = nested_models(m, d, full=e)
    return PlsStage(spec=m, screening=screening, data=d, estimate=e, measurement=measurement,
                    verdicts=verdicts, bootstrap=b, indirect=indirect, totals=totals, moderation=moderation,
                    nested=nested)

#-------------------- Stage Two --------------------#

def run_ann_stage(X, y, inputs, target, settings, seed, options=RunOptions()):
    hidden = settings.hidden_nodes or default_hidden_nodes(len(inputs))
    with stage("kfold_cv"):
        logger.info("network %d-%d-1 for %s on %d cases, %d folds", len(inputs), hidden, target,
                    len(y), settings.folds)
        check_sample_size(len(y), len(inputs), hidden)
        cv = kfold_cv(X, y, settings.folds, hidden, settings.epochs, settings.learning_rate, seed,
                      threads=options.threads, timing=options.timing)
        explained = variance_explained(cv, X, y)
        logger.info("out-of-fold variance explained: %.2f%%", explained)
    with stage("sensitivity"):
        report = sensitivity(cv.models, X, rows=[f.train_rows for f in cv.folds], inputs=inputs,
                             method=settings.importance)
    return AnnStage(inputs=list(inputs), target=target, hidden_nodes=hidden, cv=cv,
                    variance_explained=explained, sensitivity=report)


def ann_from_scores(pls):
    with stage("select_inputs"):
        m = pls.spec
        inputs = select_inputs(m, pls.estimate, pls.bootstrap)
        target = ann_target(m)
        if target in inputs:
            raise SpecError(f"ann.inputs: target {target!r} cannot also be an input")
    return pls.estimate.scores_of(inputs), pls.estimate.score(target), inputs, target

#-------------------- Metadata & Publishing --------------------#

def run_metadata(m, pls=None, ann=None, wall_time=None):
    meta = {"seed": m.seed, "significance_alpha": m.significance_alpha,
            "confidence_level": m.confidence_level, "versions": library_versions(),
            "wall_time_s": wall_time, "tables": []}
    if pls is not None:
        s = pls.screening
        meta["screening"] = {"received": s.received, "excluded": s.excluded, "valid": s.valid}
        meta["pls_iterations"] = pls.estimate.iterations_used
        meta["r_squared"] = dict(sorted(pls.estimate.r_squared_values.items()))
        b = pls.bootstrap
        meta["bootstrap"] = None if b is None else {"reps": b.reps, "successful_reps": b.successful_reps,
                                                    "failed_reps": b.failed_reps}
        meta["indirect_chains"] = [chain_label(x.chain) for x in pls.indirect]
        meta["nested_models"] = [{"model": n.label, "paths": list(n.paths), "r_squared": n.r_squared,
                                  "delta_r_squared": n.delta_r_squared} for n in pls.nested]
    if ann is not None:
        meta["ann"] = {"inputs": ann.inputs, "target": ann.target, "hidden_nodes": ann.hidden_nodes,
                       "folds": len(ann.cv.folds), "variance_explained_pct": ann.variance_explained}
    return meta


def publish(report, out_dir, options):
    with stage("report"):
        report.meta["tables"] = [config.TABLE_FILE_NAMES[k] for k in
                                 config.STAGE_ONE_TABLES + config.STAGE_TWO_TABLES if k in report.tables]
        with atomic_directory(out_dir) as tmp:
            emit_report(report, tmp, options.fmt)
    return report


def run_frpsa(spec_path, data_path, out_dir, overrides=None, options=RunOptions(), stages="all",
              scores_path=None):
    """
    load -> screen -> standardize -> expand -> estimate -> diagnostics -> bootstrap ->
    effects -> select_inputs -> kfold_cv -> sensitivity -> report.
    stages="pls" stops after the effects and reports tables 1-5; scores_path also
    saves the construct scores for a later stage-two run.
    """
    start = time.perf_counter()
    with stage("load"):
        m = apply_overrides(load_spec(spec_path), overrides)
        raw = load_dataset(data_path, options.delimiter)
    pls = run_pls_stage(m, raw, options)

    ann = None
    tables = pls.tables()
    if stages == "all":
        X, y, inputs, target = ann_from_scores(pls)
        ann = run_ann_stage(X, y, inputs, target, pls.spec.ann, pls.spec.seed, options)
        tables.update(ann.tables(options.timing))

    wall_time = time.perf_counter() - start if options.timing else None
    report = FrpsaReport(tables=tables, screening=pls.screening,
                         variance_explained=ann.variance_explained if ann is not None else None,
                         meta=run_metadata(pls.spec, pls, ann, wall_time))
    publish(report, out_dir, options)
    if scores_path is not None:
        with stage("report"):
            pls.scores_frame().to_csv(scores_path, index=False, float_format="%.10g", lineterminator="\n")
            logger.info("wrote construct scores to %s", scores_path)
    return report


def run_ann_on_scores(data_path, out_dir, m, inputs=None, target=None, options=RunOptions()):
    """
    Stage two alone on a CSV of construct scores
    """
    start = time.perf_counter()
    with stage("load"):
        data, screening = screen_cases(load_dataset(data_path, options.delimiter))
    with stage("select_inputs"):
        target = target or m.ann.target
        if target is None:
            raise SpecError("ann: name the target column (--target or ann.target)")
        inputs = list(inputs or m.ann.inputs or [c for c in data.columns if c != target])
        for name in inputs + [target]:
            if name not in data.columns:
                raise SpecError(f"ann: column {name!r} is not in {data_path}")
        if target in inputs:
            raise SpecError(f"ann: target {target!r} cannot also be an input")
        X = np.column_stack([data.column(name) for name in inputs])
        y = data.column(target)
    ann = run_ann_stage(X, y, inputs, target, m.ann, m.seed, options)
    wall_time = time.perf_counter() - start if options.timing else None
    meta = run_metadata(m, ann=ann, wall_time=wall_time)
    meta["screening"] = {"received": screening.received, "excluded": screening.excluded,
                         "valid": screening.valid}
    report = FrpsaReport(tables=ann.tables(options.timing), screening=screening,
                         variance_explained=ann.variance_explained, meta=meta)
    return publish(report, out_dir, options)
