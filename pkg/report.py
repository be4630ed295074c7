"""
Report tables assembled from the upstream results and written as CSV or aligned
text, one file per table plus the run metadata.

table1_reliability        construct | mode, n_indicators, cronbach_alpha, composite_reliability, ave, vif, verdict, reasons
table2_cross_loadings     indicator | <one column per construct>, own_construct, dominant
table3_formative_weights  weight    | construct, indicator, original_sample, sample_mean, bias, std_error, t, p, ci_lower, ci_upper, indicator_vif, stars
table4_structural         path      | source, target, role, beta, std_error, t, p, stars, ci_lower, ci_upper, total_effect, target_r_squared, sign, verdict
table5_indirect           relationship | coefficient, std_error, t, p, ci_lower, ci_upper, supported
table6_ann_folds          fold (1..k, Average, St. dev.) | n_train, sse_train, rmse_train, n_test, sse_test, rmse_test, training_time_s
table7_sensitivity        fold (1..k, Average importance, Normalized importance) | <one column per network input>
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import joblib
import numpy as np
import pandas as pd
import scipy
import sklearn
import statsmodels

import config
from model_spec import Mode, PathRole
from pls_engine import Parameter, path_label, weight_label
from utils import ReportIOError, significance_stars

logger = logging.getLogger(__name__)

INFERENCE_COLUMNS = ["std_error", "t", "p", "ci_lower", "ci_upper"]


@dataclass
class FrpsaReport:
    tables: dict = field(default_factory=dict)  # table key -> DataFrame
    screening: object = None
    variance_explained: float = None
    meta: dict = field(default_factory=dict)

#-------------------- Table Builders --------------------#

def reliability_table(measurement, verdicts):
    return measurement.reliability.join(verdicts)


def cross_loading_table(cl):
    table = cl.matrix.copy()
    table.index.name = "indicator"
    table["own_construct"] = ["; ".join(cl.owners[ind]) for ind in table.index]
    table["dominant"] = [all(cl.dominance.loc[(owner, ind)] for owner in cl.owners[ind])
                         for ind in table.index]
    return table


def _inference(b, parameter):
    if b is None:
        return {"sample_mean": np.nan, "bias": np.nan, **{c: np.nan for c in INFERENCE_COLUMNS}}
    row = b.inference(parameter)
    return {"sample_mean": row["sample_mean"], "bias": row["bias"],
            **{c: row[c] for c in INFERENCE_COLUMNS}}


def formative_weights_table(m, e, b, measurement):
    rows = {}
    for c in m.constructs:
        if c.mode != Mode.FORMATIVE:
            continue
        vifs = measurement.indicator_vif.get(c.name)
        for ind, weight in zip(c.indicators, e.outer_weights[c.name]):
            label = weight_label(ind, c.name)
            inference = _inference(b, Parameter("outer_weight", label))
            rows[label] = {"construct": c.name, "indicator": ind, "original_sample": float(weight),
                           "sample_mean": inference["sample_mean"], "bias": inference["bias"],
                           "std_error": inference["std_error"], "t": inference["t"], "p": inference["p"],
                           "ci_lower": inference["ci_lower"], "ci_upper": inference["ci_upper"],
                           "indicator_vif": vifs[ind] if vifs is not None else np.nan,
                           "stars": significance_stars(inference["p"])}
    table = pd.DataFrame.from_dict(rows, orient="index",
                                   columns=["construct", "indicator", "original_sample", "sample_mean", "bias",
                                            "std_error", "t", "p", "ci_lower", "ci_upper", "indicator_vif",
                                            "stars"])
    table.index.name = "weight"
    return table


def structural_table(m, e, b, totals, moderation):
    verdicts = {row["interaction"]: row for _, row in moderation.iterrows()}
    rows = {}
    for p in m.paths:
        beta = e.path(p.source, p.target)
        inference = _inference(b, Parameter("path", p.label))
        if p.role == PathRole.INTERACTION:
            total = beta
            sign, verdict = verdicts[p.source]["sign"], verdicts[p.source]["verdict"]
        else:
            total = totals.at[p.source, p.target]
            sign = verdict = ""
        rows[path_label(p.source, p.target)] = {
            "source": p.source, "target": p.target, "role": p.role.value, "beta": beta,
            **{c: inference[c] for c in INFERENCE_COLUMNS},
            "stars": significance_stars(inference["p"]),
            "total_effect": total, "target_r_squared": e.r_squared_values.get(p.target, np.nan),
            "sign": sign, "verdict": verdict}
    table = pd.DataFrame.from_dict(rows, orient="index",
                                   columns=["source", "target", "role", "beta", "std_error", "t", "p", "stars",
                                            "ci_lower", "ci_upper", "total_effect", "target_r_squared",
                                            "sign", "verdict"])
    table.index.name = "path"
    return table


def indirect_table(effects):
    table = pd.DataFrame([{"relationship": x.label, "coefficient": x.estimate, "std_error": x.std_error,
                           "t": x.t, "p": x.p, "ci_lower": x.ci_lower, "ci_upper": x.ci_upper,
                           "supported": x.supported} for x in effects],
                         columns=["relationship", "coefficient", "std_error", "t", "p",
                                  "ci_lower", "ci_upper", "supported"])
    return table.set_index("relationship")

#-------------------- Metadata --------------------#

def library_versions():
    return {"numpy": np.__version__, "pandas": pd.__version__, "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__, "statsmodels": statsmodels.__version__,
            "joblib": joblib.__version__}


def _json_safe(value):
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    return value

#-------------------- Writing --------------------#

def _write_table(table, path, fmt):
    if fmt == "csv":
        table.to_csv(path, float_format=config.CSV_FLOAT_FORMAT, lineterminator="\n")
    else:
        text = table.to_string(float_format=config.TEXT_FLOAT_FORMAT.format, na_rep="")
        path.write_text(text + "\n", encoding="utf-8")


def emit_report(r, out_dir, fmt="csv"):
    """
    Writes every table of the report and meta.json into out_dir; returns the written paths
    """
    if fmt not in config.REPORT_FORMATS:
        raise ValueError(f"unknown report format {fmt!r}")
    out_dir = Path(out_dir)
    suffix = ".csv" if fmt == "csv" else ".txt"
    written = []
    try:
        for key in config.STAGE_ONE_TABLES + config.STAGE_TWO_TABLES:
            if key not in r.tables:
                continue
            path = out_dir / (config.TABLE_FILE_NAMES[key] + suffix)
            _write_table(r.tables[key], path, fmt)
            written.append(path)
        meta_path = out_dir / config.META_FILE_NAME
        meta_path.write_text(json.dumps(_json_safe(r.meta), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(meta_path)
    except OSError as err:
        raise ReportIOError(f"cannot write report to {out_dir}: {err}")
    logger.info("wrote %d files to %s", len(written), out_dir)
    return written
