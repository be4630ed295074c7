"""
Measurement model assessment in three steps:
reliability and convergent validity (Cronbach's alpha, composite reliability, AVE),
discriminant validity (cross-loadings) and collinearity (full-collinearity and
formative indicator VIFs), each checked against the usual thresholds.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from statsmodels.stats.outliers_influence import variance_inflation_factor

import config
from model_spec import Mode
from utils import DataError, NumericalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CrossLoadings:
    matrix: pd.DataFrame  # indicator x construct correlations
    owners: dict  # indicator -> constructs it measures
    dominance: pd.Series  # (construct, indicator) -> own loading beats every cross-loading

    def failures(self, construct):
        own = self.dominance.loc[construct]
        return list(own.index[~own.to_numpy(dtype=bool)])


@dataclass(frozen=True)
class MeasurementReport:
    reliability: pd.DataFrame  # index construct; mode, n_indicators, cronbach_alpha, composite_reliability, ave, vif
    cross_loadings: CrossLoadings = None
    indicator_vif: dict = None  # formative construct -> Series over its indicators

#-------------------- Reliability & Convergent Validity --------------------#

def cronbach_alpha(items):
    """
    Standardized alpha k*r / (1 + (k-1)*r) with r the mean inter-item correlation
    """
    items = np.asarray(items, dtype=float)
    if items.ndim != 2 or items.shape[1] < 2:
        raise DataError("Cronbach's alpha needs at least 2 items")
    if np.any(items.std(axis=0, ddof=1) <= 0):
        raise DataError("Cronbach's alpha is undefined for a zero-variance item")
    k = items.shape[1]
    corr = np.corrcoef(items, rowvar=False)
    r_bar = corr[np.triu_indices(k, 1)].mean()
    return float(k * r_bar / (1 + (k - 1) * r_bar))


def _check_loadings(loadings):
    loadings = np.asarray(loadings, dtype=float).ravel()
    if loadings.size == 0:
        raise DataError("no loadings given")
    if np.any(np.abs(loadings) > 1 + 1e-10):
        raise DataError(f"loadings must lie in [-1, 1], got {loadings.tolist()}")
    return loadings


def composite_reliability(loadings):
    loadings = _check_loadings(loadings)
    explained = loadings.sum() ** 2
    error = np.sum(1 - loadings ** 2)
    return float(explained / (explained + error))


def average_variance_extracted(loadings):
    loadings = _check_loadings(loadings)
    return float(np.mean(loadings ** 2))

#-------------------- Discriminant Validity --------------------#

def cross_loadings(e, d):
    """
    Correlation of every indicator with every construct score; an indicator
    passes when its loading on each construct it measures is strictly larger
    than its loading on every construct it does not measure
    """
    constructs = list(e.indicators)
    owners = {}
    for name in constructs:
        for ind in e.indicators[name]:
            owners.setdefault(ind, []).append(name)
    indicators = list(owners)

    X = d.block(indicators)
    Y = e.scores_of(constructs)
    matrix = pd.DataFrame(X.T @ Y / (d.n_cases - 1), index=indicators, columns=constructs)

    verdicts = {}
    for name in constructs:
        for ind in e.indicators[name]:
            others = [c for c in constructs if c not in owners[ind]]
            own = matrix.at[ind, name]
            verdicts[(name, ind)] = bool(all(own > matrix.at[ind, c] for c in others))
    dominance = pd.Series(verdicts, dtype=bool)
    dominance.index.names = ["construct", "indicator"]
    return CrossLoadings(matrix, owners, dominance)

#-------------------- Collinearity --------------------#

def _vif_series(frame, what):
    if frame.shape[1] < 2:
        raise DataError(f"VIF needs at least 2 {what}")
    values = frame.to_numpy(dtype=float)
    values = values - values.mean(axis=0)
    vifs = {}
    with np.errstate(divide="ignore", invalid="ignore"):
        for j, name in enumerate(frame.columns):
            vif = variance_inflation_factor(values, j)
            # R^2 within 1e-12 of one, or past it by rounding
            if not (np.isfinite(vif) and 0 < vif < 1e12):
                raise NumericalError(f"perfect collinearity: {name} is a linear combination of the other {what}")
            vifs[name] = float(max(vif, 1.0))
    return pd.Series(vifs, name="vif")


def full_collinearity_vif(scores):
    """
    VIF_j = 1 / (1 - R^2_j) regressing each construct score on all the others
    """
    return _vif_series(scores, "constructs")


def indicator_vif(d, construct):
    frame = pd.DataFrame(d.block(construct.indicators), columns=list(construct.indicators))
    return _vif_series(frame, f"indicators of {construct.name}")

#-------------------- Assessment --------------------#

def assess_measurement(m, e, d):
    rows = {}
    for c in m.constructs:
        loadings = e.outer_loadings[c.name]
        k = len(c.indicators)
        rows[c.name] = {
            "mode": c.mode.value,
            "n_indicators": k,
            "cronbach_alpha": cronbach_alpha(d.block(c.indicators)) if k >= 2 else np.nan,
            "composite_reliability": composite_reliability(np.clip(loadings, -1, 1)),
            "ave": average_variance_extracted(np.clip(loadings, -1, 1)),
            "vif": np.nan,
        }
    reliability = pd.DataFrame.from_dict(rows, orient="index")
    reliability.index.name = "construct"

    components = {comp for c in m.constructs for comp in c.composed_of}
    vif_names = [c.name for c in m.constructs if c.name not in components]
    if len(vif_names) >= 2:
        vifs = full_collinearity_vif(pd.DataFrame(e.scores_of(vif_names), columns=vif_names))
        reliability.loc[vifs.index, "vif"] = vifs

    block_vifs = {}
    for c in m.constructs:
        if c.mode == Mode.FORMATIVE and len(c.indicators) >= 2:
            block_vifs[c.name] = indicator_vif(d, c)
            high = block_vifs[c.name][block_vifs[c.name] >= config.VIF_THRESHOLD]
            if len(high):
                logger.warning("formative indicators of %s with VIF >= %g: %s",
                               c.name, config.VIF_THRESHOLD, ", ".join(high.index))
    return MeasurementReport(reliability, cross_loadings(e, d), block_vifs)


def threshold_verdict(alpha=np.nan, cr=np.nan, ave=np.nan, vif=np.nan, dominance_failures=()):
    """
    Pass/fail against alpha >= 0.7, CR >= 0.7, AVE >= 0.5, VIF < 5 and cross-loading
    dominance. Values that are not available (NaN) are not judged.
    """
    reasons = []
    if np.isfinite(alpha) and alpha < config.ALPHA_THRESHOLD:
        reasons.append(f"alpha < {config.ALPHA_THRESHOLD} ({alpha:.3f})")
    if np.isfinite(cr) and cr < config.CR_THRESHOLD:
        reasons.append(f"CR < {config.CR_THRESHOLD} ({cr:.3f})")
    if np.isfinite(ave) and ave < config.AVE_THRESHOLD:
        reasons.append(f"AVE < {config.AVE_THRESHOLD} ({ave:.3f})")
    if np.isfinite(vif) and not vif < config.VIF_THRESHOLD:
        reasons.append(f"VIF >= {config.VIF_THRESHOLD:g} ({vif:.3f})")
    if dominance_failures:
        reasons.append("cross-loading exceeds own loading for " + ", ".join(dominance_failures))
    return len(reasons) == 0, reasons


def threshold_report(r):
    verdicts = {}
    for name, row in r.reliability.iterrows():
        failures = r.cross_loadings.failures(name) if r.cross_loadings is not None else ()
        passed, reasons = threshold_verdict(alpha=row.get("cronbach_alpha", np.nan),
                                            cr=row.get("composite_reliability", np.nan),
                                            ave=row.get("ave", np.nan),
                                            vif=row.get("vif", np.nan),
                                            dominance_failures=failures)
        verdicts[name] = {"verdict": "pass" if passed else "fail", "reasons": "; ".join(reasons)}
    frame = pd.DataFrame.from_dict(verdicts, orient="index")
    frame.index.name = "construct"
    return frame
