"""
Case-resampling bootstrap over every PLS parameter: standard errors, t and
two-tailed normal p values, bias and bias-corrected percentile intervals.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.stats import norm
from tqdm import tqdm

import config
from pls_engine import Parameter, fit
from utils import FrpsaError, NumericalError

logger = logging.getLogger(__name__)

INFERENCE_COLUMNS = ["original_sample", "sample_mean", "bias", "std_error",
                     "t", "p", "ci_lower", "ci_upper", "flag"]


@dataclass(frozen=True)
class BootstrapResult:
    reps: int
    failed_reps: int
    level: float
    parameters: tuple  # column order of resamples
    estimates: np.ndarray
    resamples: np.ndarray  # successful reps x parameters
    summary: pd.DataFrame  # INFERENCE_COLUMNS, indexed by (kind, label)

    @property
    def successful_reps(self):
        return self.resamples.shape[0]

    def resample_vector(self, parameter):
        try:
            return self.resamples[:, self.parameters.index(parameter)]
        except ValueError:
            raise KeyError(f"no bootstrap distribution for {parameter.kind} {parameter.label}")

    def inference(self, parameter):
        return self.summary.loc[(parameter.kind, parameter.label)]


def bc_interval(resamples, estimate, level=config.CONFIDENCE_LEVEL):
    """
    Bias-corrected percentile interval. z0 is the normal quantile of the share of
    resamples below the estimate (ties count half); the endpoints are the empirical
    quantiles at Phi(2*z0 -/+ z) with linear interpolation.
    """
    resamples = np.asarray(resamples, dtype=float)
    if resamples.size == 0:
        raise NumericalError("bias-corrected interval of an empty resample vector")
    if not 0 < level < 1:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    if np.ptp(resamples) == 0:
        c = float(resamples[0])
        return c, c
    below = np.mean(resamples < estimate) + 0.5 * np.mean(resamples == estimate)
    if below <= 0 or below >= 1:
        raise NumericalError("all resamples lie on one side of the estimate; bias correction is infinite")
    z0 = norm.ppf(below)
    z = norm.ppf(1 - (1 - level) / 2)
    lower_q, upper_q = norm.cdf(2 * z0 - z), norm.cdf(2 * z0 + z)
    lo, hi = np.quantile(resamples, [lower_q, upper_q])
    return float(lo), float(hi)


def t_and_p(resamples, estimate):
    """
    t = estimate / SE with SE the sample sd of the resamples, p two-tailed from the
    standard normal. A zero SE gives an undefined (NaN) t and p = 0.
    """
    resamples = np.asarray(resamples, dtype=float)
    if resamples.size < 2:
        raise NumericalError("t statistic needs at least 2 resamples")
    se = resamples.std(ddof=1)
    if not se > 0:
        return np.nan, 0.0
    t = estimate / se
    return float(t), float(2 * norm.sf(abs(t)))


def infer(resamples, estimate, level=config.CONFIDENCE_LEVEL):
    """
    One row of the inference table
    """
    resamples = np.asarray(resamples, dtype=float)
    t, p = t_and_p(resamples, estimate)
    flags = []
    if np.isnan(t):
        flags.append("zero standard error")
    try:
        lo, hi = bc_interval(resamples, estimate, level)
    except NumericalError:
        lo = hi = np.nan
        flags.append("interval undefined")
    mean = float(resamples.mean())
    return {"original_sample": float(estimate), "sample_mean": mean, "bias": mean - estimate,
            "std_error": float(resamples.std(ddof=1)), "t": t, "p": p,
            "ci_lower": lo, "ci_upper": hi, "flag": "; ".join(flags)}


def chain_label(chain):
    return " -> ".join(chain)


def parameter_values(e, chains=()):
    values = e.parameters()
    for chain in chains:
        values[Parameter("indirect", chain_label(chain))] = float(
            np.prod([e.path(s, t) for s, t in zip(chain[:-1], chain[1:])]))
    return values


def _replicate(m, d, seed, r, parameters, chains):
    rng = np.random.default_rng([seed, r])
    rows = rng.integers(0, d.n_cases, size=d.n_cases)
    try:
        values = parameter_values(fit(m, d.resample(rows)), chains)
    except FrpsaError as err:
        logger.debug("replication %d failed: %s", r, err)
        return None
    return np.array([values[p] for p in parameters])


def run_bootstrap(m, d, reps, seed, threads=1, level=None, chains=()):
    """
    Resamples cases with replacement reps times, re-standardizes and re-fits the model.
    Replication r draws from its own stream seeded by (seed, r) so the result does
    not depend on the thread count.
    """
    if reps < 2:
        raise NumericalError(f"bootstrap needs at least 2 replications, got {reps}")
    if d.n_cases < 2:
        raise NumericalError("bootstrap needs at least 2 cases")
    level = m.confidence_level if level is None else level

    full = parameter_values(fit(m, d), chains)
    parameters = tuple(full)
    estimates = np.array([full[p] for p in parameters])

    logger.info("bootstrapping %d parameters over %d replications", len(parameters), reps)
    quiet = not logger.isEnabledFor(logging.INFO)
    draws = Parallel(n_jobs=threads, prefer="threads")(
        delayed(_replicate)(m, d, seed, r, parameters, chains)
        for r in tqdm(range(reps), desc="bootstrap", disable=quiet))

    kept = [v for v in draws if v is not None]
    failed = reps - len(kept)
    if failed:
        logger.warning("%d of %d bootstrap replications failed and were excluded", failed, reps)
    if failed > config.MAX_FAILED_FRACTION * reps or len(kept) < 2:
        raise NumericalError(f"unstable model: {failed} of {reps} bootstrap replications failed")
    resamples = np.vstack(kept)

    rows = [infer(resamples[:, j], estimates[j], level) for j in range(len(parameters))]
    summary = pd.DataFrame(rows, columns=INFERENCE_COLUMNS,
                           index=pd.MultiIndex.from_tuples(parameters, names=["kind", "label"]))
    for (kind, label), flag in summary["flag"].items():
        if "interval undefined" in flag:
            logger.warning("bootstrap %s %s: %s", kind, label, flag)
        elif flag:
            logger.debug("bootstrap %s %s: %s", kind, label, flag)
    return BootstrapResult(reps=reps, failed_reps=failed, level=level, parameters=parameters,
                           estimates=estimates, resamples=resamples, summary=summary)
