"""
Helpers shared by the estimation modules: the error hierarchy, column
standardizing, least squares, significance stars and pipeline stage labels.
"""
import logging
from contextlib import contextmanager
from pathlib import Path

import numpy as np

import config

logger = logging.getLogger(__name__)

#-------------------- Errors --------------------#

class FrpsaError(Exception):
    exit_code = 1


class DataError(FrpsaError):
    exit_code = config.EXIT_INPUT


class SpecError(FrpsaError):
    exit_code = config.EXIT_INPUT


class NumericalError(FrpsaError):
    exit_code = config.EXIT_NUMERICAL


class ConvergenceError(NumericalError):
    pass


class ReportIOError(FrpsaError):
    exit_code = config.EXIT_IO


class StageError(FrpsaError):
    """
    Wraps an error raised inside a pipeline stage, keeping the exit code of the cause
    """
    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = cause.exit_code


@contextmanager
def stage(label):
    logger.info("------ %s ------", label.upper())
    try:
        yield
    except StageError:
        raise
    except FrpsaError as err:
        raise StageError(label, err) from err
    except OSError as err:
        raise StageError(label, ReportIOError(str(err))) from err

#-------------------- Numerics --------------------#

def column_moments(values):
    """
    Per-column mean and sample (N-1) standard deviation
    """
    values = np.asarray(values, dtype=float)
    return values.mean(axis=0), values.std(axis=0, ddof=1)


def standardize_columns(values, names=None):
    """
    z-score every column with the sample standard deviation.
    A constant column raises a DataError naming it.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] < 2:
        raise DataError("at least 2 cases are needed to standardize")
    means, sds = column_moments(values)
    flat = np.flatnonzero(~(sds > 1e-12 * np.maximum(1.0, np.abs(means))))
    if flat.size:
        column = names[flat[0]] if names is not None else int(flat[0])
        raise DataError(f"zero variance in column {column!r}")
    return (values - means) / sds, means, sds


def correlation(a, b):
    a = a - a.mean()
    b = b - b.mean()
    return float(a @ b / np.sqrt((a @ a) * (b @ b)))


def ols(y, X, name=""):
    """
    Least squares of y on the columns of X (both centred, no intercept).
    Returns the coefficients and the coefficient of determination.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    coef, _, rank, sv = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1] or sv[-1] <= config.SINGULAR_RCOND * sv[0]:
        raise NumericalError(f"singular regressor matrix for {name} (perfect collinearity)")
    resid = y - X @ coef
    centred = y - y.mean()
    r2 = 1.0 - (resid @ resid) / (centred @ centred)
    return coef, float(np.clip(r2, 0.0, 1.0))


def normalize_values(non_normalized, lower=None, upper=None):
    """
    Min-max scale to [0,1]; a degenerate range becomes a unit window centred on the value
    """
    if lower is None:
        lower, upper = np.min(non_normalized, axis=0), np.max(non_normalized, axis=0)
    lower, upper = widen_degenerate(lower, upper)
    return (non_normalized - lower) / (upper - lower)


def widen_degenerate(lower, upper):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    flat = upper - lower <= 0
    return np.where(flat, lower - 0.5, lower), np.where(flat, upper + 0.5, upper)

#-------------------- Significance --------------------#

def is_significant(p, alpha):
    """
    An untested parameter (p None or NaN) is never significant; alpha of 1 keeps every tested one
    """
    if p is None or not np.isfinite(p):
        return False
    return bool(alpha >= 1.0 or p < alpha)


def significance_stars(p):
    if p is None or not np.isfinite(p):
        return ""
    for level, stars in config.STAR_LEVELS:
        if p < level:
            return stars
    return ""

#-------------------- Files --------------------#

def make_sure_dir_exists(dir_path):
    Path(dir_path).mkdir(parents=True, exist_ok=True)
    return Path(dir_path)
