"""
Reading, screening and standardizing survey indicator data.
Cells that are empty or not numbers are missing; incomplete cases are removed listwise.
"""
import csv
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from utils import DataError, standardize_columns

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dataset:
    columns: list
    values: np.ndarray  # N x P, NaN marks a missing cell

    def __post_init__(self):
        if len(set(self.columns)) != len(self.columns):
            raise DataError("column names must be unique")
        if any(not str(name).strip() for name in self.columns):
            raise DataError("column names must be non-empty")
        if self.values.ndim != 2 or self.values.shape[1] != len(self.columns):
            raise DataError(f"values of shape {self.values.shape} do not match {len(self.columns)} columns")

    @property
    def n_cases(self):
        return self.values.shape[0]

    @property
    def missing(self):
        return np.isnan(self.values)

    def column(self, name):
        return self.values[:, self.columns.index(name)]

    def to_frame(self):
        return pd.DataFrame(self.values, columns=self.columns)


@dataclass(frozen=True)
class ScreeningSummary:
    received: int
    excluded: int
    valid: int


@dataclass(frozen=True)
class StandardizedDataset:
    columns: list
    values: np.ndarray
    means: np.ndarray
    sds: np.ndarray

    @property
    def n_cases(self):
        return self.values.shape[0]

    def column(self, name):
        return self.values[:, self.columns.index(name)]

    def block(self, names):
        idxs = [self.columns.index(name) for name in names]
        return self.values[:, idxs]

    def raw_values(self):
        return self.values * self.sds + self.means

    def resample(self, rows):
        """
        Re-standardized copy of the given rows (bootstrap resamples)
        """
        values, means, sds = standardize_columns(self.values[rows], self.columns)
        return StandardizedDataset(self.columns, values, means, sds)


def _check_row_widths(path, delimiter):
    """
    Every data row must have as many fields as the header; blank lines are skipped
    """
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle, delimiter=delimiter)
        width, row = None, 0
        for fields in reader:
            if not fields:
                continue
            if width is None:
                width = len(fields)
                continue
            row += 1
            if len(fields) != width:
                raise DataError(f"{path}: ragged row {row} (line {reader.line_num}) has {len(fields)} cells, "
                                f"the header has {width}")


def load_dataset(path, delimiter=","):
    """
    Reads a headed CSV. Ragged rows, duplicate header names and files without
    data rows are errors reporting the offending line.
    """
    try:
        _check_row_widths(path, delimiter)
        raw = pd.read_csv(path, sep=delimiter, header=None, dtype=str,
                          keep_default_na=False, skip_blank_lines=True, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DataError(f"{path}: file is empty")
    except (pd.errors.ParserError, csv.Error) as err:
        raise DataError(f"{path}: ragged row ({err})")
    except (OSError, UnicodeDecodeError) as err:
        raise DataError(f"{path}: cannot read file ({err})")

    header = [str(name).strip() for name in raw.iloc[0]]
    for col_idx, name in enumerate(header):
        if not name or name == "nan":
            raise DataError(f"{path}: empty header name in column {col_idx + 1}")
    seen = set()
    for col_idx, name in enumerate(header):
        if name in seen:
            raise DataError(f"{path}: duplicate header name {name!r} in column {col_idx + 1}")
        seen.add(name)

    body = raw.iloc[1:]
    if len(body) == 0:
        raise DataError(f"{path}: no data rows under the header")
    numeric = body.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    dataset = Dataset(header, numeric.to_numpy(dtype=float))
    logger.info("loaded %d cases x %d indicators from %s", dataset.n_cases, len(header), path)
    return dataset


def screen_cases(d):
    """
    Listwise deletion: keeps, in order, the rows without a missing cell
    """
    complete = ~d.missing.any(axis=1)
    summary = ScreeningSummary(received=d.n_cases,
                               excluded=int((~complete).sum()),
                               valid=int(complete.sum()))
    if summary.valid == 0:
        raise DataError(f"all {summary.received} cases have missing cells; dataset is empty")
    logger.info("received %d cases, excluded %d incomplete, %d valid",
                summary.received, summary.excluded, summary.valid)
    return Dataset(list(d.columns), d.values[complete]), summary


def standardize(d):
    if np.isnan(d.values).any():
        raise DataError("dataset has missing cells; screen cases before standardizing")
    values, means, sds = standardize_columns(d.values, d.columns)
    return StandardizedDataset(list(d.columns), values, means, sds)
