"""
Second stage: a single-hidden-layer perceptron with sigmoid units fed with the
construct scores of the significant predictors, tenfold cross-validated, and
the input ranking by sensitivity (normalized importance).
"""
import logging
import math
import time
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.special import expit
from sklearn.model_selection import KFold
from tqdm import tqdm

import config
from pls_engine import Parameter
from utils import DataError, NumericalError, SpecError, is_significant, normalize_values, widen_degenerate

logger = logging.getLogger(__name__)

AVERAGE_ROW = "Average"
SD_ROW = "St. dev."
AVERAGE_IMPORTANCE_ROW = "Average importance"
NORMALIZED_IMPORTANCE_ROW = "Normalized importance"


def sigmoid(x):
    return expit(x)


@dataclass(frozen=True)
class MlpModel:
    W1: np.ndarray  # inputs x hidden
    b1: np.ndarray  # hidden
    W2: np.ndarray  # hidden
    b2: float
    x_lower: np.ndarray
    x_upper: np.ndarray
    y_lower: float
    y_upper: float

    @property
    def input_dim(self):
        return self.W1.shape[0]

    @property
    def hidden_dim(self):
        return self.W1.shape[1]

    @property
    def n_weights(self):
        return self.W1.size + self.b1.size + self.W2.size + 1

    def scale_inputs(self, X):
        return np.clip(normalize_values(X, self.x_lower, self.x_upper), 0.0, 1.0)

    def step(self, gradient, rate):
        return replace(self, W1=self.W1 - rate * gradient.W1, b1=self.b1 - rate * gradient.b1,
                       W2=self.W2 - rate * gradient.W2, b2=self.b2 - rate * gradient.b2)


class Gradient(NamedTuple):
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: float


@dataclass(frozen=True)
class FoldResult:
    fold: int
    n_train: int
    n_test: int
    sse_train: float
    rmse_train: float
    sse_test: float
    rmse_test: float
    training_time: float  # seconds, NaN unless timed
    train_rows: np.ndarray
    test_rows: np.ndarray


@dataclass(frozen=True)
class CrossValidation:
    folds: list
    models: list


@dataclass(frozen=True)
class SensitivityReport:
    inputs: list
    per_model: np.ndarray  # models x inputs, rows sum to 1
    mean_importance: np.ndarray
    normalized_importance: np.ndarray  # percent of the largest mean importance

    def to_frame(self):
        rows = pd.DataFrame(self.per_model, columns=self.inputs,
                            index=[str(i + 1) for i in range(len(self.per_model))])
        rows.loc[AVERAGE_IMPORTANCE_ROW] = self.mean_importance
        rows.loc[NORMALIZED_IMPORTANCE_ROW] = self.normalized_importance
        rows.index.name = "fold"
        return rows

#-------------------- Input Selection --------------------#

def ann_target(m):
    if m.ann.target is not None:
        return m.ann.target
    if len(m.outcomes) != 1:
        raise SpecError(f"ann.target: cannot infer the network target among outcomes {m.outcomes}")
    return m.outcomes[0]


def select_inputs(m, e, b=None, alpha=None):
    """
    Constructs with a chain of significant structural paths to the target, plus the
    moderator and focal construct of significant interactions on it with their own
    significant predecessors. Controls are left out and declaration order is kept.
    An explicit ann.inputs list wins.
    """
    if m.ann.inputs:
        return list(m.ann.inputs)
    alpha = m.significance_alpha if alpha is None else alpha
    target = ann_target(m)

    def significant(path):
        if b is None:
            return True
        return is_significant(b.inference(Parameter("path", path.label))["p"], alpha)

    if b is None:
        logger.warning("no bootstrap results: every structural predictor of %s enters the network", target)
    edges = [p for p in m.structural_paths if significant(p)]
    reached = {target}
    for inter in m.interactions:
        path = next(p for p in m.interaction_paths if p.source == inter.name)
        if inter.target == target and significant(path):
            reached.update((inter.moderator, inter.focal))
    frontier = list(reached)
    while frontier:
        node = frontier.pop()
        for p in edges:
            if p.target == node and p.source not in reached:
                reached.add(p.source)
                frontier.append(p.source)
    reached.discard(target)

    inputs = [name for name in m.construct_names if name in reached and not m.construct(name).control]
    if not inputs:
        raise SpecError(f"no significant predictors of {target} at alpha {alpha:g}; "
                        f"list the network inputs under ann.inputs")
    logger.info("network inputs for %s: %s", target, ", ".join(inputs))
    return inputs


def default_hidden_nodes(n_inputs, n_outputs=1):
    return math.ceil((n_inputs + n_outputs) / 2)


def check_sample_size(n_cases, n_inputs, hidden):
    n_weights = n_inputs * hidden + 2 * hidden + 1
    if n_cases < config.SAMPLE_SIZE_FACTOR * n_weights:
        logger.warning("%d cases is below %d x %d adjustable weights for the network",
                       n_cases, config.SAMPLE_SIZE_FACTOR, n_weights)
        return False
    return True

#-------------------- Network --------------------#

def _forward(model, Xs):
    H = sigmoid(Xs @ model.W1 + model.b1)
    return H, sigmoid(H @ model.W2 + model.b2)


def loss_and_gradient(model, Xs, ys):
    """
    Half the sum of squared errors on scaled data and its gradient by backpropagation
    """
    H, out = _forward(model, Xs)
    error = out - ys
    delta_out = error * out * (1 - out)
    delta_hidden = np.outer(delta_out, model.W2) * H * (1 - H)
    gradient = Gradient(W1=Xs.T @ delta_hidden, b1=delta_hidden.sum(axis=0),
                        W2=H.T @ delta_out, b2=float(delta_out.sum()))
    return 0.5 * float(error @ error), gradient


def initialize_mlp(X, y, hidden, rng):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    x_lower, x_upper = widen_degenerate(X.min(axis=0), X.max(axis=0))
    y_lower, y_upper = widen_degenerate(y.min(), y.max())
    n_inputs = X.shape[1]
    return MlpModel(W1=rng.uniform(-0.5, 0.5, (n_inputs, hidden)),
                    b1=rng.uniform(-0.5, 0.5, hidden),
                    W2=rng.uniform(-0.5, 0.5, hidden),
                    b2=float(rng.uniform(-0.5, 0.5)),
                    x_lower=x_lower, x_upper=x_upper,
                    y_lower=float(y_lower), y_upper=float(y_upper))


def train_from(model, X, y, epochs, rate):
    """
    Full-batch gradient descent. A step that raises the loss is rejected and the
    rate halved; an accepted step grows the rate by 5%.
    """
    Xs = model.scale_inputs(np.asarray(X, dtype=float))
    ys = normalize_values(np.asarray(y, dtype=float), model.y_lower, model.y_upper)
    loss, gradient = loss_and_gradient(model, Xs, ys)
    halvings = 0
    for _ in range(epochs):
        candidate = model.step(gradient, rate)
        new_loss, new_gradient = loss_and_gradient(candidate, Xs, ys)
        if not np.isfinite(new_loss):
            raise NumericalError(f"network training diverged at learning rate {rate:g}; try a lower rate")
        if new_loss > loss:
            rate *= 0.5
            halvings += 1
            continue
        model, loss, gradient = candidate, new_loss, new_gradient
        rate *= config.RATE_GROWTH
    logger.debug("trained %d epochs, final loss %.6g, %d rate halvings", epochs, loss, halvings)
    return model


def train_mlp(X, y, hidden, epochs=config.EPOCHS, rate=config.LEARNING_RATE, seed=config.DEFAULT_SEED):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise DataError(f"inputs of shape {X.shape} do not match a target of shape {y.shape}")
    if X.shape[0] < hidden + 2:
        raise DataError(f"{X.shape[0]} cases are too few for {hidden} hidden nodes")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("network inputs and target must be finite")
    model = initialize_mlp(X, y, hidden, np.random.default_rng(seed))
    return train_from(model, X, y, epochs, rate)


def predict(model, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.shape[1] != model.input_dim:
        raise DataError(f"expected {model.input_dim} inputs, got {X.shape[1]}")
    _, out = _forward(model, model.scale_inputs(X))
    y = model.y_lower + out * (model.y_upper - model.y_lower)
    return float(y[0]) if single else y

#-------------------- Cross-Validation --------------------#

def _train_fold(X, y, fold, train_rows, test_rows, hidden, epochs, rate, seed, timing):
    start = time.perf_counter()
    model = train_mlp(X[train_rows], y[train_rows], hidden, epochs, rate, seed=[seed, fold])
    elapsed = time.perf_counter() - start if timing else np.nan
    sse_train = float(np.sum((predict(model, X[train_rows]) - y[train_rows]) ** 2))
    sse_test = float(np.sum((predict(model, X[test_rows]) - y[test_rows]) ** 2))
    result = FoldResult(fold=fold + 1, n_train=len(train_rows), n_test=len(test_rows),
                        sse_train=sse_train, rmse_train=math.sqrt(sse_train / len(train_rows)),
                        sse_test=sse_test, rmse_test=math.sqrt(sse_test / len(test_rows)),
                        training_time=elapsed, train_rows=train_rows, test_rows=test_rows)
    return result, model


def kfold_cv(X, y, k=config.FOLDS, hidden=None, epochs=config.EPOCHS, rate=config.LEARNING_RATE,
             seed=config.DEFAULT_SEED, threads=1, timing=False):
    """
    Seeded shuffle into k disjoint folds; fold f trains on the other k-1 folds
    from weights drawn with the (seed, f) stream
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if k < 2:
        raise DataError(f"cross-validation needs at least 2 folds, got {k}")
    if X.shape[0] < 2 * k:
        raise DataError(f"{X.shape[0]} cases cannot fill {k} folds of at least 2 cases")
    hidden = hidden or default_hidden_nodes(X.shape[1])

    splits = list(KFold(n_splits=k, shuffle=True, random_state=seed).split(X))
    quiet = not logger.isEnabledFor(logging.INFO)
    trained = Parallel(n_jobs=threads, prefer="threads")(
        delayed(_train_fold)(X, y, fold, train_rows, test_rows, hidden, epochs, rate, seed, timing)
        for fold, (train_rows, test_rows) in enumerate(tqdm(splits, desc="folds", disable=quiet)))
    folds = [result for result, _ in trained]
    for f in folds:
        logger.info("fold %d: RMSE train %.4f, test %.4f", f.fold, f.rmse_train, f.rmse_test)
    return CrossValidation(folds=folds, models=[model for _, model in trained])


def fold_table(folds, timing=False):
    columns = ["n_train", "sse_train", "rmse_train", "n_test", "sse_test", "rmse_test", "training_time_s"]
    table = pd.DataFrame([[f.n_train, f.sse_train, f.rmse_train, f.n_test, f.sse_test, f.rmse_test,
                           f.training_time] for f in folds],
                         columns=columns, index=[str(f.fold) for f in folds], dtype=float)
    stats = table.copy()
    table.loc[AVERAGE_ROW] = stats.mean(axis=0)
    table.loc[SD_ROW] = stats.std(axis=0, ddof=1)
    if not timing:
        table["training_time_s"] = np.nan
    table.index.name = "fold"
    return table


def variance_explained(cv, X, y):
    """
    Percentage R^2 of the out-of-fold predictions pooled across folds
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    predictions = np.empty_like(y)
    for f, model in zip(cv.folds, cv.models):
        predictions[f.test_rows] = predict(model, X[f.test_rows])
    centred = y - y.mean()
    sst = centred @ centred
    if not sst > 0:
        raise DataError("variance explained is undefined for a constant target")
    residual = y - predictions
    return float(100.0 * (1.0 - residual @ residual / sst))

#-------------------- Sensitivity --------------------#

def input_derivatives(model, X):
    """
    d y_scaled / d x_scaled for every case and input
    """
    H, out = _forward(model, model.scale_inputs(X))
    hidden_slope = H * (1 - H) * model.W2
    return (out * (1 - out))[:, None] * (hidden_slope @ model.W1.T)


def derivative_importance(model, X):
    importance = np.mean(np.abs(input_derivatives(model, X)), axis=0)
    total = importance.sum()
    if not total > 0:
        raise NumericalError("degenerate network: every input derivative is zero")
    return importance / total


def garson_importance(model):
    """
    Garson's algorithm: input-hidden weight shares scaled by the hidden-output weights
    """
    W1 = np.abs(model.W1)
    # a hidden node without input weights passes nothing on
    fan_in = W1.sum(axis=0)
    shares = np.divide(W1, fan_in, out=np.zeros_like(W1), where=fan_in > 0)
    importance = (shares * np.abs(model.W2)).sum(axis=1)
    total = importance.sum()
    if not total > 0:
        raise NumericalError("degenerate network: all connection weights are zero")
    return importance / total


def sensitivity(models, X, rows=None, inputs=None, method="derivative"):
    """
    Per-model importance normalized to sum 1, its mean over models and the mean
    relative to the largest mean in percent. rows restricts each model to its
    own training cases.
    """
    if not models:
        raise NumericalError("sensitivity needs at least one trained network")
    if method not in config.IMPORTANCE_METHODS:
        raise SpecError(f"unknown importance method {method!r}")
    X = np.asarray(X, dtype=float)
    per_model = []
    for i, model in enumerate(models):
        if method == "garson":
            per_model.append(garson_importance(model))
        else:
            cases = X if rows is None else X[rows[i]]
            per_model.append(derivative_importance(model, cases))
    per_model = np.vstack(per_model)
    mean = per_model.mean(axis=0)
    inputs = list(inputs) if inputs is not None else [f"x{i + 1}" for i in range(X.shape[1])]
    idle = [name for name, value in zip(inputs, mean) if not value > 0]
    if idle:
        raise NumericalError(f"zero importance in every network for {', '.join(idle)}; drop from ann.inputs")
    return SensitivityReport(inputs=inputs, per_model=per_model, mean_importance=mean,
                             normalized_importance=100.0 * (mean / mean.max()))

