"""
PLS path modeling: alternating outer (measurement) and inner (structural)
approximation until the outer weights settle, then least squares inner
regressions for the path coefficients and R squared.

- path weighting inner scheme
- Mode A (correlation weights) for reflective, Mode B (regression weights) for formative blocks
- interaction terms as re-standardized products of the main-effects scores
"""
import logging
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from model_spec import Mode
from utils import ConvergenceError, NumericalError, SpecError, correlation, ols

logger = logging.getLogger(__name__)


class Parameter(NamedTuple):
    kind: str  # outer_weight, outer_loading, path or indirect
    label: str


def weight_label(indicator, construct):
    return f"{indicator} <- {construct}"


def path_label(source, target):
    return f"{source} -> {target}"


@dataclass(frozen=True)
class PlsEstimate:
    construct_names: list  # score columns, interaction terms last
    indicators: dict
    outer_weights: dict
    outer_loadings: dict
    scores: np.ndarray
    paths: dict  # (source, target) -> standardized coefficient
    r_squared_values: dict
    iterations_used: int

    def score(self, name):
        return self.scores[:, self.construct_names.index(name)]

    def scores_of(self, names):
        return self.scores[:, [self.construct_names.index(n) for n in names]]

    def path(self, source, target):
        try:
            return self.paths[(source, target)]
        except KeyError:
            raise SpecError(f"path {path_label(source, target)} was not estimated")

    def parameters(self):
        params = {}
        for name, inds in self.indicators.items():
            for ind, w, l in zip(inds, self.outer_weights[name], self.outer_loadings[name]):
                params[Parameter("outer_weight", weight_label(ind, name))] = float(w)
                params[Parameter("outer_loading", weight_label(ind, name))] = float(l)
        for (source, target), beta in self.paths.items():
            params[Parameter("path", path_label(source, target))] = float(beta)
        return params


def _scale(X, w):
    """
    Rescales weights so the composite has unit sample variance
    """
    y = X @ w
    sd = y.std(ddof=1)
    if not sd > 0:
        raise NumericalError("construct score has zero variance")
    return w / sd


def _inner_proxies(Y, m, names):
    """
    Path weighting: regression weights towards predecessors, correlations towards successors
    """
    index = {n: i for i, n in enumerate(names)}
    Z = np.empty_like(Y)
    for j, name in enumerate(names):
        preds = [index[p] for p in m.predecessors(name)]
        succs = [index[s] for s in m.successors(name)]
        z = np.zeros(Y.shape[0])
        if preds:
            coef, _ = ols(Y[:, j], Y[:, preds], name=f"inner weights of {name}")
            z += Y[:, preds] @ coef
        for s in succs:
            z += correlation(Y[:, j], Y[:, s]) * Y[:, s]
        if not preds and not succs:
            z = Y[:, j].copy()
        sd = z.std(ddof=1)
        if not sd > 0:
            raise NumericalError(f"inner proxy of {name} has zero variance")
        Z[:, j] = (z - z.mean()) / sd
    return Z


def _outer_weights(X, z, mode, name):
    if X.shape[1] == 1:
        return np.ones(1)
    if mode == Mode.FORMATIVE:
        coef, _ = ols(z, X, name=f"Mode B block of {name}")
        return coef
    return X.T @ z / (X.shape[0] - 1)


def _inner_regressions(scores, names, predictors_of):
    paths, r2 = {}, {}
    for target, preds in predictors_of.items():
        if not preds:
            continue
        coef, r2[target] = ols(scores[:, names.index(target)],
                               scores[:, [names.index(p) for p in preds]],
                               name=f"inner regression of {target}")
        for p, beta in zip(preds, coef):
            paths[(p, target)] = float(beta)
    return paths, r2


def estimate(m, d):
    """
    Main-effects PLS estimate of an expanded model spec on standardized data
    """
    if any(c.is_higher_order for c in m.constructs):
        raise SpecError("higher-order constructs must be expanded before estimation")
    names = m.construct_names
    blocks = [d.block(c.indicators) for c in m.constructs]
    modes = [c.mode for c in m.constructs]

    weights = [_scale(X, np.ones(X.shape[1])) for X in blocks]
    Y = np.column_stack([X @ w for X, w in zip(blocks, weights)])
    for iteration in range(1, m.max_iterations + 1):
        Z = _inner_proxies(Y, m, names)
        new_weights = [_scale(X, _outer_weights(X, Z[:, j], mode, names[j]))
                       for j, (X, mode) in enumerate(zip(blocks, modes))]
        change = max(np.max(np.abs(new - old)) for new, old in zip(new_weights, weights))
        weights = new_weights
        Y = np.column_stack([X @ w for X, w in zip(blocks, weights)])
        if change < m.tolerance:
            break
    else:
        raise ConvergenceError(f"PLS did not converge within {m.max_iterations} iterations "
                               f"(last weight change {change:.2e})")
    logger.debug("PLS converged after %d iterations", iteration)

    loadings = {c.name: X.T @ Y[:, j] / (X.shape[0] - 1)
                for j, (c, X) in enumerate(zip(m.constructs, blocks))}
    predictors_of = {name: m.predecessors(name) for name in names}
    paths, r2 = _inner_regressions(Y, names, predictors_of)
    return PlsEstimate(construct_names=list(names),
                       indicators={c.name: tuple(c.indicators) for c in m.constructs},
                       outer_weights={c.name: w for c, w in zip(m.constructs, weights)},
                       outer_loadings=loadings,
                       scores=Y,
                       paths=paths,
                       r_squared_values=r2,
                       iterations_used=iteration)


def build_interaction_scores(e, m):
    """
    Two-stage moderation: appends the standardized product of moderator and
    focal scores per interaction and re-runs the affected inner regressions
    """
    if not m.interactions:
        return e
    names = list(e.construct_names)
    columns = [e.scores]
    for inter in m.interactions:
        product = e.score(inter.moderator) * e.score(inter.focal)
        sd = product.std(ddof=1)
        if not sd > 1e-12:
            raise NumericalError(f"interaction term {inter.name} has zero variance")
        columns.append(((product - product.mean()) / sd)[:, None])
        names.append(inter.name)
    scores = np.hstack(columns)

    targets = sorted({inter.target for inter in m.interactions})
    predictors_of = {t: m.predecessors(t) + [p.source for p in m.interaction_paths if p.target == t]
                     for t in targets}
    new_paths, new_r2 = _inner_regressions(scores, names, predictors_of)
    paths = dict(e.paths)
    paths.update(new_paths)
    r2 = dict(e.r_squared_values)
    r2.update(new_r2)
    return replace(e, construct_names=names, scores=scores, paths=paths, r_squared_values=r2)


def fit(m, d):
    """
    Main effects followed by interaction terms; what the bootstrap re-runs per resample
    """
    return build_interaction_scores(estimate(m, d), m)


def r_squared(e, target):
    if target not in e.r_squared_values:
        raise SpecError(f"{target!r} is exogenous; it has no inner regression")
    return e.r_squared_values[target]
