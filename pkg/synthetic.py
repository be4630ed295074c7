"""
Latent factor data generator for a model spec: draws construct scores in causal
order from the structural coefficients, then builds indicators per measurement
mode. The generator parameters are the ground truth of recovery checks.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from graphlib import TopologicalSorter

import numpy as np
import pandas as pd

import config
from model_spec import Mode
from utils import SpecError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratorParams:
    n: int
    loadings: dict = field(default_factory=dict)  # construct -> tuple of loadings (weights if formative)
    default_loading: float = 0.8
    paths: dict = field(default_factory=dict)  # (source, target) -> coefficient
    interactions: dict = field(default_factory=dict)  # (moderator, focal, target) -> coefficient
    noise_sd: dict = field(default_factory=dict)  # construct -> indicator error sd
    disturbance_sd: dict = field(default_factory=dict)  # construct -> structural disturbance sd
    formative_correlation: float = 0.3
    likert_levels: int = None


def _per_construct(value, names, where, check):
    """
    A single number for every construct or an object keyed by construct
    """
    if value is None:
        return {}
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        check(value, where)
        return {name: float(value) for name in names}
    if not isinstance(value, dict):
        raise SpecError(f"{where}: expected a number or an object keyed by construct")
    for name, v in value.items():
        if name not in names:
            raise SpecError(f"{where}.{name}: unknown construct")
        check(v, f"{where}.{name}")
    return {name: float(v) for name, v in value.items()}


def _non_negative(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
        raise SpecError(f"{where}: expected a non-negative number, got {value!r}")


def _loading(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or abs(value) > 1:
        raise SpecError(f"{where}: loading must be a number in [-1, 1], got {value!r}")


def parse_generator_params(doc, m):
    """
    Validates generator parameters (a JSON text or an already decoded object) against a model spec
    """
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as err:
            raise SpecError(f"malformed generator parameters at line {err.lineno}, column {err.colno}: {err.msg}")
    if not isinstance(doc, dict):
        raise SpecError("generator parameters: expected an object")
    unknown = sorted(set(doc) - config.GENERATOR_KEYS)
    if unknown:
        raise SpecError(f"generator parameters: unknown key(s) {unknown}")

    n = doc.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise SpecError(f"n: expected an integer of at least 2, got {n!r}")

    names = m.construct_names
    default_loading = doc.get("default_loading", 0.8)
    _loading(default_loading, "default_loading")
    loadings = {}
    for name, value in (doc.get("loadings") or {}).items():
        if name not in names:
            raise SpecError(f"loadings.{name}: unknown construct")
        k = len(m.construct(name).indicators)
        values = [value] * k if isinstance(value, (int, float)) and not isinstance(value, bool) else value
        if not isinstance(values, list) or len(values) != k:
            raise SpecError(f"loadings.{name}: expected one number or {k} numbers")
        for j, v in enumerate(values):
            _loading(v, f"loadings.{name}[{j}]")
        loadings[name] = tuple(float(v) for v in values)

    declared = {(p.source, p.target) for p in m.main_paths}
    paths = {}
    for i, item in enumerate(doc.get("paths") or []):
        key = (item.get("source"), item.get("target"))
        if key not in declared:
            raise SpecError(f"paths[{i}]: {key[0]} -> {key[1]} is not a path of the model")
        coefficient = item.get("coefficient")
        if isinstance(coefficient, bool) or not isinstance(coefficient, (int, float)):
            raise SpecError(f"paths[{i}].coefficient: expected a number")
        paths[key] = float(coefficient)

    declared = {(x.moderator, x.focal, x.target) for x in m.interactions}
    interactions = {}
    for i, item in enumerate(doc.get("interactions") or []):
        key = (item.get("moderator"), item.get("focal"), item.get("target"))
        if key not in declared:
            raise SpecError(f"interactions[{i}]: {key} is not an interaction of the model")
        coefficient = item.get("coefficient")
        if isinstance(coefficient, bool) or not isinstance(coefficient, (int, float)):
            raise SpecError(f"interactions[{i}].coefficient: expected a number")
        interactions[key] = float(coefficient)

    rho = doc.get("formative_correlation", 0.3)
    if isinstance(rho, bool) or not isinstance(rho, (int, float)) or not 0 <= rho < 1:
        raise SpecError(f"formative_correlation: expected a number in [0, 1), got {rho!r}")
    levels = doc.get("likert_levels")
    if levels is not None and (isinstance(levels, bool) or not isinstance(levels, int) or levels < 2):
        raise SpecError(f"likert_levels: expected an integer of at least 2, got {levels!r}")

    return GeneratorParams(n=n, loadings=loadings, default_loading=float(default_loading),
                           paths=paths, interactions=interactions,
                           noise_sd=_per_construct(doc.get("noise_sd"), names, "noise_sd", _non_negative),
                           disturbance_sd=_per_construct(doc.get("disturbance_sd"), names, "disturbance_sd",
                                                         _non_negative),
                           formative_correlation=float(rho), likert_levels=levels)


def load_generator_params(path, m):
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as err:
        raise SpecError(f"{path}: cannot read generator parameters ({err})")
    return parse_generator_params(text, m)


def _coefficient(params, m, path):
    if (path.source, path.target) in params.paths:
        return params.paths[(path.source, path.target)]
    if m.is_composition(path):
        return 1 / math.sqrt(len(m.construct(path.target).composed_of))
    return 0.0


def _likert(column, levels):
    z = (column - column.mean()) / column.std(ddof=1)
    edges = np.linspace(-2.5, 2.5, levels + 1)[1:-1]
    return np.digitize(z, edges) + 1


def generate_synthetic(m, params, seed):
    """
    Indicator data frame (columns in declaration order) drawn from the model with the given parameters
    """
    rng = np.random.default_rng(seed)
    n = params.n
    order = TopologicalSorter({c.name: set(m.predecessors(c.name)) for c in m.constructs}).static_order()
    latent, columns = {}, {}

    for name in order:
        c = m.construct(name)
        loadings = np.array(params.loadings.get(name, (params.default_loading,) * len(c.indicators)))
        preds = m.predecessors(name)
        if c.mode == Mode.FORMATIVE and not preds and c.indicators:
            k = len(c.indicators)
            corr = np.full((k, k), params.formative_correlation) + (1 - params.formative_correlation) * np.eye(k)
            X = rng.multivariate_normal(np.zeros(k), corr, size=n)
            composite = X @ loadings
            latent[name] = (composite - composite.mean()) / composite.std(ddof=1)
            columns.update({ind: X[:, j] for j, ind in enumerate(c.indicators)})
            continue

        if preds:
            systematic = np.zeros(n)
            for p in m.main_paths:
                if p.target == name:
                    systematic += _coefficient(params, m, p) * latent[p.source]
            for (moderator, focal, target), coefficient in params.interactions.items():
                if target == name:
                    systematic += coefficient * latent[moderator] * latent[focal]
            sd = params.disturbance_sd.get(name, math.sqrt(max(1.0 - systematic.var(ddof=1), 0.0)))
            latent[name] = systematic + rng.normal(0.0, 1.0, n) * sd
        else:
            latent[name] = rng.normal(0.0, 1.0, n)

        for j, ind in enumerate(c.indicators):
            sd = params.noise_sd.get(name, math.sqrt(max(1.0 - loadings[j] ** 2, 0.0)))
            columns[ind] = loadings[j] * latent[name] + rng.normal(0.0, 1.0, n) * sd

    frame = pd.DataFrame({ind: columns[ind] for ind in m.first_order_indicators})
    if params.likert_levels:
        frame = pd.DataFrame({ind: _likert(frame[ind].to_numpy(), params.likert_levels)
                              for ind in frame.columns})
    logger.info("generated %d cases x %d indicators (seed %d)", n, frame.shape[1], seed)
    return frame


def write_synthetic(frame, path):
    frame.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
    logger.info("wrote synthetic data to %s", path)
    return path
