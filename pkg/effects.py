"""
Mediation and moderation on top of a fitted model: indirect effects as products
of path coefficients (inferred from the per-replication products), total effects,
the sign/significance verdict of each interaction term and the R-squared gain
across nested models.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

import config
from bootstrap import chain_label, infer
from model_spec import PathRole, nested_specs
from pls_engine import Parameter, fit, path_label
from utils import is_significant

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IndirectEffect:
    chain: tuple
    estimate: float
    std_error: float = np.nan
    t: float = np.nan
    p: float = np.nan
    ci_lower: float = np.nan
    ci_upper: float = np.nan
    supported: bool = False

    @property
    def label(self):
        return chain_label(self.chain)

#-------------------- Mediation --------------------#

def enumerate_indirect(m):
    """
    Simple structural chains from a construct without incoming substantive paths
    to a final construct, carrying at least two non-composition edges.
    Composition edges (component -> higher-order) may lead a chain; control and
    interaction paths never take part.
    """
    structural = m.structural_paths
    successors = {}
    for p in structural:
        successors.setdefault(p.source, []).append(p)
    substantive_targets = {p.target for p in structural if not m.is_composition(p)}
    starts = sorted(name for name in successors if name not in substantive_targets)

    chains = []

    def walk(node, chain, substantive):
        nexts = successors.get(node, [])
        if not nexts:
            if substantive >= 2:
                chains.append(tuple(chain))
            return
        for p in nexts:
            if p.target in chain:
                continue
            walk(p.target, chain + [p.target], substantive + (not m.is_composition(p)))

    for start in starts:
        walk(start, [start], 0)
    return sorted(set(chains))


def indirect_effect(chain, e, b=None, alpha=config.SIGNIFICANCE_ALPHA, level=config.CONFIDENCE_LEVEL):
    """
    Product of the chain's path coefficients; with a bootstrap, inference uses the
    product of each replication's own coefficients
    """
    edges = list(zip(chain[:-1], chain[1:]))
    estimate = float(np.prod([e.path(s, t) for s, t in edges]))
    if b is None:
        return IndirectEffect(tuple(chain), estimate, supported=False)
    products = np.prod(np.column_stack([b.resample_vector(Parameter("path", path_label(s, t)))
                                        for s, t in edges]), axis=1)
    row = infer(products, estimate, level)
    return IndirectEffect(tuple(chain), estimate, row["std_error"], row["t"], row["p"],
                          row["ci_lower"], row["ci_upper"], is_significant(row["p"], alpha))


def indirect_report(m, e, b=None, alpha=None):
    alpha = m.significance_alpha if alpha is None else alpha
    level = b.level if b is not None else m.confidence_level
    effects = [indirect_effect(chain, e, b, alpha, level) for chain in enumerate_indirect(m)]
    logger.info("%d indirect effects, %d supported", len(effects), sum(x.supported for x in effects))
    return effects


def total_effects(e, m):
    """
    Direct plus all indirect effects, (I - B)^-1 - I over the main-effects path matrix
    """
    names = m.construct_names
    index = {n: i for i, n in enumerate(names)}
    B = np.zeros((len(names), len(names)))
    for p in m.main_paths:
        B[index[p.source], index[p.target]] = e.path(p.source, p.target)
    T = np.linalg.inv(np.eye(len(names)) - B) - np.eye(len(names))
    return pd.DataFrame(T, index=names, columns=names)

#-------------------- Moderation --------------------#

def moderation_verdict(coefficient, p, alpha=config.SIGNIFICANCE_ALPHA):
    sign = "positive" if coefficient > 0 else "negative" if coefficient < 0 else "zero"
    if p is None or not np.isfinite(p):
        return sign, False, f"{sign}, not tested"
    supported = is_significant(p, alpha)
    return sign, supported, f"{sign}, {'significant' if supported else 'not significant'} at {alpha:g}"


def moderation_report(e, b, m, alpha=None):
    alpha = m.significance_alpha if alpha is None else alpha
    rows = []
    for p in m.paths:
        if p.role != PathRole.INTERACTION:
            continue
        coefficient = e.path(p.source, p.target)
        if b is not None:
            inference = b.inference(Parameter("path", p.label))
            t, pvalue = inference["t"], inference["p"]
        else:
            t = pvalue = np.nan
        sign, supported, verdict = moderation_verdict(coefficient, pvalue, alpha)
        rows.append({"interaction": p.source, "target": p.target, "coefficient": coefficient,
                     "t": t, "p": pvalue, "sign": sign, "supported": supported, "verdict": verdict})
    return pd.DataFrame(rows, columns=["interaction", "target", "coefficient", "t", "p",
                                       "sign", "supported", "verdict"])

#-------------------- Nested Models --------------------#

@dataclass(frozen=True)
class NestedModel:
    label: str
    paths: tuple
    r_squared: dict
    # None where no earlier model explained the construct
    delta_r_squared: dict


def nested_models(m, d, full=None):
    """
    Fits each nested model on the same data; the comprehensive one reuses full
    when given. Delta R-squared is taken against the previous model that also
    explains the construct.
    """
    results, last = [], {}
    for label, sub in nested_specs(m):
        e = full if full is not None and sub is m else fit(sub, d)
        r2 = {name: float(value) for name, value in sorted(e.r_squared_values.items())}
        delta = {name: value - last[name] if name in last else None for name, value in r2.items()}
        last.update(r2)
        logger.info("%s model: %d paths, R-squared %s", label, len(sub.paths),
                    ", ".join(f"{n} {v:.3f}" for n, v in r2.items()))
        results.append(NestedModel(label, tuple(p.label for p in sub.paths), r2, delta))
    return results
