"""
Shared fixtures: small specs and data sets drawn from known factor models.
"""
import json
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT))

from dataset import Dataset, standardize  # noqa: E402
from model_spec import expand_higher_order, load_spec, parse_spec  # noqa: E402
from synthetic import generate_synthetic, parse_generator_params  # noqa: E402


def make_spec(constructs, paths=(), interactions=(), **sections):
    doc = {"constructs": constructs, "paths": list(paths), "interactions": list(interactions)}
    doc.update(sections)
    return parse_spec(json.dumps(doc))


def as_standardized(frame):
    return standardize(Dataset(list(frame.columns), frame.to_numpy(dtype=float)))


def simulate(m, params, seed):
    """
    Standardized data drawn from the generator for a spec
    """
    return as_standardized(generate_synthetic(m, parse_generator_params(params, m), seed))


@pytest.fixture
def replica_spec():
    return load_spec(ROOT / "data" / "replica_spec.json")


@pytest.fixture
def replica_params():
    return json.loads((ROOT / "data" / "replica_generator.json").read_text())


@pytest.fixture
def three_construct_spec():
    """
    A -> B -> C, three reflective indicators each
    """
    return make_spec([{"name": "A", "indicators": ["a1", "a2", "a3"]},
                      {"name": "B", "indicators": ["b1", "b2", "b3"]},
                      {"name": "C", "indicators": ["c1", "c2", "c3"]}],
                     paths=[{"source": "A", "target": "B"}, {"source": "B", "target": "C"}],
                     bootstrap={"reps": 50, "seed": 7})


@pytest.fixture
def three_construct_data(three_construct_spec):
    params = {"n": 400, "loadings": {"A": [0.9, 0.8, 0.7], "B": [0.9, 0.8, 0.7], "C": [0.9, 0.8, 0.7]},
              "paths": [{"source": "A", "target": "B", "coefficient": 0.5},
                        {"source": "B", "target": "C", "coefficient": 0.3}]}
    return simulate(three_construct_spec, params, seed=11)


@pytest.fixture
def expanded_replica(replica_spec):
    return expand_higher_order(replica_spec)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
