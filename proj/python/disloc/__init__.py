"""Python front end for the layered dislocation lab.

Configs and reports are plain dicts; the numerics run in the C++ core.
"""

import json
from pathlib import Path

from . import _disloc
from ._disloc import (
    NumericalError,
    ValidationError,
    edge_integral_exact,
    elastic_cgo,
    experiment_kinds,
    sector_integral_exact,
    theta_matrix,
)

# installed wheels carry the configs; editable installs read them from the source tree
CONFIG_DIR = next(
    (d for d in (Path(__file__).parent / "configs", Path(__file__).resolve().parents[2] / "configs") if d.is_dir()),
    Path(__file__).parent / "configs",
)

__all__ = [
    "CONFIG_DIR",
    "NumericalError",
    "ValidationError",
    "edge_integral_exact",
    "elastic_cgo",
    "experiment_kinds",
    "load_config",
    "run",
    "sector_integral_exact",
    "theta_matrix",
    "thresholds",
    "verify",
]


def load_config(name):
    """Bundled acceptance config by file name, e.g. 'c11_jump_relations.json'."""
    return json.loads((CONFIG_DIR / name).read_text())


def thresholds():
    return json.loads(_disloc.thresholds_json())


def run(config, seed=None, threads=1, thresholds=None):
    """Run one experiment. Returns the report dict; CSV tables under report['csv']."""
    text = config if isinstance(config, str) else json.dumps(config)
    over = json.dumps(thresholds) if thresholds else ""
    return json.loads(_disloc.run_experiment_json(text, seed, threads, over))


def verify(criteria=(), thresholds=None):
    """Acceptance criteria as (number, passed, summary line) tuples."""
    over = json.dumps(thresholds) if thresholds else ""
    cfg = str(CONFIG_DIR) if CONFIG_DIR.is_dir() else ""
    return _disloc.verify(list(criteria), over, cfg)
