"""
Pytest configuration and shared fixtures for all tests

This file contains common test fixtures and configuration
used across unit, integration, and e2e tests.
"""

import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
sys.path.insert(0, str(Path(__file__).parent.parent))

# Keep test logs out of the working tree; config.config reads this at import time
os.environ.setdefault("MORSE_LOG_DIR", str(Path(tempfile.gettempdir()) / "morse-insight-test-logs"))

from config.config import AnalysisConfig, Domain, SyntheticSpec
from MorseInsight.components.enclosure import FiberTable
from MorseInsight.components.grid import CellComplex1D
from MorseInsight.components.morse import Digraph

PROJECT_ROOT = Path(__file__).parent.parent
EXAMPLES_DIR = PROJECT_ROOT / "config" / "examples"


def random_fiber_ranges(complex_: CellComplex1D, rng: np.random.Generator, spread: float = 0.05):
    """
    Image ranges of a random continuous map, widened by ``spread``.

    Adjacent edges share the image of their common vertex, so the incident
    images of every vertex intersect.
    """
    c = complex_.domain
    values = rng.uniform(c.lower, c.upper, complex_.n_vertices)
    lo = np.clip(np.minimum(values[:-1], values[1:]) - spread, c.lower, c.upper)
    hi = np.clip(np.maximum(values[:-1], values[1:]) + spread, c.lower, c.upper)
    first, last, _ = complex_.locate_edges_many(lo, hi)
    return first, last


# --------------------------------------------------------------------------------
# Hand-built 8-edge fixtures on [0, 1]
# --------------------------------------------------------------------------------
# Two attracting edges (1 and 6) swapped by the map; period two
SWAP_FIRST = [6, 6, 5, 3, 2, 1, 1, 1]
SWAP_LAST = [6, 6, 6, 5, 3, 2, 1, 1]

# Attracting ends {0} and {7}, repelling middle {3, 4}
REPELLER_FIRST = [0, 0, 0, 2, 3, 6, 7, 7]
REPELLER_LAST = [0, 0, 1, 4, 5, 7, 7, 7]

# Weakly recurrent edge 3 drifting right into the attracting edge 7
DRIFT_FIRST = [1, 2, 3, 3, 5, 6, 7, 7]
DRIFT_LAST = [2, 3, 3, 4, 6, 7, 7, 7]


@pytest.fixture
def unit_domain():
    """Provide the unit interval domain"""
    return Domain(lower=0.0, upper=1.0)


@pytest.fixture
def complex8(unit_domain):
    """Provide an 8-edge complex on [0, 1]"""
    return CellComplex1D(unit_domain, 3)


def _fixture(complex_, first, last):
    fibers = FiberTable.from_ranges(complex_, first, last)
    return fibers, Digraph.from_fibers(fibers)


@pytest.fixture
def swap_fixture(complex8):
    """Provide (fibers, digraph) of the period-two swap map"""
    return _fixture(complex8, SWAP_FIRST, SWAP_LAST)


@pytest.fixture
def repeller_fixture(complex8):
    """Provide (fibers, digraph) of the map with a repelling middle"""
    return _fixture(complex8, REPELLER_FIRST, REPELLER_LAST)


@pytest.fixture
def drift_fixture(complex8):
    """Provide (fibers, digraph) of the drifting map"""
    return _fixture(complex8, DRIFT_FIRST, DRIFT_LAST)


@pytest.fixture
def sigmoid_spec():
    """Provide the arctan sigmoid used for the bistability example"""
    return SyntheticSpec(
        kind="arctan_sigmoid",
        params={"a": 0.3, "b": 8.0, "c": 4.0, "s": 0.5},
        n_samples=8,
        seed=3,
    )


@pytest.fixture
def small_config(sigmoid_spec):
    """Provide a quick bistability configuration (B=6)"""
    return AnalysisConfig(
        name="small",
        domain=Domain(lower=0.0, upper=1.0),
        B=6,
        delta_total=0.05,
        L=8.0,
        data={"synthetic": sigmoid_spec},
    )


@pytest.fixture
def example_config():
    """Load one of the shipped example configurations by name"""
    def _load(name: str) -> AnalysisConfig:
        return AnalysisConfig.model_validate_json((EXAMPLES_DIR / f"{name}.json").read_text())
    return _load


@pytest.fixture
def temp_output_dir(tmp_path):
    """Provide a temporary directory for reports and figures"""
    out = tmp_path / "out"
    out.mkdir()
    return out
