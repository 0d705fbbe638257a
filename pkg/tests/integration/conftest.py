"""
Shared fixtures for the integration tests

A full analysis takes a moment, so the bistability run is computed once
per module.
"""

import pytest

from config.config import AnalysisConfig, Domain, SyntheticSpec
from MorseInsight.components.pipeline import run_detailed


def quick_config(**overrides) -> AnalysisConfig:
    """Bistability experiment at B=6 with optional field overrides."""
    fields = dict(
        name="quick",
        domain=Domain(lower=0.0, upper=1.0),
        B=6,
        delta_total=0.05,
        L=8.0,
        data={"synthetic": SyntheticSpec(
            kind="arctan_sigmoid",
            params={"a": 0.3, "b": 8.0, "c": 4.0, "s": 0.5},
            n_samples=8,
            seed=3,
        )},
    )
    fields.update(overrides)
    return AnalysisConfig(**fields)


@pytest.fixture(scope="module")
def quick_result():
    """Provide the detailed result of the quick bistability run"""
    return run_detailed(quick_config())
