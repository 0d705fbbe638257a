"""
Seeded runs of the bistability example

A handful of fixed seeds pin down both outcomes of `analyze`: certified runs
with two attracting fixed points around a repeller, and an uncertified run
whose G~ leaves the domain.
"""

import json

import pytest

from config.config import AnalysisConfig
from main import EXIT_OK, EXIT_UNCERTIFIED, main
from MorseInsight.components.pipeline import run
from tests.conftest import EXAMPLES_DIR

pytestmark = pytest.mark.e2e


def _covers(node, x):
    return any(lo <= x <= hi for lo, hi in node.intervals)


def _index(report, label):
    return next(c for c in report.conley if c.label == label)


@pytest.fixture(scope="module")
def bistability_reports():
    """Provide reports of the bistability example at seeds 0 through 3"""
    config = AnalysisConfig.model_validate_json((EXAMPLES_DIR / "bistability.json").read_text(encoding="utf-8"))
    return {seed: run(config.model_copy(update={"seed": seed})) for seed in range(4)}


class TestCertifiedSeeds:
    """Test suite for seeds whose enclosure stays inside the domain"""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_certified(self, bistability_reports, seed):
        """Test the certificate holds and nothing was clipped"""
        report = bistability_reports[seed]
        assert report.confidence_valid
        assert report.diagnostics.g_tilde_contained
        assert report.diagnostics.clipped_edges == 0

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_two_attracting_fixed_points(self, bistability_reports, seed):
        """Test two minimal nodes with index (x - 1, 0) around 0.125 and 0.875"""
        report = bistability_reports[seed]
        minimal = [n for n in report.morse_graph.nodes if n.minimal]
        assert len(minimal) == 2
        for node in minimal:
            index = _index(report, node.label)
            assert (index.p0, index.p1) == ("x - 1", "0")
            assert index.classification == "fixed_point"
        assert any(_covers(n, 0.125) for n in minimal)
        assert any(_covers(n, 0.875) for n in minimal)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_repeller_between(self, bistability_reports, seed):
        """Test a non-minimal node covers 0.5 with index (0, x - 1)"""
        report = bistability_reports[seed]
        repellers = [
            n for n in report.morse_graph.nodes
            if not n.minimal and _covers(n, 0.5)
            and (_index(report, n.label).p0, _index(report, n.label).p1) == ("0", "x - 1")
        ]
        assert repellers


class TestUncertifiedSeed:
    """Test suite for a seed whose enclosure leaves the domain"""

    def test_reported_uncertified(self, bistability_reports):
        """Test the report keeps the Morse graph but marks the certificate as failed"""
        report = bistability_reports[3]
        assert not report.confidence_valid
        assert not report.diagnostics.g_tilde_contained
        assert report.diagnostics.clipped_edges > 0

    def test_single_morse_set(self, bistability_reports):
        """Test the wide enclosure collapses to one Morse set over the whole domain"""
        nodes = bistability_reports[3].morse_graph.nodes
        assert [n.label for n in nodes] == ["M0"]
        assert nodes[0].intervals == [(0.0, 1.0)]

    @pytest.mark.parametrize("seed, code", [(0, EXIT_OK), (3, EXIT_UNCERTIFIED)])
    def test_exit_code(self, temp_output_dir, seed, code):
        """Test analyze exits 0 when certified and 2 when not, writing the report either way"""
        out = temp_output_dir / "report.json"
        svg = temp_output_dir / "fig.svg"
        argv = [
            "analyze", "--config", str(EXAMPLES_DIR / "bistability.json"),
            "--seed", str(seed), "--out", str(out), "--svg", str(svg),
        ]
        assert main(argv) == code
        report = json.loads(out.read_text(encoding="utf-8"))
        assert report["confidence_valid"] == (code == EXIT_OK)
        assert report["config"]["seed"] == seed
