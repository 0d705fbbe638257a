"""
SVG figure of one analysis.

Data points are red, the posterior mean is a black polyline, G is drawn as
translucent blue rectangles (one per source edge and target edge), and the
Morse sets are colored bars under the x-axis with an inset listing their
Conley indices.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union
from xml.sax.saxutils import escape

import numpy as np

from config.config import Report
from MorseInsight.components.enclosure import Enclosure
from MorseInsight.components.gp import GpModel, predict_many
from MorseInsight.utils.dataio import TrainingData
from MorseInsight.utils.exceptions import PipelineError
from MorseInsight.utils.logger import get_logger

logger = get_logger("Figure")

PREAMBLE = """\
<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="%(width)d" height="%(height)d" viewBox="0 0 %(width)d %(height)d">
<rect x="0" y="0" width="%(width)d" height="%(height)d" style="fill:#ffffff"/>
"""

POSTAMBLE = """\
</svg>
"""

DATA_COLOR = "#d62728"
MEAN_COLOR = "#000000"
G_COLOR = "#1f4fbf"
AXIS_COLOR = "#333333"
MORSE_COLORS = ("#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f")

_LAYERS = ("axes", "g_cells", "mean", "data", "morse_bars", "inset")


@dataclass
class SvgScene:
    """Canvas plus named layers of SVG elements, written in layer order."""

    width: int = 800
    height: int = 640
    margin: int = 60
    bar_height: int = 6
    layers: Dict[str, List[str]] = field(default_factory=lambda: {name: [] for name in _LAYERS})
    x_range: Tuple[float, float] = (0.0, 1.0)
    y_range: Tuple[float, float] = (0.0, 1.0)

    @property
    def plot_bottom(self) -> float:
        return self.height - self.margin - 4 * self.bar_height

    def px(self, x) -> np.ndarray:
        lo, hi = self.x_range
        return self.margin + (np.asarray(x, dtype=np.float64) - lo) / (hi - lo) * (self.width - 2 * self.margin)

    def py(self, y) -> np.ndarray:
        lo, hi = self.y_range
        return self.plot_bottom - (np.asarray(y, dtype=np.float64) - lo) / (hi - lo) * (self.plot_bottom - self.margin)

    def rect(self, layer: str, x0: float, y0: float, x1: float, y1: float, style: str) -> None:
        self.layers[layer].append(
            '<rect x="%.3f" y="%.3f" width="%.3f" height="%.3f" style="%s"/>'
            % (min(x0, x1), min(y0, y1), abs(x1 - x0), abs(y1 - y0), style)
        )

    def circle(self, layer: str, x: float, y: float, radius: float, color: str) -> None:
        self.layers[layer].append(
            '<circle cx="%.3f" cy="%.3f" r="%.3f" style="fill:%s;stroke:none"/>' % (x, y, radius, color)
        )

    def line(self, layer: str, points, color: str, width: float = 1.0) -> None:
        self.layers[layer].append(
            '<polyline points="%s" style="fill:none;stroke:%s;stroke-width:%.2f"/>'
            % (" ".join("%.3f,%.3f" % (x, y) for x, y in points), color, width)
        )

    def text(self, layer: str, x: float, y: float, text: str, color: str = AXIS_COLOR, anchor: str = "start") -> None:
        self.layers[layer].append(
            '<text x="%.3f" y="%.3f" fill="%s" font-size="11" font-family="monospace" text-anchor="%s">%s</text>'
            % (x, y, color, anchor, escape(text))
        )

    def element_count(self, layer: str) -> int:
        return len(self.layers[layer])

    def to_string(self) -> str:
        body = "".join(item + "\n" for name in _LAYERS for item in self.layers[name])
        return PREAMBLE % {"width": self.width, "height": self.height} + body + POSTAMBLE

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.to_string(), encoding="utf-8")
        except OSError as e:
            raise PipelineError(f"could not write figure to {path}: {e}", stage="render") from e
        return path


def build_scene(report: Report, enclosure: Enclosure, data: TrainingData, model: GpModel) -> SvgScene:
    """Lay out every layer of the figure without touching the filesystem."""
    c = enclosure.complex
    v = c.vertices
    fibers = enclosure.fibers

    xs_mean = np.linspace(c.domain.lower, c.domain.upper, 4 * c.n_edges + 1)
    mean, _ = predict_many(model, xs_mean)
    y_lo = min(c.domain.lower, float(mean.min()), float(data.ys.min()))
    y_hi = max(c.domain.upper, float(mean.max()), float(data.ys.max()))
    scene = SvgScene(x_range=(c.domain.lower, c.domain.upper), y_range=(y_lo, y_hi))

    # axes
    x0, x1 = scene.px([c.domain.lower, c.domain.upper])
    y0, y1 = scene.py([y_lo, y_hi])
    scene.line("axes", [(x0, y0), (x1, y0)], AXIS_COLOR)
    scene.line("axes", [(x0, y0), (x0, y1)], AXIS_COLOR)
    scene.text("axes", x0, y0 + 4 * scene.bar_height + 16, f"{c.domain.lower:g}", anchor="middle")
    scene.text("axes", x1, y0 + 4 * scene.bar_height + 16, f"{c.domain.upper:g}", anchor="middle")
    scene.text("axes", x0 - 6, y0, f"{y_lo:g}", anchor="end")
    scene.text("axes", x0 - 6, y1, f"{y_hi:g}", anchor="end")

    # G: one rectangle per (source edge, target edge)
    px_v = scene.px(v)
    py_v = scene.py(v)
    style = f"fill:{G_COLOR};fill-opacity:0.35;stroke:none"
    for e in range(c.n_edges):
        for f in range(int(fibers.first[e]), int(fibers.last[e]) + 1):
            scene.rect("g_cells", px_v[e], py_v[f], px_v[e + 1], py_v[f + 1], style)

    scene.line("mean", zip(scene.px(xs_mean), scene.py(mean)), MEAN_COLOR, 1.2)

    for x, y in zip(scene.px(data.xs), scene.py(data.ys)):
        scene.circle("data", x, y, 3.5, DATA_COLOR)

    # Morse sets under the x-axis, one row per node
    conley = {s.label: s for s in report.conley}
    for i, node in enumerate(report.morse_graph.nodes):
        color = MORSE_COLORS[i % len(MORSE_COLORS)]
        row = y0 + scene.bar_height * (1 + i % 3)
        for lo, hi in node.intervals:
            scene.rect("morse_bars", scene.px(lo), row, scene.px(hi), row + scene.bar_height - 1,
                       f"fill:{color};stroke:none")
        index = conley.get(node.label)
        label = node.label if index is None else f"{node.label}: ({index.p0}, {index.p1}) {index.classification}"
        scene.text("inset", scene.margin + 8, scene.margin + 14 * (i + 1), label, color=color)

    logger.debug(
        f"Scene has {scene.element_count('g_cells')} G rectangles and "
        f"{scene.element_count('morse_bars')} Morse bars"
    )
    return scene


def render_svg(
    report: Report,
    enclosure: Enclosure,
    data: TrainingData,
    model: GpModel,
    path: Union[str, Path],
) -> Path:
    """
    Write the figure for one analysis.

    Raises:
        PipelineError: if the file cannot be written (stage "render")
    """
    scene = build_scene(report, enclosure, data, model)
    out = scene.save(path)
    logger.info(f"Figure written to {out}")
    return out
