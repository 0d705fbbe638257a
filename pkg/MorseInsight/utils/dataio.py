import csv
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from config.config import Domain, SyntheticSpec
from MorseInsight.utils.logger import get_logger
from MorseInsight.utils.exceptions import DataFormatError, ValidationError
from MorseInsight.utils.validators import validate_sample_points
from utils.rng import generator_for

logger = get_logger("DataIO")


@dataclass(frozen=True, eq=False)
class TrainingData:
    """Noise-free samples (x_n, y_n) of the unknown map on a compact domain."""

    xs: np.ndarray
    ys: np.ndarray
    domain: Domain

    def __post_init__(self):
        x, y = validate_sample_points(self.xs, self.ys, self.domain)
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "xs", x)
        object.__setattr__(self, "ys", y)

    @classmethod
    def from_points(cls, points: Sequence[Tuple[float, float]], domain: Domain) -> "TrainingData":
        pts = list(points)
        return cls(
            xs=np.array([p[0] for p in pts], dtype=np.float64),
            ys=np.array([p[1] for p in pts], dtype=np.float64),
            domain=domain,
        )

    @property
    def points(self) -> List[Tuple[float, float]]:
        return [(float(x), float(y)) for x, y in zip(self.xs, self.ys)]

    def __len__(self) -> int:
        return int(self.xs.size)


# --------------------------------------------------------------------------------
# Data Source 1: Load Training Data From CSV
# --------------------------------------------------------------------------------
def load_csv(path: Union[str, Path], domain: Domain) -> TrainingData:
    """
    Read an ``x,y`` CSV file into validated training data.

    Row order is preserved. Numbers are parsed as float64 with a decimal
    point; blank lines are skipped.

    Raises:
        DataFormatError: missing file, bad header or malformed row (with line number)
        ValidationError: x outside the domain, duplicate x, fewer than two rows
    """
    path = Path(path)
    logger.info(f"Loading training data from {path}")

    if not path.is_file():
        raise DataFormatError(f"training data file not found: {path}", path=str(path))

    start_time = time.time()
    xs: List[float] = []
    ys: List[float] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "y"]:
            raise DataFormatError("expected header row 'x,y'", path=str(path), line_number=1)

        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise DataFormatError(
                    f"expected 2 columns, found {len(row)}", path=str(path), line_number=line
                )
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                raise DataFormatError(
                    f"non-numeric value in row {row!r}", path=str(path), line_number=line
                )
            xs.append(x)
            ys.append(y)

    data = TrainingData(xs=np.array(xs), ys=np.array(ys), domain=domain)
    logger.info(f"Loaded {len(data)} points from {path} in {time.time() - start_time:.3f} seconds")
    return data


# --------------------------------------------------------------------------------
# Data Source 2: Write Training Data To CSV
# --------------------------------------------------------------------------------
def write_csv(data: TrainingData, path: Union[str, Path]) -> Path:
    """Write ``x,y`` rows with 17 significant digits (exact float round-trip)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        handle.write("x,y\n")
        for x, y in zip(data.xs, data.ys):
            handle.write(f"{x:.17g},{y:.17g}\n")
    logger.info(f"Wrote {len(data)} points to {path}")
    return path


# --------------------------------------------------------------------------------
# Data Source 3: Synthetic Ground Truth
# --------------------------------------------------------------------------------
def evaluate(spec: SyntheticSpec, xs) -> np.ndarray:
    """Evaluate the ground-truth map of a synthetic spec at ``xs``."""
    x = np.asarray(xs, dtype=np.float64)
    p = spec.params
    if spec.kind == "logistic":
        return p["r"] * x * (1.0 - x)
    if spec.kind == "arctan_sigmoid":
        return p["a"] * np.arctan(p["b"] * x - p["c"]) + p["s"]
    if spec.kind == "gauss_bump":
        return p["h"] * np.exp(-p["w"] * (x - p["c"]) ** 2)
    knots = np.asarray(spec.knots, dtype=np.float64)
    return np.interp(x, knots[:, 0], knots[:, 1])


def generate(spec: SyntheticSpec, domain: Domain) -> TrainingData:
    """
    Draw ``spec.n_samples`` inputs i.i.d. uniform on the domain and evaluate
    the map exactly.

    The inputs come from the PCG64 stream keyed by (spec.seed, "data"), so the
    sample is a pure function of (spec, domain).
    """
    logger.info(f"Generating {spec.n_samples} {spec.kind} samples (seed={spec.seed})")
    rng = generator_for(spec.seed, "data")
    xs = domain.lower + domain.width * rng.random(spec.n_samples)
    return TrainingData(xs=xs, ys=evaluate(spec, xs), domain=domain)


# --------------------------------------------------------------------------------
# Data Source 4: Covering Radius
# --------------------------------------------------------------------------------
def covering_radius(
    data: Union[TrainingData, Sequence[float]],
    domain: Optional[Domain] = None,
) -> float:
    """
    Largest distance from a domain point to its nearest sample.

    Interior gaps contribute half their length; the two boundary gaps count
    in full.

    Args:
        data: TrainingData, or bare sample inputs together with ``domain``
        domain: Required when ``data`` is a bare sequence

    Returns:
        float: the covering radius gamma
    """
    if isinstance(data, TrainingData):
        xs, domain = data.xs, data.domain
    else:
        if domain is None:
            raise ValidationError("covering_radius needs a domain for bare inputs", field="domain")
        xs = np.asarray(data, dtype=np.float64).ravel()
        if xs.size == 0:
            raise ValidationError("covering_radius needs at least one point", field="points")

    ordered = np.sort(xs)
    gaps = [ordered[0] - domain.lower, domain.upper - ordered[-1]]
    if ordered.size > 1:
        gaps.append(float(np.max(np.diff(ordered))) / 2.0)
    return float(max(gaps))
