"""
End-to-end analysis: data, surrogate, enclosure, Morse graph, Conley indices.

``run`` produces the JSON report of one experiment; ``run_detailed`` also
returns the intermediate objects (the figure needs the enclosure and the
data). ``validate`` repeats the analysis over seeded trials and measures how
often posterior paths, and the true map when known, stay inside G~.
"""

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from config.config import (
    MORSE_PATH_BATCH_SIZE,
    AnalysisConfig,
    ConleySummary,
    ConnectionSummary,
    DiagnosticsSummary,
    ModelSummary,
    MorseGraphSummary,
    MorseNodeSummary,
    Report,
    TrialSummary,
    ValidationSummary,
)
from MorseInsight.components.confidence import allocate, refinement_weights, region_weights
from MorseInsight.components.conley import (
    ConleyIndex,
    ConleyIndexer,
    ConnectionResult,
    interpret,
)
from MorseInsight.components.enclosure import Enclosure, EnclosureDiagnostics, assemble, paths_inside
from MorseInsight.components.gp import GpModel, fit, path_sampler, predict_many
from MorseInsight.components.grid import CellComplex1D
from MorseInsight.components.morse import (
    Digraph,
    MorseGraph,
    format_intervals,
    morse_graph,
    morse_set_intervals,
    verify_attractor_lattice,
)
from MorseInsight.utils import finite_field as ff
from MorseInsight.utils.dataio import TrainingData, evaluate, generate, load_csv
from MorseInsight.utils.exceptions import ConfigurationError, MorseInsightError, PipelineError
from MorseInsight.utils.logger import get_logger
from utils.rng import RandomStreams

logger = get_logger("Pipeline")


@dataclass
class AnalysisResult:
    """Report plus the objects it was computed from."""

    report: Report
    data: TrainingData
    model: GpModel
    complex: CellComplex1D
    enclosure: Enclosure
    diagnostics: EnclosureDiagnostics
    digraph: Digraph
    morse_graph: MorseGraph
    indices: Dict[int, ConleyIndex] = field(default_factory=dict)
    connections: List[ConnectionResult] = field(default_factory=list)


@dataclass
class _Pass:
    enclosure: Enclosure
    diagnostics: EnclosureDiagnostics
    digraph: Digraph
    morse_graph: MorseGraph
    indices: Dict[int, ConleyIndex]
    connections: List[ConnectionResult]


@contextmanager
def _stage(name: str, timings: Dict[str, float]) -> Iterator[None]:
    """Time a stage and re-raise its failures as PipelineError(stage=name)."""
    logger.info(f"Stage '{name}' started")
    start_time = time.time()
    try:
        yield
    except PipelineError:
        raise
    except MorseInsightError as e:
        raise PipelineError(
            f"stage '{name}' failed: {e.message}",
            stage=name,
            details={"error_type": type(e).__name__, **e.details},
        ) from e
    elapsed = time.time() - start_time
    timings[name] = timings.get(name, 0.0) + elapsed
    logger.info(f"Stage '{name}' finished in {elapsed:.3f} seconds")


# --------------------------------------------------------------------------------
# Stages
# --------------------------------------------------------------------------------
def load_data(config: AnalysisConfig) -> TrainingData:
    """Training data from the CSV file or the (seeded) synthetic generator."""
    if config.data.csv is not None:
        path = Path(config.data.csv)
        if not path.is_file():
            raise ConfigurationError(f"data file {path} does not exist", config_key="data.csv")
        return load_csv(path, config.domain)
    return generate(config.synthetic_spec(), config.domain)


def _check_interpolation(model: GpModel) -> Tuple[float, bool]:
    """Largest |mu(x_i) - y_i| and whether it is within 1e-6 (1 + max |y|)."""
    if model.degenerate:
        return 0.0, True
    mean, _ = predict_many(model, model.data.xs)
    residual = float(np.max(np.abs(mean - model.data.ys)))
    tolerance = 1e-6 * (1.0 + float(np.max(np.abs(model.data.ys))))
    if residual > tolerance:
        logger.warning(f"surrogate misses its data by {residual:.3g} (tolerance {tolerance:.3g})")
        return residual, False
    logger.debug(f"interpolation residual {residual:.3g}")
    return residual, True


def _weights_for(config: AnalysisConfig, complex_: CellComplex1D) -> Optional[np.ndarray]:
    if config.weights.mode == "regions":
        return region_weights(complex_.odd_midpoints(), config.weights.regions, config.weights.default_weight)
    return None


def _single_pass(
    config: AnalysisConfig,
    model: GpModel,
    complex_: CellComplex1D,
    weights: Optional[np.ndarray],
    timings: Dict[str, float],
) -> _Pass:
    with _stage("allocate", timings):
        radii = allocate(config.budget(), complex_.odd_midpoints(), weights)

    with _stage("enclosure", timings):
        enclosure, diagnostics = assemble(model, complex_, radii, config.L)

    with _stage("morse", timings):
        digraph = Digraph.from_fibers(enclosure.fibers)
        mg = morse_graph(digraph)
        checked = verify_attractor_lattice(mg, digraph)
        logger.debug(f"attractor lattice checks passed on {checked} attractors")

    with _stage("conley", timings):
        indices: Dict[int, ConleyIndex] = {}
        connections: List[ConnectionResult] = []
        if len(mg):
            indexer = ConleyIndexer(complex_, enclosure.fibers, digraph, mg)
            indices = {i: indexer.conley_index(i) for i in range(len(mg))}
            connections = [indexer.connecting_orbit(u, l) for u, l in mg.hasse_edges()]

    return _Pass(enclosure, diagnostics, digraph, mg, indices, connections)


# --------------------------------------------------------------------------------
# Report assembly
# --------------------------------------------------------------------------------
def _lifted(matrix: np.ndarray) -> List[List[int]]:
    m = ff.as_field(matrix)
    return np.where(m > ff.P // 2, m - ff.P, m).tolist()


def _conley_summary(label: str, index: ConleyIndex) -> ConleySummary:
    cls = interpret(index)
    p0, p1 = index.text()
    return ConleySummary(
        label=label,
        p0=p0,
        p1=p1,
        classification=cls.kind.value,
        period=cls.period,
        core_dims=[index.cores[0].dimension, index.cores[1].dimension],
        invariant_factors={
            str(k): [ff.poly_to_string(f) for f in factors] for k, factors in index.invariant_factors.items()
        },
        matrices={str(k): _lifted(index.matrices[k]) for k in (0, 1)},
    )


def _morse_summary(mg: MorseGraph, complex_: CellComplex1D) -> MorseGraphSummary:
    nodes = []
    for i, cells in enumerate(mg.nodes):
        intervals = morse_set_intervals(complex_, cells)
        nodes.append(MorseNodeSummary(
            label=mg.labels[i],
            cell_count=int(cells.size),
            intervals=intervals,
            intervals_text=format_intervals(intervals),
            minimal=mg.is_minimal(i),
            below=[mg.labels[j] for j in sorted(mg.below(i))],
        ))
    hasse = [(mg.labels[u], mg.labels[l]) for u, l in mg.hasse_edges()]
    return MorseGraphSummary(nodes=nodes, hasse=hasse)


def _diagnostics_summary(
    diagnostics: EnclosureDiagnostics,
    enclosure: Enclosure,
    interpolation: Tuple[float, bool],
) -> DiagnosticsSummary:
    return DiagnosticsSummary(
        max_fiber_diameter=diagnostics.max_fiber_diameter,
        ell=diagnostics.ell,
        epsilon=diagnostics.epsilon,
        fiber_diameter_bound=diagnostics.fiber_diameter_bound,
        fiber_diameter_bound_holds=diagnostics.fiber_diameter_bound_holds,
        gamma=diagnostics.gamma,
        variance_bound=diagnostics.variance_bound,
        max_posterior_sd=diagnostics.max_posterior_sd,
        variance_bound_holds=diagnostics.variance_bound_holds,
        required_L=diagnostics.required_L,
        g_tilde_contained=enclosure.g_tilde_contained,
        clipped_edges=diagnostics.clipped_edges,
        interpolation_residual=interpolation[0],
        interpolation_ok=interpolation[1],
    )


def _model_summary(model: GpModel) -> ModelSummary:
    return ModelSummary(
        beta_hat=model.beta_hat,
        sigma2_hat=model.sigma2_hat,
        theta_hat=model.theta_hat,
        n_samples=len(model.data),
        degenerate=model.degenerate,
    )


# --------------------------------------------------------------------------------
# Public entry points
# --------------------------------------------------------------------------------
def run_detailed(config: AnalysisConfig) -> AnalysisResult:
    """
    Run the whole analysis and keep the intermediate objects.

    Raises:
        PipelineError: wrapping the failing stage's error
    """
    logger.info(f"Analysis '{config.name}' started (B={config.grid_exponent}, L={config.L}, delta={config.delta_total})")
    start_time = time.time()
    timings: Dict[str, float] = {}

    with _stage("data", timings):
        data = load_data(config)

    with _stage("fit", timings):
        model = fit(data, config.kernel)
        interpolation = _check_interpolation(model)

    with _stage("grid", timings):
        complex_ = CellComplex1D(config.domain, config.grid_exponent)
        weights = _weights_for(config, complex_)

    result = _single_pass(config, model, complex_, weights, timings)
    passes = 1
    if config.weights.mode == "refine_minimal" and len(result.morse_graph):
        mg = result.morse_graph
        supports = [iv for i in mg.minimal_nodes() for iv in morse_set_intervals(complex_, mg.nodes[i])]
        logger.info(f"Refining the bands over {len(supports)} minimal support intervals")
        weights = refinement_weights(complex_, supports, config.weights.inner_weight)
        result = _single_pass(config, model, complex_, weights, timings)
        passes = 2

    with _stage("report", timings):
        mg = result.morse_graph
        report = Report(
            config=config,
            budget=config.budget(),
            lipschitz=config.lipschitz(),
            model=_model_summary(model),
            diagnostics=_diagnostics_summary(result.diagnostics, result.enclosure, interpolation),
            confidence_valid=result.enclosure.g_tilde_contained,
            refinement_passes=passes,
            morse_graph=_morse_summary(mg, complex_),
            conley=[_conley_summary(mg.labels[i], result.indices[i]) for i in sorted(result.indices)],
            connections=[
                ConnectionSummary(
                    upper=mg.labels[c.upper],
                    lower=mg.labels[c.lower],
                    connecting_orbit=c.connecting_orbit,
                    combined_p0=c.combined.text()[0],
                    combined_p1=c.combined.text()[1],
                )
                for c in result.connections
            ],
        )
    if config.report_timings:
        report = report.model_copy(update={"timings": {k: round(v, 6) for k, v in timings.items()}})

    logger.info(
        f"Analysis '{config.name}' finished: {len(mg)} Morse nodes, "
        f"confidence_valid={report.confidence_valid} in {time.time() - start_time:.3f} seconds"
    )
    return AnalysisResult(
        report=report,
        data=data,
        model=model,
        complex=complex_,
        enclosure=result.enclosure,
        diagnostics=result.diagnostics,
        digraph=result.digraph,
        morse_graph=mg,
        indices=result.indices,
        connections=result.connections,
    )


def run(config: AnalysisConfig) -> Report:
    """Run the analysis of one experiment and return its report."""
    return run_detailed(config).report


def validation_grid(config: AnalysisConfig) -> np.ndarray:
    """
    Validation grid at twice the edge resolution.

    Spacing is eps / 2, so the grid holds every vertex and every edge
    midpoint of the complex. That is 2^(B+1) intervals and 2^(B+1) + 1
    points: the extra point is the right end of the domain, which the
    fiber of the last vertex needs.
    """
    return np.linspace(config.domain.lower, config.domain.upper, 2 ** (config.grid_exponent + 1) + 1)


def _coverage(
    result: AnalysisResult,
    grid: np.ndarray,
    paths: int,
    streams: RandomStreams,
    trial: int,
) -> float:
    sampler = path_sampler(result.model, grid)
    inside = 0
    for batch, start in enumerate(range(0, paths, MORSE_PATH_BATCH_SIZE)):
        count = min(MORSE_PATH_BATCH_SIZE, paths - start)
        draws = sampler.draw(count, streams.fresh("paths", trial, batch))
        inside += int(np.count_nonzero(paths_inside(result.enclosure, grid, draws)))
    return inside / paths


def validate(config: AnalysisConfig, trials: int, paths: int) -> ValidationSummary:
    """
    Monte Carlo check of the enclosure's confidence level.

    Each trial reruns the analysis (with a fresh data seed for synthetic
    sources), samples ``paths`` posterior paths on the validation grid and
    records the fraction that stays inside G~. With a synthetic source the
    true map is checked on the same grid. Trials that fail are recorded with
    their error and left out of the averages.
    """
    if trials < 1 or paths < 1:
        raise ConfigurationError("trials and paths must be positive", config_key="validate")
    logger.info(f"Validation of '{config.name}' started: {trials} trials x {paths} paths")
    start_time = time.time()

    streams = RandomStreams(config.master_seed())
    grid = validation_grid(config)
    synthetic = config.data.synthetic is not None
    per_trial: List[TrialSummary] = []

    for t in range(trials):
        seed = int(streams.fresh("trial", t).integers(0, 2 ** 31 - 1))
        trial_config = config.model_copy(update={"seed": seed}) if synthetic else config
        try:
            result = run_detailed(trial_config)
            coverage = _coverage(result, grid, paths, streams, t)
            truth_inside: Optional[bool] = None
            if synthetic:
                truth = evaluate(trial_config.synthetic_spec(), grid)
                truth_inside = bool(paths_inside(result.enclosure, grid, truth)[0])
            per_trial.append(TrialSummary(
                trial=t,
                seed=seed,
                confidence_valid=result.report.confidence_valid,
                posterior_coverage=coverage,
                truth_inside=truth_inside,
                max_fiber_diameter=result.diagnostics.max_fiber_diameter,
            ))
            logger.debug(f"trial {t}: coverage={coverage:.4f}, truth_inside={truth_inside}")
        except MorseInsightError as e:
            logger.error(f"trial {t} failed: {e}")
            per_trial.append(TrialSummary(trial=t, seed=seed, error=str(e)))

    ok = [s for s in per_trial if s.error is None]
    truth = [s.truth_inside for s in ok if s.truth_inside is not None]
    summary = ValidationSummary(
        config=config,
        trials=trials,
        paths_per_trial=paths,
        grid_points=int(grid.size),
        mean_posterior_coverage=float(np.mean([s.posterior_coverage for s in ok])) if ok else None,
        truth_coverage_frequency=float(np.mean(truth)) if truth else None,
        confidence_valid_count=sum(1 for s in ok if s.confidence_valid),
        failed_trials=trials - len(ok),
        per_trial=per_trial,
    )
    logger.info(
        f"Validation finished: mean coverage {summary.mean_posterior_coverage}, "
        f"{summary.failed_trials} failed trials in {time.time() - start_time:.3f} seconds"
    )
    return summary
