"""
Monte Carlo - Error statistics over randomized single-action scenarios

Run i draws everything from child i of SeedSequence(seed), so a shorter
campaign with the same seed reproduces the verdicts of a longer one, and
the report does not depend on how runs are spread over workers.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, computed_field

from grid.matrices import FactorizationError, TopologyCache
from grid.model import Grid
from grid.power_flow import PowerFlowDivergenceError
from signatures.library import SignatureLibrary, build_library, compute_signatures
from signatures.placement import Placement, load_placement
from simulation.constants import LOAD_INCREMENT_SD_KW, relative_load_sd
from simulation.scenario import (
    ScenarioConfig,
    ScenarioError,
    Verdict,
    child_seeds,
    random_transition,
    run_scenario,
)

logger = logging.getLogger(__name__)


class ErrorReport(BaseModel):
    """
    Tallies of one Monte Carlo campaign

    runs counts completed runs only; aborted runs are reported apart and
    left out of the percentage.
    """
    label: str = ""
    runs: int = 0
    non_detections: int = 0
    wrong_detections: int = 0
    decision_errors: int = 0
    aborted: int = 0

    @computed_field
    @property
    def total_errors(self) -> int:
        return self.non_detections + self.wrong_detections + self.decision_errors

    @computed_field
    @property
    def percent_errors(self) -> float:
        return 100.0 * self.total_errors / self.runs if self.runs else 0.0

    def record(self, verdict: Optional[Verdict]) -> None:
        if verdict is None:
            self.aborted += 1
            return
        self.runs += 1
        self.non_detections += int(verdict.non_detection)
        self.wrong_detections += int(verdict.wrong_detection)
        self.decision_errors += int(verdict.decision_error)


def simulate_run(
    grid: Grid,
    template: ScenarioConfig,
    library: SignatureLibrary,
    seed: np.random.SeedSequence,
    cache: Optional[TopologyCache] = None,
) -> Optional[Verdict]:
    """One randomized run; None when the run aborts"""
    draw_seed, run_seed = child_seeds(seed, 2)
    try:
        cfg = random_transition(grid, library, template, np.random.default_rng(draw_seed))
        return run_scenario(grid, cfg, library, seed=run_seed, cache=cache).verdict
    except (PowerFlowDivergenceError, FactorizationError, ScenarioError) as e:
        logger.error(f"Run {seed.spawn_key} aborted: {e}", exc_info=True)
        return None


def _simulate_batch(
    grid: Grid, template: ScenarioConfig, library: SignatureLibrary, seeds: List[np.random.SeedSequence]
) -> List[Optional[Verdict]]:
    cache = TopologyCache(grid)
    return [simulate_run(grid, template, library, s, cache) for s in seeds]


def run_verdicts(
    grid: Grid,
    template: ScenarioConfig,
    library: SignatureLibrary,
    n_runs: int,
    seed: Optional[int] = None,
    workers: int = 1,
) -> List[Optional[Verdict]]:
    """Verdicts in run order, whatever the number of workers"""
    if n_runs < 1:
        raise ValueError(f"Monte Carlo needs at least one run, got {n_runs}")
    seeds = np.random.SeedSequence(seed).spawn(n_runs)

    if workers <= 1:
        return _simulate_batch(grid, template, library, seeds)

    batches = [seeds[i::workers] for i in range(workers)]
    verdicts: List[Optional[Verdict]] = [None] * n_runs
    with ProcessPoolExecutor(max_workers=workers) as executor:
        results = executor.map(partial(_simulate_batch, grid, template, library), batches)
        for offset, batch in enumerate(results):
            verdicts[offset::workers] = batch
    return verdicts


def monte_carlo(
    grid: Grid,
    template: ScenarioConfig,
    n_runs: int,
    seed: Optional[int] = None,
    workers: int = 1,
    library: Optional[SignatureLibrary] = None,
    label: Optional[str] = None,
) -> ErrorReport:
    """
    Error tallies over n_runs random single-action scenarios

    Args:
        grid: feeder model
        template: scenario settings; sigma1 and transitions are redrawn per run
        n_runs: number of runs
        seed: campaign seed (falls back to template.seed)
        workers: process pool size
        library: prebuilt library on the template placement
        label: report label (defaults to the template label)
    """
    if library is None:
        library = build_library(grid, load_placement(template.placement, grid))
    seed = template.seed if seed is None else seed
    report = ErrorReport(label=label or template.label)
    for verdict in run_verdicts(grid, template, library, n_runs, seed, workers):
        report.record(verdict)

    logger.info(
        f"{report.label}: {report.total_errors} errors over {report.runs} runs "
        f"({report.percent_errors:.2f}%), {report.aborted} aborted"
    )
    return report


def frequency_label(frequency: float) -> str:
    return f"{100 * relative_load_sd(frequency):.2f} (f={frequency:g} Hz)"


def sweep(
    grid: Grid,
    template: ScenarioConfig,
    placements: Sequence[Placement],
    frequencies: Iterable[float] = tuple(sorted(LOAD_INCREMENT_SD_KW, reverse=True)),
    n_runs: int = 1000,
    seed: Optional[int] = None,
    workers: int = 1,
    noise_only: bool = True,
) -> Dict[str, List[ErrorReport]]:
    """
    Result tables, one per placement

    Each table starts with a measurement-noise-only row (static loads) and
    then one row per load statistics frequency. Every row spans 1000 s at
    its own sampling frequency unless the template fixes the duration.
    Signatures are computed once and restricted per placement.
    """
    signatures = compute_signatures(grid)
    frequencies = list(frequencies)
    tables = {}
    for placement in placements:
        library = build_library(grid, placement, signatures)
        base = template.model_copy(update={"placement": placement.name})
        rows = []
        if noise_only:
            cfg = base.model_copy(update={"noise": True, "load_variation": False})
            rows.append(monte_carlo(grid, cfg, n_runs, seed, workers, library, label="noise only"))
        for frequency in frequencies:
            cfg = base.model_copy(update={"frequency": frequency, "load_variation": True})
            rows.append(
                monte_carlo(grid, cfg, n_runs, seed, workers, library, label=frequency_label(frequency))
            )
        tables[placement.name] = rows
    return tables


def tau_sensitivity(
    grid: Grid,
    template: ScenarioConfig,
    taus: Iterable[int] = (3, 5, 8),
    n_runs: int = 1000,
    seed: Optional[int] = None,
    workers: int = 1,
    library: Optional[SignatureLibrary] = None,
) -> List[ErrorReport]:
    """Error rates of the noise-tolerant detector across cluster lengths"""
    if library is None:
        library = build_library(grid, load_placement(template.placement, grid))
    reports = []
    for tau in taus:
        detector = template.detector.model_copy(update={"tau": tau})
        cfg = template.model_copy(update={"detector": detector})
        reports.append(monte_carlo(grid, cfg, n_runs, seed, workers, library, label=f"tau={tau}"))
    return reports
