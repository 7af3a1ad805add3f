"""
Greedy - Monte Carlo driven PMU placement search

Starting from an observable placement, each step tries every free bus,
scores it by the total error count of a Monte Carlo campaign and keeps the
best one. All candidates of a step share the same campaign seed, so they
are compared on identical scenarios.
"""
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from grid.model import Grid
from placement.observability import PlacementError, observability_particular
from signatures.library import SignatureKey, build_library, compute_signatures
from signatures.placement import Placement
from simulation.montecarlo import monte_carlo
from simulation.scenario import ScenarioConfig

logger = logging.getLogger(__name__)

Evaluator = Callable[[Placement, int], int]


class PlacementSearchConfig(BaseModel):
    initial: Placement
    target_size: int = Field(ge=1)
    runs: int = Field(100, ge=1)
    tstop: Optional[int] = Field(None, ge=2)
    seed: int = 0
    template: ScenarioConfig = ScenarioConfig()
    strict: bool = False
    workers: int = Field(1, ge=1)


class GreedyStep(BaseModel):
    step: int
    seed: int
    errors: Dict[int, int]
    chosen: Optional[int] = None
    baseline: Optional[int] = None


class GreedyResult(BaseModel):
    placement: Placement
    steps: List[GreedyStep] = []
    stopped_early: bool = False


def step_seed(seed: int, step: int) -> int:
    """Campaign seed shared by all candidates of one step"""
    return int(np.random.SeedSequence([seed, step]).generate_state(1)[0])


def monte_carlo_evaluator(
    grid: Grid,
    cfg: PlacementSearchConfig,
    signatures: Optional[Dict[SignatureKey, np.ndarray]] = None,
) -> Evaluator:
    """
    Total error count of cfg.runs random scenarios of cfg.tstop samples

    Without tstop the scenarios cover the template's 1000 s window.
    """
    signatures = signatures if signatures is not None else compute_signatures(grid)
    template = cfg.template.model_copy(update={"duration": cfg.tstop})

    def evaluate(placement: Placement, seed: int) -> int:
        library = build_library(grid, placement, signatures)
        report = monte_carlo(
            grid, template, cfg.runs, seed, cfg.workers, library, label=str(placement)
        )
        return report.total_errors

    return evaluate


def greedy_place(
    grid: Grid, cfg: PlacementSearchConfig, evaluator: Optional[Evaluator] = None
) -> GreedyResult:
    """
    Grow cfg.initial to cfg.target_size buses

    Ties go to the lowest bus id. With cfg.strict the search stops as soon
    as the best candidate does no better than the current placement.

    Raises:
        PlacementError: unobservable initial placement or a target outside
            [|P0|, n]
    """
    placement = cfg.initial
    if not placement.p <= cfg.target_size <= grid.n:
        raise PlacementError(
            f"Target size {cfg.target_size} outside [{placement.p}, {grid.n}]"
        )

    signatures = compute_signatures(grid)
    certificate = observability_particular(build_library(grid, placement, signatures))
    if not certificate.certified:
        raise PlacementError(f"Initial placement is not observable: {certificate.summary()}")

    evaluator = evaluator or monte_carlo_evaluator(grid, cfg, signatures)
    result = GreedyResult(placement=placement)
    step = 0
    while placement.p < cfg.target_size:
        seed = step_seed(cfg.seed, step)
        free = [b for b in grid.bus_ids[1:] if b not in placement.buses]
        errors = {bus: evaluator(placement.with_bus(bus), seed) for bus in free}
        chosen = min(free, key=lambda b: (errors[b], b))
        record = GreedyStep(step=step, seed=seed, errors=errors)

        if cfg.strict:
            record.baseline = evaluator(placement, seed)
            if errors[chosen] >= record.baseline:
                logger.warning(
                    f"Step {step}: best bus {chosen} ({errors[chosen]} errors) does not beat "
                    f"{placement} ({record.baseline} errors), stopping"
                )
                result.steps.append(record)
                result.stopped_early = True
                break

        record.chosen = chosen
        result.steps.append(record)
        placement = placement.with_bus(chosen)
        logger.info(f"Step {step}: added bus {chosen} ({errors[chosen]} errors), now {placement}")
        step += 1

    result.placement = placement
    return result


def audit_frame(result: GreedyResult) -> pd.DataFrame:
    rows = [
        {
            "step": s.step,
            "seed": s.seed,
            "bus": bus,
            "errors": count,
            "chosen": bus == s.chosen,
            "baseline": s.baseline,
        }
        for s in result.steps
        for bus, count in sorted(s.errors.items())
    ]
    return pd.DataFrame(rows, columns=["step", "seed", "bus", "errors", "chosen", "baseline"])


def write_audit(result: GreedyResult, path: Union[str, Path]) -> None:
    audit_frame(result).to_csv(path, index=False)
    logger.info(f"Wrote placement audit of {len(result.steps)} steps to {path}")
