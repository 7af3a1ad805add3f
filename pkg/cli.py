#!/usr/bin/env python3
"""
TopoWatch CLI - Library building, offline detection, placement and Monte Carlo tools

Usage:
    python cli.py build-library --placement P7 --out data/libraries/P7.json
    python cli.py detect --sigma0 1,1,1,0,1 --in stream.csv --out events.csv
    python cli.py check-observability --placement P7 --particular
    python cli.py place --target-size 7 --runs 100 --out placement.json
    python cli.py montecarlo --placement P33 --freq 1 --noise on --runs 1000
    python cli.py simulate --scenario data/scenarios/switch_480s.json --trace-out trace.csv
    python cli.py sweep --placements P33,P15,P7 --runs 1000 --out-dir results/
    python cli.py serve
"""
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import yaml

from detection.stream import (
    read_measurement_stream,
    run_stream,
    score_clusters,
    write_events,
    write_measurement_stream,
)
from grid.model import Grid, SwitchStatus
from grid.network import load_network
from placement.greedy import PlacementSearchConfig, greedy_place, write_audit
from placement.observability import find_seed_placement, observability_full, observability_particular
from settings import Settings, configure_logging
from signatures.cache import load_library, save_library
from signatures.library import SignatureLibrary, build_library, compute_signatures
from signatures.placement import load_placement, save_placement
from simulation.montecarlo import monte_carlo, sweep, tau_sensitivity
from simulation.reports import emit_report, emit_trace, report_frame
from simulation.scenario import load_scenario, run_scenario

logger = logging.getLogger("topowatch")

DEFAULT_CONFIG = "config.yaml"


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError(f"expected 'on' or 'off', got {value!r}")
    return value == "on"


def _int_list(value: str) -> List[int]:
    return [int(v) for v in value.split(",") if v.strip()]


def _float_list(value: str) -> List[float]:
    return [float(v) for v in value.split(",") if v.strip()]


def load_settings(args) -> Settings:
    """Config file values; the default path may be absent, an explicit one may not"""
    settings = Settings(args.config)
    if args.config != DEFAULT_CONFIG or Path(args.config).exists():
        settings.load_config()
    configure_logging(args.log_level or settings.get_log_level())
    return settings


def load_grid(args, settings: Settings) -> Grid:
    return load_network(args.network) if args.network else settings.load_grid()


def resolve_library(args, settings: Settings, grid: Grid) -> SignatureLibrary:
    cache = getattr(args, "library", None) or settings.get_library_config().cache
    if cache:
        return load_library(cache, grid)
    placement = load_placement(args.placement or settings.get_library_config().placement, grid)
    return build_library(grid, placement, workers=settings.get_library_config().workers)


def detector_config(args, settings: Settings):
    config = settings.get_detection_config(args.mode)
    overrides = {
        "tau": args.tau,
        "min_proj": args.min_proj,
        "min_norm": args.min_norm,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return config.model_validate({**config.model_dump(), **overrides})


def cmd_build_library(args, settings: Settings) -> int:
    grid = load_grid(args, settings)
    placement = load_placement(args.placement or settings.get_library_config().placement, grid)
    workers = args.workers or settings.get_library_config().workers
    library = build_library(grid, placement, workers=workers)
    save_library(library, args.out)
    print(f"Library of {len(library)} signatures on {placement} written to {args.out}")
    return 0


def cmd_detect(args, settings: Settings) -> int:
    grid = load_grid(args, settings)
    library = resolve_library(args, settings, grid)
    config = detector_config(args, settings)
    sigma0 = SwitchStatus.parse(args.sigma0)
    grid.require_admissible(sigma0)

    samples = read_measurement_stream(args.input, library.placement)
    result = run_stream(library, config, sigma0, samples)
    write_events(result.events, args.out)
    if args.trace:
        emit_trace(result, args.trace)

    for event in result.events:
        print(
            f"sample {event.sample}: S{event.breaker} {event.sigma_before} -> "
            f"{event.sigma_after} (score {event.score:.4f})"
        )
    print(f"{len(result.events)} events over {len(samples)} samples")
    return 0


def cmd_check_observability(args, settings: Settings) -> int:
    grid = load_grid(args, settings)
    placement = load_placement(args.placement or settings.get_library_config().placement, grid)
    library = build_library(grid, placement)

    reports = [observability_particular(library)]
    if not args.particular:
        reports.insert(0, observability_full(library))
    for report in reports:
        print(report.summary())
    if args.out:
        rows = [r.model_dump(mode="json", exclude={"contexts"}) for r in reports]
        Path(args.out).write_text(yaml.safe_dump(rows, sort_keys=False))
    return 0 if all(r.certified for r in reports) else 1


def cmd_place(args, settings: Settings) -> int:
    grid = load_grid(args, settings)
    defaults = settings.get_placement_config()
    if args.seed_placement:
        initial = load_placement(args.seed_placement, grid)
    else:
        initial = find_seed_placement(grid, compute_signatures(grid), require_full=False)
        print(f"Observable seed placement: {initial}")

    cfg = PlacementSearchConfig(
        initial=initial,
        target_size=args.target_size or defaults.target_size,
        runs=args.runs or defaults.runs,
        tstop=args.tstop or defaults.tstop,
        seed=args.seed if args.seed is not None else settings.get_simulation_config().seed,
        template=settings.get_scenario_template(),
        strict=args.strict or defaults.strict,
        workers=args.workers or settings.get_simulation_config().workers,
    )
    result = greedy_place(grid, cfg)
    save_placement(result.placement, args.out)
    if args.audit:
        write_audit(result, args.audit)

    suffix = " (stopped early)" if result.stopped_early else ""
    print(f"Placement {result.placement} written to {args.out}{suffix}")
    return 0


def cmd_montecarlo(args, settings: Settings) -> int:
    grid = load_grid(args, settings)
    simulation = settings.get_simulation_config()
    template = settings.get_scenario_template(args.mode)
    updates = {
        "placement": args.placement,
        "frequency": args.freq,
        "noise": args.noise,
        "load_variation": args.loads,
        "simulator": args.simulator,
        "duration": args.duration,
    }
    template = template.model_copy(update={k: v for k, v in updates.items() if v is not None})

    library = build_library(grid, load_placement(template.placement, grid))
    report = monte_carlo(
        grid,
        template,
        n_runs=args.runs or simulation.runs,
        seed=args.seed if args.seed is not None else simulation.seed,
        workers=args.workers or simulation.workers,
        library=library,
        label=args.label or f"{template.placement} f={template.frequency:g} Hz",
    )
    print(report_frame(report).to_string(index=False))
    if args.out:
        emit_report(report, args.out)
    return 0


def cmd_simulate(args, settings: Settings) -> int:
    grid = load_grid(args, settings)
    cfg = load_scenario(args.scenario)
    if args.seed is not None:
        cfg = cfg.model_copy(update={"seed": args.seed})

    result = run_scenario(grid, cfg)
    if args.trace_out:
        emit_trace(result.stream, args.trace_out)
    if args.events_out:
        write_events(result.events, args.events_out)
    if args.stream_out:
        placement = load_placement(cfg.placement, grid)
        write_measurement_stream(result.samples, placement, args.stream_out)

    for event in result.events:
        print(
            f"sample {event.sample} (cluster from {event.cluster_start}): S{event.breaker} "
            f"{event.sigma_before} -> {event.sigma_after} (score {event.score:.4f})"
        )
    clusters = score_clusters(result.stream.scores, cfg.detector.min_proj)
    print(f"{len(clusters)} above-threshold clusters, lengths {[c.length for c in clusters]}")
    print(f"Verdict: {result.verdict.model_dump()}")
    return 0 if result.verdict.ok else 1


def cmd_sweep(args, settings: Settings) -> int:
    grid = load_grid(args, settings)
    simulation = settings.get_simulation_config()
    template = settings.get_scenario_template(args.mode)
    placements = [load_placement(p, grid) for p in args.placements.split(",")]
    runs = args.runs or simulation.runs
    seed = args.seed if args.seed is not None else simulation.seed
    workers = args.workers or simulation.workers
    out_dir = Path(args.out_dir)

    tables = sweep(
        grid, template, placements, args.freqs, runs, seed, workers, noise_only=not args.no_noise_only
    )
    for name, rows in tables.items():
        print(f"\n{name}")
        print(report_frame(rows).to_string(index=False))
        emit_report(rows, out_dir / f"{name}.csv")

    if args.taus:
        reports = tau_sensitivity(grid, template, args.taus, runs, seed, workers)
        print("\ntau sensitivity")
        print(report_frame(reports).to_string(index=False))
        emit_report(reports, out_dir / "tau_sensitivity.csv")
    return 0


def cmd_serve(args, settings: Settings) -> int:
    import uvicorn

    os.environ["TOPOWATCH_CONFIG"] = args.config
    service = settings.get_service_config()
    uvicorn.run(
        "main:app",
        host=args.host or service.host,
        port=args.port or service.port,
        log_level=settings.get_log_level().lower(),
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Breaker-action detection toolkit")
    parser.add_argument("--config", default=DEFAULT_CONFIG, help="YAML configuration (default: config.yaml)")
    parser.add_argument("--log-level", help="Override the configured logging level")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_network(p):
        p.add_argument("--network", help="Network data file (default: from config)")
        return p

    p = with_network(sub.add_parser("build-library", help="Compute and cache a signature library"))
    p.add_argument("--placement", help="P33 | P15 | P7 | JSON file | 9,12,15")
    p.add_argument("--workers", type=int, help="Threads for signature extraction")
    p.add_argument("--out", required=True, help="Library JSON to write")
    p.set_defaults(func=cmd_build_library)

    p = with_network(sub.add_parser("detect", help="Run a detector over a measurement stream file"))
    p.add_argument("--library", help="Cached library JSON (built from --placement if omitted)")
    p.add_argument("--placement", help="Placement used when no library file is given")
    p.add_argument("--sigma0", required=True, help="Known initial status, e.g. 1,1,1,0,1")
    p.add_argument("--mode", choices=["ideal", "noisy"])
    p.add_argument("--tau", type=int)
    p.add_argument("--min-proj", type=float)
    p.add_argument("--min-norm", type=float)
    p.add_argument("--in", dest="input", required=True, help="Stream CSV (t_index, bus_id, real, imag)")
    p.add_argument("--out", required=True, help="Events CSV to write")
    p.add_argument("--trace", help="Optional trace CSV (norm and scores per sample)")
    p.set_defaults(func=cmd_detect)

    p = with_network(sub.add_parser("check-observability", help="Gram certificates of a placement"))
    p.add_argument("--placement")
    p.add_argument("--particular", action="store_true", help="Only the particular-library certificate")
    p.add_argument("--out", help="Write the reports as YAML")
    p.set_defaults(func=cmd_check_observability)

    p = with_network(sub.add_parser("place", help="Greedy Monte Carlo placement search"))
    p.add_argument("--seed-placement", help="Observable starting placement (found if omitted)")
    p.add_argument("--target-size", type=int)
    p.add_argument("--runs", type=int, help="Monte Carlo runs per candidate")
    p.add_argument("--tstop", type=int, help="Scenario length in samples (default: 1000 s window)")
    p.add_argument("--seed", type=int)
    p.add_argument("--strict", action="store_true", help="Stop when no candidate improves")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", required=True, help="Placement JSON to write")
    p.add_argument("--audit", help="Per-candidate error counts CSV")
    p.set_defaults(func=cmd_place)

    p = with_network(sub.add_parser("montecarlo", help="Error statistics of random breaker actions"))
    p.add_argument("--placement")
    p.add_argument("--freq", type=float, choices=[1.0, 0.2, 0.1])
    p.add_argument("--noise", type=_on_off, help="on | off")
    p.add_argument("--loads", type=_on_off, help="Load variation on | off")
    p.add_argument("--mode", choices=["ideal", "noisy"])
    p.add_argument("--simulator", choices=["linear", "nonlinear"])
    p.add_argument("--duration", type=int, help="Samples per run (default: 1000 s at --freq)")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--label")
    p.add_argument("--out", help="Report CSV (or .json)")
    p.set_defaults(func=cmd_montecarlo)

    p = with_network(sub.add_parser("simulate", help="Run one scenario file"))
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--trace-out")
    p.add_argument("--events-out")
    p.add_argument("--stream-out", help="Write the simulated measurements as a stream CSV")
    p.set_defaults(func=cmd_simulate)

    p = with_network(sub.add_parser("sweep", help="Full result tables over placements and frequencies"))
    p.add_argument("--placements", default="P33,P15,P7")
    p.add_argument("--freqs", type=_float_list, default=[1.0, 0.2, 0.1])
    p.add_argument("--taus", type=_int_list, help="Also report tau sensitivity, e.g. 3,5,8")
    p.add_argument("--no-noise-only", action="store_true", help="Skip the noise-only row")
    p.add_argument("--mode", choices=["ideal", "noisy"])
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir", default="results")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="Start the detection service")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = load_settings(args)
    except (FileNotFoundError, yaml.YAMLError, ValueError) as e:
        logger.error(f"{args.command}: configuration {args.config}: {e}")
        return 2
    try:
        return args.func(args, settings)
    except (ValueError, OSError, RuntimeError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
