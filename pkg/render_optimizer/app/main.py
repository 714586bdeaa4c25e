"""
Render Optimizer command line.

Run from render_optimizer/ as ``python -m app.main <command> ...``. Diagnostics
go to stderr through logging; results are printed to stdout.
"""

import argparse
import json
import logging
import os
import sys
from typing import Callable, List, Optional

from app.models.domain import HardwareGrid
from app.models.errors import RenderOptError, ValidationError
from app.models.schema import PipelineConfig, load_pipeline_config
from app.services import gbdt_trainer
from app.services.evaluation_service import (
    ablation_lut_vs_model, evaluate, grid_cell_points, sweep_gpu_frequency, sweep_rows,
)
from app.services.lut_builder import LutBuildConfig, build_lut, build_reference_lut
from app.services.lut_format import load_lut, save_lut
from app.services.oracle import generate_dataset
from app.services.runtime import MIN_BENCH_ITERATIONS, bench_query_latency, query
from app.settings import get_settings
from app.utils.dataset_io import load_dataset, save_dataset
from app.utils.reporting import write_report, write_sweep

logger = logging.getLogger(__name__)

TARGET_ALIASES = {"ssim": "ssim", "time": "time_ms"}


def _path(config: PipelineConfig, given: Optional[str], configured: str) -> str:
    """Explicit flag wins; otherwise the config's path, resolved against the config file"""
    return given if given else config.resolve(configured)


def cmd_generate_data(args) -> int:
    config = load_pipeline_config(args.config)
    oracle_cfg = config.to_oracle()
    dataset = generate_dataset(oracle_cfg, args.samples)
    out = _path(config, args.out, config.paths.dataset)
    save_dataset(dataset, out)
    print(f"samples={len(dataset)} seed={dataset.seed} out={out}")
    return 0


def cmd_train(args) -> int:
    config = load_pipeline_config(args.config)
    target = TARGET_ALIASES[args.target]
    data_path = _path(config, args.data, config.paths.dataset)
    dataset = load_dataset(data_path, config.to_space(), config.to_lods())
    model = gbdt_trainer.train(dataset, target, config.to_train(), workers=get_settings().workers)
    out = _path(config, args.out, config.paths.phi if target == "ssim" else config.paths.psi)
    gbdt_trainer.save_model(model, out)
    print(f"target={target} depth={model.max_depth} validation_mae={model.validation_mae:.6g} out={out}")
    return 0


def cmd_build_lut(args) -> int:
    config = load_pipeline_config(args.config)
    phi = gbdt_trainer.load_model(_path(config, args.phi, config.paths.phi))
    psi = gbdt_trainer.load_model(_path(config, args.psi, config.paths.psi))
    table = build_lut(LutBuildConfig(
        space=config.to_space(),
        lods=config.to_lods(),
        grid=config.to_grid(),
        phi=phi,
        psi=psi,
        time_percentile=config.lut.time_percentile,
    ))
    out = _path(config, args.out, config.paths.lut)
    file_bytes = save_lut(table, out)
    print(f"cells={table.entry_count} entry_bits={table.header.entry_width} "
          f"payload_bytes={len(table.payload)} file_bytes={file_bytes} "
          f"build_seconds={table.header.build_seconds:.3f} out={out}")
    return 0


def cmd_query(args) -> int:
    table = load_lut(args.lut)
    result = query(table, args.lod, args.cpu, args.gpu)
    if args.config:
        space = load_pipeline_config(args.config).to_space()
        if not table.header.space.matches(space):
            raise ValidationError("Config space does not match the LUT")
        described = space.describe(result.params)
    else:
        described = [(name, f"{levels[i]:g}") for (name, levels), i in zip(table.header.space.dimensions, result.params)]
    for name, value in described:
        print(f"{name}={value}")
    lod, c, g = result.cell
    print(f"cell=({lod},{c},{g}) cpu_bin={table.header.cpu_bins[c]} gpu_bin={table.header.gpu_bins[g]} code={result.code}")
    return 0


def cmd_bench(args) -> int:
    table = load_lut(args.lut)
    seed = args.seed if args.seed is not None else get_settings().bench_seed
    stats = bench_query_latency(table, iterations=args.iters, seed=seed)
    print(f"iterations={stats.iterations} min_ns={stats.min_ns:.0f} median_ns={stats.median_ns:.0f} "
          f"p99_ns={stats.p99_ns:.0f} mean_ns={stats.mean_ns:.0f} median_ms={stats.median_ms:.6f} p99_ms={stats.p99_ms:.6f}")
    return 0


def cmd_evaluate(args) -> int:
    config = load_pipeline_config(args.config)
    oracle_cfg = config.to_oracle()
    table = load_lut(_path(config, args.lut, config.paths.lut))
    scenario = config.build_scenario()

    report = evaluate(table, oracle_cfg, scenario)
    reference_lut = build_reference_lut(
        oracle_cfg, HardwareGrid(table.header.cpu_bins, table.header.gpu_bins), table.header.search_percentile,
    )
    reference = evaluate(reference_lut, oracle_cfg, scenario)
    report.extras["reference_time_reduction_pct"] = reference.time_reduction_pct
    report.extras["reference_image_error_pct"] = reference.image_error_pct

    out_dir = _path(config, args.out, config.paths.report_dir)
    write_report(report.frames, report.summary(), out_dir)
    summary = report.summary()
    print(" ".join(f"{key}={value:.4f}" if isinstance(value, float) else f"{key}={value}" for key, value in summary.items()))
    return 0


def frequency_range(start: float, stop: float, step: float) -> List[float]:
    """Inclusive arithmetic range"""
    count = int(round((stop - start) / step)) + 1
    return [start + i * step for i in range(count)]


def cmd_sweep(args) -> int:
    config = load_pipeline_config(args.config)
    oracle_cfg = config.to_oracle()
    table = load_lut(_path(config, args.lut, config.paths.lut))
    points = sweep_gpu_frequency(
        table,
        oracle_cfg,
        frequency_range(args.freq_from, args.freq_to, args.step),
        cpu_freq=config.sweep.cpu_freq,
        lods=config.schedule_levels(config.sweep.lod_schedule),
    )
    out = _path(config, args.out, config.paths.sweep)
    write_sweep(sweep_rows(points), out)
    positive = sum(1 for _, report in points if report.time_reduction_pct > 0)
    print(f"points={len(points)} positive_time_reduction={positive} out={out}")
    return 0


def cmd_ablation(args) -> int:
    config = load_pipeline_config(args.config)
    table = load_lut(_path(config, args.lut, config.paths.lut))
    phi = gbdt_trainer.load_model(_path(config, args.phi, config.paths.phi))
    psi = gbdt_trainer.load_model(_path(config, args.psi, config.paths.psi))
    record = ablation_lut_vs_model(phi, psi, table, grid_cell_points(table))

    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        json.dump(record.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"cells={record.cells} match_rate={record.match_rate:.4f} latency_ratio={record.latency_ratio:.1f} "
          f"memory_ratio={record.memory_ratio:.1f} out={args.out}")
    return 0


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _bench_iterations(text: str) -> int:
    """Integer count, also in exponent form such as 1e6"""
    number = float(text)
    if not number.is_integer():
        raise argparse.ArgumentTypeError(f"must be a whole number, got {text}")
    value = int(number)
    if value < MIN_BENCH_ITERATIONS:
        raise argparse.ArgumentTypeError(f"must be >= {MIN_BENCH_ITERATIONS}, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="render-opt", description="Rendering parameter optimization pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", help="Sample the oracle into a CSV dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--samples", type=_positive_int, required=True)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_generate_data)

    p = sub.add_parser("train", help="Train the quality (ssim) or time predictor")
    p.add_argument("--config", required=True)
    p.add_argument("--data")
    p.add_argument("--target", choices=sorted(TARGET_ALIASES), required=True)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("build-lut", help="Precompute the lookup table from both predictors")
    p.add_argument("--config", required=True)
    p.add_argument("--phi")
    p.add_argument("--psi")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_build_lut)

    p = sub.add_parser("query", help="Look up parameters for one frame")
    p.add_argument("--lut", required=True)
    p.add_argument("--lod", type=int, required=True)
    p.add_argument("--cpu", type=float, required=True)
    p.add_argument("--gpu", type=float, required=True)
    p.add_argument("--config", help="show categorical labels from this config")
    p.set_defaults(handler=cmd_query)

    p = sub.add_parser("bench", help="Measure query latency")
    p.add_argument("--lut", required=True)
    p.add_argument("--iters", type=_bench_iterations, default=100_000)
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("evaluate", help="Replay the configured scenario and write frames/summary CSVs")
    p.add_argument("--config", required=True)
    p.add_argument("--lut")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("sweep", help="Fixed-frequency evaluations over a GPU clock range")
    p.add_argument("--config", required=True)
    p.add_argument("--lut")
    p.add_argument("--from", dest="freq_from", type=float, required=True)
    p.add_argument("--to", dest="freq_to", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("ablation", help="Compare LUT lookups with direct model search")
    p.add_argument("--config", required=True)
    p.add_argument("--lut")
    p.add_argument("--phi")
    p.add_argument("--psi")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_ablation)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sweep" and (args.step <= 0 or args.freq_to < args.freq_from):
        parser.error("sweep needs --step > 0 and --to >= --from")

    settings = get_settings()
    logging.basicConfig(level=settings.log_level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    handler: Callable = args.handler
    try:
        return handler(args)
    except (RenderOptError, OSError) as e:
        logger.error(f"ERROR: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
