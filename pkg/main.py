"""
Main entry point: design, simulate, analyze and compare snake-robot
curvature runs from the command line.
"""
import argparse
import logging
import math
import os
import sys
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

import config
from analysis import AnalysisError, CenterlineError, PipelineParams, analyze_trials
from assembly import (
    GENERA,
    MIDSECTION_SHAPES,
    UNITS,
    AssemblyError,
    design_assembly,
    genus_template,
    render_centerline,
    with_inflation,
)
from compare import (
    REGIONS,
    STD_CONVENTIONS,
    ComparisonError,
    EmptyRegionError,
    RegionSplit,
    aggregate,
    compare_durations,
    coverage_spans,
    duration_stats,
    envelope_coverage,
    region_summary,
    regrid_profile,
)
from data_manager import (
    DataManagerError,
    load_assembly_spec,
    load_design_targets,
    read_duration_csv,
    read_profile_csv,
    read_rectification_csv,
    read_trace_csv,
    save_assembly_spec,
    write_json_file,
    write_profile_csv,
    write_rows_csv,
    write_stats_csv,
    write_trace_csv,
)
from file_handler import output_path, prepare_output_dir, write_run_metadata
from free_model import GeometryDomainError, InfeasibleDesignError, NumericalError, fiber_angle_band
from utils.formatting import format_float, parse_label_value

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4

SPEC_FILE = "assembly_spec.json"
DESIGN_FILE = "design_segments.csv"
TRACE_FILE = "trace.csv"
PROFILE_FILE = "profiles.csv"
REPORT_FILE = "run_report.json"
STATS_FILE = "stats.csv"
COVERAGE_FILE = "coverage.csv"
SPANS_FILE = "coverage_spans.csv"
REGIONS_FILE = "regions.csv"
DURATIONS_FILE = "durations.csv"
DURATION_COMPARISON_FILE = "duration_comparison.csv"


class RunConfig(BaseModel):
    """Everything needed to replay a run; written as run_metadata.json"""
    command: Literal["design", "simulate", "analyze", "compare"]
    output_dir: str
    inputs: Dict[str, Any] = Field(default_factory=dict)
    units: str = config.DEFAULT_UNITS
    n: int = config.RESAMPLE_POINTS
    span: int = config.SMOOTHING_SPAN
    offset: int = config.CURVATURE_OFFSET
    lambda_overrides: Dict[str, float] = Field(default_factory=dict)
    pressure_kpa: float = config.PRESSURE_KPA
    snake_fps: float = config.SNAKE_FPS
    robot_fps: float = config.ROBOT_FPS
    head_end_fraction: float = config.HEAD_END_FRACTION
    tail_start_fraction: float = config.TAIL_START_FRACTION
    options: Dict[str, Any] = Field(default_factory=dict)


def configure_logging(level: str = config.LOG_LEVEL) -> None:
    numeric = getattr(logging, str(level).upper(), logging.INFO)
    logging.basicConfig(level=numeric, format=config.LOG_FORMAT)
    logging.getLogger().setLevel(numeric)


def parse_lambda_overrides(items: Optional[Sequence[str]]) -> Dict[str, float]:
    overrides = {}
    for item in items or []:
        try:
            label, value = parse_label_value(item)
            overrides[label] = float(value)
        except ValueError as e:
            raise DataManagerError(f"--lambda {item!r}: {str(e)}") from e
    return overrides


def parse_labelled_paths(items: Sequence[str], option: str, label_required: bool = True) -> List[Tuple[str, str]]:
    """label=path pairs in the order given; labels must be unique"""
    pairs = []
    for item in items:
        if "=" in item or label_required:
            try:
                pairs.append(parse_label_value(item))
            except ValueError as e:
                raise DataManagerError(f"{option} {item!r}: {str(e)}") from e
        else:
            pairs.append((os.path.splitext(os.path.basename(item))[0], item))
    labels = [label for label, _ in pairs]
    if len(set(labels)) != len(labels):
        raise DataManagerError(f"{option}: labels must be unique, got {labels}")
    return pairs


def samples_per_segment(total_samples: int, segment_count: int) -> int:
    """Per-segment sample count giving at least ``total_samples`` rendered points"""
    return max(2, math.ceil((total_samples - 1) / segment_count) + 1)


def cmd_design(args: argparse.Namespace, out_dir: str) -> RunConfig:
    """Solve fiber angles for per-role target curvatures and save the assembly spec"""
    targets = load_design_targets(args.targets)
    spec = design_assembly(targets, args.R0, args.body_length)
    save_assembly_spec(output_path(out_dir, SPEC_FILE), spec)

    rows = []
    for segment, role in zip(spec.segments, spec.roles):
        band = fiber_angle_band(segment.geom.fiber_angle)
        rows.append((segment.label, role, segment.geom.fiber_angle_deg, targets[role].curvature,
                     segment.max_curvature, band))
        print(f"{segment.label}: alpha0={format_float(segment.geom.fiber_angle_deg)} deg, "
              f"K_max={format_float(segment.max_curvature)} 1/m ({band})")
    write_rows_csv(output_path(out_dir, DESIGN_FILE),
                   ["label", "role", "alpha0_deg", "target_per_m", "K_max_per_m", "band"], rows)

    return RunConfig(command="design", output_dir=out_dir,
                     inputs={"targets": args.targets},
                     options={"R0_m": args.R0, "body_length_m": args.body_length})


def cmd_simulate(args: argparse.Namespace, out_dir: str) -> RunConfig:
    """Render an assembly's centerline and write it as a trace CSV"""
    if args.spec:
        spec = load_assembly_spec(args.spec)
    else:
        spec = genus_template(args.genus, args.midsection, args.body_length, args.R0)
    overrides = parse_lambda_overrides(args.lambda_)
    if overrides:
        spec = with_inflation(spec, overrides)

    line = render_centerline(spec, samples_per_segment(args.samples, len(spec.segments)))
    if args.trials < 1:
        raise DataManagerError(f"--trials must be >= 1, got {args.trials}")
    if args.noise < 0:
        raise DataManagerError(f"--noise must be >= 0, got {args.noise}")

    # Repeated trials share the pose and differ only by noise
    rng = np.random.default_rng(args.seed)
    traces = {}
    for trial in range(1, args.trials + 1):
        points = np.array(line.points)
        if args.noise > 0:
            points = points + rng.normal(0.0, args.noise, points.shape)
        traces[f"{spec.genus}-{trial:02d}"] = points

    save_assembly_spec(output_path(out_dir, SPEC_FILE), spec)
    write_trace_csv(output_path(out_dir, TRACE_FILE), traces)
    print(f"SUCCESS: rendered {len(line)} points over {format_float(spec.total_length)} m "
          f"for {len(traces)} trial(s)")

    return RunConfig(command="simulate", output_dir=out_dir,
                     inputs={"spec": args.spec, "genus": None if args.spec else args.genus},
                     lambda_overrides=overrides,
                     options={"samples": args.samples, "rendered_points": len(line), "trials": args.trials,
                              "noise": args.noise, "seed": args.seed, "midsection": args.midsection,
                              "R0_m": args.R0, "body_length_m": args.body_length})


def cmd_analyze(args: argparse.Namespace, out_dir: str) -> RunConfig:
    """Run the curvature pipeline over every trial of a trace CSV"""
    traces = read_trace_csv(args.traces)
    rectifications = read_rectification_csv(args.rectify) if args.rectify else None
    params = PipelineParams(args.n, args.span, args.offset)
    profiles, report = analyze_trials(traces, rectifications, params, args.units, args.workers)

    # Write the report even when nothing could be analysed
    write_json_file(output_path(out_dir, REPORT_FILE), {"analysed": report.analysed, "skipped": report.skipped})
    if not profiles:
        raise CenterlineError(f"no trial in {args.traces} could be analysed; see {REPORT_FILE}")
    write_profile_csv(output_path(out_dir, PROFILE_FILE), profiles)
    print(f"SUCCESS: analysed {len(report.analysed)} trial(s), skipped {len(report.skipped)}")

    return RunConfig(command="analyze", output_dir=out_dir,
                     inputs={"traces": args.traces, "rectify": args.rectify},
                     units=args.units, n=args.n, span=args.span, offset=args.offset,
                     options={"workers": args.workers})


def cmd_compare(args: argparse.Namespace, out_dir: str) -> RunConfig:
    """Aggregate profile groups, envelope coverage by region and duration summaries"""
    ddof = STD_CONVENTIONS[args.std_convention]
    split = RegionSplit()
    groups = parse_labelled_paths(args.groups, "--groups")

    # Aggregate each group on the standard grid
    stats = {}
    for label, path in groups:
        profiles = [regrid_profile(p, args.n, args.offset) for p in read_profile_csv(path)]
        stats[label] = aggregate(profiles, ddof, label)
    labels = sorted(stats)
    write_stats_csv(output_path(out_dir, STATS_FILE), [stats[label] for label in labels])

    # Region summaries per group
    summary_rows = []
    for label in labels:
        for region, summary in region_summary(stats[label], split).items():
            summary_rows.append((label, region, summary.mean, summary.peak, summary.peak_fraction))
    write_rows_csv(output_path(out_dir, REGIONS_FILE),
                   ["group", "region", "mean", "peak", "peak_fraction"], summary_rows)

    # Envelope coverage for every ordered pair of groups
    coverage_rows = []
    span_rows = []
    for subject in labels:
        for reference in labels:
            if subject == reference:
                continue
            for region in REGIONS + ("all",):
                try:
                    value = envelope_coverage(stats[subject], stats[reference], region, split)
                except EmptyRegionError as e:
                    logger.warning(f"{subject} vs {reference}: {str(e)}")
                    value = math.nan
                coverage_rows.append((subject, reference, region, value))
            for start, stop in coverage_spans(stats[subject], stats[reference]):
                span_rows.append((subject, reference, start, stop))
    write_rows_csv(output_path(out_dir, COVERAGE_FILE), ["subject", "reference", "region", "coverage"],
                   coverage_rows)
    write_rows_csv(output_path(out_dir, SPANS_FILE), ["subject", "reference", "start_fraction", "end_fraction"],
                   span_rows)

    # Strike durations are optional
    duration_inputs = parse_labelled_paths(args.durations or [], "--durations", label_required=False)
    if duration_inputs:
        summaries = {label: duration_stats(read_duration_csv(path), ddof) for label, path in duration_inputs}
        duration_labels = sorted(summaries)
        write_rows_csv(output_path(out_dir, DURATIONS_FILE),
                       ["group", "mean_s", "std_s", "min_s", "max_s", "count"],
                       [(label, *summaries[label]) for label in duration_labels])
        ratios = [(s, r, compare_durations(summaries[s], summaries[r]))
                  for s in duration_labels for r in duration_labels if s != r]
        write_rows_csv(output_path(out_dir, DURATION_COMPARISON_FILE), ["subject", "reference", "mean_ratio"],
                       ratios)
    print(f"SUCCESS: compared {len(labels)} group(s)")

    return RunConfig(command="compare", output_dir=out_dir,
                     inputs={"groups": dict(groups), "durations": dict(duration_inputs)},
                     n=args.n, offset=args.offset,
                     options={"std_convention": args.std_convention})


COMMANDS = {
    "design": cmd_design,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="FREE snake-robot design and curvature analysis")
    parser.add_argument('--out', default=config.OUTPUT_DIR, help='Output directory')
    parser.add_argument('--log-level', default=config.LOG_LEVEL, help='Logging level')
    sub = parser.add_subparsers(dest='command', required=True)

    design = sub.add_parser('design', help='Solve fiber angles for target curvatures')
    design.add_argument('--targets', required=True, help='JSON file of per-role target curvatures (1/m)')
    design.add_argument('--R0', type=float, default=config.RELAXED_RADIUS_M, help='Relaxed radius in meters')
    design.add_argument('--body-length', type=float, default=config.BODY_LENGTH_M,
                        help='Relaxed body length in meters, split 25/50/25')

    simulate = sub.add_parser('simulate', help='Render an assembly centerline as a trace CSV')
    source = simulate.add_mutually_exclusive_group(required=True)
    source.add_argument('--spec', help='Assembly spec JSON file')
    source.add_argument('--genus', choices=GENERA, help='Built-in genus template')
    simulate.add_argument('--midsection', choices=MIDSECTION_SHAPES, help='Template midsection shape')
    simulate.add_argument('--samples', type=int, default=config.SIMULATION_SAMPLES, help='Raw points to render')
    simulate.add_argument('--trials', type=int, default=1, help='Number of repeated traces')
    simulate.add_argument('--noise', type=float, default=0.0, help='Gaussian noise sigma in meters')
    simulate.add_argument('--seed', type=int, default=0, help='Noise seed')
    simulate.add_argument('--lambda', dest='lambda_', action='append', metavar='LABEL=VALUE',
                          help='Inflation fraction override for one segment')
    simulate.add_argument('--R0', type=float, default=config.RELAXED_RADIUS_M, help='Template relaxed radius')
    simulate.add_argument('--body-length', type=float, default=config.BODY_LENGTH_M,
                          help='Template relaxed body length')

    analyze = sub.add_parser('analyze', help='Curvature profiles from centerline traces')
    analyze.add_argument('--traces', required=True, help='Trace CSV file')
    analyze.add_argument('--rectify', help='Rectification correspondence CSV file')
    analyze.add_argument('--n', type=int, default=config.RESAMPLE_POINTS, help='Resampled points')
    analyze.add_argument('--span', type=int, default=config.SMOOTHING_SPAN, help='Moving-average span')
    analyze.add_argument('--offset', type=int, default=config.CURVATURE_OFFSET, help='Curvature triangle offset')
    analyze.add_argument('--units', choices=UNITS, default=config.DEFAULT_UNITS, help='Trace coordinate unit')
    analyze.add_argument('--workers', type=int, default=config.ANALYSIS_WORKERS, help='Worker threads')

    compare = sub.add_parser('compare', help='Statistics and envelope coverage across groups')
    compare.add_argument('--groups', nargs='+', required=True, metavar='LABEL=CSV', help='Profile CSV per group')
    compare.add_argument('--durations', nargs='+', metavar='[LABEL=]CSV', help='Duration CSV per group')
    compare.add_argument('--std-convention', choices=sorted(STD_CONVENTIONS), default='population',
                         help='Standard deviation convention')
    compare.add_argument('--n', type=int, default=config.RESAMPLE_POINTS, help='Grid size for regridding')
    compare.add_argument('--offset', type=int, default=config.CURVATURE_OFFSET, help='End mask for regridding')

    sub.add_parser('serve', help='Start the API server')
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main function to parse arguments and run commands; returns the exit code"""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    if args.command == 'serve':
        from api_server import start_server
        print("Starting API server...")
        start_server()
        return EXIT_OK

    try:
        out_dir = prepare_output_dir(args.out)
        run_config = COMMANDS[args.command](args, out_dir)
        write_run_metadata(out_dir, run_config.model_dump())
        return EXIT_OK
    except InfeasibleDesignError as e:
        logger.error(f"Infeasible design: {str(e)}")
        print(f"ERROR: {str(e)} (attainable bound {format_float(e.attainable)})", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalError as e:
        logger.error(f"Numerical failure: {str(e)}")
        print(f"ERROR: {str(e)}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataManagerError, AssemblyError, AnalysisError, ComparisonError, GeometryDomainError) as e:
        logger.error(f"{args.command} failed: {str(e)}")
        print(f"ERROR: {str(e)}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:
        logger.exception(f"Unexpected failure in {args.command}")
        print(f"ERROR: {str(e)}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
