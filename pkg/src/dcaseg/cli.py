"""Command line: ``dcaseg generate | run | sweep | compare``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
Data goes to files or stdout; progress and diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from .core import ConfigError, DataError
from .datagen import BUNDLED, ScenarioSpec, generate
from .engine import Engine
from .pipeline import (
    RunConfig,
    RunResult,
    RunTotals,
    compare_files,
    feed_events,
    load_config_file,
    load_weights,
    run_file,
    stream_end,
    sweep_summary,
)
from .segmentation import SegmenterConfig, iter_reports
from .stream_io import (
    atomic_write,
    format_comparison_jsonl,
    format_comparison_table,
    format_event,
    format_labels,
    format_summary_jsonl,
    format_summary_table,
    read_events,
    read_labels,
    write_report,
)

log = logging.getLogger("dcaseg")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        sizes = [int(float(s)) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not sizes:
        raise argparse.ArgumentTypeError("empty size list")
    return sizes


def _directions(text: str) -> dict[str, str]:
    out = {}
    for item in text.split(","):
        if not item:
            continue
        ag, sep, direction = item.partition("=")
        if not sep or direction not in ("greater", "less") or not ag:
            raise argparse.ArgumentTypeError(f"expected type=greater|less, got {item!r}")
        out[ag] = direction
    return out


def _emit(text: str, output: str | None) -> None:
    if output and output != "-":
        atomic_write(output, text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-i", "--input", help="event stream file")
    p.add_argument("--config", help="JSON file of run settings (flags take precedence)")
    p.add_argument("--population", type=int, dest="population_size", help="DC population size (default 100)")
    p.add_argument("--threshold-step", type=float, help="migration threshold step (default 12)")
    p.add_argument("--weights", help='JSON weights file: {"csm": [p, d, s], "k": [p, d, s]}')
    p.add_argument("--no-flush", dest="flush", action="store_const", const=False,
                   help="drop antigens still held by immature DCs at end of stream")
    p.add_argument("--exclude-forced", dest="include_forced", action="store_const", const=False,
                   help="leave end-of-stream flushed records out of the analysis")
    p.add_argument("--format", choices=("jsonl", "table"), help="output format (default jsonl)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dcaseg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic event stream and label sidecar")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--bundled", choices=sorted(BUNDLED))
    src.add_argument("--spec", help="scenario spec JSON file")
    g.add_argument("--seed", type=int, help="override the scenario seed")
    g.add_argument("-o", "--output", required=True, help="event stream path; labels go beside it as .labels")

    r = sub.add_parser("run", help="run the DCA and segmented analysis over an event stream")
    _add_engine_flags(r)
    r.add_argument("--mode", choices=("none", "abs", "tbs"))
    r.add_argument("--size", type=int, dest="segment_size", help="segment size (antigens for abs, ticks for tbs)")
    r.add_argument("-o", "--output", help="report path (default stdout)")
    r.add_argument("--plot", help="also render the per-segment Kα figure to this PNG")
    r.add_argument("--labels", help="label sidecar, used for figure legends")

    s = sub.add_parser("sweep", help="run one stream at several segment sizes")
    _add_engine_flags(s)
    s.add_argument("--mode", choices=("abs", "tbs"), required=True)
    s.add_argument("--sizes", type=_int_list, required=True, help="comma-separated, e.g. 100,1000,10000")
    s.add_argument("-o", "--output", required=True, help="output directory")
    s.add_argument("--no-plots", dest="plots", action="store_false", help="skip figures")
    s.add_argument("--labels", help="label sidecar, used for figure legends")

    c = sub.add_parser("compare", help="t-tests between segment sizes and against the baseline")
    c.add_argument("reports", nargs="+", help="segmented report files (jsonl)")
    c.add_argument("--baseline", required=True, help="mode=none report file")
    c.add_argument("--direction", type=_directions, required=True,
                   help="one-sided test direction for every type: type=greater|less,...")
    c.add_argument("--labels", help="label sidecar, shown next to type names")
    c.add_argument("--alpha", type=float, default=0.05)
    c.add_argument("--pooled", action="store_true", help="pooled-variance two-sample test instead of Welch")
    c.add_argument("--format", choices=("jsonl", "table"), default="table")
    c.add_argument("-o", "--output", help="output path (default stdout)")
    c.add_argument("--plot", help="also render the against-baseline p-value figure to this PNG")
    return parser


def _run_config(args) -> RunConfig:
    base = RunConfig.from_metadata(load_config_file(args.config)) if args.config else RunConfig()
    overrides = {
        "input": args.input,
        "mode": args.mode,
        "segment_size": getattr(args, "segment_size", None),
        "population_size": args.population_size,
        "threshold_step": args.threshold_step,
        "flush": args.flush,
        "include_forced": args.include_forced,
        "format": args.format,
        "output": getattr(args, "output", None),
    }
    if args.weights:
        overrides["weights"] = load_weights(args.weights)
    return base.with_overrides(**overrides)


def _summary_line(totals: RunTotals, seconds: float) -> str:
    return (f"segments={totals.segments} antigens={totals.antigens_ingested} "
            f"records={totals.records} dropped={totals.dropped_antigens} "
            f"ticks={totals.signal_ticks} wall={seconds:.3f}s")


def cmd_generate(args) -> int:
    if args.bundled:
        spec = BUNDLED[args.bundled]()
    else:
        spec = ScenarioSpec.load(args.spec)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    spec.validate()
    out = Path(args.output)
    lines = [format_event(ev) + "\n" for ev in generate(spec)]
    atomic_write(out, "".join(lines))
    atomic_write(out.with_suffix(".labels"), format_labels(spec.labels()))
    log.info("wrote %d events to %s (scenario %s, seed %d)", len(lines), out, spec.name, spec.seed)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _run_config(args)
    t0 = time.perf_counter()
    result = run_file(cfg)
    _emit(write_report(result.document(), cfg.format), cfg.output)
    if args.plot:
        from .plotting import plot_segment_series

        labels = read_labels(args.labels) if args.labels else None
        plot_segment_series(result.reports, args.plot, labels,
                            title=f"mode={cfg.mode} size={cfg.segment_size}")
    print(_summary_line(result.totals, time.perf_counter() - t0), file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    args.segment_size = None
    # per-size report paths are derived, so no single output path applies
    cfg = replace(_run_config(args), output=None)
    cfg_base = cfg.with_overrides(mode="none")
    cfg_base.validate()
    for size in args.sizes:
        SegmenterConfig(args.mode, size).validate()
    if not cfg.input or not Path(cfg.input).is_file():
        raise ConfigError(f"input file not found: {cfg.input}")
    out_dir = Path(args.output)
    ext = "jsonl" if cfg.format == "jsonl" else "txt"

    t0 = time.perf_counter()
    # the engine output does not depend on segmentation, so run it once
    engine = Engine(cfg_base.population())
    records = list(feed_events(engine, read_events(cfg.input)))
    labels = read_labels(args.labels) if args.labels else None

    def result_for(run_cfg: RunConfig) -> RunResult:
        reports = list(iter_reports(records, run_cfg.segmenter(), last_tick=stream_end(engine)))
        totals = RunTotals(
            antigens_ingested=engine.ag_counter, signal_ticks=engine.signal_ticks,
            records=len(records), forced_records=sum(r.forced for r in records),
            dropped_antigens=engine.dropped_count, segments=len(reports), last_tick=engine.current_tick,
        )
        return RunResult(run_cfg, reports, totals)

    baseline = result_for(cfg_base)
    atomic_write(out_dir / f"none.{ext}", write_report(baseline.document(), cfg.format))
    runs = {}
    for size in args.sizes:
        run_cfg = cfg.with_overrides(mode=args.mode, segment_size=size)
        res = result_for(run_cfg)
        runs[size] = res.reports
        atomic_write(out_dir / f"{args.mode}_{size}.{ext}", write_report(res.document(), cfg.format))
        print(f"{args.mode} size={size}: " + _summary_line(res.totals, time.perf_counter() - t0),
              file=sys.stderr)
    rows = sweep_summary(runs)
    meta = {"tool": "dcaseg", "mode": args.mode, "sizes": args.sizes, "config": cfg.to_metadata()}
    atomic_write(out_dir / "summary.txt", format_summary_table(rows))
    atomic_write(out_dir / "summary.jsonl", format_summary_jsonl(rows, meta))
    if args.plots:
        from .plotting import plot_segment_series, plot_summary

        for size in args.sizes:
            plot_segment_series(runs[size], out_dir / f"{args.mode}_{size}.png", labels,
                                title=f"{args.mode} size={size}")
        plot_summary(rows, out_dir / "summary.png", args.mode)
    sys.stdout.write(format_summary_table(rows))
    return EXIT_OK


def cmd_compare(args) -> int:
    labels = read_labels(args.labels) if args.labels else None
    table = compare_files(args.reports, args.baseline, args.direction, args.alpha, args.pooled)
    if args.format == "jsonl":
        text = format_comparison_jsonl(table, {"labels": labels} if labels else None)
    else:
        text = format_comparison_table(table, labels)
    _emit(text, args.output)
    if args.plot:
        from .plotting import plot_comparison

        plot_comparison(table, args.plot)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except DataError as exc:
        print(f"dcaseg {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as exc:
        print(f"dcaseg {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"dcaseg {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
