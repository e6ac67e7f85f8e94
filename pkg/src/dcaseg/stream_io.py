"""Text formats: event streams, label sidecars, segment reports and statistics tables.

Event stream, one event per LF-terminated UTF-8 line, no header::

    A,<tick>,<antigen_type>
    S,<tick>,<pamp>,<danger>,<safe>

Reports are JSON lines: a metadata object first, then one object per segment.
Kα and test statistics are written with 6 decimal places; everything else
round-trips exactly.
"""

from __future__ import annotations

import json
import math
import os
import re
import tempfile
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import IO

from .core import AntigenEvent, DataError, SignalInstance, SignalRangeError
from .segmentation import KAlphaScore, SegmentReport
from .stats import ComparisonTable, SummaryRow

_REAL = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")


class StreamParseError(DataError):
    def __init__(self, message: str, lineno: int | None = None):
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)
        self.lineno = lineno


# ---------------------------------------------------------------------------
# Event streams
# ---------------------------------------------------------------------------

def _tick(text: str, lineno: int | None) -> int:
    if not (text.isascii() and text.isdigit()):
        raise StreamParseError(f"tick {text!r} is not a non-negative decimal integer", lineno)
    return int(text)


def _real(text: str, name: str, lineno: int | None) -> float:
    if not _REAL.fullmatch(text):
        raise StreamParseError(f"{name} value {text!r} is not a decimal number", lineno)
    return float(text)


def parse_event_line(line: str, lineno: int | None = None) -> SignalInstance | AntigenEvent:
    fields = line.split(",")
    kind = fields[0]
    if kind == "A":
        if len(fields) != 3:
            raise StreamParseError(f"antigen line: expected 3 fields, got {len(fields)}", lineno)
        ag = fields[2]
        if not ag:
            raise StreamParseError("empty antigen type", lineno)
        if "\n" in ag or "\r" in ag:
            raise StreamParseError("antigen type contains a line break", lineno)
        return AntigenEvent(_tick(fields[1], lineno), ag)
    if kind == "S":
        if len(fields) != 5:
            raise StreamParseError(f"signal line: expected 5 fields, got {len(fields)}", lineno)
        sig = SignalInstance(
            _tick(fields[1], lineno),
            _real(fields[2], "pamp", lineno),
            _real(fields[3], "danger", lineno),
            _real(fields[4], "safe", lineno),
        )
        try:
            sig.check_range()
        except SignalRangeError as exc:
            raise StreamParseError(str(exc), lineno) from None
        return sig
    raise StreamParseError(f"unknown line kind {kind!r}; expected 'A' or 'S'", lineno)


def format_event(ev: SignalInstance | AntigenEvent) -> str:
    if isinstance(ev, AntigenEvent):
        return f"A,{ev.timestamp},{ev.antigen_type}"
    return f"S,{ev.timestamp},{ev.pamp!r},{ev.danger!r},{ev.safe!r}"


def iter_event_lines(lines: Iterable[str]) -> Iterator[SignalInstance | AntigenEvent]:
    for lineno, line in enumerate(lines, 1):
        if line[-1:] == "\n":
            line = line[:-1]
        fields = line.split(",")
        # fast path for well-formed antigen lines, the bulk of any stream
        if len(fields) == 3 and fields[0] == "A":
            tick, ag = fields[1], fields[2]
            if tick.isdigit() and tick.isascii() and ag and "\r" not in ag:
                yield AntigenEvent(int(tick), ag)
                continue
        yield parse_event_line(line, lineno)


def read_events(path: str | Path) -> Iterator[SignalInstance | AntigenEvent]:
    with open(path, encoding="utf-8", newline="\n") as fh:
        yield from iter_event_lines(fh)


def write_events(events: Iterable[SignalInstance | AntigenEvent], fh: IO[str]) -> int:
    n = 0
    for ev in events:
        fh.write(format_event(ev))
        fh.write("\n")
        n += 1
    return n


# ---------------------------------------------------------------------------
# Label sidecar: "<antigen_type>,<label>" per line
# ---------------------------------------------------------------------------

def format_labels(labels: dict[str, str]) -> str:
    return "".join(f"{ag},{label}\n" for ag, label in labels.items())


def parse_labels(text: str) -> dict[str, str]:
    labels = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split(",")
        if len(parts) != 2 or not parts[0] or parts[1] not in ("anomalous", "normal"):
            raise StreamParseError(f"labels: expected '<type>,anomalous|normal', got {line!r}", lineno)
        labels[parts[0]] = parts[1]
    return labels


def read_labels(path: str | Path) -> dict[str, str]:
    return parse_labels(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# JSON with fixed-precision reals
# ---------------------------------------------------------------------------

class Fixed(float):
    """Float serialized with exactly 6 decimal places."""


def _dump(value) -> str:
    if isinstance(value, Fixed):
        if not math.isfinite(value):
            return json.dumps(str(float(value)))
        return f"{value:.6f}"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_dump(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_dump(v) for v in value) + "]"
    if isinstance(value, float) and not math.isfinite(value):
        return json.dumps(str(value))
    return json.dumps(value, ensure_ascii=False)


def dumps_line(obj: dict) -> str:
    return _dump(obj) + "\n"


def _float(v) -> float:
    # non-finite values are written as strings ("inf", "nan")
    return float(v)


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Segment reports
# ---------------------------------------------------------------------------

@dataclass
class ReportDocument:
    metadata: dict
    reports: list[SegmentReport] = field(default_factory=list)


def _report_obj(r: SegmentReport) -> dict:
    return {
        "kind": "segment",
        "ordinal": r.ordinal,
        "start_tick": r.start_tick,
        "end_tick": r.end_tick,
        "empty": r.empty,
        "antigen_instances": r.antigen_instances,
        "n_records": r.n_records,
        "scores": {
            ag: {
                "k_alpha": Fixed(s.k_alpha),
                "total_count": s.total_count,
                "contributing_dcs": s.contributing_dcs,
            }
            for ag, s in r.scores.items()
        },
    }


def antigen_types(reports: Iterable[SegmentReport]) -> list[str]:
    return sorted({ag for r in reports for ag in r.scores})


def format_report_jsonl(doc: ReportDocument) -> str:
    lines = [dumps_line({"kind": "metadata", **doc.metadata})]
    lines.extend(dumps_line(_report_obj(r)) for r in doc.reports)
    return "".join(lines)


def format_report_table(doc: ReportDocument) -> str:
    types = antigen_types(doc.reports)
    header = f"{'seg':>6} {'start':>8} {'end':>8} {'antigens':>9}" + "".join(f" {ag:>14}" for ag in types)
    out = [header, "-" * len(header)]
    for r in doc.reports:
        cells = "".join(
            f" {r.scores[ag].k_alpha:>14.6f}" if ag in r.scores else f" {'-':>14}" for ag in types
        )
        out.append(f"{r.ordinal:>6} {r.start_tick:>8} {r.end_tick:>8} {r.antigen_instances:>9}{cells}")
    return "\n".join(out) + "\n"


def write_report(doc: ReportDocument, fmt: str = "jsonl") -> str:
    if fmt in ("jsonl", "json_lines"):
        return format_report_jsonl(doc)
    if fmt in ("table", "plain_table"):
        return format_report_table(doc)
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report_jsonl(text: str) -> ReportDocument:
    lines = text.splitlines()
    if not lines:
        raise StreamParseError("report is empty; expected a metadata line")
    try:
        objs = [json.loads(line) for line in lines]
    except json.JSONDecodeError as exc:
        raise StreamParseError(f"report is not valid JSON lines: {exc}") from exc
    meta = objs[0]
    if meta.get("kind") != "metadata":
        raise StreamParseError("first report line must be the metadata object", 1)
    meta = {k: v for k, v in meta.items() if k != "kind"}
    reports = []
    for lineno, obj in enumerate(objs[1:], 2):
        if obj.get("kind") != "segment":
            raise StreamParseError(f"expected a segment object, got kind {obj.get('kind')!r}", lineno)
        try:
            scores = {
                ag: KAlphaScore(ag, _float(s["k_alpha"]), s["total_count"], s["contributing_dcs"])
                for ag, s in obj["scores"].items()
            }
            reports.append(
                SegmentReport(
                    obj["ordinal"], obj["start_tick"], obj["end_tick"], scores,
                    obj["antigen_instances"], obj["n_records"],
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise StreamParseError(f"malformed segment object: {exc}", lineno) from exc
    return ReportDocument(meta, reports)


def read_report(path: str | Path) -> ReportDocument:
    return parse_report_jsonl(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Summary and comparison tables
# ---------------------------------------------------------------------------

def _size_label(size: int | None) -> str:
    if size is None:
        return "all"
    if size >= 100 and 10 ** round(math.log10(size)) == size:
        return f"1e{round(math.log10(size))}"
    return str(size)


def format_summary_table(rows: Sequence[SummaryRow]) -> str:
    out = [f"{'Seg':>8} {'Min':>14} {'Mean':>14} {'Max':>14} {'Stdev':>14} {'N':>6}"]
    current = object()
    for row in rows:
        if row.antigen_type != current:
            current = row.antigen_type
            out.append(str(current))
        out.append(
            f"{_size_label(row.segment_size):>8} {row.min:>14.6f} {row.mean:>14.6f} "
            f"{row.max:>14.6f} {row.stdev:>14.6f} {row.n_segments:>6}"
        )
    return "\n".join(out) + "\n"


def format_summary_jsonl(rows: Sequence[SummaryRow], metadata: dict | None = None) -> str:
    lines = [dumps_line({"kind": "metadata", **(metadata or {})})]
    for row in rows:
        lines.append(dumps_line({
            "kind": "summary",
            "antigen_type": row.antigen_type,
            "segment_size": row.segment_size,
            "min": Fixed(row.min),
            "mean": Fixed(row.mean),
            "max": Fixed(row.max),
            "stdev": Fixed(row.stdev),
            "n_segments": row.n_segments,
        }))
    return "".join(lines)


def _p_cell(result) -> str:
    if result is None:
        return "n/a"
    return f"{result.p_value:.4f}" + (" *" if result.significant else "")


def _test_obj(res) -> dict:
    if res is None:
        return {"p_value": None}
    return {
        "statistic": Fixed(res.statistic),
        "degrees_of_freedom": Fixed(res.degrees_of_freedom),
        "p_value": Fixed(res.p_value),
        "significant": res.significant,
    }


def format_comparison_jsonl(table: ComparisonTable, metadata: dict | None = None) -> str:
    meta = {
        "kind": "metadata",
        **(metadata or {}),
        "mode": table.mode,
        "sizes": table.sizes,
        "alpha": table.plan.alpha,
        "equal_var": table.plan.equal_var,
        "directions": dict(sorted(table.plan.directions.items())),
        "baseline_k_alpha": {ag: Fixed(v) for ag, v in table.baseline_means.items()},
    }
    lines = [dumps_line(meta)]
    for cell in table.pairwise:
        lines.append(dumps_line({
            "kind": "pairwise", "test": "two_sample_two_sided",
            "antigen_type": cell.antigen_type, "size_a": cell.size_a, "size_b": cell.size_b,
            **_test_obj(cell.result), **({"note": cell.note} if cell.note else {}),
        }))
    for cell in table.versus_baseline:
        lines.append(dumps_line({
            "kind": "baseline", "test": "one_sample_one_sided",
            "antigen_type": cell.antigen_type, "segment_size": cell.segment_size,
            "direction": table.plan.directions[cell.antigen_type],
            "true_mean": Fixed(cell.true_mean),
            **_test_obj(cell.result), **({"note": cell.note} if cell.note else {}),
        }))
    return "".join(lines)


def format_comparison_table(table: ComparisonTable, labels: dict[str, str] | None = None) -> str:
    """Pairwise p-value grids per type, then the against-baseline column block.

    ``*`` marks p < alpha; ``n/a`` marks cells with fewer than two segments.
    """
    w = 12
    sizes = table.sizes
    out = [f"Two-sample two-sided t-tests ({'pooled' if table.plan.equal_var else 'Welch'}), "
           f"alpha={table.plan.alpha:g}, mode={table.mode}"]
    labels = labels or {}
    for ag in table.plan.antigen_types:
        out.append(f"{ag} ({labels[ag]})" if ag in labels else ag)
        if len(sizes) < 2:
            out.append("  (single run: no pairs)")
            continue
        cells = iter(table.pairwise_for(ag))
        grid = {(i, j): next(cells) for i, j in combinations(range(len(sizes)), 2)}
        out.append(f"{'':>8}" + "".join(f"{_size_label(s):>{w}}" for s in sizes[1:]))
        for i, sa in enumerate(sizes[:-1]):
            row = [_p_cell(grid[(i, j)].result) if j > i else "-" for j in range(1, len(sizes))]
            out.append(f"{_size_label(sa):>8}" + "".join(f"{c:>{w}}" for c in row))
    out.append("")
    out.append("One-sample one-sided t-tests against the unsegmented baseline")
    types = table.plan.antigen_types
    out.append(f"{'Seg':>8}" + "".join(f"{ag:>{w}}" for ag in types))
    out.append(f"{'dir':>8}" + "".join(f"{table.plan.directions[ag]:>{w}}" for ag in types))
    out.append(f"{'mu0':>8}" + "".join(f"{table.baseline_means[ag]:>{w}.2f}" for ag in types))
    columns = [table.baseline_for(ag) for ag in types]
    for i, s in enumerate(sizes):
        out.append(f"{_size_label(s):>8}" + "".join(f"{_p_cell(col[i].result):>{w}}" for col in columns))
    return "\n".join(out) + "\n"
