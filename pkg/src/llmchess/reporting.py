"""Persistence, export, and presentation.

JSON Lines game logs with a single serialized writer, PGN export/import,
per-variation summary tables with the published reference results
alongside, per-move curve CSVs, and deterministic SVG plots.
"""
from __future__ import annotations

import csv
import json
import threading
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from . import chesscore as cc  # noqa: E402
from .chat import ChatMessage  # noqa: E402
from .metrics import MetricsSummary, aggregate, pearson  # noqa: E402
from .records import (  # noqa: E402
    SCHEMA_VERSION,
    GameRecord,
    NATURAL_TERMINATIONS,
    ProbeRecord,
    SchemaVersionError,
)

# Published reference results for gpt-3.5-turbo-0301 against Stockfish 15.1,
# reprinted next to harness output for side-by-side comparison.
REFERENCE_RESULTS = {
    "Baseline":    {"imr": 0.26, "rblm": 6.78, "gl": 18.79, "be20": 253.1,
                    "mrs": 0.51, "be_full": 88.38},
    "Int-Illegal": {"imr": 0.27, "rblm": 6.86, "gl": 18.07, "be20": 278.6,
                    "mrs": 0.5, "be_full": 84.38},
    "Int-Rules":   {"imr": 0.33, "rblm": 7.52, "gl": 13.15, "be20": 364.53,
                    "mrs": 0.44, "be_full": 90.84},
    "Move-Repeat": {"imr": 0.31, "rblm": 5.82, "gl": 23.97, "be20": 284.99,
                    "mrs": 0.64, "be_full": 148.24},
    "Move-IlgRem": {"imr": 0.23, "rblm": 9.33, "gl": 12.96, "be20": 314.38,
                    "mrs": 0.06, "be_full": 71.7},
    "Rsn-Simple":  {"imr": 0.34, "rblm": 5.84, "gl": 18.11, "be20": 412.26,
                    "mrs": 0.63, "be_full": 145.64},
    "Rsn-CoT":     {"imr": 0.37, "rblm": 5.82, "gl": 18.45, "be20": 492.4,
                    "mrs": 0.59, "be_full": 166.79},
    "Rsn-DropCoT": {"imr": 0.4, "rblm": 5.31, "gl": 19.56, "be20": 525.34,
                    "mrs": 0.63, "be_full": 194.12},
    "Dsc-Base":    {"imr": 0.47, "rblm": 5.02, "gl": 19.3, "be20": 763.11,
                    "mrs": 0.6, "be_full": 293.35},
}
REFERENCE_RBLM_MRS_PEARSON = -0.86

_CURVE_FAMILIES = ("imr", "rblm", "be", "survivors")
_CURVE_LABELS = {
    "imr": ("Average IMR by Move", "Average IMR"),
    "rblm": ("Average RBLM by Move", "Average RBLM"),
    "be": ("Board Evaluation by Move", "Average BE (centipawns)"),
    "survivors": ("Remaining Games by Move", "Remaining games"),
}


def _dumps(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


# --- persistence -----------------------------------------------------------------


class GameLogWriter:
    """Append-only JSONL sink; one lock serializes whole-line writes."""

    def __init__(self, games_path: str | Path, transcripts_path: str | Path | None = None):
        self.games_path = Path(games_path)
        self.transcripts_path = Path(transcripts_path) if transcripts_path else None
        self._lock = threading.Lock()
        self.games_path.parent.mkdir(parents=True, exist_ok=True)
        self.games_path.write_text("")
        if self.transcripts_path:
            self.transcripts_path.write_text("")

    def persist(self, record: GameRecord, transcript: list[ChatMessage],
                events: list[dict]) -> None:
        game_line = _dumps(record.to_dict()) + "\n"
        transcript_line = None
        if self.transcripts_path:
            transcript_line = _dumps({
                "schema_version": SCHEMA_VERSION,
                "game_id": record.game_id,
                "messages": [
                    {"role": m.role, "content": m.content, "annotation": m.annotation}
                    for m in transcript
                ],
                "events": events,
            }) + "\n"
        with self._lock:
            with self.games_path.open("a", encoding="utf-8") as fh:
                fh.write(game_line)
                fh.flush()
            if transcript_line:
                with self.transcripts_path.open("a", encoding="utf-8") as fh:
                    fh.write(transcript_line)
                    fh.flush()


def write_probes(probes: list[ProbeRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for probe in probes:
            fh.write(_dumps(probe.to_dict()) + "\n")


def _read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def read_games(path: str | Path) -> list[GameRecord]:
    """Load game records, failing loudly on schema-version mismatches."""
    return [GameRecord.from_dict(row) for row in _read_jsonl(path)]


def read_probes(path: str | Path) -> list[ProbeRecord]:
    return [ProbeRecord.from_dict(row) for row in _read_jsonl(path)]


def read_transcripts(path: str | Path) -> dict[str, dict]:
    out = {}
    for row in _read_jsonl(path):
        version = row.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionError(
                f"transcript schema {version!r}, this build reads {SCHEMA_VERSION}")
        out[row["game_id"]] = row
    return out


# --- PGN -------------------------------------------------------------------------


def export_pgn(record: GameRecord) -> str:
    """Standard PGN; replays the game to fix the result and legality."""
    board = cc.initial_position()
    for san, _ in record.plies:
        board = cc.apply_move(board, cc.parse_san(board, san))

    if record.termination == "checkmate":
        result = "0-1" if board.side_to_move == cc.WHITE else "1-0"
    elif record.termination in NATURAL_TERMINATIONS:
        result = "1/2-1/2"
    else:
        result = "*"

    tags = [
        ("Event", record.variation_id),
        ("Site", "llmchess"),
        ("Date", "????.??.??"),
        ("Round", "-"),
        ("White", "engine"),
        ("Black", "model"),
        ("Result", result),
        ("Termination", record.termination),
        ("GameId", record.game_id),
    ]
    lines = [f'[{name} "{value}"]' for name, value in tags]
    lines.append("")

    tokens = []
    for i, (san, _) in enumerate(record.plies):
        if i % 2 == 0:
            tokens.append(f"{i // 2 + 1}.")
        tokens.append(san)
    tokens.append(result)

    line = ""
    for token in tokens:
        if line and len(line) + 1 + len(token) > 80:
            lines.append(line)
            line = token
        else:
            line = f"{line} {token}".strip()
    lines.append(line)
    return "\n".join(lines) + "\n"


def import_pgn(text: str) -> list[str]:
    """Extract the SAN ply list from PGN movetext (tags/comments dropped)."""
    movetext_lines = [line for line in text.splitlines()
                      if line and not line.startswith("[")]
    stream = " ".join(movetext_lines)
    # strip brace comments
    while "{" in stream:
        start = stream.index("{")
        end = stream.index("}", start) if "}" in stream[start:] else len(stream)
        stream = stream[:start] + stream[end + 1:]
    plies = []
    for token in stream.split():
        if token in ("1-0", "0-1", "1/2-1/2", "*") or token.startswith("$"):
            continue
        token = token.lstrip("0123456789").lstrip(".")
        if token:
            plies.append(token)
    return plies


# --- report bundle ----------------------------------------------------------------


@dataclass
class ProbeStats:
    total: int
    alignment: int
    suggestions_valid: int


@dataclass
class ReportBundle:
    summary: MetricsSummary
    probe_stats: ProbeStats | None
    rblm_mrs_pearson: float | None


def build_report(records: list[GameRecord],
                 probes: list[ProbeRecord] | None = None) -> ReportBundle:
    """Aggregate metrics, probe tallies, and the RBLM-vs-MRS correlation."""
    summary = aggregate(records)

    probe_stats = None
    if probes:
        probe_stats = ProbeStats(
            total=len(probes),
            alignment=sum(1 for p in probes if p.alignment),
            suggestions_valid=sum(1 for p in probes if p.suggestions_valid),
        )

    correlation = None
    pairs = [(v.rblm_mean, v.mrs_mean) for v in summary.variations.values()
             if v.rblm_mean is not None and v.mrs_mean is not None]
    if len(pairs) >= 2:
        try:
            correlation = pearson([x for x, _ in pairs], [y for _, y in pairs])
        except ValueError:
            correlation = None

    return ReportBundle(summary=summary, probe_stats=probe_stats,
                        rblm_mrs_pearson=correlation)


def _fmt(value, digits=4) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{digits}f}".rstrip("0").rstrip(".")
    return str(value)


def write_summary_csv(bundle: ReportBundle, path: str | Path) -> None:
    columns = [
        "variation", "games", "imr", "imr_std", "rblm", "rblm_std",
        "rblm_defined", "gl", "gl_std", "be20", "be20_std", "be20_coverage",
        "be20_after_white", "be_full", "be_full_std", "mrs", "mrs_std",
        "mrs_defined", "natural_rate", "move_cap_games",
        "ref_imr", "ref_rblm", "ref_gl", "ref_be20", "ref_mrs", "ref_be_full",
    ]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for vid, stats in sorted(bundle.summary.variations.items()):
            ref = REFERENCE_RESULTS.get(vid, {})
            writer.writerow([
                vid, stats.games, _fmt(stats.imr_mean), _fmt(stats.imr_std),
                _fmt(stats.rblm_mean), _fmt(stats.rblm_std), stats.rblm_defined,
                _fmt(stats.gl_mean), _fmt(stats.gl_std), _fmt(stats.be20_mean),
                _fmt(stats.be20_std), _fmt(stats.be20_coverage),
                _fmt(stats.be20_after_white_mean),
                _fmt(stats.be_full_mean), _fmt(stats.be_full_std),
                _fmt(stats.mrs_mean), _fmt(stats.mrs_std), stats.mrs_defined,
                _fmt(stats.natural_rate), stats.move_cap_games,
                _fmt(ref.get("imr")), _fmt(ref.get("rblm")), _fmt(ref.get("gl")),
                _fmt(ref.get("be20")), _fmt(ref.get("mrs")), _fmt(ref.get("be_full")),
            ])


def format_report_text(bundle: ReportBundle) -> str:
    """Human-readable table, harness values beside the reference results."""
    lines = []
    header = (f"{'variation':<12} {'n':>5} {'IMR':>7} {'RBLM':>7} {'GL':>7} "
              f"{'BE20':>8} {'BEfull':>8} {'MRS':>7} {'natural':>8}")
    lines.append(header)
    lines.append("-" * len(header))
    for vid, stats in sorted(bundle.summary.variations.items()):
        lines.append(
            f"{vid:<12} {stats.games:>5} {_pad(stats.imr_mean)} "
            f"{_pad(stats.rblm_mean)} {_pad(stats.gl_mean)} "
            f"{_pad(stats.be20_mean, 8)} {_pad(stats.be_full_mean, 8)} "
            f"{_pad(stats.mrs_mean)} {_pad(stats.natural_rate, 8)}")
        ref = REFERENCE_RESULTS.get(vid)
        if ref:
            lines.append(
                f"{'  reference':<12} {'':>5} {_pad(ref['imr'])} "
                f"{_pad(ref['rblm'])} {_pad(ref['gl'])} "
                f"{_pad(ref['be20'], 8)} {_pad(ref['be_full'], 8)} "
                f"{_pad(ref['mrs'])} {'':>8}")
    if bundle.summary.transport_failures:
        lines.append(f"transport failures excluded: "
                     f"{bundle.summary.transport_failures}")
    if bundle.rblm_mrs_pearson is not None:
        lines.append(f"RBLM vs MRS Pearson r = {bundle.rblm_mrs_pearson:.4f} "
                     f"(reference: {REFERENCE_RBLM_MRS_PEARSON})")
    if bundle.probe_stats:
        p = bundle.probe_stats
        lines.append(f"probes: {p.total} games, alignment {p.alignment}, "
                     f"valid suggestions {p.suggestions_valid}")
    return "\n".join(lines) + "\n"


def _pad(value, width=7) -> str:
    if value is None:
        return " " * width
    return f"{value:>{width}.4g}" if isinstance(value, float) else f"{value:>{width}}"


# --- curves ------------------------------------------------------------------------


def _curve_series(bundle: ReportBundle, family: str) -> dict[str, list]:
    out = {}
    for vid, stats in sorted(bundle.summary.variations.items()):
        out[vid] = {
            "imr": stats.imr_curve,
            "rblm": stats.rblm_curve,
            "be": stats.be_curve,
            "survivors": stats.survivors,
        }[family]
    return out


def write_curves(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    """One CSV and one deterministic SVG per curve family."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    plt.rcParams["svg.hashsalt"] = "llmchess"

    for family in _CURVE_FAMILIES:
        series = _curve_series(bundle, family)
        max_len = max((len(values) for values in series.values()), default=0)

        csv_path = out_dir / f"{family}_by_move.csv"
        with csv_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["move"] + list(series))
            for t in range(max_len):
                row = [t + 1]
                for values in series.values():
                    if t < len(values) and values[t] is not None:
                        row.append(_fmt(float(values[t]), 6))
                    else:
                        row.append("")
                writer.writerow(row)
        written.append(csv_path)

        title, ylabel = _CURVE_LABELS[family]
        fig, ax = plt.subplots(figsize=(7.0, 4.5), dpi=100)
        plotted = False
        for vid, values in series.items():
            xs = [t + 1 for t, v in enumerate(values) if v is not None]
            ys = [v for v in values if v is not None]
            if xs:
                ax.plot(xs, ys, label=vid, linewidth=1.5)
                plotted = True
        ax.set_title(title)
        ax.set_xlabel("Move")
        ax.set_ylabel(ylabel)
        if plotted:
            ax.legend(fontsize=8)
        svg_path = out_dir / f"{family}_by_move.svg"
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(svg_path)

    return written


def write_report(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    """Summary table (CSV + text), curve CSVs, and SVG plots."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary_csv = out_dir / "summary.csv"
    write_summary_csv(bundle, summary_csv)
    summary_txt = out_dir / "summary.txt"
    summary_txt.write_text(format_report_text(bundle), encoding="utf-8")
    written = [summary_csv, summary_txt]
    written += write_curves(bundle, out_dir)
    if bundle.probe_stats:
        probe_csv = out_dir / "probe_summary.csv"
        with probe_csv.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["total", "alignment", "suggestions_valid"])
            writer.writerow([bundle.probe_stats.total, bundle.probe_stats.alignment,
                             bundle.probe_stats.suggestions_valid])
        written.append(probe_csv)
    return written
