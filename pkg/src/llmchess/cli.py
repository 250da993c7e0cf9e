"""Command-line entry point.

Subcommands: run (manifest -> game logs), report (logs -> tables/plots),
probe (logs -> probe records), replay (game id -> PGN + transcript), and
validate (audit pass re-judging recorded attempts).

Exit codes: 0 success, 1 usage error, 2 experiment-level failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .chat import LiveAdapter, MockAdapter, SamplingParams, create_session
from .engine import EngineConfig, EngineError, SearchLimit, start
from .orchestrate import (
    DEFAULT_MOVE_CAP,
    GameClients,
    audit_game,
    run_experiment,
    run_probe,
    sequential_extractor_factory,
)
from .prompts import CatalogError, load_catalog
from .records import SchemaVersionError
from .reporting import (
    GameLogWriter,
    build_report,
    export_pgn,
    format_report_text,
    read_games,
    read_probes,
    read_transcripts,
    write_probes,
    write_report,
)

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


class ManifestError(ValueError):
    pass


def load_manifest(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        manifest = yaml.safe_load(fh)
    if not isinstance(manifest, dict):
        raise ManifestError("manifest must be a YAML mapping")
    if manifest.get("manifest_version") != 1:
        raise ManifestError("manifest_version must be 1")
    for key in ("variation", "games", "seed"):
        if key not in manifest:
            raise ManifestError(f"manifest is missing {key!r}")
    return manifest


def _engine_config(manifest: dict) -> EngineConfig:
    engine = manifest.get("engine") or {}
    command = engine.get("command")
    if not command:
        raise ManifestError("engine.command is required "
                            "(e.g. [python3, -m, llmchess.fake_engine])")
    if isinstance(command, str):
        command = command.split()
    limit = engine.get("limit") or {"kind": "nodes", "value": 1_000_000}
    return EngineConfig(
        command=tuple(command),
        limit=SearchLimit(limit["kind"], int(limit["value"])),
        multipv=int(engine.get("multipv", 3)),
        hash_mb=int(engine.get("hash_mb", 16)),
    )


def _sampling_params(manifest: dict) -> SamplingParams:
    adapter = manifest.get("adapter") or {}
    return SamplingParams(
        model=adapter.get("model", "gpt-3.5-turbo-0301"),
        temperature=float(adapter.get("temperature", 1.0)),
        top_p=float(adapter.get("top_p", 0.9)),
        max_retries=int(adapter.get("max_retries", 3)),
        retry_backoff_s=float(adapter.get("retry_backoff_s", 0.5)),
    )


def _clients_factory(manifest: dict, params: SamplingParams):
    adapter_cfg = manifest.get("adapter") or {}
    kind = adapter_cfg.get("kind", "mock")

    if kind == "mock":
        script_path = adapter_cfg.get("script")
        script_dir = adapter_cfg.get("script_dir")
        if not script_path and not script_dir:
            raise ManifestError("mock adapter needs adapter.script or adapter.script_dir")
        base = MockAdapter.from_file(script_path).script if script_path else []
        extractor_path = adapter_cfg.get("extractor_script")
        extractor = (MockAdapter.from_file(extractor_path).script
                     if extractor_path else [])

        def factory(index: int) -> GameClients:
            script = base
            if script_dir:
                candidate = Path(script_dir) / f"game_{index:04d}.jsonl"
                if candidate.exists():
                    script = MockAdapter.from_file(str(candidate)).script
            return GameClients(
                adapter=MockAdapter(script),
                extractor_session_factory=sequential_extractor_factory(
                    extractor, params),
            )

        return factory

    if kind == "live":
        endpoint = adapter_cfg.get("endpoint")
        if not endpoint:
            raise ManifestError("live adapter needs adapter.endpoint")
        shared = LiveAdapter(
            endpoint=endpoint,
            model=adapter_cfg.get("model"),
            api_key_env=adapter_cfg.get("api_key_env", "LLMCHESS_API_KEY"),
            min_interval_s=float(adapter_cfg.get("min_interval_s", 0.0)),
        )

        def factory(index: int) -> GameClients:
            return GameClients(
                adapter=shared,
                extractor_session_factory=lambda: create_session(shared, params),
            )

        return factory

    raise ManifestError(f"unknown adapter kind: {kind!r}")


def _apply_overrides(manifest: dict, args) -> dict:
    manifest = dict(manifest)
    manifest["adapter"] = dict(manifest.get("adapter") or {})
    manifest["engine"] = dict(manifest.get("engine") or {})
    if args.seed is not None:
        manifest["seed"] = args.seed
    if getattr(args, "games_count", None) is not None:
        manifest["games"] = args.games_count
    if getattr(args, "variation", None):
        manifest["variation"] = args.variation
    if args.parallelism is not None:
        manifest["parallelism"] = args.parallelism
    if args.adapter:
        manifest["adapter"]["kind"] = args.adapter
    if args.mock_script:
        manifest["adapter"]["script"] = args.mock_script
    if args.engine:
        manifest["engine"]["command"] = args.engine.split()
    return manifest


def _variation(manifest: dict):
    catalog = load_catalog(manifest.get("catalog"),
                           correct_typo=bool(manifest.get("correct_typo", False)))
    vid = manifest["variation"]
    if vid not in catalog:
        raise ManifestError(f"unknown variation {vid!r}")
    return catalog[vid]


# --- subcommands ------------------------------------------------------------------


def cmd_run(args) -> int:
    manifest = _apply_overrides(load_manifest(args.manifest), args)
    config = _variation(manifest)
    engine_config = _engine_config(manifest)
    params = _sampling_params(manifest)
    clients_factory = _clients_factory(manifest, params)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    writer = GameLogWriter(out / "games.jsonl", out / "transcripts.jsonl")

    records = run_experiment(
        config, int(manifest["games"]), manifest["seed"], engine_config,
        clients_factory, parallelism=int(manifest.get("parallelism", 1)),
        move_cap=int(manifest.get("move_cap", DEFAULT_MOVE_CAP)),
        params=params, persist=writer.persist)

    (out / "manifest_resolved.yaml").write_text(
        yaml.safe_dump(manifest, sort_keys=True), encoding="utf-8")

    by_termination: dict[str, int] = {}
    for record in records:
        by_termination[record.termination] = by_termination.get(record.termination, 0) + 1
    print(f"{len(records)} games -> {out / 'games.jsonl'}")
    for termination, count in sorted(by_termination.items()):
        print(f"  {termination}: {count}")
    return EXIT_OK


def cmd_report(args) -> int:
    records = []
    for path in args.games:
        records.extend(read_games(path))
    probes = read_probes(args.probes) if args.probes else None
    bundle = build_report(records, probes)
    written = write_report(bundle, args.out)
    print(format_report_text(bundle))
    print(f"report files in {args.out}:")
    for path in written:
        print(f"  {Path(path).name}")
    return EXIT_OK


def cmd_probe(args) -> int:
    manifest = _apply_overrides(load_manifest(args.manifest), args)
    params = _sampling_params(manifest)
    clients_factory = _clients_factory(manifest, params)
    records = read_games(args.games)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with start(_engine_config(manifest)) as engine:
        probes = run_probe(records, args.sample, args.seed if args.seed is not None
                           else manifest["seed"], engine, clients_factory,
                           params=params)
    write_probes(probes, out / "probes.jsonl")

    blocks = []
    for i, probe in enumerate(probes, start=1):
        blocks.append(
            f"=== probe {i}: game {probe.source_game_id} "
            f"(cut {probe.truncated_plies} plies, {probe.fraction:.0%}) ===\n"
            f"FEN: {probe.fen}\n"
            f"Suggested: {', '.join(probe.suggested) or '(none)'}\n"
            f"Alignment: {'yes' if probe.alignment else 'no'}   "
            f"Suggestions valid: {'yes' if probe.suggestions_valid else 'no'}\n\n"
            f"{probe.insight}\n")
    (out / "insights.txt").write_text("\n".join(blocks), encoding="utf-8")

    aligned = sum(1 for p in probes if p.alignment)
    valid = sum(1 for p in probes if p.suggestions_valid)
    print(f"{len(probes)} probes -> {out / 'probes.jsonl'} "
          f"(alignment {aligned}, suggestions valid {valid})")
    print(f"insight text for manual annotation -> {out / 'insights.txt'}")
    return EXIT_OK


def cmd_replay(args) -> int:
    records = {r.game_id: r for r in read_games(args.games)}
    if args.game_id not in records:
        print(f"game {args.game_id!r} not found in {args.games}", file=sys.stderr)
        return EXIT_FAILURE
    record = records[args.game_id]
    print(export_pgn(record))

    transcripts_path = args.transcripts
    if transcripts_path is None:
        default = Path(args.games).parent / "transcripts.jsonl"
        transcripts_path = str(default) if default.exists() else None
    if transcripts_path:
        transcript = read_transcripts(transcripts_path).get(args.game_id)
        if transcript:
            print("--- transcript ---")
            for message in transcript["messages"]:
                tag = f" [{message['annotation']}]" if message.get("annotation") else ""
                print(f"{message['role']}{tag}: {message['content']}")
    return EXIT_OK


def cmd_validate(args) -> int:
    records = read_games(args.games)
    total_problems = 0
    for record in records:
        try:
            record.validate()
            problems = audit_game(record)
        except ValueError as exc:
            problems = [str(exc)]
        if problems:
            total_problems += len(problems)
            print(f"{record.game_id}: {len(problems)} problem(s)")
            for problem in problems:
                print(f"  - {problem}")
    print(f"validated {len(records)} games, "
          f"{total_problems} verdict mismatch(es)")
    return EXIT_OK if total_problems == 0 else EXIT_FAILURE


# --- parser -----------------------------------------------------------------------


def _add_common_run_flags(parser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--parallelism", type=int, default=None)
    parser.add_argument("--adapter", choices=["live", "mock"], default=None)
    parser.add_argument("--mock-script", default=None,
                        help="JSONL mock script path override")
    parser.add_argument("--engine", default=None,
                        help="engine command override (whitespace-split)")


def build_parser() -> _Parser:
    parser = _Parser(prog="llmchess",
                     description="Play, record, and score chess games between "
                                 "a chat model and a UCI engine.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a manifest")
    run.add_argument("--manifest", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--games", dest="games_count", type=int, default=None,
                     help="game count override")
    run.add_argument("--variation", default=None, help="variation id override")
    _add_common_run_flags(run)
    run.set_defaults(func=cmd_run)

    report = sub.add_parser("report", help="build tables and plots from game logs")
    report.add_argument("--games", nargs="+", required=True)
    report.add_argument("--probes", default=None)
    report.add_argument("--out", required=True)
    report.set_defaults(func=cmd_report)

    probe = sub.add_parser("probe", help="run the truncated-game probe")
    probe.add_argument("--manifest", required=True)
    probe.add_argument("--games", required=True)
    probe.add_argument("--out", required=True)
    probe.add_argument("--sample", type=int, default=50)
    _add_common_run_flags(probe)
    probe.set_defaults(func=cmd_probe)

    replay = sub.add_parser("replay", help="print a game as PGN plus transcript")
    replay.add_argument("--games", required=True)
    replay.add_argument("--game-id", required=True)
    replay.add_argument("--transcripts", default=None)
    replay.set_defaults(func=cmd_replay)

    validate = sub.add_parser("validate", help="re-judge every recorded attempt")
    validate.add_argument("--games", required=True)
    validate.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ManifestError, CatalogError, SchemaVersionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (EngineError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
