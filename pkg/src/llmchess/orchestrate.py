"""Game and experiment orchestration.

Drives the play loop (engine move, prompt, model attempts with retry,
legality check, evaluation snapshot) plus seeded multi-game experiment
runs, the truncated-game probe procedure, and the audit pass that
re-judges recorded attempts.
"""
from __future__ import annotations

import itertools
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from random import Random
from typing import Callable

from . import chesscore as cc
from .chat import (
    Adapter,
    ChatMessage,
    ChatSession,
    ContentPolicyError,
    LogSink,
    MockAdapter,
    SamplingParams,
    TransportError,
    create_session,
)
from .engine import EngineConfig, UciEngine, sample_opening, start
from .extract import ExtractionResult, extract_direct, extract_llm, san_tokens
from .prompts import (
    COT_PREFIX,
    VariationConfig,
    config_hash,
    initial_prompt,
    move_prompt,
    movetext,
    retry_prompt,
)
from .records import (
    MAX_ATTEMPTS,
    GameRecord,
    MoveAttempt,
    MoveAttemptLog,
    ProbeRecord,
)

logger = logging.getLogger(__name__)

DEFAULT_MOVE_CAP = 200

PROBE_TEMPLATE = ("I want you to simulate a skillful chess player and find "
                  "black's best move in the following game.\n\n{moves}")

ExtractorFactory = Callable[[], ChatSession]


@dataclass
class GameClients:
    """Per-game adapters: the playing model and, when needed, the extractor."""

    adapter: Adapter
    extractor_session_factory: ExtractorFactory | None = None


ClientsFactory = Callable[[int], GameClients]

PersistFn = Callable[[GameRecord, list[ChatMessage], list[dict]], None]


def sequential_extractor_factory(script: list[list[str]],
                                 params: SamplingParams = SamplingParams()) -> ExtractorFactory:
    """Mock extractor wiring: each extraction call consumes one script slot.

    Factories built here hold per-game state, so give every game its own.
    """
    counter = itertools.count()

    def factory() -> ChatSession:
        index = next(counter)
        slot = script[index] if index < len(script) else []
        return create_session(MockAdapter([slot] if slot else []), params)

    return factory


def judge_attempt(board: cc.BoardState, candidate: str | None) -> tuple[str, cc.Move | None]:
    """Classify one extracted candidate against the position."""
    if candidate is None:
        return "not-a-move", None
    try:
        return "legal", cc.parse_san(board, candidate)
    except cc.NotAMoveError:
        return "not-a-move", None
    except cc.AmbiguousSanError:
        return "ambiguous", None
    except cc.IllegalSanError:
        return "illegal", None


def _extract(config: VariationConfig, response: str,
             extractor_factory: ExtractorFactory | None) -> ExtractionResult:
    if config.extraction_mode == "llm-assisted":
        if extractor_factory is None:
            raise ValueError(f"{config.variation_id} needs an extractor session factory")
        return extract_llm(response, extractor_factory)
    return extract_direct(response)


def _emits_prefix_itself(response: str, injected: str | None) -> bool:
    """Did the model's own continuation (prefix stripped) start the phrase?"""
    continuation = response[len(injected):] if injected else response
    return continuation.lstrip().startswith(COT_PREFIX)


def play_game(config: VariationConfig, seed: str, engine: UciEngine,
              clients: GameClients, *, game_id: str = "g0000",
              params: SamplingParams = SamplingParams(),
              move_cap: int = DEFAULT_MOVE_CAP,
              raw_log: LogSink | None = None) -> tuple[GameRecord, ChatSession]:
    """Play one game; returns the record and the session for persistence.

    Transport failures end the game with termination "transport-failure";
    such records are persisted but excluded from metrics.
    """
    rng = Random(seed)
    session = create_session(clients.adapter, params, raw_log)

    board = cc.initial_position()
    history: list[cc.BoardState] = []
    plies: list[tuple[str, str]] = []
    attempt_logs: list[MoveAttemptLog] = []
    evaluations: list[int] = []
    engine_evaluations: list[int] = []
    termination: str | None = None

    opening = sample_opening(rng)
    history.append(board)
    board = cc.apply_move(board, cc.parse_san(board, opening))
    plies.append((opening, "engine"))
    engine_evaluations.append(engine.evaluate(board))

    pending = [ChatMessage(config.initial_role, initial_prompt(config, opening),
                           annotation="initial-prompt")]
    model_emits_prefix = False

    try:
        while termination is None:
            prefix = None
            if config.reasoning_mode == "cot":
                if model_emits_prefix:
                    logger.info("game %s: cot prefix skipped, model emits it",
                                game_id)
                else:
                    prefix = COT_PREFIX
            response = session.complete(pending, assistant_prefix=prefix,
                                        prune_policy=config.history_policy)
            model_emits_prefix = _emits_prefix_itself(response, prefix)
            pending = []

            log = MoveAttemptLog(move_index=len(attempt_logs) + 1)
            attempt_logs.append(log)
            legal_move: cc.Move | None = None
            while True:
                extraction = _extract(config, response,
                                      clients.extractor_session_factory)
                verdict, move = judge_attempt(board, extraction.candidate)
                log.attempts.append(MoveAttempt(
                    raw=response, extracted=extraction.candidate, verdict=verdict))
                if verdict == "legal":
                    legal_move = move
                    break
                if len(log.attempts) >= MAX_ATTEMPTS:
                    break
                if config.regeneration_mode == "reminder-append":
                    engine_san = plies[-1][0]
                    rejected = [a.extracted for a in log.attempts if a.extracted]
                    if rejected:
                        reminder = retry_prompt(config, engine_san, rejected,
                                                previous_moves=[s for s, _ in plies[:-1]],
                                                board=board)
                    else:
                        # nothing SAN-shaped to remind about yet
                        reminder = move_prompt(config, engine_san,
                                               previous_moves=[s for s, _ in plies[:-1]],
                                               board=board)
                    response = session.complete(
                        [ChatMessage("user", reminder, annotation="reminder")],
                        assistant_prefix=prefix,
                        prune_policy=config.history_policy)
                else:
                    response = session.regenerate()
                model_emits_prefix = _emits_prefix_itself(response, prefix)

            if legal_move is None:
                termination = "illegal-limit"
                break

            san = cc.format_san(board, legal_move)
            reply_message = session.transcript[-1]
            reply_message.condensed = san
            if config.reasoning_mode != "none":
                reply_message.annotation = "reasoning"
            log.final_san = san

            history.append(board)
            board = cc.apply_move(board, legal_move)
            plies.append((san, "model"))

            status = cc.game_status(board, tuple(history))
            evaluations.append(engine.evaluate(board))
            if status != "ongoing":
                termination = status
                break
            if len(evaluations) >= move_cap:
                termination = "move-cap"
                break

            reply = engine.sample_reply(board, rng)
            engine_san = cc.format_san(board, reply)
            history.append(board)
            board = cc.apply_move(board, reply)
            plies.append((engine_san, "engine"))
            engine_evaluations.append(engine.evaluate(board))

            status = cc.game_status(board, tuple(history))
            if status != "ongoing":
                termination = status
                break

            uses_description = "{description}" in config.move_template
            prompt = move_prompt(config, engine_san,
                                 previous_moves=[s for s, _ in plies[:-1]],
                                 board=board)
            pending = [ChatMessage(
                "user", prompt,
                annotation="description" if uses_description else "move-prompt",
                condensed=f"Move: {engine_san}" if uses_description else None)]
    except (TransportError, ContentPolicyError) as exc:
        logger.warning("game %s: unrecoverable chat failure: %s", game_id, exc)
        termination = "transport-failure"
        if attempt_logs and not attempt_logs[-1].attempts:
            attempt_logs.pop()

    record = GameRecord(
        game_id=game_id,
        variation_id=config.variation_id,
        config_hash=config_hash(config),
        opening=opening,
        seed=seed,
        plies=plies,
        attempt_logs=attempt_logs,
        evaluations=evaluations,
        engine_evaluations=engine_evaluations,
        termination=termination,
        transcript_ref=game_id,
        move_cap=move_cap,
    )
    record.validate()
    return record, session


def run_experiment(config: VariationConfig, n_games: int, master_seed: int | str,
                   engine_config: EngineConfig, clients_factory: ClientsFactory, *,
                   parallelism: int = 1, move_cap: int = DEFAULT_MOVE_CAP,
                   params: SamplingParams = SamplingParams(),
                   persist: PersistFn | None = None) -> list[GameRecord]:
    """Run seeded independent games; identical seeds reproduce identical records.

    Games are the unit of parallelism. Each worker thread owns one engine
    process, reused across the games it plays.
    """
    if n_games < 1:
        raise ValueError("n_games must be >= 1")

    local = threading.local()
    engines: list[UciEngine] = []
    engines_lock = threading.Lock()

    def worker_engine() -> UciEngine:
        engine = getattr(local, "engine", None)
        if engine is None:
            engine = start(engine_config)
            local.engine = engine
            with engines_lock:
                engines.append(engine)
        return engine

    def one_game(index: int) -> GameRecord:
        game_id = f"g{index:04d}"
        seed = f"{master_seed}:{index}"
        events: list[dict] = []
        record, session = play_game(
            config, seed, worker_engine(), clients_factory(index),
            game_id=game_id, params=params, move_cap=move_cap,
            raw_log=events.append)
        if persist is not None:
            persist(record, session.transcript, events)
        return record

    try:
        if parallelism <= 1:
            records = [one_game(i) for i in range(n_games)]
        else:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                records = list(pool.map(one_game, range(n_games)))
    finally:
        for engine in engines:
            engine.close()

    return sorted(records, key=lambda r: r.game_id)


def _replay(plies: list[tuple[str, str]], count: int | None = None) -> cc.BoardState:
    board = cc.initial_position()
    for san, _ in plies[:count if count is not None else len(plies)]:
        board = cc.apply_move(board, cc.parse_san(board, san))
    return board


def run_probe(records: list[GameRecord], sample_count: int, seed: int | str,
              engine: UciEngine, clients_factory: ClientsFactory, *,
              params: SamplingParams = SamplingParams()) -> list[ProbeRecord]:
    """Truncate sampled games mid-way and ask for black's best move.

    Alignment scores whether any suggestion matches the move actually
    played next in the source game; Suggestions scores whether every
    suggestion sits in the engine's top four. Insight text is exported
    unscored for manual annotation.
    """
    rng = Random(f"{seed}:probe")
    eligible = [r for r in records
                if len(r.plies) >= 2 and r.termination != "transport-failure"]
    if not eligible:
        raise ValueError("no games with at least 2 plies to probe")
    chosen = rng.sample(eligible, min(sample_count, len(eligible)))

    probes: list[ProbeRecord] = []
    for i, record in enumerate(chosen):
        fraction = rng.uniform(0.3, 0.7)
        cut = round(fraction * len(record.plies))
        if cut % 2 == 0:
            cut -= 1  # probe asks for black's move, so cut after white's ply
        cut = max(cut, 1)
        board = _replay(record.plies, cut)

        session = create_session(clients_factory(i).adapter, params)
        prompt = PROBE_TEMPLATE.format(
            moves=movetext([san for san, _ in record.plies[:cut]]))
        response = session.complete([ChatMessage("user", prompt)])

        seen: list[str] = []
        for token in san_tokens(response):
            if token not in seen:
                seen.append(token)

        legal_suggestions: list[cc.Move] = []
        all_parse = bool(seen)
        for token in seen:
            verdict, move = judge_attempt(board, token)
            if verdict == "legal":
                legal_suggestions.append(move)
            else:
                all_parse = False

        next_san = record.plies[cut][0] if cut < len(record.plies) else None
        alignment = False
        if next_san is not None:
            actual = cc.parse_san(board, next_san)
            alignment = any(move == actual for move in legal_suggestions)

        suggestions_valid = False
        if seen and all_parse:
            top = {r.move for r in engine.top_moves(board, k=4)}
            suggestions_valid = all(move in top for move in legal_suggestions)

        probes.append(ProbeRecord(
            source_game_id=record.game_id,
            fraction=fraction,
            truncated_plies=cut,
            fen=board.fen(),
            response=response,
            suggested=seen,
            alignment=alignment,
            suggestions_valid=suggestions_valid,
            insight=response,
        ))
    return probes


def audit_game(record: GameRecord) -> list[str]:
    """Re-judge every recorded attempt against the replayed position.

    Returns discrepancy descriptions; an empty list means the record is
    internally consistent.
    """
    problems: list[str] = []
    board = cc.initial_position()
    model_move_no = 0
    logs = {log.move_index: log for log in record.attempt_logs}

    for san, mover in record.plies:
        if mover == "model":
            model_move_no += 1
            log = logs.get(model_move_no)
            if log is None:
                problems.append(f"model move {model_move_no} has no attempt log")
            else:
                for k, attempt in enumerate(log.attempts):
                    verdict, _ = judge_attempt(board, attempt.extracted)
                    if verdict != attempt.verdict:
                        problems.append(
                            f"move {model_move_no} attempt {k + 1}: recorded "
                            f"{attempt.verdict}, re-judged {verdict}")
                if log.final_san != san:
                    problems.append(
                        f"move {model_move_no}: final san {log.final_san!r} != ply {san!r}")
        try:
            board = cc.apply_move(board, cc.parse_san(board, san))
        except (cc.SanError, cc.IllegalMoveError) as exc:
            problems.append(f"replay broke at {san!r}: {exc}")
            return problems

    # a terminal log beyond the last model ply belongs to an illegal-limit end
    trailing = [log for idx, log in logs.items() if idx > model_move_no]
    for log in trailing:
        if record.termination not in ("illegal-limit", "transport-failure"):
            problems.append("trailing attempt log without illegal-limit termination")
        for k, attempt in enumerate(log.attempts):
            verdict, _ = judge_attempt(board, attempt.extracted)
            if verdict != attempt.verdict:
                problems.append(
                    f"terminal move {log.move_index} attempt {k + 1}: recorded "
                    f"{attempt.verdict}, re-judged {verdict}")

    if record.termination in ("checkmate", "stalemate"):
        final_status = cc.game_status(board)
        if final_status != record.termination:
            problems.append(
                f"terminal position is {final_status}, recorded {record.termination}")
    return problems
