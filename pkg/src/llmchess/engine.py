"""UCI chess-engine client over a child process.

Speaks the text protocol (uci/isready/setoption/position/go) with any
UCI engine; searches default to a fixed node count so results are
reproducible with a pinned binary. Scores are normalized to white's
perspective, with mate distances mapped onto the centipawn axis as
+/-(10000 - n).
"""
from __future__ import annotations

import queue
import subprocess
import threading
from dataclasses import dataclass
from random import Random

from . import chesscore as cc
from .prompts import OPENING_MOVES

MATE_BASE = 10000


class EngineError(Exception):
    """Base class for engine-client failures."""


class EngineSpawnError(EngineError):
    """The engine process could not be started."""


class EngineProtocolError(EngineError):
    """The engine broke the UCI contract (timeout, missing handshake...)."""


class EngineOutputError(EngineError):
    """Engine output could not be parsed or referenced an illegal move."""


@dataclass(frozen=True)
class SearchLimit:
    """Exactly one bound on the search: nodes, depth, or movetime (ms)."""

    kind: str
    value: int

    def __post_init__(self) -> None:
        if self.kind not in ("nodes", "depth", "movetime"):
            raise ValueError(f"bad search limit kind: {self.kind!r}")
        if self.value < 1:
            raise ValueError("search limit must be positive")

    def go_command(self) -> str:
        return f"go {self.kind} {self.value}"


@dataclass(frozen=True)
class EngineConfig:
    command: tuple[str, ...]
    limit: SearchLimit = SearchLimit("nodes", 1_000_000)
    multipv: int = 3
    hash_mb: int = 16
    handshake_timeout_s: float = 15.0
    search_timeout_s: float = 300.0

    def __post_init__(self) -> None:
        if self.multipv < 1:
            raise ValueError("multipv must be >= 1")
        if not self.command:
            raise ValueError("engine command must be non-empty")


@dataclass(frozen=True)
class EvalScore:
    """Centipawns or mate distance, both from white's perspective."""

    kind: str  # "centipawns" | "mate-in-n"
    value: int

    def __post_init__(self) -> None:
        if self.kind not in ("centipawns", "mate-in-n"):
            raise ValueError(f"bad score kind: {self.kind!r}")
        if self.kind == "mate-in-n" and self.value == 0:
            raise ValueError("mate distance cannot be 0")

    def centipawns(self) -> int:
        """Project onto one centipawn axis, mates mapped near +/-10000."""
        if self.kind == "centipawns":
            return self.value
        magnitude = MATE_BASE - abs(self.value)
        return magnitude if self.value > 0 else -magnitude


@dataclass(frozen=True)
class RankedMove:
    move: cc.Move
    rank: int
    score: EvalScore


class UciEngine:
    """Exclusive handle on one engine process; not thread-safe by design."""

    def __init__(self, config: EngineConfig):
        self.config = config
        try:
            self._proc = subprocess.Popen(
                list(config.command), stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, stderr=subprocess.DEVNULL,
                text=True, bufsize=1)
        except OSError as exc:
            raise EngineSpawnError(f"cannot start {config.command}: {exc}") from exc
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._current_multipv = None
        try:
            self._handshake()
        except EngineError:
            self.close()
            raise

    # --- plumbing ---

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line.rstrip("\n"))
        self._lines.put(None)

    def _send(self, command: str) -> None:
        if self._proc.poll() is not None:
            raise EngineProtocolError("engine process has exited")
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(command + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise EngineProtocolError(f"engine pipe closed: {exc}") from exc

    def _read_until(self, token: str, timeout: float) -> list[str]:
        lines = []
        while True:
            try:
                line = self._lines.get(timeout=timeout)
            except queue.Empty:
                raise EngineProtocolError(
                    f"timed out waiting for {token!r}") from None
            if line is None:
                raise EngineProtocolError(
                    f"engine exited before sending {token!r}")
            lines.append(line)
            if line.split(None, 1)[0:1] == [token]:
                return lines

    def _handshake(self) -> None:
        timeout = self.config.handshake_timeout_s
        self._send("uci")
        self._read_until("uciok", timeout)
        self._send(f"setoption name Hash value {self.config.hash_mb}")
        self._set_multipv(self.config.multipv)
        self._send("isready")
        self._read_until("readyok", timeout)

    def _set_multipv(self, k: int) -> None:
        if k != self._current_multipv:
            self._send(f"setoption name MultiPV value {k}")
            self._current_multipv = k

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._send("quit")
                self._proc.wait(timeout=5)
            except (EngineError, subprocess.TimeoutExpired):
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "UciEngine":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # --- queries ---

    def top_moves(self, board: cc.BoardState, k: int | None = None) -> list[RankedMove]:
        """Ranked best moves with scores, parsed from final-depth info lines."""
        k = self.config.multipv if k is None else k
        legal = cc.legal_moves(board)
        if not legal:
            raise EngineError("position has no legal moves")
        self._set_multipv(k)
        self._send(f"position fen {board.fen()}")
        self._send(self.config.limit.go_command())
        lines = self._read_until("bestmove", self.config.search_timeout_s)

        latest: dict[int, dict] = {}
        for line in lines:
            if line.startswith("info "):
                parsed = _parse_info(line)
                if parsed is not None:
                    latest[parsed["multipv"]] = parsed
        if not latest:
            raise EngineOutputError("no usable info lines before bestmove")

        white_to_move = board.side_to_move == cc.WHITE
        ranked = []
        for idx in sorted(latest):
            entry = latest[idx]
            try:
                move = cc.move_from_uci(board, entry["move"])
            except cc.IllegalMoveError as exc:
                raise EngineOutputError(str(exc)) from exc
            value = entry["value"] if white_to_move else -entry["value"]
            kind = "centipawns" if entry["kind"] == "cp" else "mate-in-n"
            ranked.append(RankedMove(move=move, rank=len(ranked) + 1,
                                     score=EvalScore(kind, value)))
        return ranked[:k]

    def evaluate(self, board: cc.BoardState) -> int:
        """White's advantage in centipawns; terminal positions score locally."""
        if not cc.legal_moves(board):
            if cc.is_check(board):
                return -MATE_BASE if board.side_to_move == cc.WHITE else MATE_BASE
            return 0  # stalemate
        best = self.top_moves(board, k=1)[0]
        return best.score.centipawns()

    def sample_reply(self, board: cc.BoardState, rng: Random) -> cc.Move:
        """Uniform draw from the engine's top three moves."""
        candidates = self.top_moves(board, k=3)
        return rng.choice(candidates).move


def _parse_info(line: str) -> dict | None:
    """Pull multipv index, score, and first pv move out of an info line."""
    tokens = line.split()
    out: dict = {"multipv": 1}
    i = 0
    found_score = False
    while i < len(tokens):
        tok = tokens[i]
        if tok == "multipv" and i + 1 < len(tokens):
            out["multipv"] = int(tokens[i + 1])
            i += 2
        elif tok == "score" and i + 2 < len(tokens):
            out["kind"] = tokens[i + 1]
            out["value"] = int(tokens[i + 2])
            found_score = True
            i += 3
        elif tok == "pv" and i + 1 < len(tokens):
            out["move"] = tokens[i + 1]
            i = len(tokens)
        else:
            i += 1
    if not found_score or "move" not in out or out.get("kind") not in ("cp", "mate"):
        return None
    return out


def start(config: EngineConfig) -> UciEngine:
    """Spawn the engine and complete the UCI handshake."""
    return UciEngine(config)


def sample_opening(rng: Random) -> str:
    """Uniform draw from the four allowed first moves for white."""
    return rng.choice(OPENING_MOVES)
