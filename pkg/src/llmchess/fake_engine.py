"""Deterministic offline UCI engine for tests and mock-mode runs.

Run as ``python -m llmchess.fake_engine [--script FILE]``. Without a
script it plays a one-ply greedy material search: mating moves first,
then by material gained, ties broken by UCI string, so its output is a
pure function of the position. A script file can pin the ranked moves
for chosen positions (by FEN or by ply count) to drive scripted games.

Script format (JSON)::

    {
      "fens":  {"<first four FEN fields>": [{"move": "g4", "cp": -50}, ...]},
      "plies": {"2": [{"move": "g4", "cp": -50}, {"move": "h4", "mate": -2}]}
    }

Moves may be SAN or UCI. Entries are emitted as multipv 1..n.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import chesscore as cc

PIECE_VALUES = {cc.PAWN: 100, cc.KNIGHT: 300, cc.BISHOP: 300,
                cc.ROOK: 500, cc.QUEEN: 900, cc.KING: 0}


def material_balance(board: cc.BoardState, color: int) -> int:
    total = 0
    for p in board.squares:
        if p:
            value = PIECE_VALUES[abs(p)]
            total += value if (p > 0) == (color > 0) else -value
    return total


def greedy_candidates(board: cc.BoardState) -> list[tuple[cc.Move, str, int]]:
    """(move, score-kind, value) for every legal move, best first."""
    mover = board.side_to_move
    scored = []
    for move in cc.legal_moves(board):
        after = cc.apply_move(board, move)
        if not cc.legal_moves(after) and cc.is_check(after):
            scored.append((move, "mate", 1))
        else:
            scored.append((move, "cp", material_balance(after, mover)))
    scored.sort(key=lambda item: (item[1] != "mate",
                                  -item[2] if item[1] == "cp" else item[2],
                                  item[0].uci()))
    return scored


class FakeEngine:
    def __init__(self, script: dict | None = None,
                 out=sys.stdout, name: str = "llmchess-fake-engine"):
        self.script = script or {}
        self.out = out
        self.name = name
        self.board = cc.initial_position()
        self.ply_count = 0
        self.multipv = 1

    def _emit(self, line: str) -> None:
        self.out.write(line + "\n")
        self.out.flush()

    def _resolve(self, text: str) -> cc.Move:
        try:
            return cc.move_from_uci(self.board, text)
        except cc.IllegalMoveError:
            return cc.parse_san(self.board, text)

    def _scripted_entries(self) -> list[dict] | None:
        fen_key = " ".join(self.board.fen().split()[:4])
        by_fen = self.script.get("fens", {})
        if fen_key in by_fen:
            return by_fen[fen_key]
        by_ply = self.script.get("plies", {})
        return by_ply.get(str(self.ply_count))

    def handle_position(self, args: str) -> None:
        rest = args.strip()
        if rest.startswith("startpos"):
            self.board = cc.initial_position()
            rest = rest[len("startpos"):].strip()
        elif rest.startswith("fen"):
            rest = rest[len("fen"):].strip()
            if " moves " in rest:
                fen, rest = rest.split(" moves ", 1)
                rest = "moves " + rest
            else:
                fen, rest = rest, ""
            self.board = cc.board_from_fen(fen.strip())
        self.ply_count = 0
        if rest.startswith("moves"):
            for uci in rest[len("moves"):].split():
                self.board = cc.apply_move(self.board, cc.move_from_uci(self.board, uci))
                self.ply_count += 1

    def handle_go(self) -> None:
        legal = cc.legal_moves(self.board)
        if not legal:
            self._emit("info depth 0 score mate 0")
            self._emit("bestmove (none)")
            return

        entries = self._scripted_entries()
        ranked: list[tuple[cc.Move, str, int]] = []
        if entries is not None:
            for entry in entries:
                move = self._resolve(entry["move"])
                if "mate" in entry:
                    ranked.append((move, "mate", int(entry["mate"])))
                else:
                    ranked.append((move, "cp", int(entry.get("cp", 0))))
        else:
            ranked = greedy_candidates(self.board)

        shown = ranked[:self.multipv]
        for i, (move, kind, value) in enumerate(shown, start=1):
            self._emit(f"info depth 1 seldepth 1 multipv {i} "
                       f"score {kind} {value} nodes 1000 pv {move.uci()}")
        self._emit(f"bestmove {shown[0][0].uci()}")

    def handle_line(self, line: str) -> bool:
        """Process one command; False means quit."""
        line = line.strip()
        if not line:
            return True
        command, _, args = line.partition(" ")
        if command == "uci":
            self._emit(f"id name {self.name}")
            self._emit("id author llmchess")
            self._emit("option name MultiPV type spin default 1 min 1 max 64")
            self._emit("option name Hash type spin default 16 min 1 max 1024")
            self._emit("uciok")
        elif command == "isready":
            self._emit("readyok")
        elif command == "setoption":
            tokens = args.split()
            if len(tokens) >= 4 and tokens[0] == "name" and tokens[1] == "MultiPV":
                self.multipv = int(tokens[3])
        elif command == "ucinewgame":
            self.board = cc.initial_position()
            self.ply_count = 0
        elif command == "position":
            self.handle_position(args)
        elif command == "go":
            self.handle_go()
        elif command == "stop":
            pass
        elif command == "quit":
            return False
        return True


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Deterministic fake UCI engine")
    parser.add_argument("--script", help="JSON file pinning ranked moves per position")
    parser.add_argument("--name", default="llmchess-fake-engine")
    args = parser.parse_args(argv)

    script = None
    if args.script:
        with open(args.script, "r", encoding="utf-8") as fh:
            script = json.load(fh)

    engine = FakeEngine(script=script, name=args.name)
    for line in sys.stdin:
        if not engine.handle_line(line):
            break
    return 0


if __name__ == "__main__":
    sys.exit(main())
