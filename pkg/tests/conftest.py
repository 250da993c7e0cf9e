"""Shared fixtures, oracles, and helpers for the test suite."""
from __future__ import annotations

import random
import re
import sys

import pytest

from llmchess import chesscore as cc


def oracle_attacked(squares: tuple[int, ...], target: int, by: int) -> bool:
    """Naive full-board scan deciding whether `by` attacks `target`.

    Written from the piece-movement rules directly, sharing no geometry
    tables with the implementation under test.
    """
    tf, tr = target % 8, target // 8
    for s, p in enumerate(squares):
        if p == 0 or (p > 0) != (by > 0):
            continue
        kind = abs(p)
        f, r = s % 8, s // 8
        df, dr = tf - f, tr - r
        if df == 0 and dr == 0:
            continue
        if kind == cc.PAWN:
            if dr == (1 if by > 0 else -1) and abs(df) == 1:
                return True
        elif kind == cc.KNIGHT:
            if sorted((abs(df), abs(dr))) == [1, 2]:
                return True
        elif kind == cc.KING:
            if max(abs(df), abs(dr)) == 1:
                return True
        else:
            straight = df == 0 or dr == 0
            diagonal = abs(df) == abs(dr)
            reaches = (kind == cc.ROOK and straight) or \
                      (kind == cc.BISHOP and diagonal) or \
                      (kind == cc.QUEEN and (straight or diagonal))
            if not reaches:
                continue
            step_f = (df > 0) - (df < 0)
            step_r = (dr > 0) - (dr < 0)
            cf, cr = f + step_f, r + step_r
            blocked = False
            while (cf, cr) != (tf, tr):
                if squares[cf + 8 * cr] != 0:
                    blocked = True
                    break
                cf += step_f
                cr += step_r
            if not blocked:
                return True
    return False


_RELATION_RE = re.compile(
    r"^A (?P<kind>\w+) is on (?P<square>[a-h][1-8]), "
    r"can capture (?P<targets>.*), "
    r"can be captured by (?P<attackers>.*), "
    r"and is defended by (?P<defenders>.*?)\."
)
_REF_RE = re.compile(r"the \w+ on ([a-h][1-8])")


def description_discrepancies(board: cc.BoardState, text: str) -> list[str]:
    """Compare every relation claim in a description against the oracle.

    Returns human-readable discrepancy strings; empty means the description
    is sound and complete for capture/attacker/defender relations.
    """
    problems: list[str] = []
    squares = board.squares
    seen_squares: set[int] = set()

    for line in text.splitlines():
        m = _RELATION_RE.match(line)
        if not m:
            continue
        sq = cc.square_index(m.group("square"))
        seen_squares.add(sq)
        piece = squares[sq]
        if piece == 0:
            problems.append(f"{line!r}: no piece on {m.group('square')}")
            continue
        color = 1 if piece > 0 else -1
        claimed_targets = {cc.square_index(s) for s in _REF_RE.findall(m.group("targets"))}
        claimed_attackers = {cc.square_index(s) for s in _REF_RE.findall(m.group("attackers"))}
        claimed_defenders = {cc.square_index(s) for s in _REF_RE.findall(m.group("defenders"))}

        true_targets = {
            t for t in range(64)
            if squares[t] != 0 and (squares[t] > 0) != (piece > 0)
            and _attacks_from(squares, sq, t)
        }
        true_attackers = {
            s for s in range(64)
            if squares[s] != 0 and (squares[s] > 0) != (piece > 0)
            and _attacks_from(squares, s, sq)
        }
        true_defenders = {
            s for s in range(64)
            if s != sq and squares[s] != 0 and (squares[s] > 0) == (piece > 0)
            and _attacks_from(squares, s, sq)
        }

        for label, claimed, truth in (
            ("targets", claimed_targets, true_targets),
            ("attackers", claimed_attackers, true_attackers),
            ("defenders", claimed_defenders, true_defenders),
        ):
            if claimed != truth:
                problems.append(
                    f"{m.group('square')} {label}: claimed "
                    f"{sorted(cc.square_name(s) for s in claimed)} vs oracle "
                    f"{sorted(cc.square_name(s) for s in truth)}")

    expected = {sq for sq in range(64) if squares[sq] != 0}
    missing = expected - seen_squares
    if missing:
        problems.append(
            "no sentence for " + ", ".join(sorted(cc.square_name(s) for s in missing)))
    return problems


def _attacks_from(squares, origin: int, target: int) -> bool:
    """Does the piece on `origin` pseudo-attack `target`? Naive geometry."""
    p = squares[origin]
    if p == 0 or origin == target:
        return False
    kind = abs(p)
    f, r = origin % 8, origin // 8
    tf, tr = target % 8, target // 8
    df, dr = tf - f, tr - r
    if kind == cc.PAWN:
        return dr == (1 if p > 0 else -1) and abs(df) == 1
    if kind == cc.KNIGHT:
        return sorted((abs(df), abs(dr))) == [1, 2]
    if kind == cc.KING:
        return max(abs(df), abs(dr)) == 1
    straight = df == 0 or dr == 0
    diagonal = abs(df) == abs(dr)
    if kind == cc.ROOK and not straight:
        return False
    if kind == cc.BISHOP and not diagonal:
        return False
    if kind == cc.QUEEN and not (straight or diagonal):
        return False
    step_f = (df > 0) - (df < 0)
    step_r = (dr > 0) - (dr < 0)
    cf, cr = f + step_f, r + step_r
    while (cf, cr) != (tf, tr):
        if squares[cf + 8 * cr] != 0:
            return False
        cf += step_f
        cr += step_r
    return True


def random_playout_positions(seed: int, n_positions: int,
                             max_plies: int = 60) -> list[cc.BoardState]:
    """Reachable positions sampled by seeded random play from the start.

    Every emitted position arises from a legal game, so it satisfies all
    board invariants by construction.
    """
    rng = random.Random(seed)
    positions: list[cc.BoardState] = []
    while len(positions) < n_positions:
        board = cc.initial_position()
        for _ in range(rng.randrange(4, max_plies)):
            moves = cc.legal_moves(board)
            if not moves:
                break
            board = cc.apply_move(board, rng.choice(moves))
            positions.append(board)
            if len(positions) >= n_positions:
                break
    return positions


@pytest.fixture(scope="session")
def fake_engine_command() -> list[str]:
    return [sys.executable, "-m", "llmchess.fake_engine"]
