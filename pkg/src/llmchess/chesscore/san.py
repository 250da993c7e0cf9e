"""Standard Algebraic Notation parsing and formatting.

Parsing is tolerant of check/mate suffixes, annotation glyphs, "e.p."
markers, and both castling spellings; the three failure modes are kept
distinct because downstream attempt classification depends on them.
"""
from __future__ import annotations

import re

from .board import (
    KING,
    LETTER_KINDS,
    PAWN,
    PIECE_LETTERS,
    BoardState,
    IllegalMoveError,
    Move,
    apply_move,
    is_check,
    legal_moves,
    square_name,
)


class SanError(ValueError):
    """Base class for SAN resolution failures."""


class NotAMoveError(SanError):
    """The text does not match the SAN grammar at all."""


class IllegalSanError(SanError):
    """SAN-shaped text that denotes no legal move in this position."""


class AmbiguousSanError(SanError):
    """SAN-shaped text matching more than one legal move."""


_SAN_RE = re.compile(
    r"""(?P<castle>[O0]-[O0](?:-[O0])?)
      | (?P<piece>[KQRBN])(?P<dis_file>[a-h])?(?P<dis_rank>[1-8])?x?(?P<piece_dest>[a-h][1-8])
      | (?P<pawn_file>[a-h])x(?P<cap_dest>[a-h][1-8])(?:=?(?P<cap_promo>[QRBN]))?
      | (?P<push_dest>[a-h][1-8])(?:=?(?P<push_promo>[QRBN]))?
    """,
    re.VERBOSE,
)


def _strip_decorations(text: str) -> str:
    core = text.strip()
    core = re.sub(r"[+#!?]+$", "", core)
    core = re.sub(r"\s*e\.p\.?$", "", core, flags=re.IGNORECASE)
    return re.sub(r"[+#!?]+$", "", core).strip()


def parse_san(board: BoardState, text: str) -> Move:
    """Resolve SAN text to the unique legal move it denotes on `board`."""
    core = _strip_decorations(text)
    m = _SAN_RE.fullmatch(core)
    if not m:
        raise NotAMoveError(f"not SAN-shaped: {text!r}")

    moves = legal_moves(board)

    if m.group("castle"):
        side = "Q" if m.group("castle").count("-") == 2 else "K"
        for move in moves:
            if move.castle == side:
                return move
        raise IllegalSanError(f"castling {'queenside' if side == 'Q' else 'kingside'} "
                              f"is not legal here")

    if m.group("piece"):
        kind = LETTER_KINDS[m.group("piece")]
        dest = _square(m.group("piece_dest"))
        dis_file = m.group("dis_file")
        dis_rank = m.group("dis_rank")
        candidates = [
            mv for mv in moves
            if mv.castle is None and mv.dest == dest
            and abs(board.squares[mv.origin]) == kind
            and (dis_file is None or mv.origin & 7 == ord(dis_file) - 97)
            and (dis_rank is None or mv.origin >> 3 == int(dis_rank) - 1)
        ]
    elif m.group("pawn_file"):
        dest = _square(m.group("cap_dest"))
        promo = _promo_kind(m.group("cap_promo"))
        origin_file = ord(m.group("pawn_file")) - 97
        candidates = [
            mv for mv in moves
            if mv.is_capture and mv.dest == dest and mv.promotion == promo
            and abs(board.squares[mv.origin]) == PAWN
            and mv.origin & 7 == origin_file
        ]
    else:
        dest = _square(m.group("push_dest"))
        promo = _promo_kind(m.group("push_promo"))
        candidates = [
            mv for mv in moves
            if not mv.is_capture and mv.dest == dest and mv.promotion == promo
            and abs(board.squares[mv.origin]) == PAWN
        ]

    if not candidates:
        raise IllegalSanError(f"no legal move matches {text!r}")
    if len(candidates) > 1:
        raise AmbiguousSanError(f"{text!r} matches {len(candidates)} legal moves")
    return candidates[0]


def _square(name: str) -> int:
    return (ord(name[0]) - 97) + 8 * (int(name[1]) - 1)


def _promo_kind(letter: str | None) -> int | None:
    return LETTER_KINDS[letter] if letter else None


def format_san(board: BoardState, move: Move) -> str:
    """Minimal SAN for a legal move, with check/mate suffix."""
    moves = legal_moves(board)
    if move not in moves:
        raise IllegalMoveError(f"{move.uci()} is not legal in {board.fen()}")

    if move.castle:
        core = "O-O" if move.castle == "K" else "O-O-O"
    else:
        kind = abs(board.squares[move.origin])
        dest_name = square_name(move.dest)
        if kind == PAWN:
            if move.is_capture:
                core = f"{chr(97 + (move.origin & 7))}x{dest_name}"
            else:
                core = dest_name
            if move.promotion:
                core += "=" + PIECE_LETTERS[move.promotion]
        else:
            rivals = [
                mv for mv in moves
                if mv.castle is None and mv.dest == move.dest
                and mv.origin != move.origin
                and abs(board.squares[mv.origin]) == kind
            ]
            if not rivals:
                dis = ""
            elif all(mv.origin & 7 != move.origin & 7 for mv in rivals):
                dis = chr(97 + (move.origin & 7))
            elif all(mv.origin >> 3 != move.origin >> 3 for mv in rivals):
                dis = str(1 + (move.origin >> 3))
            else:
                dis = square_name(move.origin)
            core = PIECE_LETTERS[kind] + dis + ("x" if move.is_capture else "") + dest_name

    after = apply_move(board, move)
    if is_check(after):
        core += "#" if not legal_moves(after) else "+"
    return core
