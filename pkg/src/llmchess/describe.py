"""Natural-language board descriptions for the description-based variation.

For each color: remaining-piece counts, one relation sentence per piece
(capture targets, attackers, defenders; all pin-agnostic pseudo-attacks),
an en-passant note on the capturable pawn, and castling rights. Pieces are
walked a1 to h8 within each color so output is deterministic.
"""
from __future__ import annotations

from . import chesscore as cc

_KIND_ORDER = (cc.PAWN, cc.KNIGHT, cc.BISHOP, cc.ROOK, cc.QUEEN, cc.KING)
_PLURALS = {"pawn": "pawns", "knight": "knights", "bishop": "bishops",
            "rook": "rooks", "queen": "queens", "king": "kings"}


def _join(names: list[str]) -> str:
    if not names:
        return "nothing"
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


def _piece_ref(board: cc.BoardState, sq: int) -> str:
    kind = abs(board.piece_at(sq))
    return f"the {cc.PIECE_NAMES[kind]} on {cc.square_name(sq)}"


def _ep_pawn_square(board: cc.BoardState) -> int | None:
    """Square of the pawn that may currently be captured en passant."""
    ep = board.ep_square
    if ep is None:
        return None
    return ep - 8 if ep >> 3 == 5 else ep + 8


def describe_board(board: cc.BoardState) -> str:
    """Full-position description, white first, then black."""
    lines: list[str] = []
    ep_pawn = _ep_pawn_square(board)

    for color, label in ((cc.WHITE, "White"), (cc.BLACK, "Black")):
        own = [sq for sq in range(64)
               if board.piece_at(sq) != 0 and (board.piece_at(sq) > 0) == (color > 0)]

        for kind in _KIND_ORDER:
            name = cc.PIECE_NAMES[kind]
            count = sum(1 for sq in own if abs(board.piece_at(sq)) == kind)
            noun = name if count == 1 else _PLURALS[name]
            lines.append(f"{label} has {count} {noun} left.")

        for sq in own:
            kind = abs(board.piece_at(sq))
            targets = [t for t in cc.attack_squares(board, sq)
                       if board.piece_at(t) != 0
                       and (board.piece_at(t) > 0) != (color > 0)]
            captured_by = [s for s in cc.attackers(board, sq, -color)]
            defended_by = [s for s in cc.attackers(board, sq, color)]
            sentence = (f"A {cc.PIECE_NAMES[kind]} is on {cc.square_name(sq)}, "
                        f"can capture {_join([_piece_ref(board, t) for t in targets])}, "
                        f"can be captured by {_join([_piece_ref(board, s) for s in captured_by])}, "
                        f"and is defended by {_join([_piece_ref(board, s) for s in defended_by])}.")
            if sq == ep_pawn:
                sentence += " This pawn can be captured en passant."
            lines.append(sentence)

        king_bit, queen_bit = ((1, 2) if color == cc.WHITE else (4, 8))
        for bit, side in ((king_bit, "kingside"), (queen_bit, "queenside")):
            if board.castling & bit:
                lines.append(f"{label} has {side} castling rights.")
            else:
                lines.append(f"{label} does not have {side} castling rights.")

    return "\n".join(lines)
