"""Terminal-state detection: mates, stalemates, and automatic draws.

Threefold repetition and the fifty-move rule terminate the game without a
claim step; the play loop has no claiming agent.
"""
from __future__ import annotations

from .board import BISHOP, KING, PAWN, QUEEN, ROOK, BoardState, is_check, legal_moves

GAME_STATUSES = (
    "ongoing",
    "checkmate",
    "stalemate",
    "draw-fifty-move",
    "draw-threefold",
    "draw-insufficient-material",
)


def insufficient_material(board: BoardState) -> bool:
    """King vs king, a lone minor piece, or same-colored bishops only."""
    minors = []
    for sq, p in enumerate(board.squares):
        kind = abs(p)
        if kind in (PAWN, ROOK, QUEEN):
            return False
        if kind and kind != KING:
            minors.append((sq, kind))
    if len(minors) <= 1:
        return True
    if all(kind == BISHOP for _, kind in minors):
        shades = {((sq & 7) + (sq >> 3)) & 1 for sq, _ in minors}
        return len(shades) == 1
    return False


def repetition_key(board: BoardState) -> tuple:
    """Identity used for repetition counting.

    The en-passant square only differentiates positions while a legal
    en-passant capture exists.
    """
    ep = board.ep_square
    if ep is not None and not any(m.is_en_passant for m in legal_moves(board)):
        ep = None
    return (board.squares, board.side_to_move, board.castling, ep)


def game_status(board: BoardState, history: tuple[BoardState, ...] = ()) -> str:
    """Classify the position; `history` holds all prior positions of the game."""
    if not legal_moves(board):
        return "checkmate" if is_check(board) else "stalemate"
    if insufficient_material(board):
        return "draw-insufficient-material"
    if board.halfmove_clock >= 100:
        return "draw-fifty-move"
    key = repetition_key(board)
    seen = 1 + sum(1 for past in history if repetition_key(past) == key)
    if seen >= 3:
        return "draw-threefold"
    return "ongoing"
