"""Pure chess rules engine: positions, legal moves, SAN, and game status."""

from .board import (
    BLACK,
    BISHOP,
    BoardState,
    IllegalMoveError,
    KING,
    KNIGHT,
    Move,
    PAWN,
    PIECE_LETTERS,
    PIECE_NAMES,
    QUEEN,
    ROOK,
    STARTING_FEN,
    WHITE,
    apply_move,
    attack_squares,
    attackers,
    board_from_fen,
    initial_position,
    is_check,
    legal_moves,
    move_from_uci,
    perft,
    square_index,
    square_name,
)
from .san import (
    AmbiguousSanError,
    IllegalSanError,
    NotAMoveError,
    SanError,
    format_san,
    parse_san,
)
from .status import (
    GAME_STATUSES,
    game_status,
    insufficient_material,
    repetition_key,
)

__all__ = [
    "AmbiguousSanError", "BISHOP", "BLACK", "BoardState", "GAME_STATUSES",
    "IllegalMoveError", "IllegalSanError", "KING", "KNIGHT", "Move",
    "NotAMoveError", "PAWN", "PIECE_LETTERS", "PIECE_NAMES", "QUEEN", "ROOK",
    "STARTING_FEN", "SanError", "WHITE", "apply_move", "attack_squares", "attackers",
    "board_from_fen", "format_san", "game_status", "initial_position",
    "insufficient_material", "is_check", "legal_moves", "move_from_uci",
    "parse_san", "perft", "repetition_key", "square_index", "square_name",
]
