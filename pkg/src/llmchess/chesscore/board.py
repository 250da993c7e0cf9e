"""Board representation, legal move generation, and FEN I/O.

Squares are indexed 0..63, a1=0, h8=63, rank-major from white's side.
Pieces are signed ints: positive white, negative black, magnitude is the
piece kind. Positions are immutable values; applying a move returns a new
board.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

WHITE = 1
BLACK = -1

PAWN, KNIGHT, BISHOP, ROOK, QUEEN, KING = 1, 2, 3, 4, 5, 6

PIECE_NAMES = {PAWN: "pawn", KNIGHT: "knight", BISHOP: "bishop",
               ROOK: "rook", QUEEN: "queen", KING: "king"}
PIECE_LETTERS = {KNIGHT: "N", BISHOP: "B", ROOK: "R", QUEEN: "Q", KING: "K"}
LETTER_KINDS = {v: k for k, v in PIECE_LETTERS.items()}

_FEN_CHARS = {PAWN: "P", KNIGHT: "N", BISHOP: "B", ROOK: "R", QUEEN: "Q", KING: "K"}
_CHAR_PIECES = {c: kind for kind, c in _FEN_CHARS.items()}

# Castling-right bits.
CASTLE_WK, CASTLE_WQ, CASTLE_BK, CASTLE_BQ = 1, 2, 4, 8
ALL_CASTLING = CASTLE_WK | CASTLE_WQ | CASTLE_BK | CASTLE_BQ

# Move flag bits (internal raw moves).
_F_CAPTURE, _F_EP, _F_CASTLE_K, _F_CASTLE_Q = 1, 2, 4, 8

FILES = "abcdefgh"
RANKS = "12345678"

STARTING_FEN = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"


class IllegalMoveError(ValueError):
    """Raised when a move is applied to a position where it is not legal."""


def square_index(name: str) -> int:
    """Map a square name like "e4" to its 0..63 index."""
    if len(name) != 2 or name[0] not in FILES or name[1] not in RANKS:
        raise ValueError(f"bad square name: {name!r}")
    return FILES.index(name[0]) + 8 * RANKS.index(name[1])


def square_name(sq: int) -> str:
    return FILES[sq & 7] + RANKS[sq >> 3]


# --- precomputed geometry tables ------------------------------------------

def _build_step_table(deltas: list[tuple[int, int]]) -> tuple[tuple[int, ...], ...]:
    table = []
    for sq in range(64):
        f, r = sq & 7, sq >> 3
        targets = []
        for df, dr in deltas:
            nf, nr = f + df, r + dr
            if 0 <= nf < 8 and 0 <= nr < 8:
                targets.append(nf + 8 * nr)
        table.append(tuple(targets))
    return tuple(table)


def _build_ray_table(deltas: list[tuple[int, int]]) -> tuple[tuple[tuple[int, ...], ...], ...]:
    table = []
    for sq in range(64):
        f, r = sq & 7, sq >> 3
        rays = []
        for df, dr in deltas:
            ray = []
            nf, nr = f + df, r + dr
            while 0 <= nf < 8 and 0 <= nr < 8:
                ray.append(nf + 8 * nr)
                nf += df
                nr += dr
            if ray:
                rays.append(tuple(ray))
        table.append(tuple(rays))
    return tuple(table)


_ROOK_DELTAS = [(1, 0), (-1, 0), (0, 1), (0, -1)]
_BISHOP_DELTAS = [(1, 1), (1, -1), (-1, 1), (-1, -1)]

KNIGHT_MOVES = _build_step_table(
    [(1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2)])
KING_MOVES = _build_step_table(_ROOK_DELTAS + _BISHOP_DELTAS)
ROOK_RAYS = _build_ray_table(_ROOK_DELTAS)
BISHOP_RAYS = _build_ray_table(_BISHOP_DELTAS)

# Squares attacked by a pawn of each color standing on the index square.
WHITE_PAWN_ATTACKS = _build_step_table([(-1, 1), (1, 1)])
BLACK_PAWN_ATTACKS = _build_step_table([(-1, -1), (1, -1)])


def _build_between() -> tuple[tuple[tuple[int, ...], ...], ...]:
    between = [[()] * 64 for _ in range(64)]
    for sq in range(64):
        for rays in (ROOK_RAYS[sq], BISHOP_RAYS[sq]):
            for ray in rays:
                for i, dest in enumerate(ray):
                    between[sq][dest] = ray[:i]
    return tuple(tuple(row) for row in between)


BETWEEN = _build_between()

# Castling rights surviving a move touching the index square.
_CASTLE_MASK = [ALL_CASTLING] * 64
_CASTLE_MASK[square_index("e1")] = ALL_CASTLING & ~(CASTLE_WK | CASTLE_WQ)
_CASTLE_MASK[square_index("h1")] = ALL_CASTLING & ~CASTLE_WK
_CASTLE_MASK[square_index("a1")] = ALL_CASTLING & ~CASTLE_WQ
_CASTLE_MASK[square_index("e8")] = ALL_CASTLING & ~(CASTLE_BK | CASTLE_BQ)
_CASTLE_MASK[square_index("h8")] = ALL_CASTLING & ~CASTLE_BK
_CASTLE_MASK[square_index("a8")] = ALL_CASTLING & ~CASTLE_BQ
_CASTLE_MASK = tuple(_CASTLE_MASK)


# --- core types ------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Move:
    """A move between two squares, with flags fixed at generation time."""

    origin: int
    dest: int
    promotion: int | None = None
    is_capture: bool = False
    is_en_passant: bool = False
    castle: str | None = None  # "K" or "Q"

    def __post_init__(self) -> None:
        if self.origin == self.dest:
            raise ValueError("move origin equals destination")

    def uci(self) -> str:
        suffix = _FEN_CHARS[self.promotion].lower() if self.promotion else ""
        return square_name(self.origin) + square_name(self.dest) + suffix


@dataclass(frozen=True, slots=True)
class BoardState:
    """Immutable chess position, including clocks and castling rights."""

    squares: tuple[int, ...]
    side_to_move: int = WHITE
    castling: int = ALL_CASTLING
    ep_square: int | None = None
    halfmove_clock: int = 0
    fullmove_number: int = 1

    def piece_at(self, sq: int) -> int:
        return self.squares[sq]

    def king_square(self, color: int) -> int:
        return self.squares.index(KING * color)

    def fen(self) -> str:
        rows = []
        for rank in range(7, -1, -1):
            row = ""
            run = 0
            for file in range(8):
                p = self.squares[file + 8 * rank]
                if p == 0:
                    run += 1
                    continue
                if run:
                    row += str(run)
                    run = 0
                ch = _FEN_CHARS[abs(p)]
                row += ch if p > 0 else ch.lower()
            if run:
                row += str(run)
            rows.append(row)
        castle = "".join(
            ch for bit, ch in ((CASTLE_WK, "K"), (CASTLE_WQ, "Q"),
                               (CASTLE_BK, "k"), (CASTLE_BQ, "q"))
            if self.castling & bit) or "-"
        ep = square_name(self.ep_square) if self.ep_square is not None else "-"
        stm = "w" if self.side_to_move == WHITE else "b"
        return (f"{'/'.join(rows)} {stm} {castle} {ep} "
                f"{self.halfmove_clock} {self.fullmove_number}")


def initial_position() -> BoardState:
    return BoardState(**_parse_fen_fields(STARTING_FEN))


def board_from_fen(fen: str) -> BoardState:
    """Parse a 6-field FEN string, validating position invariants."""
    board = BoardState(**_parse_fen_fields(fen))
    _validate(board)
    return board


def _parse_fen_fields(fen: str) -> dict:
    parts = fen.strip().split()
    if len(parts) == 4:
        parts += ["0", "1"]
    if len(parts) != 6:
        raise ValueError(f"FEN must have 4 or 6 fields: {fen!r}")
    placement, stm, castle_str, ep_str, halfmove, fullmove = parts

    rows = placement.split("/")
    if len(rows) != 8:
        raise ValueError("FEN board must have 8 ranks")
    squares = [0] * 64
    for rank_idx, row in enumerate(rows):
        rank = 7 - rank_idx
        file = 0
        for ch in row:
            if ch.isdigit():
                file += int(ch)
            elif ch.upper() in _CHAR_PIECES:
                if file >= 8:
                    raise ValueError(f"too many squares in rank {rank + 1}")
                kind = _CHAR_PIECES[ch.upper()]
                squares[file + 8 * rank] = kind if ch.isupper() else -kind
                file += 1
            else:
                raise ValueError(f"bad FEN piece char: {ch!r}")
        if file != 8:
            raise ValueError(f"rank {rank + 1} does not fill 8 squares")

    if stm not in ("w", "b"):
        raise ValueError("side to move must be 'w' or 'b'")
    side = WHITE if stm == "w" else BLACK

    castling = 0
    if castle_str != "-":
        for ch in castle_str:
            try:
                castling |= {"K": CASTLE_WK, "Q": CASTLE_WQ,
                             "k": CASTLE_BK, "q": CASTLE_BQ}[ch]
            except KeyError:
                raise ValueError(f"bad castling field: {castle_str!r}") from None
    # Drop rights whose king/rook are not on their home squares.
    if squares[square_index("e1")] != KING:
        castling &= ~(CASTLE_WK | CASTLE_WQ)
    if squares[square_index("h1")] != ROOK:
        castling &= ~CASTLE_WK
    if squares[square_index("a1")] != ROOK:
        castling &= ~CASTLE_WQ
    if squares[square_index("e8")] != -KING:
        castling &= ~(CASTLE_BK | CASTLE_BQ)
    if squares[square_index("h8")] != -ROOK:
        castling &= ~CASTLE_BK
    if squares[square_index("a8")] != -ROOK:
        castling &= ~CASTLE_BQ

    ep_square = None if ep_str == "-" else square_index(ep_str)

    return dict(squares=tuple(squares), side_to_move=side, castling=castling,
                ep_square=ep_square, halfmove_clock=int(halfmove),
                fullmove_number=int(fullmove))


def _validate(board: BoardState) -> None:
    squares = board.squares
    for color, label in ((WHITE, "white"), (BLACK, "black")):
        kings = squares.count(KING * color)
        if kings != 1:
            raise ValueError(f"{label} must have exactly one king, found {kings}")
    for sq in range(8):
        if abs(squares[sq]) == PAWN or abs(squares[56 + sq]) == PAWN:
            raise ValueError("pawn on back rank")
    ep = board.ep_square
    if ep is not None:
        rank = ep >> 3
        if board.side_to_move == WHITE:
            ok = rank == 5 and squares[ep - 8] == -PAWN and squares[ep] == 0 and squares[ep + 8] == 0
        else:
            ok = rank == 2 and squares[ep + 8] == PAWN and squares[ep] == 0 and squares[ep - 8] == 0
        if not ok:
            raise ValueError(f"inconsistent en-passant target {square_name(ep)}")
    opponent = -board.side_to_move
    if _is_attacked(squares, squares.index(KING * opponent), board.side_to_move):
        raise ValueError("side not to move is in check")


# --- attack detection -------------------------------------------------------

def _is_attacked(squares, sq: int, by: int) -> bool:
    """True if any piece of color `by` pseudo-attacks square `sq`."""
    pawn_sources = BLACK_PAWN_ATTACKS[sq] if by == WHITE else WHITE_PAWN_ATTACKS[sq]
    pawn = PAWN * by
    for s in pawn_sources:
        if squares[s] == pawn:
            return True
    knight = KNIGHT * by
    for s in KNIGHT_MOVES[sq]:
        if squares[s] == knight:
            return True
    king = KING * by
    for s in KING_MOVES[sq]:
        if squares[s] == king:
            return True
    rook, queen = ROOK * by, QUEEN * by
    for ray in ROOK_RAYS[sq]:
        for s in ray:
            p = squares[s]
            if p:
                if p == rook or p == queen:
                    return True
                break
    bishop = BISHOP * by
    for ray in BISHOP_RAYS[sq]:
        for s in ray:
            p = squares[s]
            if p:
                if p == bishop or p == queen:
                    return True
                break
    return False


def _attacker_squares(squares, sq: int, by: int) -> list[int]:
    """All squares holding a piece of color `by` that pseudo-attacks `sq`."""
    found = []
    pawn_sources = BLACK_PAWN_ATTACKS[sq] if by == WHITE else WHITE_PAWN_ATTACKS[sq]
    pawn = PAWN * by
    for s in pawn_sources:
        if squares[s] == pawn:
            found.append(s)
    knight = KNIGHT * by
    for s in KNIGHT_MOVES[sq]:
        if squares[s] == knight:
            found.append(s)
    king = KING * by
    for s in KING_MOVES[sq]:
        if squares[s] == king:
            found.append(s)
    rook, queen = ROOK * by, QUEEN * by
    for ray in ROOK_RAYS[sq]:
        for s in ray:
            p = squares[s]
            if p:
                if p == rook or p == queen:
                    found.append(s)
                break
    bishop = BISHOP * by
    for ray in BISHOP_RAYS[sq]:
        for s in ray:
            p = squares[s]
            if p:
                if p == bishop or p == queen:
                    found.append(s)
                break
    return found


def attackers(board: BoardState, sq: int, color: int) -> tuple[int, ...]:
    """Squares of `color` pieces pseudo-attacking `sq` (pins ignored)."""
    return tuple(sorted(_attacker_squares(board.squares, sq, color)))


def attack_squares(board: BoardState, sq: int) -> tuple[int, ...]:
    """Squares pseudo-attacked by the piece on `sq` (pins ignored).

    Pawns report their capture diagonals only.
    """
    squares = board.squares
    p = squares[sq]
    if p == 0:
        return ()
    kind = abs(p)
    if kind == PAWN:
        return (WHITE_PAWN_ATTACKS if p > 0 else BLACK_PAWN_ATTACKS)[sq]
    if kind == KNIGHT:
        return KNIGHT_MOVES[sq]
    if kind == KING:
        return KING_MOVES[sq]
    if kind == ROOK:
        ray_sets = (ROOK_RAYS[sq],)
    elif kind == BISHOP:
        ray_sets = (BISHOP_RAYS[sq],)
    else:
        ray_sets = (ROOK_RAYS[sq], BISHOP_RAYS[sq])
    attacked = []
    for rays in ray_sets:
        for ray in rays:
            for t in ray:
                attacked.append(t)
                if squares[t] != 0:
                    break
    return tuple(sorted(attacked))


def is_check(board: BoardState) -> bool:
    """True if the side to move is currently in check."""
    return _is_attacked(board.squares, board.king_square(board.side_to_move),
                        -board.side_to_move)


# --- move generation ---------------------------------------------------------

def _legal_moves_raw(board: BoardState) -> list[tuple[int, int, int, int]]:
    """Raw legal moves as (origin, dest, promotion, flags) tuples."""
    squares = board.squares
    stm = board.side_to_move
    enemy = -stm
    white = stm == WHITE
    king_sq = squares.index(KING * stm)

    moves: list[tuple[int, int, int, int]] = []

    # King steps are tested on a board with the king removed so that sliding
    # attacks pass through his current square.
    occ_wo_king = list(squares)
    occ_wo_king[king_sq] = 0
    for t in KING_MOVES[king_sq]:
        tp = squares[t]
        if tp != 0 and (tp > 0) == white:
            continue
        if _is_attacked(occ_wo_king, t, enemy):
            continue
        moves.append((king_sq, t, 0, _F_CAPTURE if tp else 0))

    checkers = _attacker_squares(squares, king_sq, enemy)
    if len(checkers) >= 2:
        return moves

    # Absolutely pinned pieces may only move along their pin ray.
    pin_allowed: dict[int, frozenset[int]] = {}
    for rays, extra in ((ROOK_RAYS[king_sq], ROOK), (BISHOP_RAYS[king_sq], BISHOP)):
        for ray in rays:
            blocker = -1
            for t in ray:
                p = squares[t]
                if p == 0:
                    continue
                if (p > 0) == white:
                    if blocker < 0:
                        blocker = t
                    else:
                        break
                else:
                    kind = -p if p < 0 else p
                    if blocker >= 0 and (kind == extra or kind == QUEEN):
                        allowed = set(BETWEEN[king_sq][t])
                        allowed.add(t)
                        pin_allowed[blocker] = frozenset(allowed)
                    break

    if len(checkers) == 1:
        c = checkers[0]
        ck = squares[c]
        ckind = -ck if ck < 0 else ck
        if ckind in (BISHOP, ROOK, QUEEN):
            evasion = frozenset(BETWEEN[king_sq][c]) | {c}
        else:
            evasion = frozenset((c,))
    else:
        evasion = None

    up = 8 if white else -8
    start_rank = 1 if white else 6
    promo_rank = 7 if white else 0
    pawn_attacks = WHITE_PAWN_ATTACKS if white else BLACK_PAWN_ATTACKS

    for frm in range(64):
        p = squares[frm]
        if p == 0 or (p > 0) != white:
            continue
        kind = -p if p < 0 else p
        if kind == KING:
            continue
        allowed = pin_allowed.get(frm)

        if kind == PAWN:
            t = frm + up
            if squares[t] == 0:
                if (evasion is None or t in evasion) and (allowed is None or t in allowed):
                    if t >> 3 == promo_rank:
                        for promo in (QUEEN, ROOK, BISHOP, KNIGHT):
                            moves.append((frm, t, promo, 0))
                    else:
                        moves.append((frm, t, 0, 0))
                if frm >> 3 == start_rank:
                    t2 = t + up
                    if squares[t2] == 0 and (evasion is None or t2 in evasion) \
                            and (allowed is None or t2 in allowed):
                        moves.append((frm, t2, 0, 0))
            for t in pawn_attacks[frm]:
                tp = squares[t]
                if tp != 0 and (tp > 0) != white:
                    if (evasion is None or t in evasion) and (allowed is None or t in allowed):
                        if t >> 3 == promo_rank:
                            for promo in (QUEEN, ROOK, BISHOP, KNIGHT):
                                moves.append((frm, t, promo, _F_CAPTURE))
                        else:
                            moves.append((frm, t, 0, _F_CAPTURE))
        elif kind == KNIGHT:
            if allowed is not None:
                continue  # a pinned knight can never stay on the ray
            for t in KNIGHT_MOVES[frm]:
                tp = squares[t]
                if tp != 0 and (tp > 0) == white:
                    continue
                if evasion is None or t in evasion:
                    moves.append((frm, t, 0, _F_CAPTURE if tp else 0))
        else:
            if kind == ROOK:
                ray_sets = (ROOK_RAYS[frm],)
            elif kind == BISHOP:
                ray_sets = (BISHOP_RAYS[frm],)
            else:
                ray_sets = (ROOK_RAYS[frm], BISHOP_RAYS[frm])
            for rays in ray_sets:
                for ray in rays:
                    for t in ray:
                        tp = squares[t]
                        if tp != 0 and (tp > 0) == white:
                            break
                        if (evasion is None or t in evasion) and \
                                (allowed is None or t in allowed):
                            moves.append((frm, t, 0, _F_CAPTURE if tp else 0))
                        if tp != 0:
                            break

    # En passant: rare enough to validate by making the move, which also
    # covers the horizontal discovered-check trap.
    ep = board.ep_square
    if ep is not None:
        captured_sq = ep - up
        for s in (BLACK_PAWN_ATTACKS[ep] if white else WHITE_PAWN_ATTACKS[ep]):
            if squares[s] == PAWN * stm:
                after = list(squares)
                after[s] = 0
                after[captured_sq] = 0
                after[ep] = PAWN * stm
                if not _is_attacked(after, after.index(KING * stm), enemy):
                    moves.append((s, ep, 0, _F_CAPTURE | _F_EP))

    # Castling: king not in check, path empty, transit squares unattacked.
    if evasion is None:
        if white:
            if board.castling & CASTLE_WK and squares[5] == 0 and squares[6] == 0 \
                    and not _is_attacked(squares, 5, enemy) \
                    and not _is_attacked(squares, 6, enemy):
                moves.append((4, 6, 0, _F_CASTLE_K))
            if board.castling & CASTLE_WQ and squares[3] == 0 and squares[2] == 0 \
                    and squares[1] == 0 and not _is_attacked(squares, 3, enemy) \
                    and not _is_attacked(squares, 2, enemy):
                moves.append((4, 2, 0, _F_CASTLE_Q))
        else:
            if board.castling & CASTLE_BK and squares[61] == 0 and squares[62] == 0 \
                    and not _is_attacked(squares, 61, enemy) \
                    and not _is_attacked(squares, 62, enemy):
                moves.append((60, 62, 0, _F_CASTLE_K))
            if board.castling & CASTLE_BQ and squares[59] == 0 and squares[58] == 0 \
                    and squares[57] == 0 and not _is_attacked(squares, 59, enemy) \
                    and not _is_attacked(squares, 58, enemy):
                moves.append((60, 58, 0, _F_CASTLE_Q))

    return moves


def _wrap_raw(raw: tuple[int, int, int, int]) -> Move:
    frm, to, promo, flags = raw
    return Move(origin=frm, dest=to, promotion=promo or None,
                is_capture=bool(flags & _F_CAPTURE),
                is_en_passant=bool(flags & _F_EP),
                castle="K" if flags & _F_CASTLE_K else
                       "Q" if flags & _F_CASTLE_Q else None)


@lru_cache(maxsize=8192)
def legal_moves(board: BoardState) -> tuple[Move, ...]:
    """All legal moves in a deterministic order."""
    return tuple(_wrap_raw(raw) for raw in sorted(_legal_moves_raw(board)))


def _apply_raw(board: BoardState, raw: tuple[int, int, int, int]) -> BoardState:
    frm, to, promo, flags = raw
    squares = list(board.squares)
    stm = board.side_to_move
    p = squares[frm]
    capture = flags & _F_CAPTURE

    halfmove = 0 if (capture or p == PAWN * stm) else board.halfmove_clock + 1
    ep = None
    if p == PAWN * stm:
        if flags & _F_EP:
            squares[to - (8 if stm == WHITE else -8)] = 0
        elif to - frm == 16 * stm:
            ep = frm + 8 * stm

    squares[frm] = 0
    squares[to] = promo * stm if promo else p

    if flags & _F_CASTLE_K:
        rook_from, rook_to = (7, 5) if stm == WHITE else (63, 61)
        squares[rook_to] = squares[rook_from]
        squares[rook_from] = 0
    elif flags & _F_CASTLE_Q:
        rook_from, rook_to = (0, 3) if stm == WHITE else (56, 59)
        squares[rook_to] = squares[rook_from]
        squares[rook_from] = 0

    castling = board.castling & _CASTLE_MASK[frm] & _CASTLE_MASK[to]
    fullmove = board.fullmove_number + (1 if stm == BLACK else 0)
    return BoardState(tuple(squares), -stm, castling, ep, halfmove, fullmove)


def _move_to_raw(move: Move) -> tuple[int, int, int, int]:
    flags = (_F_CAPTURE if move.is_capture else 0) \
        | (_F_EP if move.is_en_passant else 0) \
        | (_F_CASTLE_K if move.castle == "K" else 0) \
        | (_F_CASTLE_Q if move.castle == "Q" else 0)
    return (move.origin, move.dest, move.promotion or 0, flags)


def apply_move(board: BoardState, move: Move) -> BoardState:
    """Apply a legal move, returning the successor position."""
    if move not in legal_moves(board):
        raise IllegalMoveError(f"{move.uci()} is not legal in {board.fen()}")
    return _apply_raw(board, _move_to_raw(move))


def move_from_uci(board: BoardState, text: str) -> Move:
    """Resolve a UCI move string ("e2e4", "e7e8q") to a legal move."""
    text = text.strip()
    for move in legal_moves(board):
        if move.uci() == text:
            return move
    raise IllegalMoveError(f"{text!r} is not legal in {board.fen()}")


def perft(board: BoardState, depth: int) -> int:
    """Count leaf nodes of the legal move tree to the given depth."""
    if depth <= 0:
        return 1
    raws = _legal_moves_raw(board)
    if depth == 1:
        return len(raws)
    return sum(perft(_apply_raw(board, raw), depth - 1) for raw in raws)
