"""Exact solver for finite two-person zero-sum matrix games.

The row player maximises, the column player minimises.  The game is reduced
to a pair of primal/dual linear programs (shift entries positive, maximise
the column player's scaled mixture) and solved by a dense tableau simplex
with Bland's rule.  The fast path runs in floats with periodic basis
reinversion; if its duality certificate misses the requested tolerance
(near-duplicate rows can make the optimal basis arbitrarily
ill-conditioned), the game is re-solved in exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

_PIVOT_EPS = 1e-11
_MAX_PIVOTS = 50_000


class MatrixGameError(RuntimeError):
    pass


@dataclass(frozen=True)
class MatrixGame:
    payoffs: np.ndarray  # shape (m, n); row maximises

    def __post_init__(self):
        p = np.asarray(self.payoffs, dtype=float)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise MatrixGameError("payoff matrix must be 2-d with m, n >= 1")
        if not np.all(np.isfinite(p)):
            raise MatrixGameError("payoff matrix contains non-finite entries")
        object.__setattr__(self, "payoffs", p)


@dataclass(frozen=True)
class GameSolution:
    value: float
    row_mix: np.ndarray
    col_mix: np.ndarray
    gap: float  # certified duality gap >= 0


def _pivot_loop(tab: np.ndarray, basis: list, m: int, n_total: int, cap: int) -> int:
    """Bland-rule pivots in place, at most ``cap``; returns the count."""
    pivots = 0
    for _ in range(cap):
        cost = tab[m, :-1]
        enter = -1
        for j in range(n_total):  # Bland: lowest improving index
            if cost[j] > _PIVOT_EPS:
                enter = j
                break
        if enter < 0:
            return pivots
        col = tab[:m, enter]
        best, leave = None, -1
        for i in range(m):
            if col[i] > _PIVOT_EPS:
                ratio = tab[i, -1] / col[i]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave < 0:
            raise MatrixGameError("LP unbounded (shifted game should be bounded)")
        piv = tab[leave, enter]
        tab[leave] /= piv
        for i in range(m + 1):
            if i != leave and tab[i, enter] != 0.0:
                tab[i] -= tab[i, enter] * tab[leave]
        basis[leave] = enter
        pivots += 1
    return pivots


def _refreshed_tableau(A_full: np.ndarray, b: np.ndarray, c_full: np.ndarray, basis: list):
    """Rebuild the tableau at a basis from the original data.

    Recomputing B^-1 against the inputs discards the arithmetic drift that
    accumulates over degenerate pivot sequences.
    """
    m = A_full.shape[0]
    B = A_full[:, basis]
    try:
        inv = np.linalg.inv(B)
    except np.linalg.LinAlgError as exc:
        raise MatrixGameError("singular basis during refresh") from exc
    tab = np.zeros((m + 1, A_full.shape[1] + 1))
    tab[:m, :-1] = inv @ A_full
    tab[:m, -1] = inv @ b
    y = c_full[basis] @ inv
    tab[m, :-1] = c_full - y @ A_full
    tab[m, -1] = -float(c_full[basis] @ tab[:m, -1])
    return tab


def _simplex_max(A: np.ndarray, b: np.ndarray, c: np.ndarray):
    """Maximise c.x subject to A x <= b, x >= 0 with b >= 0.

    Returns (x, duals, objective).  Bland's rule guarantees termination
    without cycling; the final basis is reinverted against the original
    data (repeating if that uncovers further improving columns) so the
    returned vertex is clean to rounding.
    """
    m, n = A.shape
    A_full = np.hstack([A, np.eye(m)])
    c_full = np.concatenate([c, np.zeros(m)])
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :-1] = A_full
    tab[:m, -1] = b
    tab[m, :n] = c
    basis = list(range(n, n + m))

    # Refresh the tableau from the original data every few dozen pivots:
    # pivot decisions then always see near-exact entries, so degenerate
    # sequences can neither drift nor walk into a singular basis.  If a
    # basis repeats across refresh cycles, a drifted comparison inside the
    # window flipped a choice (near-duplicate rows with tiny splits do
    # this); fall back to refreshing after every single pivot, where the
    # Bland argument applies verbatim and termination is guaranteed.
    window = max(50, 2 * (m + n))
    total = 0
    seen = set()
    while True:
        total += _pivot_loop(tab, basis, m, n + m, window)
        if total > _MAX_PIVOTS:
            raise MatrixGameError("simplex iteration cap exceeded (rescale the game)")
        tab = _refreshed_tableau(A_full, b, c_full, basis)
        if not np.any(tab[m, :-1] > _PIVOT_EPS):
            break
        if window > 1:
            key = tuple(sorted(basis))
            if key in seen:
                window = 1
            else:
                seen.add(key)

    x_b, duals = _polished_vertex(A_full, b, c_full, basis)
    x = np.zeros(n + m)
    x[basis] = x_b
    return x[:n], duals, float(c_full[basis] @ x_b)


def _polished_vertex(A_full: np.ndarray, b: np.ndarray, c_full: np.ndarray, basis: list):
    """Primal/dual vertex at a basis, with one extended-precision
    refinement step: near-duplicate active constraints make the basis
    ill-conditioned enough (cond ~ 1e7) that plain double solves leave
    ~1e-8 residue in the mixtures."""
    B = A_full[:, basis]
    cb = c_full[basis]
    x = np.linalg.solve(B, b)
    r = np.asarray(b, dtype=np.longdouble) - B.astype(np.longdouble) @ x.astype(np.longdouble)
    x = x + np.linalg.solve(B, r.astype(np.float64))
    y = np.linalg.solve(B.T, cb)
    r2 = cb.astype(np.longdouble) - B.T.astype(np.longdouble) @ y.astype(np.longdouble)
    y = y + np.linalg.solve(B.T, r2.astype(np.float64))
    return x, y


def _certificate(payoffs: np.ndarray, value: float, row_mix, col_mix) -> float:
    lo = float(np.min(row_mix @ payoffs))
    hi = float(np.max(payoffs @ col_mix))
    return max(value - lo, hi - value, 0.0)


def _exact_simplex_max(A: np.ndarray, b: np.ndarray, c: np.ndarray):
    """The same LP in exact rational arithmetic (floats are dyadic
    rationals), Bland's rule throughout: guaranteed to terminate at the
    exact optimum.  Fallback path for conditioning-pathological games."""
    m, n = A.shape
    width = n + m + 1
    tab = [[Fraction(0)] * width for _ in range(m + 1)]
    for i in range(m):
        for j in range(n):
            tab[i][j] = Fraction(float(A[i, j]))
        tab[i][n + i] = Fraction(1)
        tab[i][-1] = Fraction(float(b[i]))
    for j in range(n):
        tab[m][j] = Fraction(float(c[j]))
    basis = list(range(n, n + m))

    for _ in range(1_000_000):
        enter = -1
        for j in range(n + m):
            if tab[m][j] > 0:
                enter = j
                break
        if enter < 0:
            break
        best, leave = None, -1
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = tab[i][-1] / tab[i][enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave < 0:
            raise MatrixGameError("LP unbounded (shifted game should be bounded)")
        piv = tab[leave][enter]
        tab[leave] = [v / piv for v in tab[leave]]
        row_l = tab[leave]
        for i in range(m + 1):
            if i != leave and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [v - f * w for v, w in zip(tab[i], row_l)]
        basis[leave] = enter
    else:
        raise MatrixGameError("exact simplex failed to terminate")

    x = [Fraction(0)] * (n + m)
    for i, bi in enumerate(basis):
        x[bi] = tab[i][-1]
    duals = [-tab[m][n + i] for i in range(m)]
    obj = -tab[m][-1]
    return x[:n], duals, obj


def solve(game: MatrixGame, tol: float = 1e-9) -> GameSolution:
    """Value and mixed saddle strategies with a certified duality gap <= tol."""
    p = game.payoffs
    m, n = p.shape

    if m == 1:
        j = int(np.argmin(p[0]))
        value = float(p[0, j])
        col = np.zeros(n)
        col[j] = 1.0
        return GameSolution(value, np.ones(1), col, _certificate(p, value, np.ones(1), col))
    if n == 1:
        i = int(np.argmax(p[:, 0]))
        value = float(p[i, 0])
        row = np.zeros(m)
        row[i] = 1.0
        return GameSolution(value, row, np.ones(1), _certificate(p, value, row, np.ones(1)))

    shift = 1.0 - float(p.min())
    shifted = p + shift  # all entries >= 1 so the game value is positive

    # column player: maximise 1.w subject to shifted.w <= 1, w >= 0
    try:
        w, duals, obj = _simplex_max(shifted, np.ones(m), np.ones(n))
        if obj > 0.0 and duals.sum() > 0.0:
            # reinverted bases can leave O(1e-14) negative dust on a vertex
            col_mix = np.clip(w, 0.0, None)
            col_mix = col_mix / col_mix.sum()
            row_mix = np.clip(duals, 0.0, None)
            row_mix = row_mix / row_mix.sum()
            value = 1.0 / obj - shift
            gap = _certificate(p, value, row_mix, col_mix)
            if gap <= tol:
                return GameSolution(value, row_mix, col_mix, gap)
    except MatrixGameError:
        pass

    # conditioning-pathological game: re-solve exactly in rationals
    w, duals, obj = _exact_simplex_max(shifted, np.ones(m), np.ones(n))
    wsum = sum(w, Fraction(0))
    dsum = sum(duals, Fraction(0))
    if wsum <= 0 or dsum <= 0 or obj <= 0:
        raise MatrixGameError("degenerate game after exact solve")
    col_mix = np.array([float(v / wsum) for v in w])
    row_mix = np.array([float(v / dsum) for v in duals])
    value = float(1 / obj - Fraction(shift))
    gap = _certificate(p, value, row_mix, col_mix)
    if gap > tol:
        raise MatrixGameError(f"duality gap {gap:.3e} exceeds tolerance {tol:.3e}")
    return GameSolution(value, row_mix, col_mix, gap)


def best_response_value(game: MatrixGame, side: str, opponent_mix) -> tuple[float, int]:
    """Exact pure best response against a fixed opponent mixture.

    side="row": maximise over rows against a column mixture.
    side="column": minimise over columns against a row mixture.
    Ties break toward the lowest index.
    """
    p = game.payoffs
    w = np.asarray(opponent_mix, dtype=float)
    if side == "row":
        if w.shape != (p.shape[1],):
            raise ValueError("opponent_mix: wrong simplex size for column player")
        _check_simplex(w)
        vals = p @ w
        idx = int(np.argmax(vals))
        return float(vals[idx]), idx
    if side == "column":
        if w.shape != (p.shape[0],):
            raise ValueError("opponent_mix: wrong simplex size for row player")
        _check_simplex(w)
        vals = w @ p
        idx = int(np.argmin(vals))
        return float(vals[idx]), idx
    raise ValueError("side must be 'row' or 'column'")


def _check_simplex(w: np.ndarray) -> None:
    if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("opponent_mix is not a probability vector")
