"""Backward-in-time solvers for the multiplicative-scale optimality equation.

The value phi(t, x) of the exponential cost functional solves, between the
terminal condition phi(T, x) = exp(lambda*g(T, x)) and time 0,

    -L phi(t, x) = val_{mu, nu} [ lambda*c(t,x,mu,nu)*phi(t,x)
                                  + sum_y phi(t,y) q(y|t,x,mu,nu) ],

where L differentiates along the deterministic flow and val is the zero-sum
matrix-game value (sup-inf = inf-sup).  Two discretisations are provided:

* ``backward_solve`` steps along characteristics with an exponential
  first-jump cell update.  The update agrees with the explicit linear
  semi-Lagrangian step to first order but is exact for action-independent
  cost levels: constant-cost models integrate exactly, and adding a constant
  to all costs multiplies the solution by the exact factor
  exp(lambda*n*(T-t+1)) (terminal shift included), which the truncation
  ladders rely on.
* ``picard_solve`` iterates the integral fixed-point operator with
  right-endpoint Riemann quadrature on the same grid.

Both reduce each cell to an exact finite matrix game solved by the LP in
:mod:`pdmg.matrix_game`.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .matrix_game import MatrixGame, solve as solve_game
from .model import GameModel, GridFlowStates

FMT = "%.12g"


class SolverError(RuntimeError):
    pass


class CFLError(SolverError):
    def __init__(self, message: str, required_n: int):
        super().__init__(message)
        self.required_n = required_n


class PositivityError(SolverError):
    pass


class PicardConvergenceError(SolverError):
    def __init__(self, message: str, last_residual: float):
        super().__init__(message)
        self.last_residual = last_residual


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, T] with N steps; knot k sits at k*T/N."""

    n_steps: int
    horizon: float

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")

    @property
    def delta(self) -> float:
        return self.horizon / self.n_steps

    def knot(self, k: int) -> float:
        return k * self.horizon / self.n_steps

    def knots(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * (self.horizon / self.n_steps)


@dataclass
class ValueField:
    """phi(t_k, x) on the time x state grid, multiplicative scale (phi > 0)."""

    grid: TimeGrid
    phi: np.ndarray  # (N+1, n_states)

    def at(self, k: int, x: int) -> float:
        return float(self.phi[k, x])


@dataclass
class StrategyField:
    """Randomized Markov strategies, piecewise constant on [t_k, t_{k+1}).

    ``mu[k][x]`` / ``nu[k][x]`` are simplices over the admissible actions of
    players 1 / 2 at state x; there are N slices (k = 0..N-1).
    """

    grid: TimeGrid
    mu: list  # [k][x] -> np.ndarray
    nu: list

    def slice_at_time(self, t: float) -> int:
        n = self.grid.n_steps
        k = int(math.floor(t / self.grid.delta * (1.0 + 1e-15)))
        return min(max(k, 0), n - 1)

    def refine(self, factor: int) -> "StrategyField":
        """Exact resampling onto a factor-times finer grid."""
        if factor < 1:
            raise ValueError("factor must be >= 1")
        fine = TimeGrid(self.grid.n_steps * factor, self.grid.horizon)
        mu = [self.mu[j // factor] for j in range(fine.n_steps)]
        nu = [self.nu[j // factor] for j in range(fine.n_steps)]
        return StrategyField(fine, mu, nu)

    def resample(self, grid: "TimeGrid") -> "StrategyField":
        """Piecewise-constant lookup onto an arbitrary grid over the same horizon."""
        ks = [self.slice_at_time(grid.knot(j)) for j in range(grid.n_steps)]
        return StrategyField(grid, [self.mu[k] for k in ks], [self.nu[k] for k in ks])


@dataclass(frozen=True)
class SolverConfig:
    n_steps: int
    scheme: str = "semi_lagrangian"
    tol: float = 1e-9
    max_picard_iters: int = 200
    cfl_safety: float = 0.5
    game_tol: float = 1e-9

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.scheme not in ("semi_lagrangian", "picard"):
            raise ValueError("scheme must be 'semi_lagrangian' or 'picard'")


# ---------------------------------------------------------------------------
# primitives


def terminal_field(model: GameModel) -> np.ndarray:
    """Terminal slice exp(lambda * g(T, x)); errors on exponent overflow."""
    expo = model.lam * model.terminal
    if np.any(np.abs(expo) > 700.0):
        raise SolverError("lambda*g exceeds 700; rescale the model before solving")
    return np.exp(expo)


def to_risk_value(field: ValueField, lam: float) -> np.ndarray:
    """Certainty-equivalent values (1/lambda) * ln phi, entrywise."""
    if np.any(field.phi <= 0.0):
        k, x = np.argwhere(field.phi <= 0.0)[0]
        raise SolverError(f"nonpositive phi at knot {k}, state {x}")
    return np.log(field.phi) / lam


def local_game_matrix(
    model: GameModel,
    t: float,
    x: int,
    next_slice: np.ndarray,
    phi_self: float,
    dt: float = 0.0,
) -> MatrixGame:
    """Cell game of the optimality equation at (t, x).

    Entry (a, b) = lambda*c(t,x,a,b)*phi_self + sum_y q(y|t,x,a,b)*slice(y),
    where slice values are looked up through the flow over dt (identity for
    finite spaces or dt = 0).
    """
    seg = model.segment_index(t)
    if dt != 0.0:
        lookup = next_slice[[model.flow(y, dt) for y in range(model.n_states)]]
    else:
        lookup = next_slice
    entries = model.lam * model.cost_matrix(seg, x) * phi_self + np.einsum(
        "abs,s->ab", model.rate_tensor(seg, x), lookup
    )
    return MatrixGame(entries)


def _ediff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(exp(a) - exp(b)) / (a - b), computed stably near a == b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid = 0.5 * (a + b)
    half = 0.5 * (a - b)
    small = np.abs(half) < 1e-6
    ratio = np.where(small, 1.0 + half * half / 6.0, np.sinh(np.where(small, 1.0, half)) / np.where(small, 1.0, half))
    return np.exp(mid) * ratio


def check_cfl(model: GameModel, grid: TimeGrid, safety: float) -> None:
    """Positivity/accuracy guard Delta*(lambda*max|c| + 2*max q*) <= safety."""
    load = model.lam * model.max_abs_cost() + 2.0 * model.q_star_max()
    if load <= 0.0:
        return
    if grid.delta * load > safety * (1.0 + 1e-12):
        required = int(math.ceil(model.horizon * load / safety))
        raise CFLError(
            f"time step too large: Delta*(lambda*max|c| + 2*max q*) = "
            f"{grid.delta * load:.4g} > {safety}; use N >= {required}",
            required,
        )


# ---------------------------------------------------------------------------
# flow lookup tables


class _FlowLags:
    """Rounded flow lookup maps on the grid, anchored at the terminal time.

    For grid-flow modes the cell displacement over a lag of l steps is
    round(drift*l*Delta/width); per-step backward lookups use increments of
    this cumulative displacement so that composed steps track the true
    characteristic to within one cell at any refinement.  (Re-rounding the
    one-step displacement independently per step would freeze the flow
    entirely once |drift|*Delta < width/2.)
    """

    def __init__(self, model: GameModel, grid: TimeGrid):
        self.model = model
        self.grid = grid
        self.identity = np.arange(model.n_states)
        if isinstance(model.states, GridFlowStates):
            sp = model.states
            lags = np.arange(grid.n_steps + 1)
            self._disp = np.stack(
                [
                    np.floor(m.drift * lags * grid.delta / sp.cell_width + 0.5).astype(int)
                    for m in sp.modes
                ]
            )  # (modes, N+1)
        else:
            self._disp = None

    def lag_map(self, lag: int) -> np.ndarray:
        """State lookup for a displacement of `lag` steps along the flow."""
        if self._disp is None:
            return self.identity
        sp = self.model.states
        out = np.empty(self.model.n_states, dtype=int)
        for mode in range(len(sp.modes)):
            base = mode * sp.cells
            d = int(self._disp[mode, lag])
            for cell in range(sp.cells):
                out[base + cell] = base + sp.apply_boundary(cell + d)
        return out

    def step_map(self, k: int) -> np.ndarray:
        """Lookup from knot k into slice k+1 (increment of the anchored path)."""
        if self._disp is None:
            return self.identity
        sp = self.model.states
        n = self.grid.n_steps
        out = np.empty(self.model.n_states, dtype=int)
        for mode in range(len(sp.modes)):
            base = mode * sp.cells
            inc = int(self._disp[mode, n - k] - self._disp[mode, n - k - 1])
            for cell in range(sp.cells):
                out[base + cell] = base + sp.apply_boundary(cell + inc)
        return out


# ---------------------------------------------------------------------------
# the exponential first-jump cell update


class _Stepper:
    """Per-cell update coefficients, precomputed per time segment.

    With c0(x) the value of the instantaneous cost game at x, chat = c - c0
    and qtot the total off-diagonal rate, the cell update reads

        entry(a,b) = exp(lam*c0*D) * [ exp(-qtot*D)*(1 + lam*chat*D)*psi(x)
                      + D*sum_y q(y|a,b)*ediff((lam*chat-qtot)*D, dlt(y))*psi(y) ]

    with dlt(y) = lam*(c0(y)-c0(x))*D and psi the next slice composed with
    the one-step flow.  This is the linear semi-Lagrangian bracket plus
    O(D^2) corrections that integrate the action-independent cost level and
    the first jump exactly.
    """

    def __init__(self, model: GameModel, grid: TimeGrid, game_tol: float):
        self.model = model
        self.grid = grid
        self.game_tol = game_tol
        self.lags = _FlowLags(model, grid)
        d = grid.delta
        lam = model.lam
        n = model.n_states

        self.c0 = []  # [seg] -> (S,)
        self.self_coef = []  # [seg][x] -> (m, n)
        self.jump_coef = []  # [seg][x] -> (m, n, S) including the exp(lam*c0*D) factor
        for seg in range(model.n_segments):
            c0 = np.empty(n)
            for x in range(n):
                c0[x] = solve_game(MatrixGame(model.cost_matrix(seg, x)), game_tol).value
            self.c0.append(c0)
            coefs, jumps = [], []
            for x in range(n):
                C = model.cost_matrix(seg, x)
                qt = model.q_total(seg, x)
                chat = C - c0[x]
                outer = math.exp(lam * c0[x] * d)
                self_c = outer * np.exp(-qt * d) * (1.0 + lam * chat * d)
                if np.any(self_c <= 0.0):
                    raise PositivityError(
                        f"cell update loses positivity at state {x} (segment {seg}); "
                        "increase N"
                    )
                R = model.rate_tensor(seg, x).copy()
                R[:, :, x] = 0.0
                theta = (lam * chat - qt) * d  # (m, n)
                dlt = lam * (c0 - c0[x]) * d  # (S,)
                ew = _ediff(theta[:, :, None], dlt[None, None, :])
                jumps.append(outer * d * R * ew)
                coefs.append(self_c)
            self.self_coef.append(coefs)
            self.jump_coef.append(jumps)

        self._knot_seg = np.array(
            [model.segment_index(grid.knot(k)) for k in range(grid.n_steps + 1)]
        )

        self.trivial = all(
            len(a) == 1 and len(b) == 1 for a, b in zip(model.actions_p1, model.actions_p2)
        )
        if self.trivial:
            self._self_vec = [
                np.array([self.self_coef[s][x][0, 0] for x in range(n)])
                for s in range(model.n_segments)
            ]
            self._jump_mat = [
                np.stack([self.jump_coef[s][x][0, 0] for x in range(n)])
                for s in range(model.n_segments)
            ]

    def entries(self, k: int, x: int, psi: np.ndarray) -> np.ndarray:
        seg = self._knot_seg[k]
        return self.self_coef[seg][x] * psi[x] + self.jump_coef[seg][x] @ psi

    def psi(self, k: int, next_slice: np.ndarray) -> np.ndarray:
        return next_slice[self.lags.step_map(k)]

    def step_trivial(self, k: int, next_slice: np.ndarray) -> np.ndarray:
        seg = self._knot_seg[k]
        psi = self.psi(k, next_slice)
        return self._self_vec[seg] * psi + self._jump_mat[seg] @ psi


# ---------------------------------------------------------------------------
# solvers


def backward_solve(model: GameModel, config: SolverConfig) -> tuple[ValueField, StrategyField]:
    """Solve the optimality equation backward in time.

    Returns the value field (phi > 0 everywhere, terminal slice bit-exact)
    and the per-cell saddle mixtures.
    """
    grid = TimeGrid(config.n_steps, model.horizon)
    check_cfl(model, grid, config.cfl_safety)
    stepper = _Stepper(model, grid, config.game_tol)
    n, N = model.n_states, grid.n_steps

    phi = np.empty((N + 1, n))
    phi[N] = terminal_field(model)
    mu = [[None] * n for _ in range(N)]
    nu = [[None] * n for _ in range(N)]

    for k in range(N - 1, -1, -1):
        if stepper.trivial:
            phi[k] = stepper.step_trivial(k, phi[k + 1])
            for x in range(n):
                mu[k][x] = np.ones(1)
                nu[k][x] = np.ones(1)
        else:
            psi = stepper.psi(k, phi[k + 1])
            for x in range(n):
                sol = solve_game(MatrixGame(stepper.entries(k, x, psi)), config.game_tol)
                phi[k, x] = sol.value
                mu[k][x] = sol.row_mix
                nu[k][x] = sol.col_mix
        if np.any(phi[k] <= 0.0):
            x = int(np.argmax(phi[k] <= 0.0))
            raise PositivityError(f"phi <= 0 at knot {k}, state {x}")

    return ValueField(grid, phi), StrategyField(grid, mu, nu)


def policy_evaluate(model: GameModel, strategies: StrategyField) -> ValueField:
    """Value of a fixed Markov strategy pair (linear backward equation).

    Uses the same cell update as ``backward_solve`` with the inner game
    replaced by the bilinear mixture of the entry matrix, so evaluating the
    computed saddle reproduces the saddle field exactly.
    """
    grid = strategies.grid
    stepper = _Stepper(model, grid, 1e-9)
    n, N = model.n_states, grid.n_steps
    phi = np.empty((N + 1, n))
    phi[N] = terminal_field(model)
    for k in range(N - 1, -1, -1):
        if stepper.trivial:
            phi[k] = stepper.step_trivial(k, phi[k + 1])
        else:
            psi = stepper.psi(k, phi[k + 1])
            for x in range(n):
                E = stepper.entries(k, x, psi)
                phi[k, x] = float(strategies.mu[k][x] @ E @ strategies.nu[k][x])
        if np.any(phi[k] <= 0.0):
            x = int(np.argmax(phi[k] <= 0.0))
            raise PositivityError(f"phi <= 0 at knot {k}, state {x}")
    return ValueField(grid, phi)


def best_response_solve(
    model: GameModel,
    fixed: StrategyField,
    side: str,
    config: SolverConfig,
) -> ValueField:
    """One-sided backward solve against a frozen opponent half.

    side="maximize": player 1 optimises against the nu half of ``fixed``;
    side="minimize": player 2 optimises against the mu half.  The inner
    problem is linear over the free simplex, attained at a pure action.
    The solve may run on a finer grid than ``fixed`` (time lookup).
    """
    if side not in ("maximize", "minimize"):
        raise ValueError("side must be 'maximize' or 'minimize'")
    grid = TimeGrid(config.n_steps, model.horizon)
    check_cfl(model, grid, config.cfl_safety)
    stepper = _Stepper(model, grid, config.game_tol)
    n, N = model.n_states, grid.n_steps
    phi = np.empty((N + 1, n))
    phi[N] = terminal_field(model)
    for k in range(N - 1, -1, -1):
        kc = fixed.slice_at_time(grid.knot(k))
        if stepper.trivial:
            phi[k] = stepper.step_trivial(k, phi[k + 1])
        else:
            psi = stepper.psi(k, phi[k + 1])
            for x in range(n):
                E = stepper.entries(k, x, psi)
                if side == "maximize":
                    phi[k, x] = float(np.max(E @ fixed.nu[kc][x]))
                else:
                    phi[k, x] = float(np.min(fixed.mu[kc][x] @ E))
        if np.any(phi[k] <= 0.0):
            x = int(np.argmax(phi[k] <= 0.0))
            raise PositivityError(f"phi <= 0 at knot {k}, state {x}")
    return ValueField(grid, phi)


def _bracket_values(model: GameModel, u_slice: np.ndarray, t: float, game_tol: float) -> np.ndarray:
    """val[lambda*c*u + sum u*q](t, x) for every state (the integrand of Gamma)."""
    n = model.n_states
    seg = model.segment_index(t)
    out = np.empty(n)
    for x in range(n):
        m, kk = len(model.actions_p1[x]), len(model.actions_p2[x])
        entries = model.lam * model.cost_matrix(seg, x) * u_slice[x] + np.einsum(
            "abs,s->ab", model.rate_tensor(seg, x), u_slice
        )
        if m == 1 and kk == 1:
            out[x] = entries[0, 0]
        else:
            out[x] = solve_game(MatrixGame(entries), game_tol).value
    return out


def _bracket_values_trivial(model: GameModel, u: np.ndarray, knot_seg: np.ndarray) -> np.ndarray:
    """Vectorised integrand for singleton-action models: (N+1, S) at once."""
    n = model.n_states
    out = np.empty_like(u)
    for seg in range(model.n_segments):
        rows = np.where(knot_seg == seg)[0]
        if rows.size == 0:
            continue
        c = np.array([model.cost_matrix(seg, x)[0, 0] for x in range(n)])
        Q = np.stack([model.rate_tensor(seg, x)[0, 0] for x in range(n)])
        out[rows] = model.lam * c * u[rows] + u[rows] @ Q.T
    return out


def gamma_apply(
    model: GameModel,
    u: np.ndarray,
    grid: TimeGrid,
    game_tol: float = 1e-9,
    lags: Optional[_FlowLags] = None,
) -> np.ndarray:
    """One application of the discretised fixed-point operator.

    Gamma u(t_k, x) = exp(lam*g(T, flow(x, T-t_k)))
                      + Delta * sum_{j>k} val[...](t_j, flow(x, t_j - t_k)),

    right-endpoint Riemann quadrature on the grid.
    """
    n, N = model.n_states, grid.n_steps
    d = grid.delta
    if lags is None:
        lags = _FlowLags(model, grid)
    knot_seg = np.array([model.segment_index(grid.knot(k)) for k in range(N + 1)])

    trivial = all(len(a) == 1 and len(b) == 1 for a, b in zip(model.actions_p1, model.actions_p2))
    if trivial:
        w = _bracket_values_trivial(model, u, knot_seg)
    else:
        w = np.empty((N + 1, n))
        for j in range(N + 1):
            w[j] = _bracket_values(model, u[j], grid.knot(j), game_tol)

    g = model.terminal
    out = np.empty((N + 1, n))
    # suffix accumulation along the terminal-anchored characteristic paths
    # (the same rounded paths the backward stepper composes), so the two
    # solvers sample identical flow positions and differ only in quadrature:
    # G(k, x) = Delta * sum_{j>k} w(j, path position), via
    # G(k) = (Delta*w[k+1] + G(k+1)) looked up through the one-step map.
    suffix = np.zeros(n)
    out[N] = np.exp(model.lam * g)
    for k in range(N - 1, -1, -1):
        idx = lags.step_map(k)
        suffix = (d * w[k + 1] + suffix)[idx]
        out[k] = np.exp(model.lam * g[lags.lag_map(N - k)]) + suffix
    return out


def picard_solve(
    model: GameModel,
    config: SolverConfig,
    collect_info: bool = False,
):
    """Fixed point of the integral operator by Picard iteration.

    Sweeps until the sup-norm change is <= config.tol; raises after
    ``max_picard_iters`` sweeps, reporting the last residual.  With
    ``collect_info=True`` also returns residuals and the cumulative
    contraction ratios residual_l / residual_0 together with the factorial
    bound ((2*||q|| + ||c||)*T)^l / l!.
    """
    grid = TimeGrid(config.n_steps, model.horizon)
    lags = _FlowLags(model, grid)
    n, N = model.n_states, grid.n_steps

    u = np.empty((N + 1, n))
    g = model.terminal
    for k in range(N + 1):
        u[k] = np.exp(model.lam * g[lags.lag_map(N - k)])

    rate = 2.0 * model.q_star_max() + model.max_abs_cost()
    residuals = []
    for sweep in range(config.max_picard_iters):
        nxt = gamma_apply(model, u, grid, config.game_tol, lags)
        res = float(np.max(np.abs(nxt - u)))
        residuals.append(res)
        u = nxt
        if res <= config.tol:
            break
    else:
        raise PicardConvergenceError(
            f"Picard iteration did not reach tol {config.tol:g} in "
            f"{config.max_picard_iters} sweeps (last residual {residuals[-1]:.3e})",
            residuals[-1],
        )

    field = ValueField(grid, u)
    if not collect_info:
        return field
    r0 = residuals[0] if residuals else 0.0
    ratios, bounds = [], []
    for l, r in enumerate(residuals):
        if l == 0 or r0 == 0.0:
            continue
        ratios.append(r / r0)
        bounds.append((rate * model.horizon) ** l / math.factorial(l))
    return field, {"residuals": residuals, "contraction_ratios": ratios, "contraction_bounds": bounds}


def saddle_from_field(model: GameModel, field: ValueField, game_tol: float = 1e-9) -> StrategyField:
    """Extract per-cell saddle mixtures from a solved value field."""
    grid = field.grid
    n, N = model.n_states, grid.n_steps
    mu = [[None] * n for _ in range(N)]
    nu = [[None] * n for _ in range(N)]
    for k in range(N):
        t = grid.knot(k)
        for x in range(n):
            game = local_game_matrix(model, t, x, field.phi[k], float(field.phi[k, x]))
            sol = solve_game(game, game_tol)
            mu[k][x] = sol.row_mix
            nu[k][x] = sol.col_mix
    return StrategyField(grid, mu, nu)


# ---------------------------------------------------------------------------
# CSV export / import (combined value + strategy table)


def _action_widths(model: GameModel) -> tuple[int, int]:
    return (
        max(len(a) for a in model.actions_p1),
        max(len(b) for b in model.actions_p2),
    )


def export_solution_csv(model: GameModel, field: ValueField, strategies: StrategyField) -> str:
    """Combined CSV: t, state, phi, risk_value, mu_0.., nu_0..

    12 significant digits; strategies are piecewise constant on
    [t_k, t_{k+1}) and the final row repeats the last slice.
    """
    wa, wb = _action_widths(model)
    grid = field.grid
    n, N = model.n_states, grid.n_steps
    if np.any(field.phi <= 0.0):
        raise SolverError("cannot export a field with nonpositive phi")
    cols = ["t", "state", "phi", "risk_value"]
    cols += [f"mu_{i}" for i in range(wa)] + [f"nu_{i}" for i in range(wb)]
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    for k in range(N + 1):
        ks = min(k, N - 1)
        t = FMT % grid.knot(k)
        for x in range(n):
            # risk value derived from the printed (quantized) phi so that
            # export -> import -> export is byte-identical
            phi_q = float(FMT % field.phi[k, x])
            row = [t, str(x), FMT % phi_q, FMT % (math.log(phi_q) / model.lam)]
            mu, nu = strategies.mu[ks][x], strategies.nu[ks][x]
            row += [FMT % v for v in mu] + [""] * (wa - len(mu))
            row += [FMT % v for v in nu] + [""] * (wb - len(nu))
            buf.write(",".join(row) + "\n")
    return buf.getvalue()


def import_solution_csv(model: GameModel, text: str) -> tuple[ValueField, StrategyField]:
    """Inverse of :func:`export_solution_csv` (byte-identical round trip)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SolverError("empty solution CSV")
    header = lines[0].split(",")
    if header[:4] != ["t", "state", "phi", "risk_value"]:
        raise SolverError("solution CSV header mismatch")
    n = model.n_states
    rows = lines[1:]
    if len(rows) % n != 0:
        raise SolverError("solution CSV row count is not a multiple of the state count")
    n_knots = len(rows) // n
    if n_knots < 2:
        raise SolverError("solution CSV must contain at least two knots")
    N = n_knots - 1
    grid = TimeGrid(N, model.horizon)
    wa, wb = _action_widths(model)
    phi = np.empty((N + 1, n))
    mu = [[None] * n for _ in range(N)]
    nu = [[None] * n for _ in range(N)]
    for k in range(N + 1):
        for x in range(n):
            parts = rows[k * n + x].split(",")
            if int(parts[1]) != x:
                raise SolverError(f"solution CSV: unexpected state index at row {k * n + x + 1}")
            phi[k, x] = float(parts[2])
            if k < N:
                ma, mb = len(model.actions_p1[x]), len(model.actions_p2[x])
                mu_vals = parts[4 : 4 + ma]
                nu_vals = parts[4 + wa : 4 + wa + mb]
                mu[k][x] = np.array([float(v) for v in mu_vals])
                nu[k][x] = np.array([float(v) for v in nu_vals])
    if np.any(phi <= 0.0):
        k, x = np.argwhere(phi <= 0.0)[0]
        raise SolverError(f"solution CSV: nonpositive phi at knot {k}, state {x}")
    return ValueField(grid, phi), StrategyField(grid, mu, nu)
