"""Discretization and time integration of the linearized evolution.

The field v(y, s) obeys  d_s v = (L + V) v + B(v) + R(y, s) + N(y, s)
with L = Laplacian - y/2 * grad + id.  The stiff linear part (L + V) is
advanced by Crank-Nicolson through a banded solve; B, R, N are explicit.
Integrating v (not w = v + phi) keeps the small quantity conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .grids import BandedOp, Field, Grid, fd_weights, make_grid
from .params import Parameters, derive_constants
from .profile import (chi0_prime, chi0_second, cutoff_chi0, f_gradient,
                      f_profile, f_second, g_eps, phi_parts)

__all__ = [
    "SolverState",
    "SolverConfig",
    "SolverError",
    "StepRejected",
    "LinearSolveError",
    "grid_for_run",
    "discrete_L",
    "term_B",
    "term_R",
    "term_R_split",
    "NonlocalIntegral",
    "nonlocal_integral",
    "term_N",
    "step",
    "linear_propagate",
]


class SolverError(RuntimeError):
    pass


class StepRejected(SolverError):
    """sup|v| more than doubled in one step: violent departure."""


class LinearSolveError(SolverError):
    pass


@dataclass
class SolverState:
    s: float
    v: Field
    step_size: float


@dataclass(frozen=True)
class SolverConfig:
    ds: float = 1e-2
    bc: str = "decay"            # "decay" or "natural" boundary rows
    potential: bool = True
    with_B: bool = True
    with_R: bool = True
    with_N: bool = True
    reject_factor: float = 2.0
    reject_floor: float = 1e-2


def _phi_on_grid(grid: Grid, s: float, params: Parameters):
    """phi_parts on the grid nodes, memoized per grid (runs revisit s)."""
    cache = grid._ops.setdefault("phi_cache", {})
    key = (round(s, 12), params.eps, params.p, params.dim)
    hit = cache.get(key)
    if hit is None:
        hit = phi_parts(grid.nodes, s, params)
        if len(cache) > 3000:
            cache.clear()
        cache[key] = hit
    return hit


def grid_for_run(params: Parameters, s_end: float,
                 base_spacing: float = 0.05,
                 extent_factor: float = 4.0) -> Grid:
    """Mesh covering both the blow-up region and the correction support.

    Extent is the larger of extent_factor*K0*sqrt(s_end) and
    2.2*g_eps(s_end); the cutoff transition band gets doubled density.
    """
    extent = max(extent_factor * params.k0 * math.sqrt(s_end),
                 2.2 * g_eps(s_end, params))
    band = (0.8 * params.k0 * math.sqrt(params.s0),
            2.2 * params.k0 * math.sqrt(s_end))
    return make_grid(extent, base_spacing=base_spacing, refine_band=band)


# -- operator assembly --------------------------------------------------------

def _decay_ops(grid: Grid, beta: float):
    """Derivative ops whose edge rows extrapolate by the |y|^-beta tail.

    Ghost nodes continue the mesh with the edge spacing; their values are
    tied to the edge node by v_ghost = v_edge * (|y_ghost|/|y_edge|)^-beta,
    which folds linearly into the edge node's stencil coefficient.
    """
    key = ("decay", round(beta, 12))
    if key in grid._ops:
        return grid._ops[key]
    d1n, d2n = grid.diff_ops()
    c1 = d1n.coeff.copy()
    c2 = d2n.coeff.copy()
    offsets = d1n.offsets
    nodes = grid.nodes
    n = len(nodes)
    width = 5
    k_center = width - 1                     # index of offset 0

    def fold(i, pts, owners):
        # owners[t]: real node index supplying the value of pts[t]
        w = fd_weights(nodes[i], pts, 2)
        c1[:, i] = 0.0
        c2[:, i] = 0.0
        for t, j in enumerate(owners):
            ratio = (abs(pts[t]) / abs(nodes[j])) ** (-beta) \
                if abs(pts[t] - nodes[j]) > 0 else 1.0
            k = (j - i) + k_center
            c1[k, i] += w[1, t] * ratio
            c2[k, i] += w[2, t] * ratio

    h_l = nodes[1] - nodes[0]
    gl1, gl2 = nodes[0] - h_l, nodes[0] - 2.0 * h_l
    fold(0, [gl2, gl1, nodes[0], nodes[1], nodes[2]], [0, 0, 0, 1, 2])
    fold(1, [gl1, nodes[0], nodes[1], nodes[2], nodes[3]], [0, 0, 1, 2, 3])
    h_r = nodes[-1] - nodes[-2]
    gr1, gr2 = nodes[-1] + h_r, nodes[-1] + 2.0 * h_r
    fold(n - 1, [nodes[-3], nodes[-2], nodes[-1], gr1, gr2],
         [n - 3, n - 2, n - 1, n - 1, n - 1])
    fold(n - 2, [nodes[-4], nodes[-3], nodes[-2], nodes[-1], gr1],
         [n - 4, n - 3, n - 2, n - 1, n - 1])
    ops = (BandedOp(offsets, c1), BandedOp(offsets, c2))
    grid._ops[key] = ops
    return ops


def _ops_for(grid: Grid, bc: str, beta: float):
    if bc == "natural":
        return grid.diff_ops()
    if bc == "decay":
        return _decay_ops(grid, beta)
    raise ValueError(f"unknown bc {bc!r}")


def _l_coeff(grid: Grid, bc: str, beta: float, v_pot=None) -> BandedOp:
    """Banded coefficients of L + V = D2 - (y/2) D1 + (1 + V)."""
    d1, d2 = _ops_for(grid, bc, beta)
    coeff = d2.coeff - 0.5 * grid.nodes[None, :] * d1.coeff
    k0 = len(d1.offsets) // 2
    coeff = coeff.copy()
    coeff[k0] += 1.0
    if v_pot is not None:
        coeff[k0] += v_pot
    return BandedOp(d1.offsets, coeff)


def discrete_L(v: Field, bc: str = "natural", beta: float = 0.0) -> Field:
    """Apply L = Laplacian - y/2 * grad + identity."""
    return Field(v.grid, _l_coeff(v.grid, bc, beta).apply(v.values))


# -- right-hand-side terms ----------------------------------------------------

def term_B(v: Field, s: float, params: Parameters) -> Field:
    """Quadratic-and-higher nonlinearity around the profile."""
    p = params.p
    ph, _, _, _ = _phi_on_grid(v.grid, s, params)
    w = v.values + ph
    with np.errstate(over="ignore", invalid="ignore"):
        # infs from blow-up-scale fields propagate to the step guard;
        # phi^p written in the same form as the w-power so that v = 0
        # cancels bitwise
        out = np.abs(w) ** (p - 1.0) * w - np.abs(ph) ** (p - 1.0) * ph \
            - p * ph ** (p - 1.0) * v.values
    return Field(v.grid, out)


def term_R(y, s: float, params: Parameters):
    """Profile remainder, all derivatives closed-form."""
    y = np.asarray(y, dtype=float)
    p = params.p
    val, d_y, d_yy, d_s = phi_parts(y, s, params)
    return d_yy - 0.5 * y * d_y - val / (p - 1.0) + val ** p - d_s


def term_R_split(y, s: float, params: Parameters):
    """The (R_i, R_ii) regrouping; sums to term_R via the profile identity."""
    y = np.asarray(y, dtype=float)
    p, n = params.p, params.dim
    kappa = derive_constants(params).kappa
    sqrt_s = math.sqrt(s)
    z = y / sqrt_s
    g = g_eps(s, params)
    Y = y / g
    amp = kappa * n / (2.0 * p * s)
    fz = f_profile(z, params)
    r_i = (f_second(z, params) / s
           + 0.5 * z * f_gradient(z, params) / s
           + (fz + amp * cutoff_chi0(Y)) ** p - fz ** p)
    r_ii = amp * (chi0_second(Y) / g ** 2
                  - (0.5 - (0.5 + params.eps) / s) * Y * chi0_prime(Y)
                  + (1.0 / s - 1.0 / (p - 1.0)) * cutoff_chi0(Y))
    return r_i, r_ii


class NonlocalIntegral:
    """Cumulative quadrature of |w|^(q-1); queries are O(1) after setup."""

    def __init__(self, w: Field, params: Parameters):
        self.nodes = w.grid.nodes
        integrand = np.abs(w.values) ** (params.q - 1.0)
        cum = np.concatenate([[0.0], np.cumsum(
            0.5 * (integrand[1:] + integrand[:-1]) * np.diff(self.nodes))])
        self._cum = cum

    def _antideriv(self, y):
        return np.interp(y, self.nodes, self._cum)

    def __call__(self, y):
        """integral over the ball (-|y|, |y|)."""
        a = np.abs(np.asarray(y, dtype=float))
        return self._antideriv(a) - self._antideriv(-a)

    def at_nodes(self) -> np.ndarray:
        a = np.abs(self.nodes)
        return self._antideriv(a) - self._antideriv(-a)


def nonlocal_integral(w: Field, y, params: Parameters):
    """One-off query; build NonlocalIntegral directly for repeated use."""
    return NonlocalIntegral(w, params)(y)


def term_N(v: Field, s: float, params: Parameters) -> Field:
    """mu e^{-gamma s} |grad(v + phi)| * nonlocal integral of |v + phi|."""
    if params.mu == 0.0:
        return Field.zeros(v.grid)
    gamma = derive_constants(params).gamma
    ph, dphi, _, _ = _phi_on_grid(v.grid, s, params)
    d1, _ = v.grid.diff_ops()
    grad_w = d1.apply(v.values) + dphi
    w = Field(v.grid, v.values + ph)
    with np.errstate(over="ignore", invalid="ignore"):
        ball = NonlocalIntegral(w, params).at_nodes()
        out = params.mu * math.exp(-gamma * s) * np.abs(grad_w) * ball
    return Field(v.grid, out)


# -- time stepping ------------------------------------------------------------

def _term_R_grid(grid: Grid, s: float, params: Parameters) -> np.ndarray:
    p = params.p
    val, d_y, d_yy, d_s = _phi_on_grid(grid, s, params)
    return d_yy - 0.5 * grid.nodes * d_y - val / (p - 1.0) + val ** p - d_s


def _explicit_terms(v: Field, s: float, params: Parameters,
                    cfg: SolverConfig) -> np.ndarray:
    out = np.zeros_like(v.values)
    with np.errstate(invalid="ignore"):
        if cfg.with_B:
            out = out + term_B(v, s, params).values
        if cfg.with_R:
            out = out + _term_R_grid(v.grid, s, params)
        if cfg.with_N and params.mu != 0.0:
            out = out + term_N(v, s, params).values
    return out


def _potential_on_grid(grid: Grid, s: float, params: Parameters):
    p = params.p
    val, _, _, _ = _phi_on_grid(grid, s, params)
    return p * val ** (p - 1.0) - p / (p - 1.0)


def _cn_matrices(grid: Grid, s: float, dt: float, params: Parameters,
                 cfg: SolverConfig):
    pot_old = _potential_on_grid(grid, s, params) if cfg.potential else None
    pot_new = _potential_on_grid(grid, s + dt, params) if cfg.potential else None
    l_old = _l_coeff(grid, cfg.bc, params.beta, pot_old)
    l_new = _l_coeff(grid, cfg.bc, params.beta, pot_new)
    k0 = len(l_new.offsets) // 2
    m_coeff = -0.5 * dt * l_new.coeff
    m_coeff[k0] += 1.0
    return l_old, BandedOp(l_new.offsets, m_coeff)


def step(state: SolverState, params: Parameters,
         cfg: SolverConfig = SolverConfig()) -> SolverState:
    """One IMEX step: Crank-Nicolson on L + V, explicit B + R + N."""
    grid = state.v.grid
    dt = state.step_size
    l_old, m_op = _cn_matrices(grid, state.s, dt, params, cfg)
    rhs = (state.v.values + 0.5 * dt * l_old.apply(state.v.values)
           + dt * _explicit_terms(state.v, state.s, params, cfg))
    (lo, up), ab = m_op.to_solve_banded()
    try:
        new_vals = solve_banded((lo, up), ab, rhs)
    except Exception as exc:   # singular matrix etc.
        raise LinearSolveError(str(exc)) from exc
    if not np.all(np.isfinite(new_vals)):
        raise StepRejected(f"non-finite field at s = {state.s + dt:.4f}")
    sup_old = state.v.sup()
    sup_new = float(np.max(np.abs(new_vals)))
    if sup_new > cfg.reject_factor * max(sup_old, cfg.reject_floor):
        raise StepRejected(
            f"sup|v| jumped {sup_old:.3e} -> {sup_new:.3e} at s = {state.s + dt:.4f}")
    return SolverState(s=state.s + dt, v=Field(grid, new_vals), step_size=dt)


def linear_propagate(g: Field, sigma: float, s: float, params: Parameters,
                     potential_on: bool = True, ds: float = 1e-2,
                     bc: str = "natural") -> Field:
    """Flow of d_s theta = (L + V) theta (or L alone) from sigma to s."""
    if s < sigma:
        raise ValueError("need s >= sigma")
    if s == sigma:
        return g.copy()
    nsteps = max(1, int(round((s - sigma) / ds)))
    dt = (s - sigma) / nsteps
    cfg = SolverConfig(ds=dt, bc=bc, potential=potential_on,
                       with_B=False, with_R=False, with_N=False,
                       reject_factor=math.inf)
    state = SolverState(s=sigma, v=g.copy(), step_size=dt)
    for _ in range(nsteps):
        state = step(state, params, cfg)
    return state.v
