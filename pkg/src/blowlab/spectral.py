"""Hermite spectrum of the drift operator in the Gaussian-weighted space.

The weight is rho(y) = exp(-y^2/4)/sqrt(4 pi); the eigenfunctions h_m are
the rescaled Hermite polynomials with <h_n, h_m>_rho = 2^n n! delta_nm.
Quadrature is Gauss-Hermite on the substitution y = 2t, so polynomials of
degree <= 2*order - 1 integrate exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import Field
from .params import Parameters
from .profile import cutoff_chi0

__all__ = [
    "HermiteBasis",
    "ModeDecomposition",
    "GridCoverageError",
    "hermite_h",
    "hermite_norm_sq",
    "make_basis",
    "inner_product_rho",
    "blowup_cutoff_chi",
    "decompose",
    "reconstruct",
    "project_minus_norm",
]


class GridCoverageError(ValueError):
    """Grid does not cover the support needed by the decomposition."""


def hermite_h(m: int, y):
    """Rescaled Hermite polynomial h_m (h_0 = 1, h_1 = y, h_2 = y^2 - 2)."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    for k in range(m // 2 + 1):
        coef = ((-1) ** k * math.factorial(m)
                // (math.factorial(k) * math.factorial(m - 2 * k)))
        out = out + coef * y ** (m - 2 * k)
    return out


def hermite_norm_sq(m: int) -> float:
    """<h_m, h_m>_rho = 2^m m!."""
    return float(2 ** m * math.factorial(m))


@dataclass
class HermiteBasis:
    max_degree: int
    quadrature_order: int
    nodes: np.ndarray       # quadrature abscissae in y
    weights: np.ndarray     # quadrature weights including the rho factor
    h_at_nodes: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.h_at_nodes is None:
            self.h_at_nodes = np.array(
                [hermite_h(m, self.nodes) for m in range(self.max_degree + 1)])


def make_basis(max_degree: int = 12, quadrature_order: int = 64) -> HermiteBasis:
    t, w = np.polynomial.hermite.hermgauss(quadrature_order)
    return HermiteBasis(max_degree=max_degree,
                        quadrature_order=quadrature_order,
                        nodes=2.0 * t,
                        weights=w / math.sqrt(math.pi))


def _values_at(g, pts):
    if isinstance(g, Field):
        return g.interpolator(ext=1)(pts)
    if callable(g):
        return np.asarray(g(pts), dtype=float)
    raise TypeError("expected Field or callable")


def inner_product_rho(g1, g2, basis: HermiteBasis) -> float:
    """Quadrature of integral g1*g2*rho over the line."""
    return float(np.sum(basis.weights
                        * _values_at(g1, basis.nodes)
                        * _values_at(g2, basis.nodes)))


def blowup_cutoff_chi(y, s, params: Parameters):
    """chi(y, s) = chi0(|y| / (K0 sqrt(s)))."""
    return cutoff_chi0(np.asarray(y, dtype=float) / (params.k0 * np.sqrt(s)))


@dataclass
class ModeDecomposition:
    """Split of a field against the nonnegative spectrum inside the cutoff."""

    v0: float
    v1: float
    v2: float
    v_minus: Field
    v_e: Field

    def modes(self) -> np.ndarray:
        return np.array([self.v0, self.v1, self.v2])


def decompose(v: Field, s: float, basis: HermiteBasis,
              params: Parameters) -> ModeDecomposition:
    """Cut at the blow-up region, project the inner part on h_0, h_1, h_2."""
    radius = 2.0 * params.k0 * np.sqrt(s)
    if not v.grid.covers(radius):
        raise GridCoverageError(
            f"grid extent {v.grid.extent:.3f} < 2*K0*sqrt(s) = {radius:.3f}")
    y = v.grid.nodes
    chi = blowup_cutoff_chi(y, s, params)
    vb = Field(v.grid, v.values * chi)
    ve = Field(v.grid, v.values * (1.0 - chi))

    vb_at_q = vb.interpolator(ext=1)(basis.nodes)
    coeffs = []
    for m in range(3):
        hm = basis.h_at_nodes[m]
        coeffs.append(float(np.sum(basis.weights * vb_at_q * hm))
                      / hermite_norm_sq(m))
    v0, v1, v2 = coeffs
    poly = v0 + v1 * y + v2 * hermite_h(2, y)
    v_minus = Field(v.grid, vb.values - poly)
    return ModeDecomposition(v0=v0, v1=v1, v2=v2, v_minus=v_minus, v_e=ve)


def reconstruct(dec: ModeDecomposition) -> Field:
    y = dec.v_minus.grid.nodes
    poly = dec.v0 + dec.v1 * y + dec.v2 * hermite_h(2, y)
    return Field(dec.v_minus.grid, poly + dec.v_minus.values + dec.v_e.values)


def project_minus_norm(dec: ModeDecomposition) -> float:
    """sup over grid nodes of |v_minus| / (1 + |y|^3)."""
    y = dec.v_minus.grid.nodes
    return float(np.max(np.abs(dec.v_minus.values) / (1.0 + np.abs(y) ** 3)))
