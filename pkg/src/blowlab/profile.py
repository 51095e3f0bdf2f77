"""Profile shapes in similarity variables.

The universal shape f(z), the corrected profile phi(y, s) = f(y/sqrt(s))
+ kappa*N/(2ps) * chi0(y / s^(1/2+eps)), the potential it induces, and the
two-parameter initial data.  Every derivative here is closed-form; the
O(1/s) remainder of the evolution equation is a near-cancellation and
does not survive contact with finite differences.
"""

from __future__ import annotations

import numpy as np

from .params import Parameters, derive_constants

__all__ = [
    "cutoff_chi0",
    "chi0_prime",
    "chi0_second",
    "f_profile",
    "f_gradient",
    "f_second",
    "g_eps",
    "phi",
    "phi_parts",
    "potential_V",
    "initial_data_psi",
    "initial_data_psi_gradient",
]


# -- smooth bump bridge -------------------------------------------------------
#
# chi0 == 1 on [-1, 1], == 0 outside (-2, 2), glued with exp(-1/t) so all
# derivatives vanish at both junctions.

def _m(t):
    # exp(-1/t) extended by 0 for t <= 0; underflow at small t is exact 0
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        inv = np.where(t > 0.0, 1.0 / np.where(t > 0.0, t, 1.0), np.inf)
    return np.where(t > 0.0, np.exp(-inv), 0.0)


def _m1(t):
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0.0, t, 1.0)
    return np.where(t > 0.0, _m(t) / safe ** 2, 0.0)


def _m2(t):
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0.0, t, 1.0)
    return np.where(t > 0.0, _m(t) * (1.0 / safe ** 4 - 2.0 / safe ** 3), 0.0)


def _bridge_parts(r):
    """S, S', S'' of the decreasing bridge S(t), t = r - 1 in (0, 1)."""
    t = r - 1.0
    a, b = _m(1.0 - t), _m(t)
    a1, b1 = -_m1(1.0 - t), _m1(t)
    a2, b2 = _m2(1.0 - t), _m2(t)
    den = a + b
    s0 = a / den
    u = a1 * b - a * b1
    s1 = u / den ** 2
    u1 = a2 * b - a * b2
    s2 = (u1 * den - 2.0 * u * (a1 + b1)) / den ** 3
    return s0, s1, s2


def _chi0_all(x):
    x = np.asarray(x, dtype=float)
    r = np.abs(x)
    inner = r <= 1.0
    outer = r >= 2.0
    mid = ~(inner | outer)
    val = np.where(inner, 1.0, 0.0)
    d1 = np.zeros_like(val)
    d2 = np.zeros_like(val)
    if np.any(mid):
        s0, s1, s2 = _bridge_parts(r[mid])
        val = val.copy()
        val[mid] = s0
        d1[mid] = np.sign(x[mid]) * s1
        d2[mid] = s2
    return val, d1, d2


def cutoff_chi0(x):
    """Smooth bump: 1 on |x| <= 1, 0 on |x| >= 2, monotone in between."""
    return _chi0_all(x)[0]


def chi0_prime(x):
    return _chi0_all(x)[1]


def chi0_second(x):
    return _chi0_all(x)[2]


# -- intermediate profile f ---------------------------------------------------

def f_profile(z, params: Parameters):
    """f(z) = (p-1 + b z^2)^(-1/(p-1)) with b = (p-1)^2/(4p)."""
    p = params.p
    b = (p - 1.0) ** 2 / (4.0 * p)
    return (p - 1.0 + b * np.asarray(z, dtype=float) ** 2) ** (-1.0 / (p - 1.0))


def f_gradient(z, params: Parameters):
    p = params.p
    b = (p - 1.0) ** 2 / (4.0 * p)
    z = np.asarray(z, dtype=float)
    base = p - 1.0 + b * z ** 2
    return -(2.0 * b / (p - 1.0)) * z * base ** (-p / (p - 1.0))


def f_second(z, params: Parameters):
    p = params.p
    b = (p - 1.0) ** 2 / (4.0 * p)
    c = -1.0 / (p - 1.0)
    z = np.asarray(z, dtype=float)
    base = p - 1.0 + b * z ** 2
    return 2.0 * b * c * (base ** (c - 1.0)
                          + 2.0 * b * (c - 1.0) * z ** 2 * base ** (c - 2.0))


def g_eps(s, params: Parameters):
    """Width of the profile-correction cutoff, s^(1/2 + eps)."""
    return float(s) ** (0.5 + params.eps)


# -- corrected profile phi ----------------------------------------------------

def phi_parts(y, s, params: Parameters):
    """phi and its closed-form partials: (value, d_y, d_yy, d_s)."""
    p, n = params.p, params.dim
    kappa = derive_constants(params).kappa
    y = np.asarray(y, dtype=float)
    s = float(s)
    sqrt_s = np.sqrt(s)
    z = y / sqrt_s
    g = g_eps(s, params)
    Y = y / g
    c0, c1, c2 = _chi0_all(Y)
    amp = kappa * n / (2.0 * p * s)

    fz = f_profile(z, params)
    f1 = f_gradient(z, params)
    f2 = f_second(z, params)

    value = fz + amp * c0
    d_y = f1 / sqrt_s + amp * c1 / g
    d_yy = f2 / s + amp * c2 / g ** 2
    d_s = (-0.5 * z / s * f1
           - amp / s * c0
           - amp * (0.5 + params.eps) / s * Y * c1)
    return value, d_y, d_yy, d_s


def phi(y, s, params: Parameters):
    """Corrected profile: returns (value, gradient)."""
    value, d_y, _, _ = phi_parts(y, s, params)
    return value, d_y


def potential_V(y, s, params: Parameters):
    """V(y, s) = p phi^(p-1) - p/(p-1)."""
    p = params.p
    value, _, _, _ = phi_parts(y, s, params)
    return p * value ** (p - 1.0) - p / (p - 1.0)


# -- prescribed initial data --------------------------------------------------

def initial_data_psi(d0, d1, s0, y, params: Parameters):
    """(A/s0^2)(d0 + d1*y) * chi0(2|y| / (K0 sqrt(s0)))."""
    y = np.asarray(y, dtype=float)
    amp = params.a_const / s0 ** 2
    cut = cutoff_chi0(2.0 * y / (params.k0 * np.sqrt(s0)))
    return amp * (d0 + d1 * y) * cut


def initial_data_psi_gradient(d0, d1, s0, y, params: Parameters):
    y = np.asarray(y, dtype=float)
    amp = params.a_const / s0 ** 2
    scale = 2.0 / (params.k0 * np.sqrt(s0))
    arg = scale * y
    return amp * (d1 * cutoff_chi0(arg)
                  + (d0 + d1 * y) * scale * chi0_prime(arg))
