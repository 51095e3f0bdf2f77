import math

import numpy as np
import pytest
from scipy.integrate import quad

from blowlab.grids import Field, make_grid
from blowlab.params import Parameters, validate_parameters
from blowlab.profile import cutoff_chi0
from blowlab.spectral import (GridCoverageError, blowup_cutoff_chi, decompose,
                              hermite_h, hermite_norm_sq, inner_product_rho,
                              make_basis, project_minus_norm, reconstruct)

P = validate_parameters(Parameters(p=5, q=4, mu=1.0, beta=0.4, eps1=0.25,
                                   alpha=0.4, k0=2.0, a_const=20.0, s0=20.0))
BASIS = make_basis(12, 64)


def rho(y):
    return np.exp(-y ** 2 / 4.0) / np.sqrt(4.0 * np.pi)


def grid_covering(radius, h=0.05):
    return make_grid(max(radius * 1.05, 23.0), base_spacing=h)


def test_hermite_reference_values():
    assert hermite_h(2, 0.0) == -2.0
    assert hermite_h(1, 3.0) == 3.0
    # expansion of the m = 3 sum: y^3 - 6y
    assert hermite_h(3, 1.0) == -5.0
    assert hermite_h(0, 17.3) == 1.0


def test_orthogonality_normalized():
    dev = 0.0
    for n in range(11):
        for m in range(11):
            val = inner_product_rho(lambda y, n=n: hermite_h(n, y),
                                    lambda y, m=m: hermite_h(m, y), BASIS)
            norm = math.sqrt(hermite_norm_sq(n) * hermite_norm_sq(m))
            dev = max(dev, abs(val / norm - (1.0 if n == m else 0.0)))
    assert dev < 1e-10


def test_orthogonality_absolute_small_degrees():
    # the absolute form is float-attainable up to 2^6 6! scale
    for n in range(7):
        for m in range(7):
            val = inner_product_rho(lambda y, n=n: hermite_h(n, y),
                                    lambda y, m=m: hermite_h(m, y), BASIS)
            target = hermite_norm_sq(n) if n == m else 0.0
            assert abs(val - target) < 1e-10


def test_weight_is_probability_density():
    one = inner_product_rho(lambda y: np.ones_like(y),
                            lambda y: np.ones_like(y), BASIS)
    assert one == pytest.approx(1.0, abs=1e-13)


def test_quadrature_moments_exact():
    # E[y^(2k)] against rho is 2^k (2k-1)!!
    for k in (1, 2, 5, 10, 20, 40):
        val = inner_product_rho(lambda y: y ** k, lambda y: y ** k, BASIS)
        exact = 2.0 ** k * float(np.prod(np.arange(2 * k - 1, 0, -2.0)))
        assert val == pytest.approx(exact, rel=1e-12)


def test_blowup_cutoff_regions():
    s = 30.0
    r = P.k0 * math.sqrt(s)
    assert blowup_cutoff_chi(0.0, s, P) == 1.0
    assert blowup_cutoff_chi(0.5 * r, s, P) == 1.0
    assert blowup_cutoff_chi(3.0 * r, s, P) == 0.0


def test_decompose_zero_field():
    grid = grid_covering(2 * P.k0 * math.sqrt(20.0))
    dec = decompose(Field.zeros(grid), 20.0, BASIS, P)
    assert dec.v0 == dec.v1 == dec.v2 == 0.0
    assert dec.v_minus.sup() == 0.0 and dec.v_e.sup() == 0.0


def test_decompose_grid_too_small():
    grid = make_grid(5.0)
    with pytest.raises(GridCoverageError):
        decompose(Field.zeros(grid), 20.0, BASIS, P)


def _tail_oracle(s, k0):
    # integral of h1 * chi^2 * k1 * rho outside the quadrature identity:
    # 1 - v1 = int h1 (1 - chi^2) k1 rho
    upper = 2.0 * k0 * math.sqrt(s)

    def integrand(y):
        c = cutoff_chi0(y / (k0 * math.sqrt(s)))
        return y * (1.0 - c * c) * 0.5 * y * rho(y)

    val, err = quad(integrand, k0 * math.sqrt(s), upper, limit=200)
    tail, err2 = quad(lambda y: y * 0.5 * y * rho(y), upper, np.inf)
    return 2.0 * (val + tail)           # both signs of y


def test_decompose_h1_cutoff_default_k0():
    # at K0 = 2 the cutoff tail is below 1e-8, so v1 = 1 to that accuracy
    s = 20.0
    grid = grid_covering(2 * P.k0 * math.sqrt(s))
    v = Field.from_function(
        grid, lambda y: hermite_h(1, y) * blowup_cutoff_chi(y, s, P))
    dec = decompose(v, s, BASIS, P)
    assert dec.v1 == pytest.approx(1.0, abs=1e-8)
    assert abs(dec.v0) < 1e-10 and abs(dec.v2) < 1e-10
    # quadrature agrees with an adaptive-quadrature oracle of the tail
    oracle = 1.0 - _tail_oracle(s, P.k0)
    assert dec.v1 == pytest.approx(oracle, abs=1e-10)


def test_decompose_h1_cutoff_unit_k0():
    # at K0 = 1 the tail is ~1e-2: compare against the oracle, not 1
    params = validate_parameters(Parameters(
        p=5, q=4, mu=1.0, beta=0.4, eps1=0.25, alpha=0.4, k0=1.0,
        a_const=20.0, s0=20.0))
    s = 20.0
    grid = grid_covering(2 * math.sqrt(s))
    v = Field.from_function(
        grid, lambda y: hermite_h(1, y) * blowup_cutoff_chi(y, s, params))
    # the cutoff transition sits where the Gaussian weight is only e^-5,
    # so resolving it needs a higher quadrature order than the default
    dec = decompose(v, s, make_basis(12, 256), params)
    oracle = 1.0 - _tail_oracle(s, 1.0)
    assert abs(oracle - 1.0) > 1e-4          # the tail is genuinely visible
    assert dec.v1 == pytest.approx(oracle, abs=1e-7)


def test_reconstruction_identity():
    s = 25.0
    grid = grid_covering(2 * P.k0 * math.sqrt(s))
    v = Field.from_function(
        grid, lambda y: np.exp(-y ** 2 / 9.0) * (0.3 + y - 0.2 * y ** 3))
    dec = decompose(v, s, BASIS, P)
    back = reconstruct(dec)
    assert np.max(np.abs(back.values - v.values)) < 1e-12 * max(1.0, v.sup())


def test_minus_part_has_no_low_modes():
    s = 25.0
    grid = grid_covering(2 * P.k0 * math.sqrt(s))
    v = Field.from_function(
        grid, lambda y: np.exp(-y ** 2 / 9.0) * (0.3 + y - 0.2 * y ** 3))
    dec = decompose(v, s, BASIS, P)
    for m in range(3):
        proj = inner_product_rho(dec.v_minus,
                                 lambda y, m=m: hermite_h(m, y), BASIS) \
            / hermite_norm_sq(m)
        assert abs(proj) < 1e-10


def test_even_field_has_no_mode_one():
    s = 30.0
    grid = grid_covering(2 * P.k0 * math.sqrt(s))
    v = Field.from_function(grid, lambda y: np.cos(y) * np.exp(-y ** 2 / 16))
    dec = decompose(v, s, BASIS, P)
    assert abs(dec.v1) < 1e-12


def test_minus_norm_constant_field_scaling():
    # fields g = 1 and g = y^2: compensated minus-norms stay bounded
    consts_1, consts_y2 = [], []
    for s in (20.0, 60.0, 180.0, 500.0):
        grid = grid_covering(2 * P.k0 * math.sqrt(s), h=0.08)
        one = Field.from_function(grid, lambda y: np.ones_like(y))
        ysq = Field.from_function(grid, lambda y: y ** 2)
        n1 = project_minus_norm(decompose(one, s, BASIS, P))
        n2 = project_minus_norm(decompose(ysq, s, BASIS, P))
        consts_1.append(n1 * P.k0 ** 3 * s ** 1.5)
        consts_y2.append(n2 * P.k0 * math.sqrt(s))
    for series in (consts_1, consts_y2):
        arr = np.asarray(series)
        assert arr.max() / arr.min() < 5.0
        assert arr.max() < 10.0


def test_h1_cutoff_minus_content():
    # mode 1 absorbs h1 up to the cutoff transition: the minus part is
    # orthogonal to the low modes (checked above) and its weighted sup
    # obeys the transition-zone scaling 1/(4 K0^2 s)
    s = 20.0
    grid = grid_covering(2 * P.k0 * math.sqrt(s))
    v = Field.from_function(
        grid, lambda y: hermite_h(1, y) * blowup_cutoff_chi(y, s, P))
    dec = decompose(v, s, BASIS, P)
    norm = project_minus_norm(dec)
    assert norm < 2.0 / (4.0 * P.k0 ** 2 * s)
    proj = inner_product_rho(dec.v_minus, lambda y: hermite_h(1, y), BASIS) \
        / hermite_norm_sq(1)
    assert abs(proj) < 1e-8
