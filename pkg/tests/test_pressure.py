"""Partition functions against independent quadrature oracles.

At N = 2 every log-gas integral is a 2-d quadrature, so the Weyl constant,
the completed-square quadratic formula, the thermodynamic integration and the
hard-wall route are all checked against scipy.integrate directly.  The
Selberg ball integral is checked by exact Gauss-Legendre integration of the
squared Vandermonde polynomial, and the circle route against the SU(2) Weyl
quadrature.
"""

import math

import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from freetci import potentials, pressure, random_matrices
from freetci.errors import ConfigError, DiagnosticError

TWOPI = 2.0 * math.pi
HALF_LOG_TWOPI = 0.5 * math.log(TWOPI)


def test_normalized_quadratic_partition_identity():
    # (1/N^2) log Z_N(x^2/2) + (1/2) log N = (1/2) log 2pi exactly
    q = potentials.builtin("x^2/2")
    for N in (1, 2, 4, 8, 16, 32, 64):
        val = pressure.log_partition_line(q, N) / (N * N) + 0.5 * math.log(N)
        assert val == pytest.approx(HALF_LOG_TWOPI, abs=1e-10)


def test_quadratic_partition_matches_quadrature_at_n2():
    # general quadratic with a linear tilt, against direct 2-d quadrature of
    # C_2 Delta^2 exp(-2 sum Q)
    q = potentials.line_potential((0.0, 0.2, 0.65))
    val, info = pressure.log_partition_line(q, 2, return_info=True)
    assert info["method"] == "exact"

    def integrand(y, x):
        return (x - y) ** 2 * math.exp(
            -2.0 * (0.2 * x + 0.65 * x * x + 0.2 * y + 0.65 * y * y))

    raw, err = dblquad(integrand, -9.0, 9.0, -9.0, 9.0,
                       epsabs=1e-12, epsrel=1e-12)
    want = pressure.log_weyl_constant(2) + math.log(raw)
    assert val == pytest.approx(want, abs=1e-9)


def test_quartic_partition_matches_quadrature_at_n2():
    q = potentials.builtin("x^4/4")
    ti = pressure.TiSettings(samples_per_node=64)
    val, info = pressure.log_partition_line(q, 2, seed=3, ti=ti,
                                            return_info=True)
    assert info["method"] == "thermodynamic-integration"

    def integrand(y, x):
        return (x - y) ** 2 * math.exp(-0.5 * (x ** 4 + y ** 4))

    raw, _ = dblquad(integrand, -6.0, 6.0, -6.0, 6.0,
                     epsabs=1e-12, epsrel=1e-12)
    want = pressure.log_weyl_constant(2) + math.log(raw)
    assert val == pytest.approx(want, abs=3.0 * info["error"] + 2e-3)


def test_constant_shift_is_exact():
    q = potentials.builtin("x^2/2")
    q_shift = potentials.line_potential((0.3, 0.0, 0.5))
    for N in (2, 8):
        assert pressure.log_partition_line(q_shift, N) == pytest.approx(
            pressure.log_partition_line(q, N) - 0.3 * N * N, abs=1e-10)
    # the split also holds on the Monte Carlo route, by construction
    quartic = potentials.builtin("x^4/4")
    with pytest.warns(UserWarning, match="rho = 0"):
        lifted = potentials.line_potential((-0.4, 0.0, 0.0, 0.0, 0.25))
    ti = pressure.TiSettings(nodes=5, samples_per_node=16)
    a = pressure.log_partition_line(quartic, 4, seed=2, ti=ti)
    b = pressure.log_partition_line(lifted, 4, seed=2, ti=ti)
    assert b - a == pytest.approx(0.4 * 16, abs=1e-10)


def test_selberg_log_ball():
    # N = 2: iint_{[0,1]^2} (s - t)^2 = 1/6
    assert pressure.selberg_log_ball(2) == pytest.approx(math.log(1.0 / 6.0),
                                                         abs=1e-12)
    # N = 3: integrate the degree-6 polynomial Delta^2 exactly by
    # Gauss-Legendre quadrature with 5 nodes per axis
    x, w = np.polynomial.legendre.leggauss(5)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    W = (w[:, None, None] * w[None, :, None] * w[None, None, :])
    delta2 = ((X - Y) * (X - Z) * (Y - Z)) ** 2
    want = math.log(float((delta2 * W).sum()))
    assert pressure.selberg_log_ball(3) == pytest.approx(want, abs=1e-12)


def test_hardwall_base_matches_direct_integral():
    # N = 2, R = 1: C_2 iint_{[-1,1]^2} (x-y)^2 = C_2 * 8/3
    want = pressure.log_weyl_constant(2) + math.log(8.0 / 3.0)
    assert pressure.log_hardwall_base(2, 1.0) == pytest.approx(want, abs=1e-12)
    with pytest.raises(ConfigError):
        pressure.log_hardwall_base(2, 0.0)


def test_hardwall_pressure_point_matches_quadrature_at_n2():
    q = potentials.builtin("x^2/2")
    R = 1.5
    ti = pressure.TiSettings(samples_per_node=64)
    val, info = pressure.pressure_point(q, 2, R, seed=5, ti=ti,
                                        check_truncation=False,
                                        return_info=True)

    def integrand(y, x):
        return (x - y) ** 2 * math.exp(-(x * x + y * y))

    raw, _ = dblquad(integrand, -R, R, -R, R, epsabs=1e-12, epsrel=1e-12)
    want = pressure.log_weyl_constant(2) + math.log(raw)
    assert val == pytest.approx(want, abs=3.0 * info["error"] + 2e-3)


def test_circle_partition_normalization():
    zero = potentials.builtin("zero")
    assert pressure.log_partition_circle(zero, 8) == 0.0
    # N = 1: the determinant-one constraint pins the angle at zero
    q = potentials.circle_potential(cos_coefficients=(0.3,))
    assert pressure.log_partition_circle(q, 1) == pytest.approx(-0.3, abs=1e-12)
    shifted = potentials.circle_potential(cos_coefficients=(0.3,), constant=0.2)
    assert pressure.log_partition_circle(shifted, 1) == \
        pytest.approx(-0.3 - 0.2, abs=1e-12)


def test_circle_partition_matches_su2_quadrature():
    # SU(2) eigenangles are (t, -t) with Weyl density prop. to sin^2 t, so
    # Z(g cos) = int sin^2 t e^{-4 g cos t} dt / int sin^2 t dt
    g = 0.2
    q = potentials.circle_potential(cos_coefficients=(g,))
    ti = pressure.TiSettings(samples_per_node=64)
    val, info = pressure.log_partition_circle(q, 2, seed=1, ti=ti,
                                              return_info=True)
    num, _ = quad(lambda t: math.sin(t) ** 2 * math.exp(-4.0 * g * math.cos(t)),
                  0.0, math.pi, epsabs=1e-13)
    want = math.log(num / (math.pi / 2.0))
    assert val == pytest.approx(want, abs=3.0 * info["error"] + 2e-3)


def test_carrier_mismatches_rejected():
    with pytest.raises(ConfigError):
        pressure.log_partition_line(potentials.builtin("zero"), 4)
    with pytest.raises(ConfigError):
        pressure.log_partition_circle(potentials.builtin("x^2/2"), 4)
    with pytest.raises(ConfigError):
        pressure.pressure_point(potentials.builtin("zero"), 4, 2.0)


def test_truncation_mass():
    q = potentials.builtin("x^2/2")
    assert pressure.truncation_mass(q, 16, 4.0, count=200) == 0.0
    with pytest.warns(UserWarning):
        frac = pressure.truncation_mass(q, 16, 2.2, count=200)
    assert 1e-3 < frac <= 5e-2 or frac > 0.0
    with pytest.raises(DiagnosticError):
        pressure.truncation_mass(q, 16, 1.0, count=200)


def test_pressure_estimate_needs_two_sizes():
    q = potentials.builtin("x^2/2")
    with pytest.raises(ConfigError):
        pressure.pressure_estimate(q, [8], 3.0)


def test_pressure_estimate_small_sizes():
    q = potentials.builtin("x^2/2")
    ti = pressure.TiSettings(nodes=9, samples_per_node=32)
    val, info = pressure.pressure_estimate(q, (4, 8), 3.0, seed=0, ti=ti,
                                           return_info=True)
    assert set(info) >= {"per_N", "stderr_per_N", "fit", "model"}
    assert list(info["per_N"]) == [4, 8]
    # the quadratic well already sits within 0.1 of the limit at these sizes
    assert val == pytest.approx(HALF_LOG_TWOPI, abs=0.1)


def test_gibbs_variational_identity():
    q = potentials.builtin("x^2/2")
    out = pressure.gibbs_variational_check(q, 8, 4.0, seed=0, count=800)
    assert out["ok"]
    assert out["residual"] <= out["tolerance"]
    # entropy closed form: (N^2/2) log(2 pi e / (N alpha))
    want = 0.5 * 64 * math.log(TWOPI * math.e / 8.0)
    assert out["entropy"] == pytest.approx(want, abs=1e-12)
    with pytest.raises(ConfigError):
        pressure.gibbs_variational_check(potentials.builtin("x^4/4"), 8, 4.0)


def test_weyl_constant_small_cases():
    # C_1 = 1, C_2 = 2pi / (1! 2!) = pi
    assert pressure.log_weyl_constant(1) == pytest.approx(0.0, abs=1e-14)
    assert pressure.log_weyl_constant(2) == pytest.approx(math.log(math.pi),
                                                          abs=1e-12)


def test_mehta_gaussian_small_cases():
    # N = 1: int e^{-x^2/2} = sqrt(2 pi)
    assert pressure.log_mehta_gaussian(1) == pytest.approx(
        0.5 * math.log(TWOPI), abs=1e-12)
    # N = 2 against quadrature of (x-y)^2 e^{-(x^2+y^2)}
    raw, _ = dblquad(lambda y, x: (x - y) ** 2 * math.exp(-(x * x + y * y)),
                     -9, 9, -9, 9, epsabs=1e-12)
    assert pressure.log_mehta_gaussian(2) == pytest.approx(math.log(raw),
                                                           abs=1e-9)
