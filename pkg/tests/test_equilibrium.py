"""Equilibrium solver against the closed-form semicircle law and its
Euler-Lagrange optimality certificate.

For Q = x^2/2 the minimizer of -Sigma(mu) + int Q dmu is the semicircle on
[-2, 2], the logarithmic potential satisfies 2 int log|x-y| dmu(y) - Q(x) = -1
on the support, and the additive inequality constant is (1/2) log 2pi.
"""

import math

import numpy as np
import pytest

from freetci import equilibrium, logkernel, measures, potentials
from freetci.errors import ConfigError, EnlargeWindowError


def _semicircle_cell_masses(edges):
    u = np.clip(edges / 2.0, -1.0, 1.0)
    cdf = 0.5 + (u * np.sqrt(1.0 - u * u) + np.arcsin(u)) / np.pi
    return np.diff(cdf)


def test_quadratic_equilibrium_is_semicircle():
    q = potentials.builtin("x^2/2")
    mu = equilibrium.solve_equilibrium(q, R=3.0, grid_size=1000)
    l1 = np.abs(mu.weights - _semicircle_cell_masses(mu.edges)).sum()
    assert l1 < 2e-2
    assert mu.mean() == pytest.approx(0.0, abs=1e-8)
    support = mu.nodes[mu.weights > 1e-10]
    assert support[0] == pytest.approx(-2.0, abs=2e-2)
    assert support[-1] == pytest.approx(2.0, abs=2e-2)


def test_euler_lagrange_certificate():
    q = potentials.builtin("x^2/2")
    mu = equilibrium.solve_equilibrium(q, R=3.0, grid_size=1000)
    cert = equilibrium.euler_lagrange_residual(mu, q)
    assert cert["on_support"] < 1e-9
    assert cert["off_support"] < 1e-9
    # effective constant 2 U - Q = -1 for the semicircle
    assert cert["constant"] == pytest.approx(-1.0, abs=1e-4)


def test_tilted_quadratic_shifts_the_semicircle():
    # Q = (x - 1)^2 / 2 up to a constant: equilibrium is the semicircle
    # centered at 1
    q = potentials.line_potential((0.0, -1.0, 0.5))
    mu = equilibrium.solve_equilibrium(q, R=4.0, grid_size=800)
    assert mu.mean() == pytest.approx(1.0, abs=1e-3)
    edges = mu.edges
    want = _semicircle_cell_masses(edges - 1.0)
    assert np.abs(mu.weights - want).sum() < 3e-2


def test_quartic_equilibrium_certificate_and_symmetry():
    q = potentials.builtin("x^4/4")
    mu = equilibrium.solve_equilibrium(q, R=3.0, grid_size=600)
    cert = equilibrium.euler_lagrange_residual(mu, q)
    assert cert["on_support"] < 1e-8
    assert mu.mean() == pytest.approx(0.0, abs=1e-8)
    # support radius (4/3)^(1/4) * 3^(1/4) = 2 / 3^(1/4) for x^4/4... checked
    # numerically instead: the quartic support is strictly inside [-2, 2]
    support = mu.nodes[mu.weights > 1e-10]
    assert 1.3 < support[-1] < 1.8


def test_window_enlargement():
    q = potentials.builtin("x^2/2")
    with pytest.raises(EnlargeWindowError):
        equilibrium.solve_equilibrium(q, R=1.5, grid_size=400)
    mu = equilibrium.solve_equilibrium_auto(q, grid_size=400, R0=1.0)
    support = mu.nodes[mu.weights > 1e-10]
    assert support[-1] == pytest.approx(2.0, abs=5e-2)
    with pytest.raises(ConfigError):
        equilibrium.solve_equilibrium(q, R=None, grid_size=100)


def test_nonconfining_potential_rejected():
    linear = potentials.Potential("line", coefficients=(0.0, 1.0), rho=0.0)
    with pytest.raises(ConfigError):
        equilibrium.solve_equilibrium(linear, R=2.0, grid_size=100)


def test_weighted_energy_of_semicircle():
    # -Sigma + int Q dmu = 1/4 + 1/2 at the equilibrium pair
    q = potentials.builtin("x^2/2")
    mu = measures.semicircle_measure(1500)
    assert equilibrium.weighted_energy(mu, q) == pytest.approx(0.75, abs=1e-5)


def test_b_constant_line_quadratic():
    q = potentials.builtin("x^2/2")
    b = equilibrium.b_constant_line(q)
    assert b == pytest.approx(0.5 * math.log(2.0 * math.pi), abs=2e-3)
    # additivity over letters
    assert equilibrium.b_constant_line((q, q), grid_size=800) == \
        pytest.approx(2.0 * equilibrium.b_constant_line(q, grid_size=800),
                      abs=1e-12)
    with pytest.raises(ConfigError):
        equilibrium.b_constant_line(potentials.builtin("zero"))


def test_b_constant_translation_invariance():
    # B only sees the shape of the potential well, not its location:
    # Sigma(mu_Q) - mu_Q(Q) is the same for Q(x) and Q(x - c)
    q0 = potentials.line_potential((0.0, 0.0, 0.5))
    q1 = potentials.line_potential((0.125, -0.5, 0.5))  # (x - 0.5)^2 / 2
    b0 = equilibrium.b_constant_line(q0, grid_size=800)
    b1 = equilibrium.b_constant_line(q1, grid_size=800)
    assert b1 == pytest.approx(b0, abs=1e-4)


def test_circle_equilibrium_uniform_for_zero_potential():
    z = potentials.builtin("zero")
    mu = equilibrium.solve_equilibrium(z, grid_size=256)
    np.testing.assert_allclose(mu.weights, 1.0 / 256, atol=1e-10)
    assert equilibrium.b_constant_circle(z, grid_size=256) == \
        pytest.approx(0.0, abs=1e-9)


def test_circle_equilibrium_with_cos_potential():
    q = potentials.circle_potential(cos_coefficients=(0.4,))
    mu = equilibrium.solve_equilibrium(q, grid_size=512)
    cert = equilibrium.euler_lagrange_residual(mu, q)
    assert cert["on_support"] < 1e-8
    # mass concentrates where the potential is lowest (t = pi)
    assert abs(measures.moment(mu, 1).real - (-0.2)) < 0.05
    # small-coupling expansion: density (1 - 0.4 cos t)/2pi exactly solves
    # the continuum Euler-Lagrange equation while it stays positive
    want = measures.trig_polynomial_measure([-0.4], grid_size=512)
    assert np.abs(mu.weights - want.weights).sum() < 1e-4


def test_solver_grid_cache_returns_copies():
    q = potentials.builtin("x^2/2")
    mu1, info1 = equilibrium.solve_equilibrium(q, R=3.0, grid_size=300,
                                               return_info=True)
    mu2, info2 = equilibrium.solve_equilibrium(q, R=3.0, grid_size=300,
                                               return_info=True)
    assert mu1 is mu2  # cached measure object (immutable)
    assert info1 == info2
    info1["energy"] = math.nan  # caller-side mutation must not poison cache
    _, info3 = equilibrium.solve_equilibrium(q, R=3.0, grid_size=300,
                                             return_info=True)
    assert info3 == info2
