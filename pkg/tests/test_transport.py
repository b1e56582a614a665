"""Transport distances against closed forms and an independent assignment
oracle.

Closed forms: translation costs |c| for any interval law, scaling cost
|s - 1| sqrt(m2) for dilations, the Gaussian W2/KL formulas, and metric
axioms.  The circle LP is cross-checked against a quantile-atom assignment
solved by scipy's Hungarian algorithm, which shares nothing with the LP
formulation.
"""

import math

import numpy as np
import pytest
import scipy.linalg
import scipy.optimize

from freetci import measures, transport
from freetci.errors import ConfigError

TWOPI = 2.0 * math.pi


def test_translation_cost():
    a = measures.semicircle_measure(800)
    b = measures.semicircle_measure(800, center=0.7)
    assert transport.wasserstein_1d(a, b, p=2) == pytest.approx(0.7, abs=1e-6)
    assert transport.wasserstein_1d(a, b, p=1) == pytest.approx(0.7, abs=1e-6)
    u = measures.uniform_interval_measure(0.0, 1.0, 400)
    v = measures.uniform_interval_measure(0.25, 1.25, 400)
    assert transport.wasserstein_1d(u, v, p=2) == pytest.approx(0.25, abs=1e-9)


def test_scaling_cost():
    a = measures.semicircle_measure(1200)
    for s in (0.5, 1.5):
        b = measures.semicircle_measure(1200, radius=2.0 * s)
        # quantile coupling: |s q - q|^2 integrates to (s-1)^2 m2, m2 = 1
        assert transport.wasserstein_1d(a, b, p=2) == \
            pytest.approx(abs(s - 1.0), abs=1e-4)
    u = measures.uniform_interval_measure(-1.0, 1.0, 800)
    v = measures.uniform_interval_measure(-2.0, 2.0, 800)
    assert transport.wasserstein_1d(u, v, p=2) == \
        pytest.approx(1.0 / math.sqrt(3.0), abs=1e-4)


def test_metric_axioms_interval():
    fam = [measures.semicircle_measure(500),
           measures.uniform_interval_measure(-1.0, 1.0, 500),
           measures.arcsine_measure(2.0, 500)]
    for mu in fam:
        assert transport.wasserstein_1d(mu, mu) == pytest.approx(0.0, abs=1e-9)
    d01 = transport.wasserstein_1d(fam[0], fam[1])
    d10 = transport.wasserstein_1d(fam[1], fam[0])
    assert d01 == pytest.approx(d10, abs=1e-12)
    d02 = transport.wasserstein_1d(fam[0], fam[2])
    d12 = transport.wasserstein_1d(fam[1], fam[2])
    assert d02 <= d01 + d12 + 1e-9


def test_empirical_and_grid_mix():
    xs = np.array([-1.0, 0.0, 1.0])
    ys = xs + 0.25
    assert transport.wasserstein_1d(xs, ys, p=2) == pytest.approx(0.25,
                                                                  abs=1e-12)
    emp = measures.EmpiricalMeasure("interval", xs)
    assert transport.wasserstein_1d(emp, ys, p=2) == pytest.approx(0.25,
                                                                   abs=1e-12)
    with pytest.raises(ConfigError):
        transport.wasserstein_1d(measures.uniform_circle_measure(32), xs)
    with pytest.raises(ConfigError):
        transport.wasserstein_1d(xs, ys, p=0.5)


def test_general_p_costs():
    u = measures.uniform_interval_measure(0.0, 1.0, 200)
    v = measures.uniform_interval_measure(0.5, 1.5, 200)
    for p in (1, 2, 3, 4):
        assert transport.wasserstein_1d(u, v, p=p) == pytest.approx(0.5,
                                                                    abs=1e-9)


def test_circle_uniform_self_distance():
    a = measures.uniform_circle_measure(128)
    assert transport.wasserstein_circle_chordal(a, a, lp_grid=64) == \
        pytest.approx(0.0, abs=1e-6)


def test_circle_rotation_invariance():
    mu = measures.trig_polynomial_measure([0.6], grid_size=128)
    # rotating both arguments by the same angle keeps the distance
    k = 16
    shift = TWOPI * k / 128
    rot = measures.GridMeasure("circle", mu.nodes, np.roll(mu.weights, k))
    uni = measures.uniform_circle_measure(128)
    d1 = transport.wasserstein_circle_chordal(mu, uni, lp_grid=64)
    d2 = transport.wasserstein_circle_chordal(rot, uni, lp_grid=64)
    assert d1 == pytest.approx(d2, abs=1e-6)
    assert d1 > 0.3  # the cos-weighted law is far from uniform


def _circle_quantile_atoms(mu, m):
    cum = np.concatenate(([0.0], np.cumsum(mu.weights)))
    targets = (np.arange(m) + 0.5) / m
    idx = np.searchsorted(cum, targets, side="right") - 1
    return mu.nodes[np.clip(idx, 0, mu.nodes.size - 1)]


def test_circle_lp_against_assignment_oracle():
    mu = measures.trig_polynomial_measure([1.0], grid_size=256)
    uni = measures.uniform_circle_measure(256)
    w2, details = transport.wasserstein_circle_chordal(mu, uni, lp_grid=128,
                                                       return_details=True)
    assert details["lp_cost"] <= details["scan_cost"] + 1e-9
    m = 400
    a = _circle_quantile_atoms(mu, m)
    b = _circle_quantile_atoms(uni, m)
    cost = 2.0 - 2.0 * np.cos(a[:, None] - b[None, :])
    ri, ci = scipy.optimize.linear_sum_assignment(cost)
    oracle = math.sqrt(cost[ri, ci].mean())
    assert w2 == pytest.approx(oracle, abs=2e-2)


def test_gaussian_w2_closed_forms():
    # diagonal case: squared distance = |dm|^2 + sum (sqrt s1 - sqrt s2)^2
    got = transport.gaussian_w2([0.0, 0.0], np.diag([1.0, 4.0]),
                                [1.0, -1.0], np.diag([1.0, 1.0]))
    want = math.sqrt(2.0 + (2.0 - 1.0) ** 2)
    assert got == pytest.approx(want, abs=1e-12)
    # scalar covariance broadcast
    assert transport.gaussian_w2(0.0, 1.0, 0.5, 1.0) == pytest.approx(0.5)
    # non-commuting covariances against a sqrtm evaluation of the formula
    c1 = np.array([[2.0, 0.5], [0.5, 1.0]])
    c2 = np.array([[1.0, -0.3], [-0.3, 1.5]])
    r2 = scipy.linalg.sqrtm(c2).real
    cross = scipy.linalg.sqrtm(r2 @ c1 @ r2).real
    want = math.sqrt(np.trace(c1) + np.trace(c2) - 2.0 * np.trace(cross))
    assert transport.gaussian_w2([0, 0], c1, [0, 0], c2) == \
        pytest.approx(want, abs=1e-9)
    with pytest.raises(ConfigError):
        transport.gaussian_w2([0.0], 1.0, [0.0, 0.0], 1.0)


def test_gaussian_relative_entropy():
    # KL(N(m, s^2) || N(0,1)) = (s^2 + m^2 - 1 - log s^2) / 2
    m, s2 = 0.7, 1.8
    want = 0.5 * (s2 + m * m - 1.0 - math.log(s2))
    assert transport.gaussian_relative_entropy([m], [[s2]], [0.0], [[1.0]]) == \
        pytest.approx(want, abs=1e-12)
    assert transport.gaussian_relative_entropy([0.0], [[1.0]], [0.0], [[1.0]]) \
        == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ConfigError):
        transport.gaussian_relative_entropy([0.0], [[-1.0]], [0.0], [[1.0]])


def test_empirical_w2_assignment_and_sinkhorn():
    rng = np.random.default_rng(3)
    xs = rng.standard_normal(64)
    ys = xs + 0.5
    val = transport.empirical_w2(xs, ys)
    # optimal matching of a shifted sample is the shift itself
    assert val == pytest.approx(0.5, abs=1e-12)
    w, details = transport.empirical_w2(xs, ys, cap=16, return_details=True)
    assert details["method"] == "sinkhorn"
    assert w == pytest.approx(0.5, abs=0.1)
    assert details["duality_gap"] >= 0.0
    # matrix samples in Hilbert-Schmidt distance
    A = rng.standard_normal((8, 3, 3))
    val = transport.empirical_w2(A, A + 1.0)
    assert val == pytest.approx(3.0, abs=1e-12)  # ||all-ones 3x3||_HS = 3
    with pytest.raises(ConfigError):
        transport.empirical_w2(xs, ys[:10])


def test_coupling_cost_bound():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((5, 4, 4))
    A = (A + A.transpose(0, 2, 1)) / 2.0
    assert transport.coupling_cost_bound([A], [A]) == 0.0
    shifted = A + 0.5 * np.eye(4)
    raw = transport.coupling_cost_bound([A], [shifted])
    assert raw == pytest.approx(0.5 * 2.0, abs=1e-12)  # sqrt(N) |c|
    normalized = transport.coupling_cost_bound([A], [shifted], normalize=True)
    assert normalized == pytest.approx(0.5, abs=1e-12)
    # retraction can only decrease the bound
    assert transport.coupling_cost_bound([A], [shifted], R=1.0) <= raw + 1e-12
    with pytest.raises(ConfigError):
        transport.coupling_cost_bound([A], [A, A])
