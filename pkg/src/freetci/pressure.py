"""Partition functions and finite-N pressure of the eigenvalue ensembles.

The eigenvalue-coordinate normalization constant

    C_N = (2 pi)^{N(N-1)/2} / prod_{j=1}^N j!

converts matrix integrals into log-gas integrals; it is kept in log-gamma
form and combined with the Gaussian (Mehta) and hard-wall (Selberg) integrals
the same way, so closed-form results genuinely validate the constant instead
of restating a shortcut.

Non-quadratic potentials are handled by thermodynamic integration: the
coupling derivative ``d/ds log Z(s Q) = -N^2 E_s[mean Q]`` is averaged over
Metropolis chains at Gauss-Legendre coupling nodes and integrated exactly.
Constant terms of the potential are split off analytically first, which makes
``log Z(Q + c) = log Z(Q) - c N^2`` an identity of the implementation, not an
approximation.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import potentials, random_matrices
from .errors import ConfigError, DiagnosticError

TWOPI = 2.0 * math.pi


def log_weyl_constant(N):
    """log C_N: eigenvalue-coordinate constant of the unitarily invariant
    matrix integral."""
    j = np.arange(1, N + 1)
    return 0.5 * N * (N - 1) * math.log(TWOPI) - float(gammaln(j + 1).sum())


def log_mehta_gaussian(N):
    """log of ``int Delta(l)^2 exp(-N sum l^2/2) dl`` (Mehta's integral,
    rescaled to the N-dependent Gibbs weight)."""
    j = np.arange(1, N + 1)
    return (-0.5 * N * N * math.log(N) + 0.5 * N * math.log(TWOPI)
            + float(gammaln(j + 1).sum()))


def selberg_log_ball(N):
    """log of ``int_{[0,1]^N} prod_{i<j} (t_i - t_j)^2 dt`` (Selberg at
    a = b = gamma = 1)."""
    j = np.arange(0, N)
    return float((2.0 * gammaln(j + 1) + gammaln(j + 2) - gammaln(N + j + 1)).sum())


def log_hardwall_base(N, R):
    """log of the zero-potential hard-wall matrix integral
    ``C_N int_{[-R,R]^N} Delta^2 dl``."""
    if R <= 0:
        raise ConfigError("window radius must be positive")
    return log_weyl_constant(N) + N * N * math.log(2.0 * R) + selberg_log_ball(N)


_GL_NODES = 21


def _coupling_nodes(n_nodes):
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def _scaled(q, s):
    if q.carrier == "line":
        return potentials.Potential("line",
                                    coefficients=tuple(s * c for c in q.coefficients),
                                    rho=s * q.rho)
    return potentials.Potential("circle",
                                cos_coefficients=tuple(s * c for c in q.cos_coefficients),
                                sin_coefficients=tuple(s * c for c in q.sin_coefficients),
                                constant=s * q.constant, rho=s * q.rho)


def _blend_line(q, s):
    """(1-s) x^2/2 + s q, as a line potential."""
    base = np.zeros(max(3, len(q.coefficients)))
    base[2] = 0.5 * (1.0 - s)
    base[:len(q.coefficients)] += s * np.asarray(q.coefficients)
    return potentials.Potential("line", coefficients=tuple(base),
                                rho=(1.0 - s) + s * q.rho)


@dataclass(frozen=True)
class TiSettings:
    nodes: int = _GL_NODES
    samples_per_node: int = 96
    settings: random_matrices.McmcSettings = random_matrices.McmcSettings()


def _ti_line(q0, N, seed, wall, ti, blend):
    """Thermodynamic integration of -N^2 E_s[mean g_s] over s in [0, 1].

    blend=True integrates d/ds of the (1-s) x^2/2 + s q path (g_s is the
    potential difference); blend=False integrates the s q path from s = 0.
    """
    xs, ws = _coupling_nodes(ti.nodes)
    init = None
    if wall is not None:
        # zero-potential hard-wall equilibrium (arcsine) quantiles
        init = np.sort(wall * np.cos(math.pi * (np.arange(N) + 0.5) / N))
    total = 0.0
    var = 0.0
    for k, s in enumerate(xs):
        qs = _blend_line(q0, s) if blend else _scaled(q0, s)
        rng = random_matrices._rng(seed, k)
        lam = random_matrices._mcmc_eigenvalues(qs, N, ti.samples_per_node,
                                                rng, wall, ti.settings,
                                                init=init)
        if blend:
            g = (potentials.evaluate(q0, lam)
                 - 0.5 * lam * lam).mean(axis=1)
        else:
            g = potentials.evaluate(q0, lam).mean(axis=1)
        m = g.mean()
        se = g.std(ddof=1) / math.sqrt(len(g)) if len(g) > 1 else 0.0
        total += ws[k] * m
        var += (ws[k] * se) ** 2
    return -N * N * total, N * N * math.sqrt(var)


def log_partition_line(q, N, seed=0, ti=None, return_info=False):
    """log Z_N(Q) of the unconstrained line ensemble
    ``Z = int exp(-N Tr Q(A)) dA``.

    Quadratic potentials are exact (Weyl constant + Mehta integral +
    completing the square); other confining polynomials use thermodynamic
    integration from x^2/2 along the convex blend path.
    """
    if q.carrier != "line":
        raise ConfigError("log_partition_line takes a line potential")
    q0, c = potentials.strip_constant(q)
    info = {"constant_shift": -c * N * N}
    if potentials.is_quadratic(q0):
        co = np.asarray(q0.coefficients)
        alpha = float(2.0 * co[2])
        beta = float(co[1]) if co.size > 1 else 0.0
        val = (log_weyl_constant(N) + log_mehta_gaussian(N)
               - 0.5 * N * N * math.log(alpha) + N * N * beta * beta / (2.0 * alpha))
        info.update({"method": "exact", "error": 0.0})
    else:
        if not potentials.growth_ok(q0):
            raise ConfigError("potential does not confine eigenvalues")
        ti = ti or TiSettings()
        base = log_weyl_constant(N) + log_mehta_gaussian(N)
        integral, err = _ti_line(q0, N, seed, None, ti, blend=True)
        val = base + integral
        info.update({"method": "thermodynamic-integration", "error": err,
                     "nodes": ti.nodes, "samples_per_node": ti.samples_per_node})
    val -= c * N * N
    return (val, info) if return_info else val


def log_partition_circle(q, N, seed=0, ti=None, return_info=False):
    """log of ``E_{SU-Weyl}[exp(-N sum Q(t_i))]``: the determinant-one
    eigenangle ensemble, normalized so Q = 0 gives 0.

    Runs thermodynamic integration in the coupling with trace-constrained
    paired moves; the constant term is split off analytically, making the
    shift rule ``log Z(Q + c) = log Z(Q) - c N^2`` exact by construction.
    """
    if q.carrier != "circle":
        raise ConfigError("log_partition_circle takes a circle potential")
    q0, c = potentials.strip_constant(q)
    info = {"constant_shift": -c * N * N}
    if not (q0.cos_coefficients or q0.sin_coefficients):
        val = 0.0
        info.update({"method": "exact", "error": 0.0})
    elif N == 1:
        # the determinant-one constraint pins the single angle at 0
        val = -float(potentials.evaluate(q0, 0.0))
        info.update({"method": "exact", "error": 0.0})
    else:
        ti = ti or TiSettings()
        xs, ws = _coupling_nodes(ti.nodes)
        init = random_matrices.su_project_angles(
            (np.arange(N) + 0.5) * TWOPI / N)
        total = 0.0
        var = 0.0
        for k, s in enumerate(xs):
            qs = _scaled(q0, s)
            rng = random_matrices._rng(seed, k)
            lam = random_matrices._mcmc_eigenvalues(
                qs, N, ti.samples_per_node, rng, None, ti.settings,
                paired=True, init=np.sort(init))
            g = potentials.evaluate(q0, lam).mean(axis=1)
            m = g.mean()
            se = g.std(ddof=1) / math.sqrt(len(g)) if len(g) > 1 else 0.0
            total += ws[k] * m
            var += (ws[k] * se) ** 2
        val = -N * N * total
        info.update({"method": "thermodynamic-integration",
                     "error": N * N * math.sqrt(var), "nodes": ti.nodes,
                     "samples_per_node": ti.samples_per_node})
    val -= c * N * N
    return (val, info) if return_info else val


def truncation_mass(h, N, R, count=400, seed=0):
    """Estimated probability that an unconstrained sample of one letter
    leaves the operator-norm ball of radius R; warns above 1e-3, raises
    above 5e-2 (the window is then meaningless for pressure work)."""
    lam = random_matrices.sample_gibbs_eigenvalues(h, N, count, seed=seed)
    frac = float((np.abs(lam).max(axis=1) > R).mean())
    if frac > 5e-2:
        raise DiagnosticError(
            f"truncation mass {frac:.3f} at R = {R}: window far below the "
            "spectral support")
    if frac > 1e-3:
        warnings.warn(f"truncation mass {frac:.2e} at R = {R} is not "
                      "negligible", stacklevel=2)
    return frac


def pressure_point(h, N, R, seed=0, ti=None, check_truncation=True,
                   return_info=False):
    """Hard-wall pressure ``P_{N,R}(h) = log C_N + log int_{[-R,R]^N} Delta^2
    exp(-N sum h_i) `` summed over the letters of h.

    The thermodynamic integration starts at the exact zero-potential
    hard-wall base point (Selberg integral)."""
    hs = (h,) if isinstance(h, potentials.Potential) else tuple(h)
    ti = ti or TiSettings()
    total = 0.0
    err2 = 0.0
    masses = []
    for i, hi in enumerate(hs):
        if hi.carrier != "line":
            raise ConfigError("pressure_point takes line potentials")
        h0, c = potentials.strip_constant(hi)
        base = log_hardwall_base(N, R)
        if h0.coefficients and any(h0.coefficients):
            integral, err = _ti_line(h0, N, seed + 7919 * i, R, ti, blend=False)
        else:
            integral, err = 0.0, 0.0
        total += base + integral - c * N * N
        err2 += err * err
        if check_truncation and potentials.growth_ok(hi):
            masses.append(truncation_mass(hi, N, R, seed=seed + 104729 * (i + 1)))
    info = {"error": math.sqrt(err2), "truncation_mass": masses,
            "N": N, "R": R}
    return (total, info) if return_info else total


def pressure_estimate(h, N_list, R, seed=0, ti=None, return_info=False):
    """Normalized pressure ``(1/N^2) P_{N,R}(h) + (n/2) log N`` across a list
    of sizes, extrapolated by a least-squares fit to ``a + b / N^2``.

    Returns the extrapolated value (and, with ``return_info``, the per-N
    values with error bars and the fit coefficients)."""
    hs = (h,) if isinstance(h, potentials.Potential) else tuple(h)
    n = len(hs)
    Ns = sorted(set(int(N) for N in N_list))
    if len(Ns) < 2:
        raise ConfigError("need at least two sizes N to extrapolate")
    vals = []
    errs = []
    for N in Ns:
        p, inf = pressure_point(hs, N, R, seed=seed, ti=ti, return_info=True)
        vals.append(p / (N * N) + 0.5 * n * math.log(N))
        errs.append(inf["error"] / (N * N) + 1e-12)
    A = np.stack([np.ones(len(Ns)), 1.0 / np.asarray(Ns, dtype=float) ** 2], axis=1)
    W = 1.0 / np.asarray(errs)
    coeff, *_ = np.linalg.lstsq(A * W[:, None], np.asarray(vals) * W, rcond=None)
    a, b = float(coeff[0]), float(coeff[1])
    if return_info:
        return a, {"per_N": dict(zip(Ns, vals)), "stderr_per_N": dict(zip(Ns, errs)),
                   "fit": {"a": a, "b": b}, "R": R, "model": "a + b/N^2"}
    return a


def gibbs_variational_check(h, N, R, seed=0, count=2000):
    """Check the variational identity ``P = S - N E[sum Tr h_i]`` for the
    window-truncated ensemble of a quadratic tuple h.

    P combines the exact unconstrained log-partition with the Monte Carlo
    in-window mass; the entropy S uses the Gaussian closed form (the
    truncation correction is within the tolerance budget when the truncation
    mass is small).  Returns a dict with both sides, the residual, and the
    tolerance ``1e-2 |P|``."""
    hs = (h,) if isinstance(h, potentials.Potential) else tuple(h)
    if N < 1:
        raise ConfigError("N must be positive")
    P = 0.0
    energy = 0.0
    energy_se_sq = 0.0
    entropy = 0.0
    for i, hi in enumerate(hs):
        if not potentials.is_quadratic(hi):
            raise ConfigError("gibbs_variational_check needs quadratic letters "
                              "(closed-form entropy)")
        co = np.asarray(hi.coefficients)
        alpha = float(2.0 * co[2])
        lam = random_matrices.sample_gibbs_eigenvalues(
            hi, N, count, seed=seed + 31 * i)
        inside = np.abs(lam).max(axis=1) <= R
        frac = float(inside.mean())
        if frac == 0.0:
            raise DiagnosticError(f"no samples inside the window R = {R}")
        if 1.0 - frac > 1e-3:
            warnings.warn(f"truncation mass {1-frac:.2e}: identity residual "
                          "will include a truncation term", stacklevel=2)
        logZ = log_partition_line(hi, N)
        P += logZ + math.log(frac)
        tr_h = potentials.evaluate(hi, lam[inside]).sum(axis=1)
        energy += N * float(tr_h.mean())
        energy_se_sq += (N * float(tr_h.std(ddof=1))) ** 2 / tr_h.size
        entropy += 0.5 * N * N * math.log(TWOPI * math.e / (N * alpha))
    residual = float(abs(P - (entropy - energy)))
    energy_se = math.sqrt(energy_se_sq)
    # the identity is only checkable to Monte Carlo precision of the energy
    tol = 1e-2 * max(abs(float(P)), 1.0) + 3.0 * energy_se
    return {"pressure": float(P), "entropy": entropy, "energy_term": energy,
            "energy_stderr": energy_se, "residual": residual,
            "tolerance": tol, "ok": bool(residual <= tol), "N": N, "R": R}
