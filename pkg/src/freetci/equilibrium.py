"""Weighted equilibrium measures on a window or the circle.

Minimizes the weighted logarithmic energy

    E(mu) = - iint log|x - y| dmu dmu + int Q dmu

over probability measures on the grid.  E is convex (the negated kernel is
conditionally positive definite on mass-zero differences), so the
Euler-Lagrange conditions certify the unique minimizer:

    U(x) := 2 int log|x - y| dmu(y) - Q(x)  is constant on supp(mu),
    U(x) <= that constant elsewhere.

The solver runs accelerated projected gradient to locate the support, then
polishes with an active-set KKT solve, which brings the discrete optimality
residual down to rounding error; that sharpness is what the equality cases of
the transportation inequalities are checked against.
"""

import functools
import math

import numpy as np
import scipy.linalg

from . import logkernel, measures, potentials
from .errors import ConfigError, ConvergenceError, EnlargeWindowError

_ENTROPY_SHIFT = 0.75 + 0.5 * math.log(2.0 * math.pi)


def weighted_energy(mu, q):
    """``-log_energy(mu) + int Q dmu``."""
    return -measures.log_energy(mu) + potentials.potential_mean(q, mu)


def _project_simplex(v):
    # Euclidean projection onto the probability simplex
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _operator_norm(K):
    rng = np.random.default_rng(0)
    v = rng.standard_normal(K.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(40):
        w = K @ v
        lam = np.linalg.norm(w)
        if lam == 0.0:
            return 1.0
        v = w / lam
    return lam


def _fista(K, qv, max_iter, gap_tol):
    n = qv.size
    w = np.full(n, 1.0 / n)
    y = w.copy()
    t = 1.0
    L = 2.0 * _operator_norm(K) + 1e-12
    gap = np.inf
    for _ in range(max_iter):
        grad = qv - 2.0 * (K @ y)
        w_new = _project_simplex(y - grad / L)
        # restart on non-monotone step
        if (w_new - w) @ (qv - 2.0 * (K @ w)) > 0:
            y = w.copy()
            t = 1.0
            grad = qv - 2.0 * (K @ y)
            w_new = _project_simplex(y - grad / L)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = w_new + ((t - 1.0) / t_new) * (w_new - w)
        w, t = w_new, t_new
        grad = qv - 2.0 * (K @ w)
        gap = grad @ w - grad.min()
        if gap <= gap_tol:
            break
    return w, gap


def _kkt_polish(K, qv, w0, max_rounds=60):
    """Active-set refinement: solve the stationarity system exactly on the
    detected support, growing/shrinking the active set as needed."""
    n = qv.size
    active = w0 > max(1e-14, 1e-6 * w0.max())
    for _ in range(max_rounds):
        idx = np.flatnonzero(active)
        m = idx.size
        A = np.empty((m + 1, m + 1))
        A[:m, :m] = 2.0 * K[np.ix_(idx, idx)]
        A[:m, m] = 1.0
        A[m, :m] = 1.0
        A[m, m] = 0.0
        b = np.concatenate((qv[idx], [1.0]))
        try:
            sol = scipy.linalg.solve(A, b, assume_a="sym")
        except scipy.linalg.LinAlgError:
            return None
        wS, F = sol[:m], sol[m]
        if wS.min() < -1e-12:
            active[idx[wS < 0]] = False
            continue
        w = np.zeros(n)
        w[idx] = np.maximum(wS, 0.0)
        # off-support first-order condition: V = q - 2 K w >= F
        V = qv - 2.0 * (K @ w)
        viol = (~active) & (V < F - 1e-10 * max(1.0, abs(F)))
        if viol.any():
            # admit the worst violators and re-solve
            order = np.argsort(V - F)
            added = 0
            for j in order:
                if viol[j]:
                    active[j] = True
                    added += 1
                    if added >= 32:
                        break
            continue
        return w / w.sum()
    return None


def _grid_nodes(q, R, grid_size):
    if q.carrier == "line":
        if R is None or R <= 0:
            raise ConfigError("line equilibrium problems need a window radius R > 0")
        edges = np.linspace(-R, R, grid_size + 1)
        return 0.5 * (edges[1:] + edges[:-1]), "interval"
    nodes = (np.arange(grid_size) + 0.5) * 2.0 * np.pi / grid_size
    return nodes, "circle"


@functools.lru_cache(maxsize=32)
def _solve_cached(q, R, grid_size, max_iter, tol, refine, boundary_tol):
    if q.carrier == "line" and not potentials.growth_ok(q):
        raise ConfigError(
            "potential does not confine: need even degree >= 2 with a "
            "positive leading coefficient")
    nodes, carrier = _grid_nodes(q, R, grid_size)
    K = logkernel.cached_kernel(carrier, nodes)
    if carrier == "interval":
        edges = logkernel.interval_cell_edges(nodes)
    else:
        edges = logkernel.circle_cell_edges(nodes)
    qv = potentials.cell_average(q, edges)

    scale = max(1.0, np.abs(qv).max())
    w, gap = _fista(K, qv, max_iter, gap_tol=tol * scale)
    polished = _kkt_polish(K, qv, w) if refine else None
    if polished is not None:
        w = polished
    elif gap > 100.0 * tol * scale:
        raise ConvergenceError(
            f"equilibrium solver stalled: optimality gap {gap:.3e} after "
            f"{max_iter} iterations", residual=gap)

    if carrier == "interval":
        edge_mass = w[0] + w[-1]
        if edge_mass > boundary_tol:
            raise EnlargeWindowError(
                f"equilibrium mass {edge_mass:.3e} accumulates at the window "
                f"edge: enlarge R (currently {R})")
    Rout = R if carrier == "interval" else None
    mu = measures.GridMeasure(carrier, nodes, w / w.sum(), R=Rout)
    grad = qv - 2.0 * (K @ w)
    info = {"fw_gap": float(grad @ w - grad.min()),
            "energy": float(-(w @ K @ w) + qv @ w),
            "polished": polished is not None}
    return mu, info


def solve_equilibrium(q, R=None, grid_size=measures.DEFAULT_GRID, max_iter=4000,
                      tol=1e-7, refine=True, boundary_tol=1e-3, return_info=False):
    """Equilibrium measure of the potential Q.

    Parameters
    ----------
    q : Potential
        Certified convex potential; line potentials must confine.
    R : float, optional
        Window half-width (line only); must exceed the support radius, else
        an :class:`EnlargeWindowError` is raised.
    grid_size : int
        Number of grid cells.
    refine : bool
        Polish the projected-gradient solution with an exact active-set
        solve (default, strongly recommended).

    Returns
    -------
    GridMeasure, or (GridMeasure, dict) with ``return_info=True``.
    """
    if q.carrier == "line" and R is None:
        raise ConfigError("line equilibrium problems need a window radius R > 0")
    mu, info = _solve_cached(q, None if q.carrier == "circle" else float(R),
                             int(grid_size), int(max_iter), float(tol),
                             bool(refine), float(boundary_tol))
    return (mu, dict(info)) if return_info else mu


def solve_equilibrium_auto(q, grid_size=measures.DEFAULT_GRID, R0=3.0,
                           retries=5, **kw):
    """Line equilibrium with automatic window enlargement; circle potentials
    are passed straight through."""
    if q.carrier == "circle":
        return solve_equilibrium(q, grid_size=grid_size, **kw)
    R = R0
    for _ in range(retries):
        try:
            return solve_equilibrium(q, R=R, grid_size=grid_size, **kw)
        except EnlargeWindowError:
            R *= 1.5
    raise EnlargeWindowError(f"no admissible window found up to R = {R/1.5}")


def euler_lagrange_residual(mu, q, support_threshold=None):
    """Optimality certificate for a candidate equilibrium measure.

    Returns a dict with the effective constant F (median of U over the
    numerical support), ``on_support`` = max |U - F| there, and
    ``off_support`` = max(U - F, 0) elsewhere (U must not exceed F off the
    support at a minimizer).
    """
    K = logkernel.cached_kernel(mu.carrier, mu.nodes)
    qv = potentials.cell_average(q, mu.edges)
    U = 2.0 * (K @ mu.weights) - qv
    if support_threshold is None:
        support_threshold = 1e-4 * mu.weights.max()
    on = mu.weights > support_threshold
    if not on.any():
        raise ConfigError("support threshold leaves no support nodes")
    F = float(np.median(U[on]))
    on_res = float(np.abs(U[on] - F).max())
    off_res = float(max(0.0, (U[~on] - F).max())) if (~on).any() else 0.0
    return {"constant": F, "on_support": on_res, "off_support": off_res,
            "support_fraction": float(on.mean())}


def _b_term_line(q, grid_size):
    mu = solve_equilibrium_auto(q, grid_size=grid_size)
    sigma = measures.log_energy(mu)
    return sigma - potentials.potential_mean(q, mu) + _ENTROPY_SHIFT


def b_constant_line(qs, grid_size=2000):
    """Additive constant of the line transportation inequality for a tuple of
    potentials: ``sum_i [Sigma(mu_i) - mu_i(Q_i) + 3/4 + (1/2) log 2pi]``.

    fsum keeps the result exactly permutation invariant.
    """
    if isinstance(qs, potentials.Potential):
        qs = (qs,)
    for q in qs:
        if q.carrier != "line":
            raise ConfigError("b_constant_line takes line potentials")
    return math.fsum(_b_term_line(q, grid_size) for q in qs)


def b_constant_circle(qs, grid_size=measures.DEFAULT_GRID):
    """Additive constant of the circle inequality:
    ``sum_i [Sigma(mu_i) - mu_i(Q_i)]`` over equilibrium measures."""
    if isinstance(qs, potentials.Potential):
        qs = (qs,)
    terms = []
    for q in qs:
        if q.carrier != "circle":
            raise ConfigError("b_constant_circle takes circle potentials")
        mu = solve_equilibrium(q, grid_size=grid_size)
        terms.append(measures.log_energy(mu) - potentials.potential_mean(q, mu))
    return math.fsum(terms)
