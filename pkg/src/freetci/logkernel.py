"""Analytic cell-pair integration of the logarithmic kernel.

Grid measures are piecewise-constant densities over cells.  The double
integral of ``log|x - y|`` (line) or ``log|2 sin((s - t)/2)|`` (circle) over a
pair of cells is evaluated in closed form through second antiderivatives of
the kernel, so the diagonal singularity costs no accuracy:

* line: ``H(t) = (t^2/2) log|t| - 3 t^2/4`` satisfies ``H'' = log|t|``;
* circle: ``S3(t) = sum_{k>=1} cos(kt)/k^3`` satisfies
  ``S3'' = log(2 sin(t/2))`` on ``(0, 2pi)`` and is the globally periodic
  second antiderivative, which is what makes wrap-around cell pairs exact.

``S3`` is evaluated by splitting off the endpoint logarithms analytically and
integrating the remaining analytic part with a Chebyshev expansion, pinned at
two exactly known values ``S3(pi) = -(3/4) zeta(3)`` and
``S3(pi/2) = -(3/32) zeta(3)``.
"""

import numpy as np
from numpy.polynomial.chebyshev import Chebyshev
from scipy.special import zeta

TWOPI = 2.0 * np.pi


def antideriv2_line(t):
    """Second antiderivative of log|t|, vanishing with its slope at 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    nz = t != 0.0
    tn = t[nz]
    out[nz] = 0.5 * tn * tn * (np.log(np.abs(tn)) - 1.5)
    return out


def _sin_over_poly(x):
    # sin(x) / (x (pi - x)) on [0, pi], stable at both endpoints
    x = np.asarray(x, dtype=float)
    lo = x < 0.5 * np.pi
    out = np.empty_like(x)
    out[lo] = np.sinc(x[lo] / np.pi) / (np.pi - x[lo])
    hi = ~lo
    out[hi] = np.sinc((np.pi - x[hi]) / np.pi) / x[hi]
    return out


def _smooth_part(t):
    # psi(t) = log(2 sin(t/2) / (t (2pi - t))), analytic on [0, 2pi]
    return np.log(0.5 * _sin_over_poly(0.5 * np.asarray(t, dtype=float)))


def _build_s3():
    psi2 = Chebyshev.interpolate(_smooth_part, 60, domain=[0.0, TWOPI]).integ(2)

    def raw(u):
        return antideriv2_line(u) + antideriv2_line(TWOPI - u) + psi2(u)

    z3 = float(zeta(3.0, 1.0))
    # pin the linear term left free by double integration
    t1, t2 = np.pi, 0.5 * np.pi
    v1, v2 = -0.75 * z3, -(3.0 / 32.0) * z3
    r1, r2 = raw(np.array([t1]))[0], raw(np.array([t2]))[0]
    slope = ((v1 - r1) - (v2 - r2)) / (t1 - t2)
    const = (v1 - r1) - slope * t1

    def s3(t):
        u = np.mod(np.asarray(t, dtype=float), TWOPI)
        return raw(u) + const + slope * u

    return s3


antideriv2_circle = _build_s3()


def interval_cell_edges(nodes):
    """Cell edges for strictly increasing interval nodes (midpoint rule,
    symmetric half-width end cells)."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size == 1:
        h = 1.0
        return np.array([nodes[0] - 0.5 * h, nodes[0] + 0.5 * h])
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    first = nodes[0] - 0.5 * (nodes[1] - nodes[0])
    last = nodes[-1] + 0.5 * (nodes[-1] - nodes[-2])
    return np.concatenate(([first], mids, [last]))


def circle_cell_edges(nodes):
    """Cell edges for strictly increasing angles in [0, 2pi), wrapping around."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size == 1:
        return np.array([nodes[0] - np.pi, nodes[0] + np.pi])
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    first = 0.5 * (nodes[0] + nodes[-1] - TWOPI)
    return np.concatenate(([first], mids, [first + TWOPI]))


def _pair_kernel(edges, antideriv2):
    left = edges[:-1]
    right = edges[1:]
    widths = right - left
    a = antideriv2(right[:, None] - left[None, :])
    a -= antideriv2(right[:, None] - right[None, :])
    a -= antideriv2(left[:, None] - left[None, :])
    a += antideriv2(left[:, None] - right[None, :])
    return a / (widths[:, None] * widths[None, :])


def log_kernel_interval(nodes):
    """Cell-averaged log|x - y| kernel matrix for interval nodes."""
    return _pair_kernel(interval_cell_edges(nodes), antideriv2_line)


def log_kernel_circle(nodes):
    """Cell-averaged log|2 sin((s - t)/2)| kernel matrix for circle nodes."""
    return _pair_kernel(circle_cell_edges(nodes), antideriv2_circle)


_CACHE = {}
_CACHE_CAP = 8


def cached_kernel(carrier, nodes):
    """Kernel matrix with a small FIFO cache keyed by the node set."""
    key = (carrier, nodes.tobytes())
    hit = _CACHE.get(key)
    if hit is not None:
        return hit
    if carrier == "interval":
        mat = log_kernel_interval(nodes)
    elif carrier == "circle":
        mat = log_kernel_circle(nodes)
    else:
        raise ValueError(f"unknown carrier: {carrier!r}")
    if len(_CACHE) >= _CACHE_CAP:
        _CACHE.pop(next(iter(_CACHE)))
    _CACHE[key] = mat
    return mat
