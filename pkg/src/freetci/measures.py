"""Grid and empirical measures on an interval or the unit circle.

A :class:`GridMeasure` is a probability measure represented as a
piecewise-constant density: strictly increasing nodes are cell centers (cells
bounded by midpoints, symmetric half-width end cells) and weights are cell
masses.  All integral functionals (moments, logarithmic energy, potential
means) integrate the density exactly over each cell, so the representation has
one consistent meaning everywhere.
"""

import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np

from . import logkernel
from .errors import ConfigError, SingularMeasureWarning

DEFAULT_GRID = 1000
MAX_MOMENT_DEGREE = 16
TWOPI = 2.0 * np.pi


@dataclass(frozen=True)
class GridMeasure:
    """Probability measure with piecewise-constant density.

    Parameters
    ----------
    carrier : {'interval', 'circle'}
        Underlying space: a compact interval or angles on [0, 2pi).
    nodes : ndarray
        Strictly increasing cell centers.
    weights : ndarray
        Nonnegative cell masses summing to 1 (within 1e-12).
    R : float or None
        Half-width of the interval window; None on the circle.
    """

    carrier: str
    nodes: np.ndarray
    weights: np.ndarray
    R: float | None = None

    def __post_init__(self):
        if self.carrier not in ("interval", "circle"):
            raise ConfigError(f"unknown carrier: {self.carrier!r}")
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise ConfigError("nodes and weights must be matching 1-d arrays")
        if not np.all(np.diff(nodes) > 0):
            raise ConfigError("nodes must be strictly increasing")
        if np.any(weights < 0):
            raise ConfigError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ConfigError(f"weights sum to {weights.sum()!r}, not 1")
        if self.carrier == "circle":
            if self.R is not None:
                raise ConfigError("circle measures carry no window radius R")
            if nodes[0] < 0.0 or nodes[-1] >= TWOPI:
                raise ConfigError("circle nodes must lie in [0, 2pi)")
            R = None
        else:
            edges = logkernel.interval_cell_edges(nodes)
            R = float(self.R) if self.R is not None else float(
                max(abs(edges[0]), abs(edges[-1])))
            if np.abs(nodes).max() > R:
                raise ConfigError("interval nodes must lie within [-R, R]")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "R", R)

    @property
    def edges(self):
        if self.carrier == "interval":
            return logkernel.interval_cell_edges(self.nodes)
        return logkernel.circle_cell_edges(self.nodes)

    def mean(self):
        return float(self.weights @ self.nodes)


def _normalized(weights):
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if total <= 0:
        raise ConfigError("total mass must be positive")
    return weights / total


def _from_cdf(cdf, a, b, grid_size, R=None):
    edges = np.linspace(a, b, grid_size + 1)
    nodes = 0.5 * (edges[1:] + edges[:-1])
    weights = _normalized(np.diff(cdf(edges)))
    return GridMeasure("interval", nodes, weights, R=R)


def semicircle_measure(grid_size=DEFAULT_GRID, center=0.0, radius=2.0, R=None):
    """Semicircular distribution of support radius ``radius`` centered at
    ``center``; the default is the standard semicircle on [-2, 2]."""
    if radius <= 0:
        raise ConfigError("radius must be positive")

    def cdf(x):
        u = np.clip((np.asarray(x, dtype=float) - center) / radius, -1.0, 1.0)
        return 0.5 + (u * np.sqrt(1.0 - u * u) + np.arcsin(u)) / np.pi

    return _from_cdf(cdf, center - radius, center + radius, grid_size, R=R)


def uniform_interval_measure(a=-1.0, b=1.0, grid_size=DEFAULT_GRID, R=None):
    """Uniform distribution on [a, b]."""
    if not b > a:
        raise ConfigError("need b > a")
    return _from_cdf(lambda x: (np.asarray(x, dtype=float) - a) / (b - a),
                     a, b, grid_size, R=R)


def arcsine_measure(radius=2.0, grid_size=DEFAULT_GRID, center=0.0, R=None):
    """Arcsine distribution on [center - radius, center + radius]."""
    if radius <= 0:
        raise ConfigError("radius must be positive")

    def cdf(x):
        u = np.clip((np.asarray(x, dtype=float) - center) / radius, -1.0, 1.0)
        return 0.5 + np.arcsin(u) / np.pi

    return _from_cdf(cdf, center - radius, center + radius, grid_size, R=R)


def measure_from_density(density, a, b, grid_size=DEFAULT_GRID, subcells=8, R=None):
    """Interval measure from a density callable, integrated by midpoint
    subsampling inside each cell."""
    edges = np.linspace(a, b, grid_size + 1)
    nodes = 0.5 * (edges[1:] + edges[:-1])
    h = (b - a) / grid_size
    offs = (np.arange(subcells) + 0.5) / subcells * h
    samples = density(edges[:-1, None] + offs[None, :])
    weights = _normalized(np.mean(samples, axis=1) * h)
    return GridMeasure("interval", nodes, weights, R=R)


def uniform_circle_measure(grid_size=DEFAULT_GRID):
    """Normalized arclength on the circle."""
    nodes = (np.arange(grid_size) + 0.5) * TWOPI / grid_size
    return GridMeasure("circle", nodes, np.full(grid_size, 1.0 / grid_size))


def trig_polynomial_measure(cos_coeffs=(), sin_coeffs=(), grid_size=DEFAULT_GRID):
    """Circle measure with density (1/2pi)(1 + sum a_k cos kt + b_k sin kt).

    Cell masses are the exact integrals of the density.  Raises if the density
    dips below zero anywhere.
    """
    a = np.asarray(cos_coeffs, dtype=float)
    b = np.asarray(sin_coeffs, dtype=float)
    fine = np.linspace(0.0, TWOPI, 4096, endpoint=False)
    dens = np.ones_like(fine)
    for k, ak in enumerate(a, start=1):
        dens += ak * np.cos(k * fine)
    for k, bk in enumerate(b, start=1):
        dens += bk * np.sin(k * fine)
    if dens.min() < -1e-12:
        raise ConfigError(f"trigonometric density is negative (min {dens.min():.3e})")
    nodes = (np.arange(grid_size) + 0.5) * TWOPI / grid_size
    edges = np.concatenate((nodes - 0.5 * TWOPI / grid_size,
                            [nodes[-1] + 0.5 * TWOPI / grid_size]))

    def antideriv(t):
        out = t.astype(float).copy()
        for k, ak in enumerate(a, start=1):
            out += ak * np.sin(k * t) / k
        for k, bk in enumerate(b, start=1):
            out -= bk * np.cos(k * t) / k
        return out / TWOPI

    weights = _normalized(np.diff(antideriv(edges)))
    return GridMeasure("circle", nodes, weights)


def moment(mu, k, max_degree=MAX_MOMENT_DEGREE):
    """k-th moment: ``int x^k dmu`` on the interval (float) or
    ``int e^{i k t} dmu`` on the circle (complex).

    The cell integrals are exact for the piecewise-constant density.
    """
    k = int(k)
    if abs(k) > max_degree:
        raise ConfigError(
            f"moment degree {k} exceeds the cap {max_degree}; "
            "pass max_degree explicitly to go higher")
    edges = mu.edges
    left, right = edges[:-1], edges[1:]
    widths = right - left
    if mu.carrier == "interval":
        if k < 0:
            raise ConfigError("negative moments are not defined on the interval")
        if k == 0:
            return float(mu.weights.sum())
        cell = (right ** (k + 1) - left ** (k + 1)) / ((k + 1) * widths)
        return float(mu.weights @ cell)
    if k == 0:
        return complex(mu.weights.sum())
    mid = 0.5 * (left + right)
    cell = np.exp(1j * k * mid) * np.sinc(k * widths / TWOPI)
    return complex(mu.weights @ cell)


def log_energy(mu):
    """Logarithmic energy ``iint log|x - y| dmu dmu`` (grid-regularized).

    On the circle the kernel is ``log|2 sin((s - t)/2)|``, i.e. the chordal
    distance between the corresponding unit-modulus points.
    """
    if mu.weights.max() >= 0.5:
        warnings.warn(
            "measure concentrates >= 0.5 mass at a single node; the "
            "logarithmic energy is grid-regularized and resolution-dependent",
            SingularMeasureWarning, stacklevel=2)
    K = logkernel.cached_kernel(mu.carrier, mu.nodes)
    return float(mu.weights @ K @ mu.weights)


_ENTROPY_SHIFT = 0.75 + 0.5 * np.log(TWOPI)


def free_entropy_1var(mu):
    """Free entropy of a single self-adjoint variable:
    ``log_energy + 3/4 + (1/2) log 2pi``."""
    if mu.carrier != "interval":
        raise ConfigError(
            "free_entropy_1var applies to interval measures only; for circle "
            "measures the logarithmic energy log_energy(mu) is the relevant "
            "quantity")
    return log_energy(mu) + _ENTROPY_SHIFT


def _support_cdf_breakpoints(mu):
    mask = mu.weights > 0
    if not mask.any():
        raise ConfigError("measure has empty support")
    xs = mu.nodes[mask]
    ws = mu.weights[mask]
    Fs = np.cumsum(ws) - 0.5 * ws
    return xs, Fs


def quantile(mu, p):
    """Quantile function: piecewise-linear inverse of the mid-cell CDF,
    clamped to the support hull."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or np.any(p > 1):
        raise ConfigError("quantile probabilities must lie in [0, 1]")
    xs, Fs = _support_cdf_breakpoints(mu)
    out = np.interp(p, Fs, xs)
    return float(out) if out.ndim == 0 else out


def cdf(mu, x):
    """Mid-cell CDF evaluated at x (piecewise linear, 0/1 outside support)."""
    xs, Fs = _support_cdf_breakpoints(mu)
    out = np.interp(np.asarray(x, dtype=float), xs, Fs, left=0.0, right=1.0)
    return float(out) if out.ndim == 0 else out


def ks_statistic(values, mu):
    """Kolmogorov-Smirnov distance between a sample and a grid measure."""
    atoms = np.sort(np.asarray(values, dtype=float).ravel())
    n = atoms.size
    F = cdf(mu, atoms)
    upper = np.abs(np.arange(1, n + 1) / n - F)
    lower = np.abs(F - np.arange(0, n) / n)
    return float(max(upper.max(), lower.max()))


def rebin(mu, new_nodes):
    """Re-express a measure on a different node set, conserving mass by
    exact cell-overlap integration of the piecewise-constant density."""
    new_nodes = np.asarray(new_nodes, dtype=float)
    src_edges = mu.edges
    if mu.carrier == "interval":
        dst_edges = logkernel.interval_cell_edges(new_nodes)
        segs = [(src_edges, mu.weights)]
        R = max(abs(dst_edges[0]), abs(dst_edges[-1]), mu.R or 0.0)
    else:
        dst_edges = logkernel.circle_cell_edges(new_nodes)
        segs = [(src_edges + s, mu.weights) for s in (-TWOPI, 0.0, TWOPI)]
        R = None
    out = np.zeros(new_nodes.size)
    for edges, weights in segs:
        dens = weights / np.diff(edges)
        for j in range(weights.size):
            lo, hi = edges[j], edges[j + 1]
            a = np.clip(dst_edges, lo, hi)
            out += dens[j] * np.diff(a)
    # mass falling outside the destination window is an error, not a silent drop
    lost = 1.0 - out.sum()
    if abs(lost) > 1e-9:
        raise ConfigError(f"rebin loses {lost:.2e} mass; destination grid too small")
    return GridMeasure(mu.carrier, new_nodes, _normalized(out), R=R)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniform atoms, e.g. an eigenvalue or eigenangle sample."""

    carrier: str
    atoms: np.ndarray
    R: float | None = None

    def __post_init__(self):
        atoms = np.sort(np.asarray(self.atoms, dtype=float).ravel())
        if atoms.size == 0:
            raise ConfigError("empirical measure needs at least one atom")
        if self.carrier == "interval":
            if self.R is not None and np.abs(atoms).max() > self.R + 1e-12:
                raise ConfigError("atoms exceed the window [-R, R]; retract first")
        elif self.carrier == "circle":
            atoms = np.mod(atoms, TWOPI)
            atoms.sort()
        else:
            raise ConfigError(f"unknown carrier: {self.carrier!r}")
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)


def save_measure(mu, csv_path, header_path=None):
    """Write (node, weight) CSV rows plus a JSON header; round-trips bit-exactly."""
    header_path = header_path or str(csv_path) + ".json"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "weight"])
        for x, w in zip(mu.nodes, mu.weights):
            writer.writerow([repr(float(x)), repr(float(w))])
    header = {"carrier": mu.carrier, "R": mu.R}
    with open(header_path, "w", encoding="utf-8") as fh:
        json.dump(header, fh, sort_keys=True)
        fh.write("\n")


def load_measure(csv_path, header_path=None):
    """Inverse of :func:`save_measure`."""
    header_path = header_path or str(csv_path) + ".json"
    try:
        with open(header_path, "r", encoding="utf-8") as fh:
            header = json.load(fh)
        with open(csv_path, "r", newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load measure: {exc}") from exc
    if not rows or rows[0] != ["node", "weight"]:
        raise ConfigError(f"{csv_path}: expected a 'node,weight' header row")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    return GridMeasure(header["carrier"], data[:, 0], data[:, 1], R=header.get("R"))
