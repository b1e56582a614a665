"""Confining potentials on the line and the circle.

Line potentials are real polynomials ``Q(x) = sum c_k x^k`` (ascending
coefficients); circle potentials are real trigonometric polynomials
``Q(t) = c + sum a_k cos kt + b_k sin kt`` acting on eigenangles.  Each
potential declares a convexity parameter rho with ``Q'' >= rho`` on its
carrier; rho enters the transportation-inequality constants, so it is a
certified claim, not a hint (see :func:`verify_rho_convexity`).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from . import _toml
from .errors import ConfigError


@dataclass(frozen=True)
class Potential:
    """A confining potential; build with :func:`line_potential` or
    :func:`circle_potential`."""

    carrier: str
    coefficients: tuple = ()
    cos_coefficients: tuple = ()
    sin_coefficients: tuple = ()
    constant: float = 0.0
    rho: float = 0.0
    label: str = field(default="", compare=False)

    def __call__(self, x):
        return evaluate(self, x)


def _second_derivative_min_line(coeffs):
    # exact global minimum of Q'' for a polynomial Q
    d2 = P.polyder(np.asarray(coeffs, dtype=float), 2)
    if d2.size == 0:
        return 0.0
    d2 = np.trim_zeros(d2, "b")
    if d2.size <= 1:
        return float(d2[0]) if d2.size else 0.0
    if d2.size % 2 == 0 or d2[-1] < 0:
        return -np.inf  # odd degree or negative leading term: unbounded below
    crit = P.polyroots(P.polyder(d2))
    crit = crit[np.abs(crit.imag) < 1e-9].real
    vals = P.polyval(crit, d2) if crit.size else np.array([])
    return float(min(vals.min() if vals.size else np.inf, np.inf))


def line_potential(coefficients, rho=None, label=""):
    """Polynomial potential on the line.

    With ``rho=None`` the largest valid convexity parameter
    ``rho = min Q''`` is computed exactly from the polynomial; rho = 0
    potentials (e.g. quartics flat at the origin) are accepted with a warning
    since the convexity-sensitive inequality constants degenerate there.
    """
    coeffs = tuple(float(c) for c in coefficients)
    if not coeffs:
        raise ConfigError("a line potential needs at least one coefficient")
    if rho is None:
        rho = _second_derivative_min_line(coeffs)
        if not np.isfinite(rho):
            raise ConfigError("Q'' is unbounded below; potential is not rho-convex")
    rho = float(rho)
    if rho < 0:
        raise ConfigError(f"line potentials must be convex: rho = {rho} < 0")
    if rho == 0.0:
        warnings.warn("rho = 0 potential: transportation constants degenerate "
                      "at this boundary case", stacklevel=2)
    return Potential("line", coefficients=coeffs, rho=rho, label=label)


def circle_potential(cos_coefficients=(), sin_coefficients=(), constant=0.0,
                     rho=None, label=""):
    """Trigonometric polynomial potential on eigenangles.

    rho is the lower bound of the periodic second derivative (typically
    nonpositive for nonconstant potentials); ``rho=None`` samples it.
    """
    a = tuple(float(c) for c in cos_coefficients)
    b = tuple(float(c) for c in sin_coefficients)
    q = Potential("circle", cos_coefficients=a, sin_coefficients=b,
                  constant=float(constant), rho=0.0, label=label)
    if rho is None:
        t = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
        d2 = np.zeros_like(t)
        for k, ak in enumerate(a, start=1):
            d2 -= ak * k * k * np.cos(k * t)
        for k, bk in enumerate(b, start=1):
            d2 -= bk * k * k * np.sin(k * t)
        rho = float(d2.min()) if (a or b) else 0.0
    return Potential("circle", cos_coefficients=a, sin_coefficients=b,
                     constant=float(constant), rho=float(rho), label=label)


def evaluate(q, x):
    """Q at points x (line) or angles t (circle)."""
    x = np.asarray(x, dtype=float)
    if q.carrier == "line":
        return P.polyval(x, np.asarray(q.coefficients))
    out = np.full_like(x, q.constant)
    for k, ak in enumerate(q.cos_coefficients, start=1):
        out += ak * np.cos(k * x)
    for k, bk in enumerate(q.sin_coefficients, start=1):
        out += bk * np.sin(k * x)
    return out


def cell_average(q, edges):
    """Exact averages of Q over the cells bounded by ``edges``."""
    edges = np.asarray(edges, dtype=float)
    widths = np.diff(edges)
    if q.carrier == "line":
        anti = P.polyint(np.asarray(q.coefficients))
        vals = P.polyval(edges, anti)
    else:
        vals = q.constant * edges.copy()
        for k, ak in enumerate(q.cos_coefficients, start=1):
            vals += ak * np.sin(k * edges) / k
        for k, bk in enumerate(q.sin_coefficients, start=1):
            vals -= bk * np.cos(k * edges) / k
    return np.diff(vals) / widths


def potential_mean(q, mu):
    """``int Q dmu`` using exact cell averages (consistent with the energy
    functional on grid measures)."""
    expected = "line" if mu.carrier == "interval" else "circle"
    if q.carrier != expected:
        raise ConfigError(f"potential carrier {q.carrier!r} does not match "
                          f"measure carrier {mu.carrier!r}")
    return float(mu.weights @ cell_average(q, mu.edges))


def verify_rho_convexity(q, grid):
    """Certify ``Q'' >= rho`` by sampled second differences on a grid.

    Returns ``(ok, worst)`` where ``worst`` is the minimum of the second
    difference quotients of ``Q - (rho/2) x^2``; ok means worst >= -1e-9.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size < 3 or not np.all(np.diff(grid) > 0):
        raise ConfigError("need at least 3 strictly increasing grid points")
    f = evaluate(q, grid) - 0.5 * q.rho * grid ** 2
    x0, x1, x2 = grid[:-2], grid[1:-1], grid[2:]
    quot = 2.0 * ((f[2:] - f[1:-1]) / (x2 - x1) - (f[1:-1] - f[:-2]) / (x1 - x0)) / (x2 - x0)
    worst = float(quot.min())
    return worst >= -1e-9, worst


def strip_constant(q):
    """Split Q = Q0 + c with Q0 having zero constant term; returns (Q0, c)."""
    if q.carrier == "line":
        c = q.coefficients[0]
        q0 = Potential("line", coefficients=(0.0,) + q.coefficients[1:],
                       rho=q.rho, label=q.label)
    else:
        c = q.constant
        q0 = Potential("circle", cos_coefficients=q.cos_coefficients,
                       sin_coefficients=q.sin_coefficients, constant=0.0,
                       rho=q.rho, label=q.label)
    return q0, float(c)


def is_quadratic(q):
    """True for line potentials of exact degree 2 (positive leading term)."""
    if q.carrier != "line":
        return False
    c = np.asarray(q.coefficients)
    return c.size >= 3 and c[2] > 0 and (c.size == 3 or not np.any(c[3:]))


def growth_ok(q):
    """Confinement check for equilibrium problems on the line: even degree
    at least 2 with positive leading coefficient."""
    if q.carrier != "line":
        return True
    c = np.trim_zeros(np.asarray(q.coefficients, dtype=float), "b")
    deg = c.size - 1
    return deg >= 2 and deg % 2 == 0 and c[-1] > 0


def to_toml(q):
    """Serialize to a ``[potential]`` TOML block."""
    body = {"carrier": q.carrier, "rho": q.rho}
    if q.label:
        body["label"] = q.label
    if q.carrier == "line":
        body["coefficients"] = list(q.coefficients)
    else:
        body["constant"] = q.constant
        body["cos"] = list(q.cos_coefficients)
        body["sin"] = list(q.sin_coefficients)
    return _toml.dumps({"potential": body})


def from_toml_dict(data):
    """Build a potential from a parsed ``[potential]`` block."""
    body = data.get("potential", data)
    carrier = body.get("carrier")
    rho = body.get("rho")
    label = body.get("label", "")
    if carrier == "line":
        return line_potential(body.get("coefficients", ()), rho=rho, label=label)
    if carrier == "circle":
        return circle_potential(body.get("cos", ()), body.get("sin", ()),
                                constant=body.get("constant", 0.0), rho=rho,
                                label=label)
    raise ConfigError(f"potential block needs carrier 'line' or 'circle', got {carrier!r}")


def from_toml(text):
    return from_toml_dict(_toml.loads(text))


def builtin(name):
    """Named potentials used throughout the examples and checks."""
    table = {
        "x^2/2": lambda: line_potential((0.0, 0.0, 0.5), label="x^2/2"),
        "x^2": lambda: line_potential((0.0, 0.0, 1.0), label="x^2"),
        "x^4/4": lambda: line_potential((0.0, 0.0, 0.0, 0.0, 0.25), label="x^4/4"),
        "zero": lambda: circle_potential(label="zero"),
        "2cos": lambda: circle_potential(cos_coefficients=(2.0,), label="2cos"),
    }
    try:
        make = table[name]
    except KeyError:
        raise ConfigError(f"unknown builtin potential {name!r}; "
                          f"choose from {sorted(table)}") from None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return make()
