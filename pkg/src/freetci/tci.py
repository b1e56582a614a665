"""Transportation-cost inequality reports.

Each verifier assembles the two sides of one inequality in its computable
specialization, attaches honest error bars, and classifies the slack
``rhs - lhs``:

* ``holds``               slack clearly positive,
* ``holds_at_equality``   |slack| within the combined error,
* ``violated_within_error``  nominally negative but inside the extra
  absolute tolerance band,
* ``violated``            negative beyond every allowance (a true theorem
  never produces this; it means an implementation bug),
* ``inconclusive-upper-bound``  the left side is only an upper bound and it
  exceeds the right side, so nothing can be concluded.

Error bars come from two-resolution differences for the entropy-type
quadratures, exact cell widths for the quantile-coupling distances, and
sample standard errors for anything Monte Carlo.  Closed-form Gaussian
comparisons carry zero error.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import equilibrium, measures, potentials, random_matrices, transport
from .errors import ConfigError, DiagnosticError

ABS_TOL = 1e-6


@dataclass(frozen=True)
class TCIReport:
    """One verified inequality instance."""

    inequality: str
    lhs: float
    rhs: float
    lhs_error: float
    rhs_error: float
    verdict: str
    params: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def combined_error(self):
        return self.lhs_error + self.rhs_error + ABS_TOL

    def to_json_dict(self):
        return {"inequality": self.inequality, "lhs": self.lhs,
                "rhs": self.rhs, "slack": self.slack,
                "lhs_error": self.lhs_error, "rhs_error": self.rhs_error,
                "combined_error": self.combined_error,
                "verdict": self.verdict, "params": dict(self.params),
                "notes": dict(self.notes)}


def _verdict(lhs, rhs, lhs_error, rhs_error, upper_bound_only=False):
    C = lhs_error + rhs_error + ABS_TOL
    slack = rhs - lhs
    if upper_bound_only:
        return "holds" if slack >= -C else "inconclusive-upper-bound"
    if abs(slack) <= C:
        return "holds_at_equality"
    if slack > 0.0:
        return "holds"
    if slack >= -(C + ABS_TOL):
        return "violated_within_error"
    return "violated"


def _report(inequality, lhs, rhs, lhs_error, rhs_error, params, notes=None,
            upper_bound_only=False):
    return TCIReport(inequality, float(lhs), float(rhs), float(lhs_error),
                     float(rhs_error),
                     _verdict(lhs, rhs, lhs_error, rhs_error,
                              upper_bound_only=upper_bound_only),
                     params, notes or {})


def _potential_id(q):
    if q.label:
        return q.label
    if q.carrier == "line":
        return "line" + repr(list(q.coefficients))
    return (f"circle[cos={list(q.cos_coefficients)}, "
            f"sin={list(q.sin_coefficients)}, c={q.constant}]")


def _max_cell(mu):
    return float(np.diff(mu.edges).max())


def _coarsen(mu):
    """Half-resolution copy by exact pairwise cell merging (no mass moves)."""
    idx = np.arange(0, mu.weights.size, 2)
    w = np.add.reduceat(mu.weights, idx)
    lo = mu.edges[idx]
    hi = mu.edges[np.minimum(idx + 2, mu.weights.size)]
    nodes = 0.5 * (lo + hi)
    if mu.carrier == "circle":
        nodes = np.mod(nodes, 2.0 * math.pi)
        order = np.argsort(nodes)
        nodes, w = nodes[order], w[order]
    return measures.GridMeasure(mu.carrier, nodes, w, R=mu.R)


def _entropy_with_error(mu):
    """Free entropy (interval) or logarithmic energy (circle) together with
    a two-resolution error estimate."""
    fn = (measures.free_entropy_1var if mu.carrier == "interval"
          else measures.log_energy)
    val = fn(mu)
    return val, abs(val - fn(_coarsen(mu))) + 1e-8


@lru_cache(maxsize=64)
def _b_line(q):
    b = equilibrium.b_constant_line(q, grid_size=2000)
    return b, abs(b - equilibrium.b_constant_line(q, grid_size=1000)) + 1e-8


@lru_cache(maxsize=64)
def _b_circle(q):
    b = equilibrium.b_constant_circle(q)
    return b, abs(b - equilibrium.b_constant_circle(q, grid_size=500)) + 1e-8


def _sqrt_with_error(scale, rad, rad_error):
    """sqrt(scale * rad) with the radicand nonnegativity check and the error
    propagated through the square root without dividing by small values."""
    if rad < -(rad_error + ABS_TOL):
        raise DiagnosticError(
            f"negative inequality radicand {rad:.3e} beyond tolerance "
            f"{rad_error + ABS_TOL:.1e}: the additive constant is "
            "inconsistent with the entropy side")
    rad = max(rad, 0.0)
    val = math.sqrt(scale * rad)
    hi = math.sqrt(scale * (rad + rad_error))
    lo = math.sqrt(scale * max(rad - rad_error, 0.0))
    return val, max(hi - val, val - lo)


def verify_free_tci_line(mu, q, rho=None, grid_size=1000, measure_label=""):
    """One-variable transportation inequality on the line:
    ``W2(mu, mu_Q) <= sqrt((2/rho)(-chi(mu) + mu(Q) + B_Q))``.

    rho defaults to the potential's convexity parameter and must be
    positive.  The additive constant B_Q makes the right side vanish at the
    equilibrium measure, so a negative radicand beyond tolerance raises
    instead of being clamped silently.
    """
    if mu.carrier != "interval" or q.carrier != "line":
        raise ConfigError("verify_free_tci_line needs an interval measure "
                          "and a line potential")
    rho = q.rho if rho is None else float(rho)
    if rho <= 0.0:
        raise ConfigError("the line inequality constant 2/rho needs rho > 0")
    mu_q = equilibrium.solve_equilibrium_auto(q, grid_size=grid_size)
    lhs = transport.wasserstein_1d(mu, mu_q, p=2)
    lhs_error = 0.5 * (_max_cell(mu) + _max_cell(mu_q))
    chi, chi_error = _entropy_with_error(mu)
    b, b_error = _b_line(q)
    rad = -chi + potentials.potential_mean(q, mu) + b
    rhs, rhs_error = _sqrt_with_error(2.0 / rho, rad, chi_error + b_error)
    params = {"rho": rho, "potential": _potential_id(q),
              "measure": measure_label or f"grid[{mu.nodes.size}]",
              "grid_size": int(mu.nodes.size), "R": mu_q.R}
    return _report("free-tci-line", lhs, rhs, lhs_error, rhs_error, params,
                   notes={"radicand": rad, "b_constant": b})


def verify_free_tci_circle(mu, q, rho=None, grid_size=1000, lp_grid=256,
                           measure_label=""):
    """One-variable inequality on the circle with chordal transport cost:
    ``W2(mu, mu_Q) <= sqrt((4/(1+2 rho))(-Sigma(mu) + mu(Q) + B_Q))``.

    rho may be negative but needs ``1 + 2 rho > 0``; with Q = 0 this reduces
    to ``W2(mu, uniform) <= 2 sqrt(-Sigma(mu))``.
    """
    if mu.carrier != "circle" or q.carrier != "circle":
        raise ConfigError("verify_free_tci_circle needs circle carriers")
    rho = q.rho if rho is None else float(rho)
    if 1.0 + 2.0 * rho <= 0.0:
        raise ConfigError("the circle inequality needs 1 + 2 rho > 0")
    mu_q = equilibrium.solve_equilibrium(q, grid_size=grid_size)
    lhs = transport.wasserstein_circle_chordal(mu, mu_q, lp_grid=lp_grid)
    lhs_error = (0.5 * (_max_cell(mu) + _max_cell(mu_q))
                 + 2.0 * math.pi / lp_grid)
    sigma, sigma_error = _entropy_with_error(mu)
    b, b_error = _b_circle(q)
    rad = -sigma + potentials.potential_mean(q, mu) + b
    rhs, rhs_error = _sqrt_with_error(4.0 / (1.0 + 2.0 * rho), rad,
                                      sigma_error + b_error)
    params = {"rho": rho, "potential": _potential_id(q),
              "measure": measure_label or f"grid[{mu.nodes.size}]",
              "grid_size": int(mu.nodes.size), "lp_grid": int(lp_grid)}
    return _report("free-tci-circle", lhs, rhs, lhs_error, rhs_error, params,
                   notes={"radicand": rad, "b_constant": b})


@dataclass(frozen=True)
class GaussianMatrixLaw:
    """Comparison law for the matrix inequality: per-letter mean shifts
    (scalar c meaning c times the identity, or a full Hermitian matrix) and
    entry-covariance scale factors relative to the Gibbs base law."""

    mean_shifts: tuple = ()
    cov_scales: tuple = ()


def _shift_hs_sq(shift, N):
    if np.isscalar(shift):
        return float(shift) ** 2 * N
    M = np.asarray(shift)
    if M.shape != (N, N):
        raise ConfigError(f"mean shift must be scalar or {N} x {N}")
    random_matrices.validate_matrix(M, "selfadjoint")
    return float(np.abs(M * M.conj()).sum().real)


def verify_matrix_tci(qs, N, law, rho=None):
    """Matrix-level inequality ``W2(law, gibbs(Q)) <=
    sqrt((2/(rho N)) KL(law | gibbs(Q)))`` for quadratic letters.

    Both sides are Gaussian closed forms on the matrix entries (product over
    letters), so the report carries zero error bars.  Laws given as raw
    samples are rejected: their relative entropy is not estimable at this
    scale, and a fake estimate would make the verdict meaningless.
    """
    qs = (qs,) if isinstance(qs, potentials.Potential) else tuple(qs)
    if not isinstance(law, GaussianMatrixLaw):
        raise ConfigError(
            "verify_matrix_tci needs a GaussianMatrixLaw; relative entropy "
            "cannot be estimated from matrix samples at this scale")
    alphas = []
    for q in qs:
        if not potentials.is_quadratic(q):
            raise ConfigError("matrix inequality letters must be quadratic")
        alphas.append(2.0 * q.coefficients[2])
    rho = min(alphas) if rho is None else float(rho)
    if rho <= 0.0:
        raise ConfigError("need rho > 0")
    if rho > min(alphas) + 1e-12:
        raise ConfigError(f"rho = {rho} exceeds the least convexity "
                          f"parameter {min(alphas)} of the letters")
    shifts = tuple(law.mean_shifts) + (0.0,) * (len(qs) - len(law.mean_shifts))
    scales = tuple(law.cov_scales) + (1.0,) * (len(qs) - len(law.cov_scales))
    if len(shifts) != len(qs) or len(scales) != len(qs):
        raise ConfigError("law describes more letters than there are "
                          "potentials")
    w2_sq = 0.0
    kl = 0.0
    for alpha, shift, s in zip(alphas, shifts, scales):
        s = float(s)
        if s <= 0.0:
            raise ConfigError("covariance scales must be positive")
        m2 = _shift_hs_sq(shift, N)
        w2_sq += m2 + (N / alpha) * (math.sqrt(s) - 1.0) ** 2
        kl += 0.5 * N * N * (s - 1.0 - math.log(s)) + 0.5 * N * alpha * m2
    lhs = math.sqrt(w2_sq)
    rhs = math.sqrt(2.0 * kl / (rho * N))
    params = {"rho": rho, "N": int(N),
              "potential": [_potential_id(q) for q in qs],
              "letters": len(qs)}
    return _report("matrix-tci", lhs, rhs, 0.0, 0.0, params,
                   notes={"kl": kl, "closed_form": "gaussian"})


def verify_free_tci_tuple(mus, qs, N=64, count=128, seed=0, rho=None,
                          grid_size=1000, labels=()):
    """Multi-letter inequality demonstration for product states with the
    given one-variable marginals.

    The true multivariable W2 is not computable, so the left side is the
    coupling upper bound obtained by pushing sampled Gibbs matrices through
    the per-letter monotone transport maps in functional calculus.  When the
    bound stays below the right side the inequality is confirmed; when it
    exceeds it the verdict is ``inconclusive-upper-bound``, never
    ``violated``.
    """
    mus = (mus,) if isinstance(mus, measures.GridMeasure) else tuple(mus)
    qs = (qs,) if isinstance(qs, potentials.Potential) else tuple(qs)
    if len(mus) != len(qs):
        raise ConfigError("need one marginal per potential letter")
    for mu, q in zip(mus, qs):
        if mu.carrier != "interval" or q.carrier != "line":
            raise ConfigError("tuple demonstration works on the line")
    rho = min(q.rho for q in qs) if rho is None else float(rho)
    if rho <= 0.0:
        raise ConfigError("the line inequality constant 2/rho needs rho > 0")

    rad = 0.0
    rad_error = 0.0
    disp_sq = 0.0
    disp_var = 0.0
    for i, (mu, q) in enumerate(zip(mus, qs)):
        chi, chi_error = _entropy_with_error(mu)
        b, b_error = _b_line(q)
        rad += -chi + potentials.potential_mean(q, mu) + b
        rad_error += chi_error + b_error
        mu_q = equilibrium.solve_equilibrium_auto(q, grid_size=grid_size)
        lam = random_matrices.sample_gibbs_eigenvalues(q, N, count,
                                                       seed=seed + 101 * i)
        moved = measures.quantile(mu, measures.cdf(mu_q, lam))
        per_sample = ((moved - lam) ** 2).mean(axis=1)
        disp_sq += per_sample.mean()
        disp_var += per_sample.var(ddof=1) / count
    lhs = math.sqrt(disp_sq)
    lhs_error = 0.5 * math.sqrt(disp_var) / max(lhs, 1e-9)
    rhs, rhs_error = _sqrt_with_error(2.0 / rho, rad, rad_error)
    params = {"rho": rho, "N": int(N), "count": int(count),
              "seed": int(seed), "letters": len(qs),
              "potential": [_potential_id(q) for q in qs],
              "measure": list(labels) or [f"grid[{m.nodes.size}]" for m in mus]}
    return _report("free-tci-tuple-bound", lhs, rhs, lhs_error, rhs_error,
                   params, notes={"lhs_is": "coupling-upper-bound",
                                  "eta_bound": "chi", "radicand": rad},
                   upper_bound_only=True)


def verify_equilibrium_theorem(q, family=None, rho=None, grid_size=1000):
    """Minimizer property of the weighted-entropy functional
    ``mu -> -chi(mu) + mu(Q)`` (line) or ``-Sigma(mu) + mu(Q)`` (circle).

    Produces one report per family member with lhs the equilibrium value and
    rhs the member's value (so slack >= 0 is the theorem), then asserts that
    no member beats the equilibrium measure beyond the combined error.  The
    line entropy side uses chi, the available lower bound for the
    multivariable eta functional; on a single variable they agree.
    """
    if isinstance(q, (list, tuple)):
        if len(q) != 1:
            raise ConfigError("the minimizer check is single-variable; pass "
                              "one potential")
        q = q[0]
    rho = q.rho if rho is None else float(rho)
    mu_q = equilibrium.solve_equilibrium_auto(q, grid_size=grid_size)
    if family is None:
        family = (line_measure_family() if q.carrier == "line"
                  else circle_measure_family())
    ent_q, ent_q_error = _entropy_with_error(mu_q)
    obj_q = -ent_q + potentials.potential_mean(q, mu_q)
    notes = {"eta_bound": "chi"} if q.carrier == "line" else {}
    reports = []
    members = [("equilibrium", mu_q)] + list(family)
    for label, mu in members:
        expected = "interval" if q.carrier == "line" else "circle"
        if mu.carrier != expected:
            raise ConfigError(f"family member {label!r} lives on the wrong "
                              "carrier")
        ent, ent_error = _entropy_with_error(mu)
        obj = -ent + potentials.potential_mean(q, mu)
        params = {"rho": rho, "potential": _potential_id(q),
                  "measure": label, "grid_size": int(mu.nodes.size)}
        rep = _report("equilibrium-minimizer", obj_q, obj,
                      ent_q_error, ent_error, params,
                      notes=dict(notes, objective=obj))
        if rep.verdict in ("violated", "violated_within_error"):
            raise DiagnosticError(
                f"family member {label!r} beats the equilibrium measure by "
                f"{obj_q - obj:.3e}: minimizer property broken")
        reports.append(rep)
    return reports


def line_measure_family(name="all", grid_size=800):
    """Built-in interval test measures as (label, measure) pairs.

    Families: ``shifted-semicircle`` (8 translates), ``scaled-semicircle``
    (4 dilations), ``mixed`` (4 shift-and-scale combinations), ``classical``
    (uniform and arcsine variants), ``all`` (their concatenation, 20
    measures)."""
    shifted = [(f"semicircle+{c:g}",
                measures.semicircle_measure(grid_size, center=c))
               for c in (-1.0, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.0)]
    scaled = [(f"semicircle*{s:g}",
               measures.semicircle_measure(grid_size, radius=2.0 * s))
              for s in (0.5, 0.75, 1.25, 1.5)]
    mixed = [(f"semicircle*{s:g}+{c:g}",
              measures.semicircle_measure(grid_size, center=c, radius=2.0 * s))
             for c, s in ((0.5, 0.75), (-0.5, 1.25), (0.25, 0.5), (-0.75, 1.5))]
    classical = [
        ("uniform[-1,1]", measures.uniform_interval_measure(-1.0, 1.0, grid_size)),
        ("uniform[-0.5,1.5]", measures.uniform_interval_measure(-0.5, 1.5, grid_size)),
        ("arcsine", measures.arcsine_measure(2.0, grid_size)),
        ("arcsine*0.5+0.5", measures.arcsine_measure(1.0, grid_size, center=0.5)),
    ]
    table = {"shifted-semicircle": shifted, "scaled-semicircle": scaled,
             "mixed": mixed, "classical": classical,
             "all": shifted + scaled + mixed + classical}
    if name not in table:
        raise ConfigError(f"unknown measure family {name!r}; choose from "
                          f"{sorted(table)}")
    return table[name]


def circle_measure_family(name="trig", grid_size=512):
    """Built-in circle test measures: trigonometric densities
    ``(1/2pi)(1 + sum a_k cos kt + b_k sin kt)``."""
    specs = [
        ("uniform", (), ()),
        ("1+cos", (1.0,), ()),
        ("1-cos", (-1.0,), ()),
        ("1+sin", (), (1.0,)),
        ("1+0.8cos", (0.8,), ()),
        ("1+0.5cos2t", (0.0, 0.5), ()),
        ("1+0.5sin2t", (), (0.0, 0.5)),
        ("1+0.3cos+0.3sin", (0.3,), (0.3,)),
        ("1+0.5cos+0.25cos2t", (0.5, 0.25), ()),
        ("1+cos(t-1)", (math.cos(1.0),), (math.sin(1.0),)),
    ]
    fam = [(label, measures.trig_polynomial_measure(a, b, grid_size))
           for label, a, b in specs]
    table = {"trig": fam, "all": fam}
    if name not in table:
        raise ConfigError(f"unknown measure family {name!r}; choose from "
                          f"{sorted(table)}")
    return table[name]


def line_suite(q, family="all", rho=None, grid_size=800):
    """verify_free_tci_line across a built-in family; reports sorted by
    measure label for deterministic aggregation."""
    fam = sorted(line_measure_family(family, grid_size=grid_size))
    return [verify_free_tci_line(mu, q, rho=rho, measure_label=label)
            for label, mu in fam]


def circle_suite(q, family="trig", rho=None, grid_size=512):
    """verify_free_tci_circle across a built-in circle family."""
    fam = sorted(circle_measure_family(family, grid_size=grid_size))
    return [verify_free_tci_circle(mu, q, rho=rho, measure_label=label)
            for label, mu in fam]
