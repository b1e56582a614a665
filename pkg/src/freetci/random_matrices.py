"""Matrix ensembles attached to log-gas potentials.

Eigenvalue densities are the beta = 2 Gibbs laws
``exp(-N sum Q(l_i)) prod_{i<j} (l_i - l_j)^2`` on the line (optionally with a
hard window wall) and their Weyl analogues on the circle.  Quadratic
potentials are sampled exactly through shifted/scaled GUE; everything else
runs the Metropolis sweep kernels with spec-driven burn-in (10 N^2 sweeps),
thinning (N sweeps) and step adaptation toward a target acceptance rate.

All samplers are deterministic functions of (spec, seed): chains derive their
generators from a spawned seed tree, so identical calls reproduce identical
streams byte for byte on a given backend.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, equilibrium, free_moments, measures, potentials
from .errors import ConfigError, DiagnosticError

TWOPI = 2.0 * math.pi


@dataclass(frozen=True)
class McmcSettings:
    """Chain controls; None fields fall back to the scale-aware defaults
    burn = 10 N^2 sweeps, thin = N sweeps."""

    burn_sweeps: int | None = None
    thin_sweeps: int | None = None
    step: float | None = None
    target_accept: float = 0.3


@dataclass(frozen=True)
class EnsembleSpec:
    """A tuple of independent invariant ensembles, one letter each."""

    kind: str  # 'selfadjoint' | 'special_unitary'
    N: int
    potentials: tuple
    R: float | None = None
    seed: int = 0
    mcmc: McmcSettings = field(default_factory=McmcSettings)

    def __post_init__(self):
        if self.kind not in ("selfadjoint", "special_unitary"):
            raise ConfigError(f"unknown ensemble kind {self.kind!r}")
        if self.N < 1:
            raise ConfigError("N must be positive")
        want = "line" if self.kind == "selfadjoint" else "circle"
        for q in self.potentials:
            if q.carrier != want:
                raise ConfigError(f"{self.kind} ensembles need {want} potentials")


def validate_matrix(entries, kind):
    """Check the defining algebraic property of a sample matrix."""
    A = np.asarray(entries)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError("matrix samples must be square")
    scale = max(1.0, float(np.abs(A).max()))
    if kind == "selfadjoint":
        if np.abs(A - A.conj().T).max() > 1e-10 * scale:
            raise ConfigError("matrix is not Hermitian")
    elif kind in ("unitary", "special_unitary"):
        err = np.abs(A.conj().T @ A - np.eye(A.shape[0])).max()
        if err > 1e-9 * A.shape[0]:
            raise ConfigError(f"matrix is not unitary (defect {err:.2e})")
        if kind == "special_unitary":
            det = np.linalg.det(A)
            if abs(det - 1.0) > 1e-8 * A.shape[0]:
                raise ConfigError(f"determinant {det} is not 1")
    else:
        raise ConfigError(f"unknown matrix kind {kind!r}")
    return A


@dataclass(frozen=True)
class MatrixSample:
    kind: str
    entries: np.ndarray

    def __post_init__(self):
        A = validate_matrix(self.entries, self.kind)
        A = A.copy()
        A.setflags(write=False)
        object.__setattr__(self, "entries", A)

    @property
    def N(self):
        return self.entries.shape[0]


def _rng(seed, *spawn):
    ss = np.random.SeedSequence(seed)
    for k in spawn:
        ss = ss.spawn(k + 1)[k]
    return np.random.default_rng(ss)


def sample_gue(N, count, seed=0, rng=None):
    """GUE matrices with density ``exp(-N Tr A^2 / 2)``: diagonal entries
    N(0, 1/N), off-diagonal complex with Re/Im variance 1/(2N)."""
    rng = rng or _rng(seed)
    X = rng.standard_normal((count, N, N))
    Y = rng.standard_normal((count, N, N))
    H = X + 1j * Y
    return (H + H.conj().transpose(0, 2, 1)) / (2.0 * math.sqrt(N))


def sample_haar_unitary(N, count, seed=0, rng=None):
    """Haar unitaries via QR with the phase-normalized R diagonal."""
    rng = rng or _rng(seed)
    Z = (rng.standard_normal((count, N, N))
         + 1j * rng.standard_normal((count, N, N))) / math.sqrt(2.0)
    out = np.empty_like(Z)
    for k in range(count):
        Q, R = np.linalg.qr(Z[k])
        d = np.diagonal(R)
        out[k] = Q * (d / np.abs(d))
    return out


def project_su(U):
    """Normalize a unitary to determinant one by the principal N-th root of
    its determinant phase: multiplies every eigenvalue by the same unimodular
    scalar, the spectral picture only rotates."""
    U = np.asarray(U)
    N = U.shape[-1]
    det = np.linalg.det(U)
    phase = np.angle(det)
    factor = np.exp(-1j * np.atleast_1d(phase) / N)
    out = U * factor.reshape(factor.shape + (1, 1) if U.ndim == 3 else (1, 1))
    return out if U.ndim == 3 else out[..., :, :]


def su_project_angles(angles):
    """Angle-level version of :func:`project_su`: subtract the principal
    argument of ``exp(i sum)`` divided by N; the result sums to 0 mod 2pi."""
    angles = np.asarray(angles, dtype=float)
    phase = np.angle(np.exp(1j * angles.sum(axis=-1)))
    out = angles - np.expand_dims(phase, -1) / angles.shape[-1]
    return np.mod(out, TWOPI)


def retract(A, R):
    """Spectral retraction onto the operator-norm ball of radius R: clip the
    eigenvalues, keep the eigenvectors.  This is the metric projection in
    Hilbert-Schmidt distance, hence 1-Lipschitz."""
    if R <= 0:
        raise ConfigError("retraction radius must be positive")
    A = np.asarray(A)
    lam, V = np.linalg.eigh(A)
    lam = np.clip(lam, -R, R)
    B = (V * lam[..., None, :]) @ V.conj().transpose(*range(A.ndim - 2), -1, -2)
    return 0.5 * (B + B.conj().transpose(*range(A.ndim - 2), -1, -2))


def operator_norm(A):
    return float(np.linalg.norm(np.asarray(A), ord=2))


# ---------------------------------------------------------------------------
# Metropolis chains

_CHUNK_MOVES = 16384


def _run_chain(state, q, nscale, n_sweeps, rng, step, wall=None, paired=False,
               adapt=False, target=0.3):
    """Advance a chain by n_sweeps; returns (step, last_chunk_rate)."""
    N = state.size
    rate = math.nan
    done = 0
    if q.carrier == "line":
        coeffs = np.asarray(q.coefficients, dtype=float)
    else:
        cosc = np.asarray(q.cos_coefficients, dtype=float)
        sinc = np.asarray(q.sin_coefficients, dtype=float)
    while done < n_sweeps:
        chunk = min(n_sweeps - done, max(1, _CHUNK_MOVES // N))
        nm = chunk * N
        normals = rng.standard_normal(nm)
        uniforms = rng.random(nm)
        if q.carrier == "line":
            acc = _kernels.sweep_line(state, coeffs, float(nscale), float(step),
                                      math.inf if wall is None else float(wall),
                                      normals, uniforms)
        elif paired:
            partners = rng.random(nm)
            acc = _kernels.sweep_circle_paired(state, cosc, sinc, float(nscale),
                                              float(step), normals, uniforms,
                                              partners)
        else:
            acc = _kernels.sweep_circle(state, cosc, sinc, float(nscale),
                                        float(step), normals, uniforms)
        rate = acc / nm
        if adapt:
            step = min(2.0, max(1e-4, step * math.exp(0.8 * (rate - target))))
        done += chunk
    return step, rate


def _check_rate(rate, context):
    if not 0.1 <= rate <= 0.9:
        raise DiagnosticError(
            f"{context}: acceptance rate {rate:.3f} outside [0.1, 0.9] "
            "after step adaptation; the chain is not mixing")


def _line_init(q, N, wall):
    try:
        mu = equilibrium.solve_equilibrium_auto(q, grid_size=500)
        pts = measures.quantile(mu, (np.arange(N) + 0.5) / N)
    except Exception:
        pts = np.linspace(-1.0, 1.0, N)
    pts = np.asarray(pts, dtype=float)
    if wall is not None:
        pts = np.clip(pts, -wall * (1 - 1e-9), wall * (1 - 1e-9))
    # collisions make the Vandermonde weight vanish; nudge them apart
    for i in range(1, N):
        if pts[i] <= pts[i - 1]:
            pts[i] = pts[i - 1] + 1e-9
    return pts


def _mcmc_eigenvalues(q, N, count, rng, wall, settings, nscale=None,
                      paired=False, init=None):
    st = settings or McmcSettings()
    burn = st.burn_sweeps if st.burn_sweeps is not None else 10 * N * N
    thin = st.thin_sweeps if st.thin_sweeps is not None else N
    step = st.step if st.step is not None else 2.4 / math.sqrt(max(N, 2))
    nscale = float(N if nscale is None else nscale)
    if q.carrier == "line":
        state = _line_init(q, N, wall) if init is None else np.array(init, dtype=float)
    else:
        state = ((np.arange(N) + 0.5) * TWOPI / N if init is None
                 else np.array(init, dtype=float))
    step, rate = _run_chain(state, q, nscale, burn, rng, step, wall=wall,
                            paired=paired, adapt=True, target=st.target_accept)
    _check_rate(rate, "burn-in")
    out = np.empty((count, N))
    for k in range(count):
        _run_chain(state, q, nscale, thin, rng, step, wall=wall, paired=paired)
        out[k] = np.sort(state)
    return out


def sample_gibbs_eigenvalues(q, N, count, seed=0, R=None, settings=None,
                             rng=None):
    """Eigenvalue samples of the line ensemble for potential Q.

    Quadratic potentials with no wall are sampled exactly through GUE; other
    cases run a Metropolis chain (burn-in 10 N^2 sweeps, thinning N sweeps,
    step tuned toward 30% acceptance during burn-in, hard error if the final
    acceptance rate leaves [0.1, 0.9]).  Returns a (count, N) sorted array.
    """
    if q.carrier != "line":
        raise ConfigError("sample_gibbs_eigenvalues takes a line potential")
    if not potentials.growth_ok(q):
        raise ConfigError("potential does not confine eigenvalues")
    rng = rng or _rng(seed)
    if potentials.is_quadratic(q) and R is None:
        c = np.asarray(q.coefficients)
        alpha = 2.0 * c[2]
        shift = -(c[1] / alpha if c.size > 1 else 0.0)
        lam = np.linalg.eigvalsh(sample_gue(N, count, rng=rng))
        return np.sort(lam / math.sqrt(alpha) + shift, axis=1)
    return _mcmc_eigenvalues(q, N, count, rng, R, settings)


def sample_gibbs_matrices(q, N, count, seed=0, R=None, settings=None):
    """Invariant-ensemble matrices: Gibbs eigenvalues conjugated by
    independent Haar eigenvector frames (exact GUE when quadratic)."""
    rng = _rng(seed)
    if potentials.is_quadratic(q) and R is None:
        c = np.asarray(q.coefficients)
        alpha = 2.0 * c[2]
        shift = -(c[1] / alpha if c.size > 1 else 0.0)
        A = sample_gue(N, count, rng=rng) / math.sqrt(alpha)
        if shift:
            A = A + shift * np.eye(N)
        return A
    lam = sample_gibbs_eigenvalues(q, N, count, R=R, settings=settings, rng=rng)
    U = sample_haar_unitary(N, count, rng=rng)
    return (U * lam[:, None, :]) @ U.conj().transpose(0, 2, 1)


def sample_gibbs_su_eigenangles(q, N, count, seed=0, settings=None, rng=None):
    """Eigenangle samples of the determinant-one ensemble for a circle
    potential: the unconstrained Weyl chain (exact Haar when Q = 0) followed
    by the principal-root determinant normalization on the angles."""
    if q.carrier != "circle":
        raise ConfigError("sample_gibbs_su_eigenangles takes a circle potential")
    rng = rng or _rng(seed)
    if not (q.cos_coefficients or q.sin_coefficients):
        U = sample_haar_unitary(N, count, rng=rng)
        ang = np.mod(np.angle(np.linalg.eigvals(U)), TWOPI)
    else:
        ang = _mcmc_eigenvalues(q, N, count, rng, None, settings)
    return np.sort(su_project_angles(ang), axis=1)


def sample_ensemble(spec, count):
    """Matrix tuples for an :class:`EnsembleSpec`: a list with one
    (count, N, N) array per letter, letters drawn independently."""
    out = []
    for i, q in enumerate(spec.potentials):
        rng = _rng(spec.seed, i)
        if spec.kind == "selfadjoint":
            if potentials.is_quadratic(q) and spec.R is None:
                c = np.asarray(q.coefficients)
                alpha = 2.0 * c[2]
                shift = -(c[1] / alpha if c.size > 1 else 0.0)
                A = sample_gue(spec.N, count, rng=rng) / math.sqrt(alpha)
                if shift:
                    A = A + shift * np.eye(spec.N)
                out.append(A)
            else:
                lam = sample_gibbs_eigenvalues(q, spec.N, count, R=spec.R,
                                               settings=spec.mcmc, rng=rng)
                U = sample_haar_unitary(spec.N, count, rng=rng)
                out.append((U * lam[:, None, :]) @ U.conj().transpose(0, 2, 1))
        else:
            if not (q.cos_coefficients or q.sin_coefficients):
                out.append(project_su(sample_haar_unitary(spec.N, count, rng=rng)))
            else:
                ang = sample_gibbs_su_eigenangles(q, spec.N, count,
                                                  settings=spec.mcmc, rng=rng)
                U = sample_haar_unitary(spec.N, count, rng=rng)
                phases = np.exp(1j * ang)
                out.append((U * phases[:, None, :]) @ U.conj().transpose(0, 2, 1))
    return out


# ---------------------------------------------------------------------------
# Word traces

def word_trace(mats, word):
    """Normalized trace ``(1/N) Tr w(A_1, ..., A_n)``; ``mats[i-1]`` is the
    matrix for letter i, stars mean conjugate transpose."""
    word = free_moments._as_word(word)
    prod = None
    for idx, star in word.letters:
        if idx > len(mats):
            raise ConfigError(f"word letter {idx} exceeds {len(mats)} matrices")
        M = np.asarray(mats[idx - 1])
        M = M.conj().T if star else M
        prod = M if prod is None else prod @ M
    return complex(np.trace(prod) / prod.shape[0])


def batch_word_traces(letter_samples, words, block=8):
    """Per-sample normalized traces for many words at once.

    ``letter_samples`` is a list of (count, N, N) arrays, one per letter.
    Words up to degree 4 are evaluated from cached pairwise products with
    trace contractions (no third matmul); longer words fall back to batched
    sequential products.
    """
    words = [free_moments._as_word(w) for w in words]
    count, N = letter_samples[0].shape[0], letter_samples[0].shape[1]
    symbols = {}
    for i, arr in enumerate(letter_samples, start=1):
        symbols[(i, False)] = arr
        symbols[(i, True)] = arr.conj().transpose(0, 2, 1)
    out = {free_moments.format_word(w): np.empty(count, dtype=complex)
           for w in words}
    for lo in range(0, count, block):
        hi = min(lo + block, count)
        blk = {k: v[lo:hi] for k, v in symbols.items()}
        pairs = {}

        def pair(a, b):
            key = (a, b)
            if key not in pairs:
                pairs[key] = np.matmul(blk[a], blk[b])
            return pairs[key]

        for w in words:
            ls = w.letters
            if len(ls) == 1:
                tr = np.einsum("cii->c", blk[ls[0]])
            elif len(ls) == 2:
                tr = np.einsum("cij,cji->c", blk[ls[0]], blk[ls[1]])
            elif len(ls) == 3:
                tr = np.einsum("cij,cji->c", pair(ls[0], ls[1]), blk[ls[2]])
            elif len(ls) == 4:
                tr = np.einsum("cij,cji->c", pair(ls[0], ls[1]), pair(ls[2], ls[3]))
            else:
                prod = blk[ls[0]]
                for sym in ls[1:]:
                    prod = np.matmul(prod, blk[sym])
                tr = np.einsum("cii->c", prod)
            out[free_moments.format_word(w)][lo:hi] = tr / N
    return out


def asymptotic_freeness_report(spec, count, max_degree=4):
    """Compare sampled mixed word traces of independent invariant ensembles
    with the moments of the free product of their equilibrium measures.

    Returns a dict with one row per word: sampled mean, standard error,
    free-probability value and the absolute gap, plus the maxima.
    """
    n = len(spec.potentials)
    starred = spec.kind == "special_unitary"
    words = free_moments.enumerate_words(n, max_degree, starred=starred)
    samples = sample_ensemble(spec, count)
    traces = batch_word_traces(samples, words)
    marginals = [equilibrium.solve_equilibrium_auto(q) for q in spec.potentials]
    state = free_moments._FreeProduct(marginals, max_degree)
    rows = {}
    max_gap = 0.0
    max_se = 0.0
    for w in words:
        key = free_moments.format_word(w)
        vals = traces[key]
        mean = complex(vals.mean())
        se = float(math.sqrt(vals.var() / max(count, 1)))
        free = complex(state.moment(w))
        gap = abs(mean - free)
        rows[key] = {"sample_mean": [mean.real, mean.imag], "stderr": se,
                     "free_value": [free.real, free.imag], "gap": gap}
        max_gap = max(max_gap, gap)
        max_se = max(max_se, se)
    return {"kind": spec.kind, "N": spec.N, "count": count,
            "max_degree": max_degree, "seed": spec.seed, "rows": rows,
            "max_gap": max_gap, "max_stderr": max_se}


def microstate_membership(mats, table, degree, epsilon, R):
    """Does a matrix tuple lie in the microstate neighborhood
    Gamma(table; degree, epsilon, R)?  Checks every word trace to the given
    degree against the table and the operator-norm cap."""
    starred = table.kind == "unitary"
    for A in mats:
        if operator_norm(A) > R + 1e-12:
            return False
    n = len(mats)
    for w in free_moments.enumerate_words(n, degree, starred=starred):
        key = free_moments.format_word(w)
        if key not in table.entries:
            raise ConfigError(f"moment table lacks word {key!r}")
        if abs(word_trace(mats, w) - complex(table.entries[key])) > epsilon:
            return False
    return True


# ---------------------------------------------------------------------------
# Exact finite-N GUE spectral density

def gue_mean_spectral_measure(N, grid_size=2000, window=None):
    """Mean empirical eigenvalue distribution of GUE at finite N via the
    Hermite-function Christoffel-Darboux kernel (stable orthonormal
    recurrence)."""
    if window is None:
        window = 2.0 + 4.0 / math.sqrt(N)

    def density(x):
        t = np.asarray(x, dtype=float) * math.sqrt(N / 2.0)
        psi_prev = np.zeros_like(t)
        psi = np.pi ** -0.25 * np.exp(-0.5 * t * t)
        total = psi * psi
        for k in range(N - 1):
            psi_next = (t * math.sqrt(2.0 / (k + 1)) * psi
                        - math.sqrt(k / (k + 1.0)) * psi_prev)
            psi_prev, psi = psi, psi_next
            total += psi * psi
        return math.sqrt(N / 2.0) / N * total

    return measures.measure_from_density(density, -window, window,
                                         grid_size=grid_size, R=window)


# ---------------------------------------------------------------------------
# Serialization

def save_matrices(mats, kind, path, meta=None):
    """Raw binary dump: for each matrix, columns in order, each entry as a
    little-endian float64 (re, im) pair; JSON sidecar at ``path + '.json'``."""
    A = np.asarray(mats)
    if A.ndim == 2:
        A = A[None]
    count, N = A.shape[0], A.shape[1]
    flat = np.empty((count, 2 * N * N))
    colmajor = A.transpose(0, 2, 1).reshape(count, N * N)  # column-major walk
    flat[:, 0::2] = colmajor.real
    flat[:, 1::2] = colmajor.imag
    flat.astype("<f8").tofile(path)
    sidecar = {"kind": kind, "N": N, "count": count,
               "format": "little-endian float64 (re, im) pairs, column-major"}
    if meta:
        sidecar.update(meta)
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True)
        fh.write("\n")
    return sidecar


def load_matrices(path):
    """Inverse of :func:`save_matrices`; validates each matrix against the
    declared kind."""
    try:
        with open(str(path) + ".json", "r", encoding="utf-8") as fh:
            sidecar = json.load(fh)
        raw = np.fromfile(path, dtype="<f8")
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load matrices: {exc}") from exc
    N, count = int(sidecar["N"]), int(sidecar["count"])
    if raw.size != 2 * count * N * N:
        raise ConfigError(f"raw payload has {raw.size} doubles, "
                          f"expected {2 * count * N * N}")
    flat = raw.reshape(count, 2 * N * N)
    A = (flat[:, 0::2] + 1j * flat[:, 1::2]).reshape(count, N, N)
    A = A.transpose(0, 2, 1)  # undo the column-major walk
    for k in range(count):
        validate_matrix(A[k], sidecar["kind"])
    return A, sidecar
