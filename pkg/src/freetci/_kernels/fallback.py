"""Pure-Python Metropolis sweep kernels (numpy inner loops).

Same contract as the compiled module `_logas`: moves are proposed cyclically
over particles, one normal and one uniform (plus one partner uniform in
trace-constrained mode) are consumed per move in a fixed order, and the state
array is updated in place.  Keeping the random-number consumption identical
across backends makes chains reproducible per backend from the seed alone.
"""

import math

import numpy as np

BACKEND = "python"

TWOPI = 2.0 * math.pi


def _polyval(coeffs, x):
    out = 0.0
    for c in coeffs[::-1]:
        out = out * x + c
    return out


def _trigval(cosc, sinc, t):
    out = 0.0
    for k in range(len(cosc)):
        out += cosc[k] * math.cos((k + 1) * t)
    for k in range(len(sinc)):
        out += sinc[k] * math.sin((k + 1) * t)
    return out


def sweep_line(x, coeffs, nscale, step, wall, normals, uniforms):
    """Metropolis moves for the line log-gas with energy
    ``nscale * sum Q(x_i) - 2 sum_{i<j} log|x_i - x_j|``; returns the number
    of accepted moves.  ``wall`` is a hard window half-width (inf for none).
    """
    N = x.size
    accepted = 0
    for m in range(normals.size):
        i = m % N
        xi = x[i]
        xn = xi + step * normals[m]
        if abs(xn) > wall:
            continue
        d_new = xn - x
        d_old = xi - x
        d_new[i] = 1.0
        d_old[i] = 1.0
        if np.any(d_new == 0.0):
            continue
        dlog = np.log(np.abs(d_new)).sum() - np.log(np.abs(d_old)).sum()
        d_en = nscale * (_polyval(coeffs, xn) - _polyval(coeffs, xi)) - 2.0 * dlog
        if d_en <= 0.0 or uniforms[m] < math.exp(-d_en):
            x[i] = xn
            accepted += 1
    return accepted


def _chord_logsum(t, others):
    d = 2.0 * np.abs(np.sin(0.5 * (t - others)))
    if np.any(d == 0.0):
        return -math.inf
    return np.log(d).sum()


def sweep_circle(theta, cosc, sinc, nscale, step, normals, uniforms):
    """Metropolis moves for the circle log-gas with energy
    ``nscale * sum Q(t_i) - 2 sum_{i<j} log|2 sin((t_i - t_j)/2)|``."""
    N = theta.size
    accepted = 0
    for m in range(normals.size):
        i = m % N
        ti = theta[i]
        tn = math.fmod(ti + step * normals[m], TWOPI)
        if tn < 0.0:
            tn += TWOPI
        others = np.delete(theta, i)
        new_sum = _chord_logsum(tn, others)
        if new_sum == -math.inf:
            continue
        d_en = (nscale * (_trigval(cosc, sinc, tn) - _trigval(cosc, sinc, ti))
                - 2.0 * (new_sum - _chord_logsum(ti, others)))
        if d_en <= 0.0 or uniforms[m] < math.exp(-d_en):
            theta[i] = tn
            accepted += 1
    return accepted


def sweep_circle_paired(theta, cosc, sinc, nscale, step, normals, uniforms,
                        partner_uniforms):
    """Trace-constrained circle moves: particle i gains delta, a partner
    loses it, so ``sum theta`` is conserved modulo 2pi."""
    N = theta.size
    accepted = 0
    for m in range(normals.size):
        i = m % N
        k = (i + 1 + int(partner_uniforms[m] * (N - 1))) % N
        if k == i:
            continue
        delta = step * normals[m]
        ti, tk = theta[i], theta[k]
        tin = math.fmod(ti + delta, TWOPI)
        tkn = math.fmod(tk - delta, TWOPI)
        if tin < 0.0:
            tin += TWOPI
        if tkn < 0.0:
            tkn += TWOPI
        mask = np.ones(N, dtype=bool)
        mask[i] = mask[k] = False
        others = theta[mask]
        new_sum = _chord_logsum(tin, others) + _chord_logsum(tkn, others)
        dn = 2.0 * abs(math.sin(0.5 * (tin - tkn)))
        if new_sum == -math.inf or dn == 0.0:
            continue
        old_sum = _chord_logsum(ti, others) + _chord_logsum(tk, others)
        do = 2.0 * abs(math.sin(0.5 * (ti - tk)))
        d_en = (nscale * (_trigval(cosc, sinc, tin) + _trigval(cosc, sinc, tkn)
                          - _trigval(cosc, sinc, ti) - _trigval(cosc, sinc, tk))
                - 2.0 * (new_sum + math.log(dn) - old_sum - math.log(do)))
        if d_en <= 0.0 or uniforms[m] < math.exp(-d_en):
            theta[i] = tin
            theta[k] = tkn
            accepted += 1
    return accepted
