# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Metropolis sweep kernels for the log-gas chains.

Contract mirrors `fallback.py`: cyclic particle order, fixed random-number
consumption (one normal + one uniform per move, plus a partner uniform in the
trace-constrained variant), in-place state updates, accepted-move count
returned.
"""

from libc.math cimport exp, fabs, fmod, log, sin, cos, INFINITY

BACKEND = "compiled"

cdef double TWOPI = 6.283185307179586476925286766559


cdef inline double _polyval(const double[::1] coeffs, double x) noexcept nogil:
    cdef Py_ssize_t k = coeffs.shape[0]
    cdef double out = 0.0
    while k > 0:
        k -= 1
        out = out * x + coeffs[k]
    return out


cdef inline double _trigval(const double[::1] cosc, const double[::1] sinc,
                            double t) noexcept nogil:
    cdef Py_ssize_t k
    cdef double out = 0.0
    for k in range(cosc.shape[0]):
        out += cosc[k] * cos((k + 1) * t)
    for k in range(sinc.shape[0]):
        out += sinc[k] * sin((k + 1) * t)
    return out


def sweep_line(double[::1] x, const double[::1] coeffs, double nscale,
               double step, double wall, const double[::1] normals,
               const double[::1] uniforms):
    cdef Py_ssize_t N = x.shape[0]
    cdef Py_ssize_t n_moves = normals.shape[0]
    cdef Py_ssize_t m, i, j
    cdef double xi, xn, dlog, d_en, d
    cdef long accepted = 0
    with nogil:
        for m in range(n_moves):
            i = m % N
            xi = x[i]
            xn = xi + step * normals[m]
            if fabs(xn) > wall:
                continue
            dlog = 0.0
            for j in range(N):
                if j == i:
                    continue
                d = xn - x[j]
                if d == 0.0:
                    dlog = -INFINITY
                    break
                dlog += log(fabs(d)) - log(fabs(xi - x[j]))
            if dlog == -INFINITY:
                continue
            d_en = nscale * (_polyval(coeffs, xn) - _polyval(coeffs, xi)) - 2.0 * dlog
            if d_en <= 0.0 or uniforms[m] < exp(-d_en):
                x[i] = xn
                accepted += 1
    return accepted


cdef inline double _wrap(double t) noexcept nogil:
    t = fmod(t, TWOPI)
    if t < 0.0:
        t += TWOPI
    return t


def sweep_circle(double[::1] theta, const double[::1] cosc,
                 const double[::1] sinc, double nscale, double step,
                 const double[::1] normals, const double[::1] uniforms):
    cdef Py_ssize_t N = theta.shape[0]
    cdef Py_ssize_t n_moves = normals.shape[0]
    cdef Py_ssize_t m, i, j
    cdef double ti, tn, dlog, d_en, dn, do
    cdef long accepted = 0
    with nogil:
        for m in range(n_moves):
            i = m % N
            ti = theta[i]
            tn = _wrap(ti + step * normals[m])
            dlog = 0.0
            for j in range(N):
                if j == i:
                    continue
                dn = 2.0 * fabs(sin(0.5 * (tn - theta[j])))
                if dn == 0.0:
                    dlog = -INFINITY
                    break
                do = 2.0 * fabs(sin(0.5 * (ti - theta[j])))
                dlog += log(dn) - log(do)
            if dlog == -INFINITY:
                continue
            d_en = nscale * (_trigval(cosc, sinc, tn) - _trigval(cosc, sinc, ti)) \
                - 2.0 * dlog
            if d_en <= 0.0 or uniforms[m] < exp(-d_en):
                theta[i] = tn
                accepted += 1
    return accepted


def sweep_circle_paired(double[::1] theta, const double[::1] cosc,
                        const double[::1] sinc, double nscale, double step,
                        const double[::1] normals, const double[::1] uniforms,
                        const double[::1] partner_uniforms):
    cdef Py_ssize_t N = theta.shape[0]
    cdef Py_ssize_t n_moves = normals.shape[0]
    cdef Py_ssize_t m, i, j, k
    cdef double ti, tk, tin, tkn, delta, dlog, d_en, dn, do
    cdef long accepted = 0
    with nogil:
        for m in range(n_moves):
            i = m % N
            k = (i + 1 + <Py_ssize_t>(partner_uniforms[m] * (N - 1))) % N
            if k == i:
                continue
            delta = step * normals[m]
            ti = theta[i]
            tk = theta[k]
            tin = _wrap(ti + delta)
            tkn = _wrap(tk - delta)
            dn = 2.0 * fabs(sin(0.5 * (tin - tkn)))
            do = 2.0 * fabs(sin(0.5 * (ti - tk)))
            if dn == 0.0:
                continue
            dlog = log(dn) - log(do)
            for j in range(N):
                if j == i or j == k:
                    continue
                dn = 2.0 * fabs(sin(0.5 * (tin - theta[j])))
                if dn == 0.0:
                    dlog = -INFINITY
                    break
                dlog += log(dn) - log(fabs(2.0 * sin(0.5 * (ti - theta[j]))))
                dn = 2.0 * fabs(sin(0.5 * (tkn - theta[j])))
                if dn == 0.0:
                    dlog = -INFINITY
                    break
                dlog += log(dn) - log(fabs(2.0 * sin(0.5 * (tk - theta[j]))))
            if dlog == -INFINITY:
                continue
            d_en = nscale * (_trigval(cosc, sinc, tin) + _trigval(cosc, sinc, tkn)
                             - _trigval(cosc, sinc, ti) - _trigval(cosc, sinc, tk)) \
                - 2.0 * dlog
            if d_en <= 0.0 or uniforms[m] < exp(-d_en):
                theta[i] = tin
                theta[k] = tkn
                accepted += 1
    return accepted
