"""Throughput comparison of the compiled and pure-Python sweep kernels.

Runs identical Metropolis sweeps through both backends (same state, same
random stream) and reports sweeps per second plus the speedup factor.  The
compiled backend is loaded directly so the numbers do not depend on the
FREETCI_PURE environment variable.

    python3 benchmarks/bench_kernels.py [--sweeps 50] [--sizes 16,64,128]
"""

import argparse
import time

import numpy as np

from freetci._kernels import fallback


def _load_compiled():
    try:
        from freetci._kernels import _logas
    except ImportError:
        return None
    return _logas


def _time_line(mod, N, sweeps, rng):
    coeffs = np.array([0.0, 0.0, 0.5])  # x^2/2
    x = np.sort(2.0 * np.cos(np.pi * (np.arange(N) + 0.5) / N))
    normals = rng.standard_normal(sweeps * N)
    uniforms = rng.random(sweeps * N)
    t0 = time.perf_counter()
    mod.sweep_line(x, coeffs, float(N), 0.5 / np.sqrt(N), np.inf,
                   normals, uniforms)
    return time.perf_counter() - t0, x


def _time_circle(mod, N, sweeps, rng):
    cosc = np.array([1.0])
    sinc = np.zeros(0)
    theta = 2.0 * np.pi * (np.arange(N) + 0.5) / N
    normals = rng.standard_normal(sweeps * N)
    uniforms = rng.random(sweeps * N)
    partners = rng.random(sweeps * N)
    t0 = time.perf_counter()
    mod.sweep_circle_paired(theta, cosc, sinc, float(N), 0.5 / np.sqrt(N),
                            normals, uniforms, partners)
    return time.perf_counter() - t0, theta


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sweeps", type=int, default=50,
                    help="Metropolis sweeps per measurement (default 50)")
    ap.add_argument("--sizes", default="16,64,128",
                    help="comma-separated matrix sizes (default 16,64,128)")
    args = ap.parse_args()

    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    compiled = _load_compiled()
    if compiled is None:
        print("compiled backend not available; showing fallback only")
    backends = [("python", fallback)]
    if compiled is not None:
        backends.insert(0, (compiled.BACKEND, compiled))

    header = f"{'kernel':<14}{'N':>5}"
    for name, _ in backends:
        header += f"{name + ' (sw/s)':>18}"
    if compiled is not None:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    for kernel, timer in (("line", _time_line), ("circle-paired", _time_circle)):
        for N in sizes:
            rates = []
            states = []
            for _, mod in backends:
                rng = np.random.default_rng(12345)
                dt, state = timer(mod, N, args.sweeps, rng)
                rates.append(args.sweeps / dt)
                states.append(state)
            if len(states) == 2 and not np.allclose(states[0], states[1]):
                raise SystemExit(
                    f"backend mismatch for {kernel} N={N}: final states differ")
            row = f"{kernel:<14}{N:>5}"
            for r in rates:
                row += f"{r:>18.1f}"
            if compiled is not None:
                row += f"{rates[0] / rates[1]:>10.1f}x"
            print(row)

    if compiled is not None:
        print("\nfinal chain states agree between backends (same random stream)")


if __name__ == "__main__":
    main()
