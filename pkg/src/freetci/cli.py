"""Command-line surface: reproducible experiments over the whole pipeline.

Every subcommand writes a JSON envelope ``{tool, seed, config, results}``
with sorted keys, so identical (config, seed) pairs produce byte-identical
output.  Options resolve in the order command line > per-subcommand TOML
table > top-level TOML key > built-in default; the resolved values are
embedded in the envelope.  Exit codes: 0 success, 2 configuration error,
3 numerical-diagnostic failure.
"""

import argparse
import concurrent.futures
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import (_toml, equilibrium, free_moments, measures, potentials,
               pressure, random_matrices, tci, transport)
from .errors import ConfigError, DiagnosticError

SUBCOMMANDS = ("equilibrium", "sample", "moments", "freeness", "transport",
               "pressure", "tci", "report")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="base RNG seed (default 0)")
    common.add_argument("--out", default=None,
                        help="output directory (default $FREETCI_OUT or .)")
    common.add_argument("--config", default=None,
                        help="TOML config file; tables named after "
                             "subcommands override top-level keys")
    common.add_argument("--workers", type=int, default=None,
                        help="worker threads for independent verification "
                             "jobs (default 1)")
    parser = argparse.ArgumentParser(
        prog="freetci",
        description="equilibrium measures, log-gas ensembles and "
                    "transportation inequalities")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("equilibrium", parents=[common],
                       help="solve a weighted equilibrium problem and write "
                            "the measure with its optimality certificate")
    p.add_argument("--q", default=None, help="potential: builtin name or TOML file")
    p.add_argument("--R", type=float, default=None, help="window radius (line)")
    p.add_argument("--grid", type=int, default=None, help="grid size")

    p = sub.add_parser("sample", parents=[common],
                       help="sample invariant matrix ensembles to binary files")
    p.add_argument("--q", action="append", default=None,
                   help="potential per letter (repeatable)")
    p.add_argument("--kind", default=None,
                   choices=["selfadjoint", "special_unitary"])
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--R", type=float, default=None, help="hard wall (line)")

    p = sub.add_parser("moments", parents=[common],
                       help="moment table of the free product of equilibrium "
                            "distributions")
    p.add_argument("--q", action="append", default=None)
    p.add_argument("--max-degree", type=int, default=None)

    p = sub.add_parser("freeness", parents=[common],
                       help="compare sampled mixed traces with free-product "
                            "moments")
    p.add_argument("--q", action="append", default=None)
    p.add_argument("--kind", default=None,
                   choices=["selfadjoint", "special_unitary"])
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--max-degree", type=int, default=None)

    p = sub.add_parser("transport", parents=[common],
                       help="Wasserstein distance between two measures")
    p.add_argument("--a", default=None, help="measure: builtin name or CSV path")
    p.add_argument("--b", default=None, help="measure: builtin name or CSV path")

    p = sub.add_parser("pressure", parents=[common],
                       help="finite-N pressure with extrapolation in 1/N^2")
    p.add_argument("--q", default=None)
    p.add_argument("--N-list", default=None, help="comma separated sizes")
    p.add_argument("--R", type=float, default=None, help="spectral window")
    p.add_argument("--nodes", type=int, default=None,
                   help="coupling quadrature nodes")
    p.add_argument("--samples", type=int, default=None,
                   help="chain samples per node")
    p.add_argument("--variational-N", type=int, default=None,
                   help="also check the Gibbs variational identity at this N")

    p = sub.add_parser("tci", parents=[common],
                       help="verify transportation-cost inequalities")
    p.add_argument("--inequality", default=None,
                   choices=["line", "circle", "matrix", "tuple", "equilibrium"])
    p.add_argument("--q", default=None)
    p.add_argument("--family", default=None,
                   help="built-in measure family name")
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--mean-shift", type=float, default=None,
                   help="matrix inequality: mean shift multiple of identity")
    p.add_argument("--cov-scale", type=float, default=None,
                   help="matrix inequality: entry covariance scale")
    p.add_argument("--shifts", default=None,
                   help="tuple inequality: comma separated marginal shifts")

    p = sub.add_parser("report", parents=[common],
                       help="convert saved outputs to gnuplot-ready .dat files")
    p.add_argument("--measure", default=None, help="measure CSV to plot")
    p.add_argument("--pressure", default=None,
                   help="pressure report JSON to turn into a convergence curve")
    return parser


class _Options:
    """Resolved option access: command line > [subcommand] table >
    top-level key > default; every looked-up value is recorded so the
    envelope config is complete."""

    def __init__(self, args, command):
        self.args = args
        cfg = {}
        if args.config:
            try:
                cfg = _toml.load_path(args.config)
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
        self.top = cfg
        table = cfg.get(command, {})
        if not isinstance(table, dict):
            raise ConfigError(f"config table [{command}] must be a table")
        self.table = table
        self.resolved = {}

    def get(self, name, default=None, global_key=False):
        cli = getattr(self.args, name.replace("-", "_"), None)
        if cli is not None:
            value = cli
        elif name in self.table:
            value = self.table[name]
        elif global_key and name in self.top:
            value = self.top[name]
        else:
            value = default
        self.resolved[name] = value
        return value


_POTENTIAL_ALIASES = {"quadratic": "x^2/2", "quartic": "x^4/4"}


def _potential_arg(spec):
    name = _POTENTIAL_ALIASES.get(spec, spec)
    if os.path.exists(name):
        try:
            return potentials.from_toml(Path(name).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read potential file: {exc}") from exc
    return potentials.builtin(name)


_MEASURE_BUILTINS = {
    "semicircle": lambda: measures.semicircle_measure(800),
    "uniform": lambda: measures.uniform_interval_measure(-1.0, 1.0, 800),
    "arcsine": lambda: measures.arcsine_measure(2.0, 800),
    "circle-uniform": lambda: measures.uniform_circle_measure(512),
    "one-plus-cos": lambda: measures.trig_polynomial_measure([1.0],
                                                             grid_size=512),
}


def _measure_arg(spec):
    if spec in _MEASURE_BUILTINS:
        return _MEASURE_BUILTINS[spec]()
    if os.path.exists(spec):
        return measures.load_measure(spec)
    raise ConfigError(f"unknown measure {spec!r}: not a builtin "
                      f"({sorted(_MEASURE_BUILTINS)}) and not a file")


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _write_json(path, payload):
    text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=False,
                      default=_json_default)
    path.write_text(text + "\n", encoding="utf-8")


def _write_dat(path, comment, rows):
    lines = [f"# {line}" for line in comment] + [
        f"{repr(float(x))} {repr(float(y))}" for x, y in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_equilibrium(opt, out, seed):
    q = _potential_arg(opt.get("q", "x^2/2"))
    R = opt.get("R")
    grid = int(opt.get("grid", 1000))
    if q.carrier == "line" and R is not None:
        mu = equilibrium.solve_equilibrium(q, R=float(R), grid_size=grid)
    else:
        mu = equilibrium.solve_equilibrium_auto(q, grid_size=grid)
    cert = equilibrium.euler_lagrange_residual(mu, q)
    measures.save_measure(mu, out / "equilibrium_measure.csv")
    support = mu.nodes[mu.weights > 1e-4 * mu.weights.max()]
    results = {
        "energy": equilibrium.weighted_energy(mu, q),
        "log_energy": measures.log_energy(mu),
        "certificate": cert,
        "support": [float(support[0]), float(support[-1])],
        "window": mu.R,
        "files": ["equilibrium_measure.csv", "equilibrium_measure.csv.json"],
    }
    if mu.carrier == "interval":
        results["free_entropy"] = measures.free_entropy_1var(mu)
    return results


def _cmd_sample(opt, out, seed):
    kind = opt.get("kind", "selfadjoint")
    default_q = "x^2/2" if kind == "selfadjoint" else "zero"
    qs = tuple(_potential_arg(s) for s in (opt.get("q") or [default_q]))
    N = int(opt.get("N", 8))
    count = int(opt.get("count", 4))
    R = opt.get("R")
    spec = random_matrices.EnsembleSpec(kind=kind, N=N, potentials=qs,
                                        R=None if R is None else float(R),
                                        seed=seed)
    letters = random_matrices.sample_ensemble(spec, count)
    results = {"letters": []}
    for i, A in enumerate(letters, start=1):
        fname = f"matrices_{i}.bin"
        random_matrices.save_matrices(A, kind, out / fname)
        results["letters"].append({
            "file": fname,
            "operator_norm_mean": float(np.mean(
                [random_matrices.operator_norm(a) for a in A])),
            "normalized_trace_mean": float(np.mean(
                [a.trace().real / N for a in A])),
        })
    return results


def _cmd_moments(opt, out, seed):
    qs = tuple(_potential_arg(s) for s in (opt.get("q") or ["x^2/2", "x^2/2"]))
    max_degree = opt.get("max-degree")
    marginals = [equilibrium.solve_equilibrium_auto(q) for q in qs]
    table = free_moments.free_product_table(
        marginals, None if max_degree is None else int(max_degree))
    table.save(out / "moments_table.json")
    results = table.to_json_dict()
    results["files"] = ["moments_table.json"]
    return results


def _cmd_freeness(opt, out, seed):
    kind = opt.get("kind", "selfadjoint")
    default_q = "x^2/2" if kind == "selfadjoint" else "zero"
    qs = tuple(_potential_arg(s)
               for s in (opt.get("q") or [default_q, default_q]))
    N = int(opt.get("N", 64))
    count = int(opt.get("count", 32))
    max_degree = int(opt.get("max-degree", 4))
    spec = random_matrices.EnsembleSpec(kind=kind, N=N, potentials=qs,
                                        seed=seed)
    return random_matrices.asymptotic_freeness_report(spec, count, max_degree)


def _cmd_transport(opt, out, seed):
    a = _measure_arg(opt.get("a", "semicircle"))
    b = _measure_arg(opt.get("b", "uniform"))
    if a.carrier != b.carrier:
        raise ConfigError("transport needs measures on the same carrier")
    if a.carrier == "interval":
        return {"carrier": "interval",
                "w1": transport.wasserstein_1d(a, b, p=1),
                "w2": transport.wasserstein_1d(a, b, p=2)}
    w2, details = transport.wasserstein_circle_chordal(a, b,
                                                       return_details=True)
    return {"carrier": "circle", "w2_chordal": w2, "details": details}


def _cmd_pressure(opt, out, seed):
    q = _potential_arg(opt.get("q", "x^2/2"))
    n_list = opt.get("N-list", "8,16,32")
    if isinstance(n_list, str):
        try:
            Ns = tuple(int(s) for s in n_list.split(",") if s.strip())
        except ValueError as exc:
            raise ConfigError(f"bad N list {n_list!r}") from exc
    else:
        Ns = tuple(int(n) for n in n_list)
    R = float(opt.get("R", 3.0))
    ti = pressure.TiSettings(nodes=int(opt.get("nodes", 21)),
                             samples_per_node=int(opt.get("samples", 96)))
    value, info = pressure.pressure_estimate(q, Ns, R, seed=seed, ti=ti,
                                             return_info=True)
    results = {"estimate": value, **info}
    vn = opt.get("variational-N")
    if vn is not None:
        results["variational"] = pressure.gibbs_variational_check(
            q, int(vn), R, seed=seed)
    return results


def _sorted_reports(reports):
    items = [r.to_json_dict() for r in reports]
    return sorted(items, key=lambda d: (d["inequality"],
                                        str(d["params"].get("measure", "")),
                                        json.dumps(d["params"], sort_keys=True)))


def _cmd_tci(opt, out, seed, workers):
    kind = opt.get("inequality", "line")
    if kind == "line":
        q = _potential_arg(opt.get("q", "x^2/2"))
        family = opt.get("family", "all")
        rho = opt.get("rho")
        grid = int(opt.get("grid", 800))
        fam = sorted(tci.line_measure_family(family, grid_size=grid))
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as ex:
            reports = list(ex.map(
                lambda item: tci.verify_free_tci_line(
                    item[1], q, rho=rho, measure_label=item[0]), fam))
    elif kind == "circle":
        q = _potential_arg(opt.get("q", "zero"))
        family = opt.get("family", "trig")
        rho = opt.get("rho")
        grid = int(opt.get("grid", 512))
        fam = sorted(tci.circle_measure_family(family, grid_size=grid))
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as ex:
            reports = list(ex.map(
                lambda item: tci.verify_free_tci_circle(
                    item[1], q, rho=rho, measure_label=item[0]), fam))
    elif kind == "matrix":
        q = _potential_arg(opt.get("q", "x^2/2"))
        N = int(opt.get("N", 8))
        rho = opt.get("rho")
        shift = float(opt.get("mean-shift", 0.5))
        scale = float(opt.get("cov-scale", 1.5))
        laws = [tci.GaussianMatrixLaw(),
                tci.GaussianMatrixLaw(mean_shifts=(shift,)),
                tci.GaussianMatrixLaw(cov_scales=(scale,))]
        reports = [tci.verify_matrix_tci(q, N, law, rho=rho) for law in laws]
    elif kind == "tuple":
        q = _potential_arg(opt.get("q", "x^2/2"))
        raw = opt.get("shifts", "0.4,-0.3")
        if isinstance(raw, str):
            shifts = tuple(float(s) for s in raw.split(",") if s.strip())
        else:
            shifts = tuple(float(s) for s in raw)
        if not shifts:
            raise ConfigError("tuple inequality needs at least one shift")
        grid = int(opt.get("grid", 800))
        mus = [measures.semicircle_measure(grid, center=c) for c in shifts]
        reports = [tci.verify_free_tci_tuple(
            mus, [q] * len(shifts), N=int(opt.get("N", 64)),
            count=int(opt.get("count", 128)), seed=seed,
            rho=opt.get("rho"),
            labels=[f"semicircle+{c:g}" for c in shifts])]
    else:
        q = _potential_arg(opt.get("q", "x^2/2"))
        family_name = opt.get("family", "all" if q.carrier == "line" else "trig")
        grid = int(opt.get("grid", 800))
        fam = (tci.line_measure_family(family_name, grid_size=grid)
               if q.carrier == "line"
               else tci.circle_measure_family(family_name, grid_size=grid))
        reports = tci.verify_equilibrium_theorem(q, family=fam,
                                                 rho=opt.get("rho"))
    return _sorted_reports(reports)


def _cmd_report(opt, out, seed):
    files = []
    measure_path = opt.get("measure")
    pressure_path = opt.get("pressure")
    if measure_path is None and pressure_path is None:
        raise ConfigError("report needs --measure and/or --pressure input")
    if measure_path is not None:
        mu = _measure_arg(measure_path)
        stem = Path(measure_path).stem or "measure"
        density = mu.weights / np.diff(mu.edges)
        fn = f"{stem}_density.dat"
        _write_dat(out / fn, [f"density of {stem}", "columns: x density"],
                   zip(mu.nodes, density))
        files.append(fn)
        cdf = np.cumsum(mu.weights)
        fn = f"{stem}_cdf.dat"
        _write_dat(out / fn, [f"cdf of {stem}", "columns: x F(x)"],
                   zip(mu.edges[1:], cdf))
        files.append(fn)
    if pressure_path is not None:
        try:
            payload = json.loads(Path(pressure_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read pressure report: {exc}") from exc
        per_n = payload.get("results", {}).get("per_N")
        if not per_n:
            raise ConfigError(f"{pressure_path} has no per-size pressure table")
        stem = Path(pressure_path).stem
        rows = sorted((int(k), float(v)) for k, v in per_n.items())
        comment = [f"pressure convergence from {stem}",
                   "columns: N normalized_pressure"]
        est = payload.get("results", {}).get("estimate")
        if est is not None:
            comment.append(f"extrapolated value {est}")
        fn = f"{stem}_convergence.dat"
        _write_dat(out / fn, comment, rows)
        files.append(fn)
    return {"files": files}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("freetci: a subcommand is required", file=sys.stderr)
        return 2
    try:
        opt = _Options(args, args.command)
        seed = int(opt.get("seed", 0, global_key=True))
        out_spec = opt.get("out", global_key=True) or \
            os.environ.get("FREETCI_OUT") or "."
        out = Path(out_spec)
        if not out.is_dir():
            raise ConfigError(f"output directory {out} does not exist")
        workers = int(opt.get("workers", 1, global_key=True))
        if workers < 1:
            raise ConfigError("workers must be at least 1")
        opt.resolved.update({"seed": seed, "out": str(out),
                             "workers": workers})
        if args.command == "tci":
            results = _cmd_tci(opt, out, seed, workers)
        else:
            handler = {"equilibrium": _cmd_equilibrium, "sample": _cmd_sample,
                       "moments": _cmd_moments, "freeness": _cmd_freeness,
                       "transport": _cmd_transport, "pressure": _cmd_pressure,
                       "report": _cmd_report}[args.command]
            results = handler(opt, out, seed)
        envelope = {"tool": f"freetci {args.command}", "seed": seed,
                    "config": opt.resolved, "results": results}
        report_path = out / (("report_index.json" if args.command == "report"
                              else f"{args.command}_report.json"))
        _write_json(report_path, envelope)
        print(report_path)
        return 0
    except ConfigError as exc:
        print(f"freetci: {exc}", file=sys.stderr)
        return 2
    except DiagnosticError as exc:
        print(f"freetci: diagnostic failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
