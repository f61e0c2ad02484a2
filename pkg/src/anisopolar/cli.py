"""Command-line front end: config parsing, experiment runs, CSV emission.

Commands: sigma, integrate, classify, decay, checks.  A config file
(INI-style, flat key/value under [run] and per-command sections) seeds the
options; command-line flags override it.  Exit status: 0 all checks pass,
1 a check failed, 2 invalid configuration.  Re-running with the same
config and seed reproduces the CSV bodies byte for byte; wall-clock data
lives only in the run manifest.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
import time
from pathlib import Path

import numpy as np


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("ANISOPOLAR_OUT", "runs")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(path: Path, args, wall_s: float, extra=None):
    from importlib.metadata import version
    try:
        pkg_version = version("anisopolar")
    except Exception:
        pkg_version = "unknown"
    lines = [
        f"command: {args.command}",
        f"seed: {args.seed}",
        f"package_version: {pkg_version}",
        f"numpy_version: {np.__version__}",
        f"wall_seconds: {wall_s:.3f}",
        f"timestamp: {time.strftime('%Y-%m-%dT%H:%M:%S')}",
    ]
    for key, val in sorted(vars(args).items()):
        if key not in ("command", "seed", "func", "config"):
            lines.append(f"arg_{key}: {val}")
    if extra:
        lines.extend(extra)
    (path / "manifest.txt").write_text("\n".join(lines) + "\n")


def _parse_region(spec: str):
    from . import measure
    if spec == "all":
        return measure.region_all()
    if spec == "empty":
        return measure.region_empty()
    if spec.startswith("half:"):
        return measure.region_halfspace(int(spec.split(":")[1]))
    raise ValueError(f"unknown region {spec!r} (use all | empty | half:<axis>)")


CHECKS_CSV_HEADER = "test_name,value_lhs,value_rhs,stderr_lhs,stderr_rhs,pass,seed,n"


def _resolve_function(args):
    from . import fixtures
    from .homogeneous import parse_semi_elliptic
    if args.P == "semi":
        if not (args.terms and args.weights):
            raise ValueError("--P semi needs --terms and --weights")
        return parse_semi_elliptic(args.terms, args.weights)
    return fixtures.get_function_fixture(args.P)


def _parse_matrix(spec: str, dim: int):
    vals = [float(v) for v in spec.replace(";", " ").split()]
    if len(vals) != dim * dim:
        raise ValueError(f"--E needs {dim * dim} row-major entries, got {len(vals)}")
    return np.array(vals).reshape(dim, dim)


def cmd_sigma(args) -> int:
    from . import measure
    t0 = time.perf_counter()
    P = _resolve_function(args)
    region = _parse_region(args.region)
    if args.E:
        est = measure.sigma_with_exponent(P, _parse_matrix(args.E, P.dim),
                                          region, args.samples, args.seed)
    else:
        est = measure.sigma(P, region, args.samples, args.seed)
    out = _out_dir(args)
    rows = [CHECKS_CSV_HEADER,
            f"sigma[{args.P},{args.region}],{est.value!r},nan,{est.stderr!r},nan,1,"
            f"{args.seed},{est.samples_used}"]
    (out / "sigma.csv").write_text("\n".join(rows) + "\n")
    _write_manifest(out, args, time.perf_counter() - t0)
    print(f"sigma_P(F) = {est.value:.6f} +- {est.stderr:.6f} "
          f"(n={est.samples_used}, seed={args.seed})")
    return 0


def cmd_integrate(args) -> int:
    from . import measure
    t0 = time.perf_counter()
    P = _resolve_function(args)
    if args.f == "gauss":
        def f(pts):
            return np.exp(-np.sum(pts ** 2, axis=1))
    elif args.f == "exp_p":
        def f(pts):
            return np.exp(-P(pts))
    else:
        raise SystemExit(f"unknown integrand {args.f!r} (use gauss | exp_p)")
    est = measure.polar_integrate(P, f, args.cutoff, args.samples, args.seed)
    out = _out_dir(args)
    rows = [CHECKS_CSV_HEADER,
            f"polar_integrate[{args.P},{args.f}],{est.value!r},nan,{est.stderr!r},"
            f"{est.quad_error!r},1,{args.seed},{est.samples_used}"]
    (out / "integrate.csv").write_text("\n".join(rows) + "\n")
    _write_manifest(out, args, time.perf_counter() - t0)
    print(f"integral = {est.value:.6f} +- {est.stderr:.6f} "
          f"(quad err {est.quad_error:.2e})")
    return 0


def cmd_classify(args) -> int:
    from . import expansion, fixtures, lattice
    t0 = time.perf_counter()
    phi = fixtures.get_lattice_fixture(args.fixture)
    try:
        omega = lattice.find_omega(phi)
    except lattice.LatticeError as exc:
        print(f"maximum search failed: {exc}", file=sys.stderr)
        return 1
    out = _out_dir(args)
    ok = True
    summaries = []
    for i, pt in enumerate(omega.points):
        pc = expansion.classify_point(phi, pt)
        text = expansion.classification_to_text(pc)
        (out / f"classification_{i}.txt").write_text(text)
        summaries.append(f"xi0={tuple(np.round(pt, 6))} type={pc.type} "
                         f"m={pc.m} k={pc.k} mu={pc.mu} drift={pc.drift}")
        ok = ok and pc.type != "unclassified"
    if ok:
        pcs = [expansion.classify_point(phi, pt) for pt in omega.points]
        summaries.append(f"mu_phi={expansion.mu_phi(pcs)}")
    (out / "classify_summary.txt").write_text("\n".join(summaries) + "\n")
    _write_manifest(out, args, time.perf_counter() - t0)
    print("\n".join(summaries))
    return 0 if ok else 1


def cmd_decay(args) -> int:
    from . import decay, fixtures
    t0 = time.perf_counter()
    phi = fixtures.get_lattice_fixture(args.fixture)
    try:
        _, pcs, mu = decay.hypothesis_gate(phi)
    except decay.GateError as exc:
        print(f"hypothesis gate refused: {exc}", file=sys.stderr)
        return 1
    schedule = decay.geometric_schedule(args.nmin, args.nmax, args.per_octave)
    records = decay.decay_curve(phi, args.K, schedule, method=args.method)
    slope, se = decay.slope_fit(records)
    c_hat, bound_ok = decay.theorem_bound_check(records, mu)
    out = _out_dir(args)
    decay.decay_csv(records, mu, out / "decay.csv")
    (out / "decay.gp").write_text(decay.gnuplot_script("decay.csv", mu))
    in_band = abs(slope + float(mu)) <= args.band
    report = [
        f"fixture: {args.fixture}",
        f"mu_phi: {mu} (= {float(mu):.6f})",
        f"slope: {slope:.6f} +- {se:.6f}",
        f"target: {-float(mu):.6f} band: +-{args.band}",
        f"slope_in_band: {in_band}",
        f"C_hat: {c_hat:.6f}",
        f"bound_check: {bound_ok}",
    ]
    (out / "slope_report.txt").write_text("\n".join(report) + "\n")
    _write_manifest(out, args, time.perf_counter() - t0)
    print("\n".join(report))
    return 0 if (in_band and bound_ok) else 1


def _suite_group_laws(seed: int):
    from .dilation import group_laws_report
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(20):
        e = rng.uniform(-1, 1, (3, 3))
        e *= 5.0 / max(np.linalg.norm(e, 2), 1e-9)
        pairs = np.exp(rng.uniform(math.log(0.01), math.log(100.0), (20, 2)))
        rep = group_laws_report(e, pairs)
        rows.append((f"group_laws_{i}", rep.max_residual, 1e-9,
                     rep.passes(1e-9)))
    return rows


def _suite_homogeneity(seed: int):
    from . import fixtures
    from .homogeneous import homogeneity_residual
    rows = []
    for name, build in fixtures.FUNCTION_FIXTURES.items():
        P = build()
        res = homogeneity_residual(P, seed=seed)
        rows.append((f"homogeneity_{name}", res, 1e-9, res <= 1e-9))
    return rows


def _suite_sigma_classical(seed: int):
    from . import fixtures, measure
    rows = []
    P = fixtures.get_function_fixture("euclid2")
    est = measure.sigma(P, measure.region_all(), 2 ** 17, seed)
    err = abs(est.value - 2 * math.pi)
    rows.append(("sigma_euclid2", est.value, 3 * est.stderr, err <= 3 * est.stderr))
    P2 = fixtures.get_function_fixture("euclid2_sq")
    est2 = measure.sigma(P2, measure.region_all(), 2 ** 17, seed)
    err2 = abs(est2.value - math.pi)
    rows.append(("sigma_euclid2_sq", est2.value, 3 * est2.stderr, err2 <= 3 * est2.stderr))
    return rows


def _suite_series_roundtrip(seed: int):
    from fractions import Fraction
    from .expansion import PowerSeries, exp_series, log_series
    from .rational import QC
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(5):
        coeffs = {(0, 0): QC(1, 0)}
        for b1 in range(4):
            for b2 in range(4 - b1):
                if b1 == b2 == 0:
                    continue
                coeffs[(b1, b2)] = QC(Fraction(int(rng.integers(-9, 10)), 7),
                                      Fraction(int(rng.integers(-9, 10)), 5))
        s = PowerSeries(2, 8, coeffs)
        back = exp_series(log_series(s))
        rows.append((f"series_roundtrip_{i}", 0.0, 0.0, back == s))
    return rows


_SUITES = {
    "group_laws": _suite_group_laws,
    "homogeneity": _suite_homogeneity,
    "sigma_classical": _suite_sigma_classical,
    "series_roundtrip": _suite_series_roundtrip,
}


def cmd_checks(args) -> int:
    t0 = time.perf_counter()
    if args.suite not in _SUITES:
        raise ValueError(f"unknown suite {args.suite!r}; "
                         f"available: {', '.join(sorted(_SUITES))}")
    rows = _SUITES[args.suite](args.seed)
    out = _out_dir(args)
    csv = [CHECKS_CSV_HEADER]
    all_ok = True
    for name, lhs, rhs, ok in rows:
        csv.append(f"{name},{lhs!r},{rhs!r},nan,nan,{int(ok)},{args.seed},0")
        all_ok = all_ok and ok
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    (out / f"checks_{args.suite}.csv").write_text("\n".join(csv) + "\n")
    _write_manifest(out, args, time.perf_counter() - t0)
    return 0 if all_ok else 1


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="anisopolar", description=__doc__)
    top.add_argument("--config", help="INI config file; flags override it")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None,
                       help="output directory (default $ANISOPOLAR_OUT or ./runs)")

    def function_flags(p):
        p.add_argument("--P", default="euclid2",
                       help="fixture name, or 'semi' with --terms/--weights")
        p.add_argument("--terms", default=None,
                       help="semi-elliptic terms, e.g. '2 0 1; 1 2 3/2; 0 4 1'")
        p.add_argument("--weights", default=None, help="weight tuple, e.g. '2 4'")
        p.add_argument("--E", default=None,
                       help="row-major exponent matrix overriding the designated one")

    p = sub.add_parser("sigma", help="estimate sigma_P of a region")
    function_flags(p)
    p.add_argument("--region", default="all")
    p.add_argument("--samples", type=int, default=2 ** 20)
    common(p)
    p.set_defaults(func=cmd_sigma)

    p = sub.add_parser("integrate", help="polar-coordinate integral of a test function")
    function_flags(p)
    p.set_defaults(P="euclid2_sq")
    p.add_argument("--f", default="gauss")
    p.add_argument("--cutoff", type=float, default=40.0)
    p.add_argument("--samples", type=int, default=2 ** 20)
    common(p)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("classify", help="classify the maxima of a lattice fixture")
    p.add_argument("--fixture", default="example1")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("decay", help="sup-norm decay curve and slope fit")
    p.add_argument("--fixture", default="example1")
    p.add_argument("--K", type=int, default=64)
    p.add_argument("--nmin", type=int, default=256)
    p.add_argument("--nmax", type=int, default=1024)
    p.add_argument("--per-octave", dest="per_octave", type=int, default=4)
    p.add_argument("--method", default="fft", choices=("fft", "direct"))
    p.add_argument("--band", type=float, default=0.05)
    common(p)
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("checks", help="run a named property suite")
    p.add_argument("--suite", default="group_laws")
    common(p)
    p.set_defaults(func=cmd_checks)
    return top


def _apply_config(parser, argv):
    """Pre-parse --config and inject file values as argument defaults."""
    ns, _ = parser.parse_known_args(argv)
    if not getattr(ns, "config", None):
        return argv
    cfg = configparser.ConfigParser()
    cfg.optionxform = str  # option names are flag names; keep their case
    if not cfg.read(ns.config):
        raise SystemExit(f"cannot read config file {ns.config!r}")
    injected = []
    sections = ["run"]
    if ns.command and cfg.has_section(ns.command):
        sections.append(ns.command)
    seen = set(a.split("=")[0] for a in argv if a.startswith("--"))
    for section in sections:
        if not cfg.has_section(section):
            continue
        for key, val in cfg.items(section):
            flag = f"--{key.replace('_', '-')}"
            if flag in seen or flag == "--command":
                continue
            injected.extend([flag, val])
    return argv + injected


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
