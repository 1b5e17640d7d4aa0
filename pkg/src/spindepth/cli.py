"""Command line interface.

Subcommands: boundary, depth, simulate, smve, compare, metrics, plus the
figure pipelines fig1c, fig4, figs1, figs2 and figs4 that emit plot-ready
CSV bundles.  Exit codes: 0 success, 1 usage error, 2 data/config error,
3 numerical failure.  SPINDEPTH_OUTPUT_DIR sets the default output
directory.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DataError, NumericalError
from .estimation import sample_moments, smve, unbiased_second_moment
from .io_cli import (
    AnalysisConfig,
    atomic_write_text,
    emit_boundary_csv,
    emit_report,
    load_report,
    parse_shots,
    run_analysis,
    write_shots,
)
from .metrics import squeezing_report
from .producibility import (
    boundary_curve,
    criterion_closed_form,
    depth_bound,
    f_function,
    tangent_criterion,
)
from .simulation import (
    NoiseModel,
    compare_criteria_sweep,
    random_producible_moments,
    sample_coherent_shots,
    sample_dicke_shots,
)
from .spin_algebra import CollectiveMoments

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out_dir(arg: str | None) -> Path:
    if arg:
        return Path(arg)
    return Path(os.environ.get("SPINDEPTH_OUTPUT_DIR", "."))


def _parse_grid(spec: str | None) -> np.ndarray | None:
    if spec is None:
        return None
    try:
        lo, hi, num = spec.split(",")
        return np.concatenate(([0.0], np.logspace(math.log10(float(lo)), math.log10(float(hi)), int(num))))
    except ValueError:
        raise ConfigError(f"bad grid spec {spec!r}, expected 'lo,hi,num'")


def _noise_from_args(args) -> NoiseModel:
    return NoiseModel(sigma0=args.sigma0, trend_coeff=args.trend)


def _write_json(payload, path: Path) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(path)


def _moments_from_json(path: str) -> CollectiveMoments:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"moments file not found: {path}")
    except json.JSONDecodeError as exc:
        raise DataError(f"moments file {path} is not valid JSON: {exc}")
    keys = {"n_particles", "mean_x", "mean_y", "mean_z", "second_perp", "second_z"}
    if not isinstance(raw, dict) or set(raw) - keys:
        raise DataError(f"moments JSON must contain exactly the keys {sorted(keys)}")
    missing = keys - set(raw)
    if missing:
        raise DataError(f"moments JSON missing keys: {sorted(missing)}")
    try:
        return CollectiveMoments(**raw)
    except (TypeError, ValueError) as exc:
        raise DataError(f"invalid moments: {exc}")


# --------------------------------------------------------------------------
# subcommand implementations
# --------------------------------------------------------------------------


def cmd_boundary(args) -> int:
    out = _out_dir(args.out_dir) / (args.out or "boundary.csv")
    grid = _parse_grid(args.grid)
    paths = emit_boundary_csv(args.n, args.k, out, grid)
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_depth(args) -> int:
    config = AnalysisConfig.from_json(args.config) if args.config else AnalysisConfig()
    shots = parse_shots(args.shots)
    report = run_analysis(config, shots)
    out = _out_dir(args.out_dir) / (args.out or "report.json")
    emit_report(report, out)
    print(out)
    print(
        f"N={report.n_particles} depth(center)={report.depth_center.depth_lower_bound} "
        f"depth({report.n_sigma}sigma)={report.depth_worst_case.depth_lower_bound} "
        f"xi2_gen_db={report.squeezing.xi2_gen_db:.3f}"
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    noise = _noise_from_args(args)
    if args.kind == "dicke":
        records = sample_dicke_shots(args.n, args.shots, args.basis_mix, noise, args.seed)
    else:
        records = sample_coherent_shots(args.n, args.shots, noise, args.seed, args.basis_mix)
    out = _out_dir(args.out_dir) / (args.out or f"{args.kind}_shots.csv")
    write_shots(records, out)
    print(out)
    return EXIT_OK


def cmd_smve(args) -> int:
    try:
        text = Path(args.input).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"input file not found: {args.input}")
    values = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise DataError(f"{args.input}: line {line_no}: not a number: {line!r}")
    s = sample_moments(values)
    value, clamped = smve(s, with_flag=True)
    payload = {
        "n": s.n,
        "m1": s.m1,
        "m2": s.m2,
        "m4": s.m4,
        "mu2_hat": unbiased_second_moment(s),
        "smve": value,
        "smve_std": math.sqrt(value),
        "smve_clamped": clamped,
    }
    if args.out:
        _write_json(payload, _out_dir(args.out_dir) / args.out)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_compare(args) -> int:
    grid = _parse_grid(args.grid)
    if grid is None:
        grid = np.logspace(-4, 4, 50)
    else:
        grid = grid[grid > 0]
    results = compare_criteria_sweep(args.n, grid, args.p)
    lines = ["Lambda,mean_x,x_norm,var_z,depth_new,depth_sm"]
    j_max = args.n / 2.0
    for r in results:
        lines.append(
            f"{r.Lambda!r},{r.moments.mean_x!r},{r.moments.second_perp / j_max**2!r},"
            f"{r.moments.var_z!r},{r.depth_new},{r.depth_sm}"
        )
    out = _out_dir(args.out_dir) / (args.out or "criteria_comparison.csv")
    atomic_write_text(out, "\n".join(lines) + "\n")
    print(out)
    return EXIT_OK


def cmd_metrics(args) -> int:
    moments = _moments_from_json(args.moments)
    rep = squeezing_report(moments)
    payload = {
        "xi2": rep.xi2,
        "xi2_gen": rep.xi2_gen,
        "xi2_db": rep.xi2_db,
        "xi2_gen_db": rep.xi2_gen_db,
        "number_squeezing_db": rep.number_squeezing_db,
        "flags": list(rep.flags),
    }
    if args.out:
        _write_json(payload, _out_dir(args.out_dir) / args.out)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


# --------------------------------------------------------------------------
# figure pipelines (plot-ready CSV bundles, bit-for-bit reproducible)
# --------------------------------------------------------------------------


def _closed_form_line(n: int, k: int, x_lo: float, x_hi: float, num: int = 400):
    j_max = n / 2.0
    xs = np.linspace(x_lo, x_hi, num)
    rows = []
    for x in xs:
        moments = CollectiveMoments(n, 0.0, 0.0, 0.0, float(x) * j_max**2, j_max**2)
        _, bound = criterion_closed_form(n, k, moments)
        rows.append((float(x), bound))
    return rows


def cmd_fig1c(args) -> int:
    out_dir = _out_dir(args.out_dir)
    written = []
    for k in args.k:
        if k >= 2 and k % 2 == 0:
            curve = boundary_curve(args.n, k)
            lines = ["x_norm,var_z"]
            lines += [f"{float(x)!r},{float(v)!r}" for x, v in zip(curve.x_norm, curve.var_z)]
        else:
            rows = _closed_form_line(args.n, k, (k + 2) / args.n, 1.0 + 1.0 / args.n)
            lines = ["x_norm,var_z"]
            lines += [f"{x!r},{v!r}" for x, v in rows]
        p = out_dir / f"fig1c_boundary_k{k}.csv"
        atomic_write_text(p, "\n".join(lines) + "\n")
        written.append(p)
    if args.report:
        rep = load_report(args.report)
        j_max = rep.n_particles / 2.0
        payload = {
            "x_norm": rep.jeff_sq.value / j_max**2,
            "x_std": math.sqrt(rep.jeff_sq.variance_of_estimate) / j_max**2,
            "var_z": rep.jz_variance.value,
            "var_std": math.sqrt(rep.jz_variance.variance_of_estimate),
            "depth_center": rep.depth_center.depth_lower_bound,
            "depth_worst_case": rep.depth_worst_case.depth_lower_bound,
        }
        p = out_dir / "fig1c_point.json"
        atomic_write_text(p, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        written.append(p)
    for p in written:
        print(p)
    return EXIT_OK


def cmd_fig4(args) -> int:
    out_dir = _out_dir(args.out_dir)
    written = list(emit_boundary_csv(args.n, [args.k], out_dir / f"fig4_boundary_k{args.k}.csv"))
    for mode in ("haar_symmetric", "squeezed_rotated"):
        states = random_producible_moments(args.n, args.k, args.states, mode, args.seed)
        j_max = args.n / 2.0
        lines = ["x_norm,var_z"]
        lines += [f"{m.second_perp / j_max**2!r},{m.var_z!r}" for m in states]
        p = out_dir / f"fig4_random_{mode}.csv"
        atomic_write_text(p, "\n".join(lines) + "\n")
        written.append(p)
    slope, intercept = tangent_criterion(args.n, args.k, args.tangent_at)
    p = out_dir / "fig4_tangent.json"
    atomic_write_text(
        p,
        json.dumps(
            {"x0": args.tangent_at, "slope": slope, "intercept": intercept},
            indent=2,
            sort_keys=True,
        )
        + "\n",
    )
    written.append(p)
    for q in written:
        print(q)
    return EXIT_OK


def _histogram_csv(values, lo, hi, bins) -> list[str]:
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    lines = ["bin_left,bin_right,count"]
    lines += [
        f"{float(edges[i])!r},{float(edges[i+1])!r},{int(counts[i])}"
        for i in range(len(counts))
    ]
    return lines


def cmd_figs1(args) -> int:
    out_dir = _out_dir(args.out_dir)
    noise = _noise_from_args(args)
    dicke = sample_dicke_shots(args.n, args.shots, 0.5, noise, args.seed)
    coherent = sample_coherent_shots(args.n, args.shots // 2, noise, args.seed + 1)
    j = args.n / 2.0
    written = []
    panels = {
        "figs1_dicke_z.csv": [r.value for r in dicke if r.basis == "z"],
        "figs1_dicke_alpha.csv": [r.value for r in dicke if r.basis == "alpha"],
        "figs1_coherent_z.csv": [r.value for r in coherent if r.basis == "z"],
    }
    for name, values in panels.items():
        lo, hi = (-j, j) if "alpha" in name else (-4 * math.sqrt(args.n), 4 * math.sqrt(args.n))
        p = out_dir / name
        atomic_write_text(p, "\n".join(_histogram_csv(values, lo, hi, args.bins)) + "\n")
        written.append(p)
    for p in written:
        print(p)
    return EXIT_OK


def cmd_figs2(args) -> int:
    out_dir = _out_dir(args.out_dir)
    rng = np.random.default_rng(args.seed)
    mu2, mu4 = 0.5, 0.375  # arcsine distribution on (-1, 1)
    lines = ["n,mean_smve,empirical_var_mu2hat,analytic,naive"]
    for n in args.sizes:
        x = np.sin(rng.uniform(-math.pi / 2, math.pi / 2, size=(args.reps, n)))
        m1 = x.mean(axis=1, keepdims=True)
        d = x - m1
        m2 = (d**2).mean(axis=1)
        m4 = (d**4).mean(axis=1)
        est = n / ((n - 3) * (n - 2)) * m4 - n * (n * n - 3) / (
            (n - 3) * (n - 2) * (n - 1) ** 2
        ) * m2**2
        mu2_hat = n / (n - 1) * m2
        analytic = mu4 / n - (n - 3) / (n * (n - 1)) * mu2**2
        naive = (mu4 - mu2**2) / n
        lines.append(
            f"{n},{float(est.mean())!r},{float(mu2_hat.var(ddof=1))!r},"
            f"{float(analytic)!r},{float(naive)!r}"
        )
    p = out_dir / "figs2_smve.csv"
    atomic_write_text(p, "\n".join(lines) + "\n")
    print(p)
    return EXIT_OK


def cmd_figs4(args) -> int:
    args.out = "figs4_comparison.csv"
    return cmd_compare(args)


# --------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="spindepth", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--out-dir", help="output directory (default $SPINDEPTH_OUTPUT_DIR or .)")
        return p

    p = add("boundary", cmd_boundary, "emit k-producibility boundary curves as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, action="append", required=True, help="even group size (repeatable)")
    p.add_argument("--grid", help="lambda grid as 'lo,hi,num' (log spaced)")
    p.add_argument("--out", help="output CSV name")

    p = add("depth", cmd_depth, "run the depth-certification pipeline on shot records")
    p.add_argument("--config", help="JSON analysis config")
    p.add_argument("--shots", required=True, help="shot CSV (shot_id,basis,n_plus,n_minus)")
    p.add_argument("--out", help="report JSON name")

    p = add("simulate", cmd_simulate, "generate simulated shot records")
    p.add_argument("--kind", choices=("dicke", "coherent"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--basis-mix", type=float, default=0.5, help="fraction of alpha-basis shots")
    p.add_argument("--sigma0", type=float, default=0.0, help="baseline detection std (atoms)")
    p.add_argument("--trend", type=float, default=0.0, help="detection std trend coefficient")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV name")

    p = add("smve", cmd_smve, "sample moments and variance-of-variance of a value file")
    p.add_argument("--input", required=True, help="text file, one value per line")
    p.add_argument("--out", help="output JSON name (default: stdout)")

    p = add("compare", cmd_compare, "compare detected depths of the two criteria")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True, help="white-noise admixture")
    p.add_argument("--grid", help="Lambda grid as 'lo,hi,num' (default 1e-4,1e4,50)")
    p.add_argument("--out", help="output CSV name")

    p = add("metrics", cmd_metrics, "squeezing metrics of a moments JSON")
    p.add_argument("--moments", required=True)
    p.add_argument("--out", help="output JSON name (default: stdout)")

    p = add("fig1c", cmd_fig1c, "boundary family plus measured point (plot data)")
    p.add_argument("--n", type=int, default=8000)
    p.add_argument("--k", type=int, action="append", default=None)
    p.add_argument("--report", help="overlay a report.json as the measured point")

    p = add("fig4", cmd_fig4, "single boundary, random producible states, tangent line")
    p.add_argument("--n", type=int, default=8000)
    p.add_argument("--k", type=int, default=28)
    p.add_argument("--states", type=int, default=2000)
    p.add_argument("--tangent-at", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)

    p = add("figs1", cmd_figs1, "shot histograms for ideal and coherent states")
    p.add_argument("--n", type=int, default=8000)
    p.add_argument("--shots", type=int, default=10000)
    p.add_argument("--bins", type=int, default=81)
    p.add_argument("--sigma0", type=float, default=0.0)
    p.add_argument("--trend", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)

    p = add("figs2", cmd_figs2, "variance-of-variance estimator versus analytic prediction")
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--sizes", type=int, nargs="+", default=[5, 10, 30, 100, 300, 1000])
    p.add_argument("--seed", type=int, default=0)

    p = add("figs4", cmd_figs4, "criterion-comparison sweep (plot data)")
    p.add_argument("--n", type=int, default=4000)
    p.add_argument("--p", type=float, default=0.05)
    p.add_argument("--grid", help="Lambda grid as 'lo,hi,num' (default 1e-4,1e4,50)")
    p.add_argument("--seed", type=int, default=0)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "fig1c" and args.k is None:
        args.k = [1, 10, 28, 100]
    try:
        return args.func(args)
    except (DataError, ConfigError) as exc:
        print(f"spindepth: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"spindepth: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
