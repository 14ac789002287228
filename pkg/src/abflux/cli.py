"""Command-line front end.

Subcommands: qmatrix, verify, sweep, oracle, propagate.

Exit codes: 0 pass, 1 scientific failure, 2 usage error, 3 domain rejection
(s = 0), 4 numerical-quality flag (unitarity).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from pathlib import Path

from . import bounds, operators, propagator, specfun
from .spectral import ModelParams, ZetaSpec

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_NUMERICAL = 4

ORACLE_TOL = 1e-8


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    """12 significant digits, no negative zero."""
    return f"{x + 0.0:.12g}"


def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (inclusive) or a comma list."""
    text = str(text).strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}; expected start:stop:step")
        start, stop, step = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(count))
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def parse_zeta(text: str) -> ZetaSpec:
    try:
        return ZetaSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def default_workers() -> int:
    env = os.environ.get("ABFLUX_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat TOML file of flag values; flags override it")
    p.add_argument("--out", type=Path, help="output file (default: standard output)")
    p.add_argument("--seed", type=int, default=42, help="power-iteration seed")
    p.add_argument("--workers", type=int, default=None, help="parallel workers (env ABFLUX_WORKERS)")


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abflux", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("qmatrix", help="write Q, A, X or Xdot as CSV")
    _common(q)
    q.add_argument("--kind", choices=["q", "a", "x", "xdot"], default="q")
    q.add_argument("--s", type=float, required=True)
    q.add_argument("--n", type=int, default=8, help="truncation dimension N")
    q.add_argument("--B", type=float, default=1.0)

    v = sub.add_parser("verify", help="run a bound-certificate suite, JSON report")
    _common(v)
    v.add_argument("--suite", choices=[s.value for s in bounds.Suite], required=True)
    v.add_argument("--n", type=int, default=1024)
    v.add_argument("--B", type=float, default=1.0)
    v.add_argument("--s-grid", type=parse_grid, default=bounds.DEFAULT_S_GRID)
    v.add_argument("--sigma-grid", type=parse_grid, default=bounds.DEFAULT_SIGMA_GRID)
    v.add_argument("--B-grid", type=parse_grid, default=bounds.DEFAULT_B_GRID)
    v.add_argument("--taus", type=parse_grid, default=None)
    v.add_argument("--s-end", type=float, default=1.0)
    v.add_argument("--zeta", type=parse_zeta, default=ZetaSpec.parse("cos_perturbed:0.5"))

    w = sub.add_parser("sweep", help="tau sweep of the adiabatic error, CSV")
    _common(w)
    w.add_argument("--B", type=float, default=1.0)
    w.add_argument("--s-end", type=float, default=1.0)
    w.add_argument("--n", type=int, default=48)
    w.add_argument("--taus", type=parse_grid, default=bounds.DEFAULT_TAUS)
    w.add_argument("--zeta", type=parse_zeta, default=ZetaSpec())
    w.add_argument("--slope-window", type=parse_grid, default=(-1.2, -0.8),
                   help="accepted slope interval lo,hi")
    w.add_argument("--k-res", type=int, default=24)

    o = sub.add_parser("oracle", help="closed-form Q_mn against the quadrature oracle")
    _common(o)
    o.add_argument("--m", type=int, required=True)
    o.add_argument("--n", type=int, required=True)
    o.add_argument("--s", type=float, default=1.0)
    o.add_argument("--B", type=float, default=1.0)

    r = sub.add_parser("propagate", help="single integration of C(s,0), trajectory CSV")
    _common(r)
    r.add_argument("--B", type=float, default=1.0)
    r.add_argument("--tau", type=float, default=20.0)
    r.add_argument("--s-end", type=float, default=1.0)
    r.add_argument("--n", type=int, default=32)
    r.add_argument("--zeta", type=parse_zeta, default=ZetaSpec())
    r.add_argument("--k-res", type=int, default=24)
    r.add_argument("--stride", type=int, default=1000, help="trajectory output stride in steps")

    if defaults:
        for name, action in sub.choices.items():
            for a in action._actions:
                if a.dest in defaults:
                    a.required = False
            known = {a.dest for a in action._actions}
            action.set_defaults(**{k: v for k, v in defaults.items() if k in known})
    return parser


_CONVERTERS = {
    "s_grid": parse_grid,
    "sigma_grid": parse_grid,
    "B_grid": parse_grid,
    "taus": parse_grid,
    "slope_window": parse_grid,
    "zeta": parse_zeta,
    "out": Path,
}


def load_config(path: Path) -> dict:
    """Flat TOML: keys mirror the long flags (``s-end`` or ``s_end``)."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    out = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            raise UsageError(f"config must be flat; section [{key}] found")
        dest = key.replace("-", "_")
        if dest == "N":
            dest = "n"
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        conv = _CONVERTERS.get(dest)
        out[dest] = conv(value) if conv else value
    return out


def parse_args(argv=None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    defaults = None
    if known.config is not None:
        try:
            defaults = load_config(known.config)
        except (OSError, ValueError, UsageError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"cannot load config {known.config}: {exc}") from exc
    args = build_parser(defaults).parse_args(argv)
    if args.workers is None:
        args.workers = default_workers()
    return args


def _open_out(path: Path | None):
    if path is None:
        return sys.stdout, False
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8"), True


def cmd_qmatrix(args) -> int:
    if args.n < 2:
        raise UsageError("--n must be >= 2")
    if args.B <= 0:
        raise UsageError("--B must be positive")
    if args.s == 0:
        print("error: Q, A, X are undefined at s = 0", file=sys.stderr)
        return EXIT_DOMAIN
    builders = {
        "q": lambda: operators.build_Q(args.s, args.n),
        "a": lambda: operators.build_A_approx(args.s, args.n),
        "x": lambda: operators.build_X(args.s, args.n, args.B),
        "xdot": lambda: operators.build_Xdot(args.s, args.n, args.B),
    }
    M = builders[args.kind]()
    fh, close = _open_out(args.out)
    try:
        fh.write(f"# kind={args.kind} B={fmt(args.B)} s={fmt(args.s)} N={args.n} seed={args.seed}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["m", "n", "re", "im"])
        for m in range(args.n):
            for n in range(m + 1, args.n):
                z = complex(M[m, n])
                writer.writerow([m, n, fmt(z.real), fmt(z.imag)])
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.n < 2:
        raise UsageError("--n must be >= 2")
    try:
        params = ModelParams(B=args.B, tau=1.0, N=max(args.n, 2), zeta=args.zeta)
        args.zeta.check(args.s_end)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    grids = bounds.Grids(
        s_grid=tuple(args.s_grid),
        sigma_grid=tuple(args.sigma_grid),
        B_grid=tuple(args.B_grid),
        N=args.n,
        s_end=args.s_end,
        seed=args.seed,
    )
    if args.taus is not None:
        grids.taus = tuple(args.taus)
        grids.int_qtau_taus = tuple(args.taus)
    try:
        certs = bounds.certify(args.suite, params, grids, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    fh, close = _open_out(args.out)
    try:
        rows = bounds.report(certs)
        for row in rows:
            row["context"]["seed"] = args.seed
        json.dump(rows, fh, indent=2, sort_keys=True)
        fh.write("\n")
    finally:
        if close:
            fh.close()
    failed = [c for c in certs if not c.passed]
    for c in failed:
        print(f"FAIL {c.name} {json.dumps(c.context, sort_keys=True)} "
              f"value={c.numeric_value!r} bound={c.bound_value!r} {c.reason}", file=sys.stderr)
    return EXIT_OK if bounds.all_pass(certs) else EXIT_FAIL


def cmd_sweep(args) -> int:
    taus = list(args.taus)
    if len(taus) < 3:
        raise UsageError("sweep needs at least 3 tau values")
    if len(args.slope_window) != 2:
        raise UsageError("--slope-window needs two numbers lo,hi")
    try:
        params = ModelParams(B=args.B, tau=taus[0], N=args.n, zeta=args.zeta)
        args.zeta.check(args.s_end)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    control = propagator.StepControl(k_res=args.k_res)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", propagator.UnitarityWarning)
        try:
            result = propagator.tau_sweep(args.s_end, taus, params, control, workers=args.workers)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    fh, close = _open_out(args.out)
    try:
        fh.write(f"# B={fmt(args.B)} s_end={fmt(args.s_end)} N={args.n} zeta={args.zeta.label()} "
                 f"k_res={args.k_res} seed={args.seed}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tau", "error_norm", "bound"])
        for tau, err, bound in result.rows():
            writer.writerow([fmt(tau), fmt(err), fmt(bound)])
        writer.writerow(["slope", fmt(result.slope), ""])
    finally:
        if close:
            fh.close()
    if any(result.flagged):
        print("unitarity defect above tolerance", file=sys.stderr)
        return EXIT_NUMERICAL
    lo, hi = sorted(args.slope_window)
    ok = lo <= result.slope <= hi and result.all_below_bound
    if not ok:
        print(f"sweep failed: slope={result.slope:.4f} window=[{lo}, {hi}] "
              f"below_bound={result.all_below_bound}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_oracle(args) -> int:
    m, n = args.m, args.n
    if m == n:
        raise UsageError("oracle compares off-diagonal entries; need m != n")
    if m < 0 or n < 0:
        raise UsageError("indices must be nonnegative")
    if args.B <= 0:
        raise UsageError("--B must be positive")
    if args.s == 0:
        print("error: Q is undefined at s = 0", file=sys.stderr)
        return EXIT_DOMAIN
    closed = float(operators.build_Q(args.s, max(m, n) + 1)[m, n].imag)
    form = specfun.oracle_inner_product(m, n, args.s, args.B, specfun.Weight.HDOT)
    oracle = form / (2 * args.B * (n - m))
    diff = float(abs(closed - oracle))
    fh, close = _open_out(args.out)
    try:
        fh.write(f"m={m} n={n} s={fmt(args.s)} B={fmt(args.B)}\n")
        fh.write(f"closed_form_Im_Q={closed!r}\n")
        fh.write(f"oracle={oracle!r}\n")
        fh.write(f"abs_difference={diff!r}\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK if diff <= ORACLE_TOL else EXIT_FAIL


def cmd_propagate(args) -> int:
    try:
        params = ModelParams(B=args.B, tau=args.tau, N=args.n, zeta=args.zeta)
        args.zeta.check(args.s_end)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.s_end <= 0:
        raise UsageError("--s-end must be positive")
    control = propagator.StepControl(k_res=args.k_res, trajectory_stride=max(args.stride, 0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", propagator.UnitarityWarning)
        res = propagator.integrate_C(args.s_end, params, control)
    bound = propagator.adiabatic_error_bound(args.s_end, params)
    if args.out is not None:
        fh, close = _open_out(args.out)
        try:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["s", "error_norm", "unitarity_defect"])
            for s, err, defect in res.trajectory:
                writer.writerow([fmt(s), fmt(err), fmt(defect)])
        finally:
            if close:
                fh.close()
    summary = {
        "B": args.B, "tau": args.tau, "N": args.n, "zeta": args.zeta.label(), "s_end": args.s_end,
        "steps": res.steps, "error_norm": res.error_norm, "bound": bound,
        "unitarity_defect": res.unitarity_defect, "seed": args.seed,
    }
    print(json.dumps(summary, sort_keys=True))
    if res.flagged:
        return EXIT_NUMERICAL
    return EXIT_OK if res.error_norm <= bound else EXIT_FAIL


COMMANDS = {
    "qmatrix": cmd_qmatrix,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "propagate": cmd_propagate,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
