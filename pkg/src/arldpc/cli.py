"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .density_evolution import DEConfig
from .ensembles import FamilySpec, preset
from .lifted_codes import export_sparse, lift, simulate_protograph
from .protograph import ProtographError
from .reports import (
    TOOL_VERSION,
    ConfigError,
    ReportTable,
    RunManifest,
    digest,
    family_table,
    figdata,
    growth_table,
    load_family_file,
    parse_L_list,
    table1,
    table3,
    threshold_table,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _families(args) -> tuple[list[FamilySpec], list[str], str]:
    if args.family_file and args.preset:
        raise ConfigError("give either --family-file or --preset, not both")
    if args.family_file:
        specs, notes = load_family_file(args.family_file)
        with open(args.family_file) as fh:
            text = fh.read()
        return specs, notes, text
    if args.preset:
        try:
            specs = [preset(p) for p in args.preset]
        except ProtographError as exc:
            raise ConfigError(str(exc)) from None
        return specs, [], "presets:" + ",".join(args.preset)
    raise ConfigError("no families given (use --family-file or --preset)")


def _eps_list(text: str) -> list[float]:
    """``a:b:step`` (inclusive) or a comma list."""
    try:
        if ":" in text:
            a, b, s = (float(v) for v in text.split(":"))
            if s <= 0 or b < a:
                raise ValueError
            n = int(round((b - a) / s))
            return [round(a + i * s, 10) for i in range(n + 1)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad --eps specification {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", choices=("csv", "json"), default="csv", help="output format")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for independent (family, L) jobs")
    common.add_argument("--tol", type=float, default=1e-5, help="bisection tolerance")
    common.add_argument("--output", "-o", help="write the result here instead of stdout")
    common.add_argument("--manifest", help="write a run manifest (JSON) here")

    fam = argparse.ArgumentParser(add_help=False)
    fam.add_argument("--family-file", help="INI-style family description")
    fam.add_argument("--preset", action="append", help="preset family id (1-4, gcd(J,K)); repeatable")
    fam.add_argument("--L", dest="L", help="termination factors, e.g. 3..8,20 (default: family L_list)")

    p = argparse.ArgumentParser(prog="arldpc", description="Terminated protograph LDPC convolutional code ensembles")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("family", parents=[common, fam], help="structure of terminated ensembles")
    sub.add_parser("threshold", parents=[common, fam], help="BEC density-evolution thresholds")
    sub.add_parser("growthrate", parents=[common, fam], help="minimum distance growth rates")
    s = sub.add_parser("simulate", parents=[common, fam], help="Monte Carlo peeling decoding")
    s.add_argument("--N", type=int, required=True, help="lifting factor")
    s.add_argument("--eps", required=True, help="erasure probabilities a:b:step or comma list")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--export-matrix", help="write one lifted parity-check matrix (sparse coordinates) here")
    t1 = sub.add_parser("table1", parents=[common], help="(3,6) GCD family table")
    t1.add_argument("--L", dest="L", help="termination factors with computed growth rates (default 3..8)")
    t3 = sub.add_parser("table3", parents=[common], help="edge-spreading examples table")
    t3.add_argument("--L", dest="L", help="termination factors with computed growth rates (default 2..8)")
    t3.add_argument("--examples", default="1,2,3,4")
    f = sub.add_parser("figdata", parents=[common], help="curve data: 2 and 3 for the (J,2J) GCD families, 4 for (3,9), (3,12), (4,6)")
    f.add_argument("figure", type=int, choices=(2, 3, 4), help="curve set")
    f.add_argument("--L", dest="L", help="termination factors for threshold curves")
    f.add_argument("--growth-L", help="termination factors for growth-rate curves")
    return p


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        if args.tol <= 0:
            raise ConfigError("--tol must be positive")
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        table, status, config_text = _dispatch(args)
    except (ConfigError, ProtographError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    payload = table.render(args.out)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    if args.manifest:
        m = RunManifest(["arldpc"] + argv, digest(args.command, config_text, str(args.tol)), args.seed,
                        TOOL_VERSION, status, round(time.perf_counter() - t0, 3))
        with open(args.manifest, "w") as fh:
            fh.write(m.to_json())
    failed = [s for s in status if s != "ok"]
    if failed:
        print(f"solver failure: {len(failed)} result(s) not ok: {sorted(set(failed))}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _dispatch(args) -> tuple[ReportTable, list[str], str]:
    cfg = DEConfig(bisection_tolerance=args.tol)
    cmd = args.command
    if cmd in ("family", "threshold", "growthrate", "simulate"):
        specs, notes, text = _families(args)
        for n in notes:
            print(f"warning: {n}", file=sys.stderr)
        L = parse_L_list(args.L) if args.L else None
        if L is None and any(not s.L_list for s in specs):
            raise ConfigError("no termination factors: give --L or L_list in the family file")
        if cmd == "family":
            return family_table(specs, L), [], text
        if cmd == "threshold":
            t, st = threshold_table(specs, L, cfg, args.jobs)
            return t, st, text
        if cmd == "growthrate":
            t, st = growth_table(specs, L, args.tol, args.seed, args.jobs)
            return t, st, text
        return _simulate(args, specs, L) + (text,)
    if cmd == "table1":
        kw = {"computed_L": parse_L_list(args.L)} if args.L else {}
        t, st = table1(tol=args.tol, seed=args.seed, workers=args.jobs, cfg=cfg, **kw)
        return t, st, "table1"
    if cmd == "table3":
        try:
            ex = tuple(int(v) for v in args.examples.split(","))
        except ValueError:
            raise ConfigError(f"bad --examples {args.examples!r}") from None
        kw = {"computed_L": parse_L_list(args.L)} if args.L else {}
        t, st = table3(examples=ex, tol=args.tol, seed=args.seed, workers=args.jobs, cfg=cfg, **kw)
        return t, st, "table3"
    if cmd == "figdata":
        t, st = figdata(args.figure, args.L, args.growth_L, args.tol, args.seed, args.jobs, cfg)
        return t, st, f"figdata{args.figure}"
    raise ConfigError(f"unknown command {cmd!r}")


def _simulate(args, specs, L_override) -> tuple[ReportTable, list[str]]:
    if args.N < 1 or args.trials < 1:
        raise ConfigError("--N and --trials must be positive")
    eps_list = _eps_list(args.eps)
    if any(not 0 <= e <= 1 for e in eps_list):
        raise ConfigError("erasure probabilities must lie in [0, 1]")
    rows = []
    for f in specs:
        for L in (L_override or f.L_list):
            p = f.terminated(L).protograph
            if args.export_matrix:
                export_sparse(lift(p, args.N, np.random.default_rng(args.seed)).H, args.export_matrix)
            for eps in eps_list:
                r = simulate_protograph(p, args.N, eps, args.trials, args.seed, args.jobs, L)
                rows.append({
                    "family": f.name, "L": L, "N": args.N, "epsilon": f"{eps:.4f}", "trials": r.trials,
                    "failures": r.failures, "block_failure_rate": f"{r.block_failure_rate:.6f}",
                    "bit_erasure_rate": f"{r.bit_erasure_rate:.6e}", "ci_half_width": f"{r.half_width:.6f}",
                    "seed": r.seed,
                })
    cols = ["family", "L", "N", "epsilon", "trials", "failures", "block_failure_rate", "bit_erasure_rate",
            "ci_half_width", "seed"]
    return ReportTable(cols, rows, "Peeling decoder Monte Carlo"), []


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
