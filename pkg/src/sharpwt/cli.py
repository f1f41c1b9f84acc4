"""Command-line driver: exponent experiments, lemma ratio scans,
decomposition dump/verify, operator application, and A_p evaluation.

Exit status is 0 iff every asserted window or report check passed; failures
are listed one per line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from sharpwt.decomp import Decomposition, decompose, verify_decomposition
from sharpwt.gridfn import GridFunction
from sharpwt.harness import (
    ACCEPTANCE_RUNS,
    ExperimentSpec,
    emit,
    exponent_experiment,
    ratio_scan,
)
from sharpwt.intrinsic import intrinsic_engine
from sharpwt.operators import dyadic_square, g_psi, hilbert, hilbert_max, maximal, s_psi
from sharpwt.weights import Weight, ap_characteristic, power_cell_averages, power_weight


def parse_function(spec: str, level_L: int, resolution_s: int, origin=0,
                   seed: int = 0) -> GridFunction:
    """Function specs: const:<c> | indicator:<a>:<b> | haar:<a>:<b> |
    power:<a> | spike:<i> | random:<seed> | file:<path.json>."""
    n = 2 ** (level_L + resolution_s)
    probe = GridFunction(level_L, resolution_s, np.zeros(n), origin)
    kind, _, rest = spec.partition(":")
    if kind == "file":
        return GridFunction.load(rest)
    if kind == "const":
        return probe.with_values(np.full(n, float(rest)))
    if kind == "random":
        rng = np.random.default_rng(int(rest) if rest else seed)
        return probe.with_values(rng.standard_normal(n))
    if kind == "power":
        return probe.with_values(power_cell_averages(probe.cell_edges(), float(rest)))
    if kind == "spike":
        vals = np.zeros(n)
        vals[int(rest)] = float(n)
        return probe.with_values(vals)
    if kind in ("indicator", "haar"):
        a_str, _, b_str = rest.partition(":")
        a, b = Fraction(a_str), Fraction(b_str)
        edges = probe.cell_edges()
        vals = np.zeros(n)
        inside = (edges[:-1] >= float(a)) & (edges[1:] <= float(b))
        if kind == "indicator":
            vals[inside] = 1.0
        else:
            mid = float((a + b) / 2)
            vals[inside & (edges[1:] <= mid)] = 1.0
            vals[inside & (edges[:-1] >= mid)] = -1.0
        return probe.with_values(vals)
    raise ValueError(f"cannot parse function spec {spec!r}")


def parse_weight(spec: str, level_L: int, resolution_s: int, origin=0) -> Weight:
    """Weight specs: const:<c> | power:<a> | file:<path.json>."""
    kind, _, rest = spec.partition(":")
    if kind == "const":
        n = 2 ** (level_L + resolution_s)
        return Weight(GridFunction(level_L, resolution_s, np.full(n, float(rest)), origin))
    if kind == "power":
        return power_weight(level_L, resolution_s, float(rest), origin)
    if kind == "file":
        return Weight(GridFunction.load(rest))
    raise ValueError(f"cannot parse weight spec {spec!r}")


APPLY_OPS = ("maximal", "sd", "spsi", "gpsi", "hilbert", "hilbert-max", "galpha", "gtilde")


def _apply_operator(name: str, f: GridFunction, args) -> GridFunction:
    if name == "maximal":
        return maximal(f)
    if name == "sd":
        return dyadic_square(f)
    if name == "hilbert":
        return hilbert(f)
    if name == "hilbert-max":
        return hilbert_max(f)
    if name == "gpsi":
        return g_psi(f)
    from sharpwt.intrinsic import ConeQuadrature

    quad = ConeQuadrature.for_grid(f, args.nodes_per_box, args.t_min_level, args.t_max_level)
    if name == "spsi":
        return s_psi(f, args.beta, quad)
    engine = intrinsic_engine(f, args.alpha, args.q, quad, args.mode)
    return engine.g_cone(args.beta) if name == "galpha" else engine.g_tilde()


def _read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def _write_csv_function(g: GridFunction, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("x,value\n")
        for x, v in g.to_csv_rows():
            fh.write(f"{x!r},{v!r}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sharpwt")
    ap.add_argument("--config", help="flat key=value defaults file")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--res", type=int, default=8, help="resolution s")
        p.add_argument("--L", type=int, default=0, help="domain level (side 2^L)")
        p.add_argument("--origin", default="0")

    pe = sub.add_parser("exponent", help="extremal-family exponent fit")
    common(pe)
    pe.add_argument("--run", choices=sorted(ACCEPTANCE_RUNS), help="frozen acceptance run")
    pe.add_argument("--op", default="maximal")
    pe.add_argument("--p", type=float, default=2.0)
    pe.add_argument("--deltas", default="0.5,0.25,0.125,0.0625")
    pe.add_argument("--family", choices=("buckley", "dual-pair"), default="buckley")
    pe.add_argument("--window", default=None, help="lo,hi slope assertion")

    pr = sub.add_parser("ratio-scan", help="lemma inequality scan over the corpus")
    common(pr)
    pr.add_argument("--lemma", required=True)
    pr.add_argument("--n", type=int, default=None, help="random corpus size")
    pr.add_argument("--scan-res", type=int, default=None, help="override scan base resolution")

    pd = sub.add_parser("decompose", help="stopping-time decomposition to JSON")
    common(pd)
    pd.add_argument("--fn", required=True)

    pv = sub.add_parser("verify", help="re-read a decomposition dump and re-check it")
    pv.add_argument("--in", dest="infile", required=True)

    pa = sub.add_parser("apply", help="apply an operator, emit CSV")
    common(pa)
    pa.add_argument("--op", choices=APPLY_OPS, required=True)
    pa.add_argument("--fn", required=True)
    pa.add_argument("--alpha", type=float, default=0.5)
    pa.add_argument("--q", type=int, default=17)
    pa.add_argument("--beta", type=float, default=1.0)
    pa.add_argument("--mode", choices=("lp", "dictionary"), default="lp")
    pa.add_argument("--nodes-per-box", type=int, default=1)
    pa.add_argument("--t-min-level", type=int, default=None)
    pa.add_argument("--t-max-level", type=int, default=None)

    pw = sub.add_parser("ap", help="A_p characteristic of a weight")
    common(pw)
    pw.add_argument("--weight", required=True)
    pw.add_argument("--p", type=float, default=2.0)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    args, failures = ap.parse_args(argv), []
    if args.config:
        # config pairs become subcommand flags placed right after the
        # command token, so explicit CLI flags still win
        pairs = []
        for key, val in _read_config(args.config).items():
            pairs += [f"--{key}", val]
        idx = argv.index(args.command) + 1
        args = ap.parse_args(argv[:idx] + pairs + argv[idx:])

    if args.command == "exponent":
        if args.run:
            spec, target, window = ACCEPTANCE_RUNS[args.run]
            spec = ExperimentSpec(spec.operator, spec.p, spec.deltas, spec.resolution_s,
                                  spec.level_L, spec.weight_family, spec.fn_family,
                                  args.seed, args.out)
        else:
            deltas = tuple(float(x) for x in args.deltas.split(","))
            spec = ExperimentSpec(args.op, args.p, deltas, args.res, max(args.L, 1),
                                  args.family, seed=args.seed, out=args.out)
            target, window = None, None
            if args.window:
                lo, hi = (float(x) for x in args.window.split(","))
                window = (lo, hi)
        result = exponent_experiment(spec)
        print(f"slope={result.slope:.6g} intercept={result.intercept:.6g} r2={result.r2:.6g}")
        if args.out:
            emit(result, args.out, args.format)
        if window is not None and not window[0] <= result.slope <= window[1]:
            failures.append(f"slope {result.slope:.4f} outside window [{window[0]}, {window[1]}]")

    elif args.command == "ratio-scan":
        report = ratio_scan(args.lemma, seed=args.seed, resolution_s=args.scan_res,
                            n_random=args.n)
        print(f"lemma {report.lemma}: max={report.max_base:.6g} drift={report.drift:.4g} "
              f"argmax={report.argmax} passed={report.passed}")
        if args.out:
            emit(report, args.out, args.format)
        if not report.passed:
            failures.append(f"ratio scan {args.lemma} failed (max={report.max_base}, drift={report.drift})")

    elif args.command == "decompose":
        f = parse_function(args.fn, args.L, args.res, Fraction(args.origin), args.seed)
        d = decompose(f)
        payload = d.to_json()
        if args.out:
            with open(args.out, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
        rep = verify_decomposition(f, d)
        print(f"generations={len(d.generations)} cubes={rep['n_cubes']} verified={rep['passed']}")
        if not rep["passed"]:
            failures.append("decomposition verifier failed")

    elif args.command == "verify":
        with open(args.infile) as fh:
            d = Decomposition.from_json(json.load(fh))
        rep = verify_decomposition(d.f, d)
        for key in ("ii_disjoint", "iii_nested", "iv_half_measure", "sparse_sets", "i_pointwise"):
            print(f"{key}: {'pass' if rep[key]['passed'] else 'FAIL'} {rep[key]}")
        if not rep["passed"]:
            failures.append("re-checked decomposition failed verification")

    elif args.command == "apply":
        f = parse_function(args.fn, args.L, args.res, Fraction(args.origin), args.seed)
        g = _apply_operator(args.op, f, args)
        if args.out:
            _write_csv_function(g, args.out)
        print(f"{args.op}: n={g.ncells} min={g.values.min():.6g} max={g.values.max():.6g}")

    elif args.command == "ap":
        w = parse_weight(args.weight, args.L, args.res, Fraction(args.origin))
        val = ap_characteristic(w, args.p)
        print(f"A_p(p={args.p:g}) = {val!r}")

    for msg in failures:
        print(f"ASSERTION FAILED: {msg}", file=sys.stderr)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
