"""``mdich <gen|extract|oracle|experiment>``.

Exit status: 0 ok, 2 usage or bad input, 3 cap exceeded, 4 a result failed
self-verification, 5 any other domain error (its class name goes to stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import instances as inst
from .errors import BadParameters, CapExceeded, MalformedInput, MdichError, VerificationError
from .experiments import FAMILIES, SUITES, rows_to_csv, run_suite
from .extraction.greedy import greedy_equilateral_or_lacunary
from .extraction.hst import COARSE, FINE, equilateral_or_binary_hst, hst_dichotomy, triangle_to_binary_hst
from .extraction.increasing import equilateral_or_lacunary, extract_k_increasing
from .extraction.results import BINARY_HST, DichotomyResult, Guarantee
from .metric import aspect_ratio, from_json, to_json
from .oracle import (
    DEFAULT_CAPS,
    bound_binary_hst_size,
    bound_lacunary_size,
    four_point_check,
    max_binary_hst_subset,
    max_equilateral_subset,
    max_lacunary_subset,
)
from .trees import HstTree, hst_metric

EXIT_OK, EXIT_USAGE, EXIT_CAP, EXIT_VERIFY, EXIT_DOMAIN = 0, 2, 3, 4, 5
GEN_FAMILIES = ("random", "graph", "ramsey-graph", "composition-power", "path", "equilateral", "lacunary", "hst")
ALGORITHMS = ("bfm-increasing", "eq-or-lacunary", "greedy-lacunary", "triangle-hst", "hst-dichotomy")
QUERIES = ("equilateral", "lacunary", "binary-hst", "four-point")


class UsageError(Exception):
    pass


def read_caps(path: str | None) -> dict:
    """``key=value`` lines; blank lines and ``#`` comments ignored."""
    if path is None:
        return {}
    caps = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep or key not in DEFAULT_CAPS:
            raise UsageError(f"{path}:{lineno}: expected one of {', '.join(DEFAULT_CAPS)} as key=value")
        try:
            caps[key] = int(val.strip())
        except ValueError:
            raise UsageError(f"{path}:{lineno}: cap must be an integer") from None
    return caps


def _load_json(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _need(args, *names):
    for name in names:
        if getattr(args, name.replace("-", "_")) is None:
            raise UsageError(f"--{name} is required here")


# gen -----------------------------------------------------------------------------


def cmd_gen(args) -> int:
    fam = args.family
    if fam == "random":
        _need(args, "n")
        space = inst.random_metric(args.n, args.seed)
    elif fam == "graph":
        _need(args, "n")
        space = inst.random_graph_metric(args.n, args.p, args.seed)
    elif fam == "ramsey-graph":
        s = args.s if args.s is not None else args.n
        if s is None:
            raise UsageError("--s is required for ramsey-graph")
        space, _ = inst.certified_ramsey_graph(s, args.seed, args.max_tries, args.cert_cap)
    elif fam == "composition-power":
        _need(args, "base-n", "t")
        base, _ = inst.certified_ramsey_graph(args.base_n, args.seed, args.max_tries, args.cert_cap)
        space = inst.composition_power(base, args.beta, args.t, args.base, args.size_cap)
        space.meta["provenance"] = inst.provenance(
            "composition-power",
            {"base_n": args.base_n, "beta": args.beta, "t": args.t, "base": args.base, "factor": "ramsey-graph"},
            args.seed,
        )
    elif fam == "path":
        _need(args, "n")
        space = inst.path_metric(args.n)
    elif fam == "equilateral":
        _need(args, "n")
        space = inst.equilateral_metric(args.n)
    elif fam == "lacunary":
        _need(args, "n")
        space = inst.geometric_lacunary(args.n, args.k)
    else:
        _need(args, "n")
        tree = inst.random_hst(args.n, args.k, args.seed, args.max_children)
        obj = tree.to_json()
        obj["provenance"] = inst.provenance("hst", {"n": args.n, "k": args.k, "max_children": args.max_children}, args.seed)
        _write_json(obj, args.out)
        return EXIT_OK
    _write_json(to_json(space), args.out)
    return EXIT_OK


# extract ---------------------------------------------------------------------------


def _summary(res) -> str:
    return f"branch={res.kind} size={res.size} distortion={res.distortion:.6g} guarantee={res.guarantee.size:.6g}"


def cmd_extract(args) -> int:
    space = from_json(_load_json(args.input), check_triangle_ineq=not args.no_triangle_check)
    alg = args.algorithm
    if alg == "bfm-increasing":
        ext = extract_k_increasing(space, args.eps, args.k)
        bad = ext.failures()
        out = {
            "kind": "k-increasing",
            "indices": list(ext.witness.indices),
            "structure": ext.tree.to_json(),
            "distortion": ext.cert.distortion,
            "cert": ext.cert.to_json(),
            "guarantee": ext.guarantee.to_json(),
        }
        summary = f"branch=k-increasing size={ext.size} distortion={ext.cert.distortion:.6g} guarantee={ext.guarantee.size:.6g}"
    else:
        if alg == "eq-or-lacunary":
            res = equilateral_or_lacunary(space, args.eps, args.k)
        elif alg == "greedy-lacunary":
            res = greedy_equilateral_or_lacunary(space, args.alpha, args.k, args.threshold)
        elif alg == "triangle-hst":
            tree, _ = triangle_to_binary_hst(space, args.k)
            g = Guarantee(space.n, args.k / (args.k - 2), {"k": args.k / 2})
            res = DichotomyResult.build(BINARY_HST, space, range(space.n), tree, g)
        elif args.tree is not None:
            tree = HstTree.from_json(_load_json(args.tree))
            res = hst_dichotomy(space, tree, args.c, args.eps, args.h or 2, args.k, args.mode)
        else:
            res = equilateral_or_binary_hst(space, args.eps, args.k, args.h, args.mode)
        bad = res.failures()
        out = res.to_json()
        summary = _summary(res)
    if bad:
        print("verification failed: " + "; ".join(bad), file=sys.stderr)
        return EXIT_VERIFY
    _write_json(out, args.out)
    print(summary, file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


# oracle ----------------------------------------------------------------------------


def cmd_oracle(args) -> int:
    space = from_json(_load_json(args.input), check_triangle_ineq=not args.no_triangle_check)
    caps = read_caps(args.caps)
    q = args.query
    if q == "four-point":
        ok, quad = four_point_check(space, args.alpha, args.k)
        _write_json({"query": q, "alpha": args.alpha, "k": args.k, "holds": ok, "quadruple": quad}, args.out)
        return EXIT_OK
    if q == "equilateral":
        rep = max_equilateral_subset(space, args.alpha, caps, args.exact_rational)
    elif q == "lacunary":
        rep = max_lacunary_subset(space, args.alpha, args.k, caps, args.exact_rational)
    else:
        rep = max_binary_hst_subset(space, args.alpha, args.k, caps, args.exact_rational)
    bad = rep.failures()
    if bad:
        print("verification failed: " + "; ".join(bad), file=sys.stderr)
        return EXIT_VERIFY
    obj = rep.to_json()
    obj["stats"] = {k: v for k, v in obj["stats"].items() if k != "ms"} if args.no_timing else obj["stats"]
    if q != "equilateral" and space.n >= 2 and args.k > 1:
        phi = aspect_ratio(space)
        bound = bound_lacunary_size if q == "lacunary" else bound_binary_hst_size
        obj["bound"] = bound(args.alpha, args.k, phi)
    _write_json(obj, args.out)
    return EXIT_OK


# experiment ------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from None


def cmd_experiment(args) -> int:
    ns = _int_list(args.n_list)
    if not ns:
        raise UsageError("empty n list")
    seeds = _int_list(args.seed_list) if args.seed_list else list(range(args.seed, args.seed + args.seeds))
    rows = run_suite(
        args.suite, ns, args.alpha, args.k, seeds, args.family, read_caps(args.caps), args.require_oracle, args.workers
    )
    if args.csv in (None, "-"):
        rows_to_csv(rows, sys.stdout)
    else:
        with open(args.csv, "w", newline="") as fh:
            rows_to_csv(rows, fh)
    return EXIT_OK


# parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mdich", description="Metric Ramsey dichotomies: instances, extraction, exact oracles.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("--family", required=True, choices=GEN_FAMILIES)
    g.add_argument("--n", type=int)
    g.add_argument("--s", type=int, help="graph size for ramsey-graph")
    g.add_argument("--p", type=float, default=0.5)
    g.add_argument("--base-n", type=int)
    g.add_argument("--beta", type=float, default=2.0)
    g.add_argument("--t", type=int)
    g.add_argument("--base", choices=("copy", "singleton"), default="copy")
    g.add_argument("--k", type=float, default=2.0)
    g.add_argument("--max-children", type=int, default=2)
    g.add_argument("--max-tries", type=int, default=1000)
    g.add_argument("--cert-cap", type=int, default=inst.DEFAULT_CERT_CAP)
    g.add_argument("--size-cap", type=int, default=inst.DEFAULT_SIZE_CAP)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("extract", help="run an extraction algorithm")
    e.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--out")
    e.add_argument("--eps", type=float, default=0.5)
    e.add_argument("--k", type=float, default=2.0)
    e.add_argument("--alpha", type=float, default=3.0)
    e.add_argument("--threshold", type=int)
    e.add_argument("--h", type=int)
    e.add_argument("--mode", choices=(COARSE, FINE), default=FINE)
    e.add_argument("--tree", help="hst-v1 tree over the instance's indices (hst-dichotomy)")
    e.add_argument("--c", type=float, help="claimed equivalence factor of --tree")
    e.add_argument("--no-triangle-check", action="store_true")
    e.set_defaults(func=cmd_extract)

    o = sub.add_parser("oracle", help="exact maximum subsets")
    o.add_argument("--query", required=True, choices=QUERIES)
    o.add_argument("--in", dest="input", required=True)
    o.add_argument("--out")
    o.add_argument("--alpha", type=float, required=True)
    o.add_argument("--k", type=float, default=2.0)
    o.add_argument("--caps")
    o.add_argument("--exact-rational", action="store_true")
    o.add_argument("--no-timing", action="store_true", help="omit timings for reproducible output")
    o.add_argument("--no-triangle-check", action="store_true")
    o.set_defaults(func=cmd_oracle)

    x = sub.add_parser("experiment", help="run an experiment suite to CSV")
    x.add_argument("--suite", required=True, choices=SUITES)
    x.add_argument("--n", dest="n_list", required=True, help="comma-separated sizes")
    x.add_argument("--alpha", type=float, required=True)
    x.add_argument("--k", type=float, default=2.0)
    x.add_argument("--seeds", type=int, default=20, help="number of consecutive seeds")
    x.add_argument("--seed", type=int, default=0, help="first seed")
    x.add_argument("--seed-list")
    x.add_argument("--family", choices=FAMILIES, default="random")
    x.add_argument("--csv")
    x.add_argument("--caps")
    x.add_argument("--require-oracle", action="store_true")
    x.add_argument("--workers", type=int, default=1)
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapExceeded as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CAP
    except VerificationError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (BadParameters, MalformedInput) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MdichError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
