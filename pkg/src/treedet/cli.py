"""Command-line entry point: ``treedet <subcommand> ...``.

Exit codes: 0 success, 1 a verification exceeded its tolerance, 2 usage or
input error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import CapExceeded
from .determinantal import (
    exact_law,
    verify_boltzmann_determinantal,
    verify_uncovered_determinantal,
    window_marginal,
)
from .experiments import (
    FAMILIES,
    ExperimentReport,
    canopy_experiment,
    entropy_sequence,
    local_approx_experiment,
    pelda_experiment,
)
from .laws import SubsetLaw, tv_distance
from .matchings import (
    BoltzmannSampler,
    UniformMaxMatchingSampler,
    exact_matching_law,
    exact_uncovered_law,
    matching_polynomial,
    uncovered,
)
from .recursions import ptemp_kernel_row, solve_m_z, solve_m_zero, zero_kernel_row, zero_w
from .spectral import kernel_projection, positive_temp_projection, windowed_projection
from .trees import (
    Tree,
    TreeError,
    ball,
    bipartition_by_parity,
    gen_alternating,
    gen_kary,
    gen_path,
    gen_regular_ball,
    gen_star,
    parse_graph,
    parse_tree,
    random_tree,
    root_at,
)

log = logging.getLogger("treedet")


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _tree(path: str) -> Tree:
    return parse_tree(_read(path))


def _bip(tree: Tree, root: int = 0):
    return bipartition_by_parity(root_at(tree, root), "S")


# ------------------------------------------------------------- subcommands


def cmd_gen(args) -> tuple[str, bool]:
    fam = args.family
    if fam == "kary":
        t = gen_kary(args.k, args.n, args.cap).tree
    elif fam == "ball":
        t = gen_regular_ball(args.d, args.n, args.cap).tree
    elif fam == "path":
        t = gen_path(args.n, args.cap)
    elif fam == "alt":
        t = gen_alternating(args.n, args.cap).tree
    elif fam == "star":
        t = gen_star(args.n)
    else:  # random
        if args.n < 1:
            raise TreeError("a tree needs at least one vertex")
        t = random_tree(args.n, np.random.default_rng(args.seed))
    return t.to_text(), True


def cmd_matchings(args) -> ExperimentReport:
    tree = _tree(args.tree)
    poly = matching_polynomial(tree)
    summary: dict = {"n": tree.n, "nu": poly.nu}
    if poly.exact:
        summary["mm"] = str(poly.mm)
        summary["poly_coeffs"] = [str(c) for c in poly.coeff]
    else:
        summary["log_mm"] = poly.log_mm
        summary["log_coeffs"] = list(poly.log_coeff)
    if args.z is not None:
        summary["z"] = args.z
        summary["log_partition_function"] = poly.log_evaluate(args.z)
    if args.law:
        if args.z is None:
            law = exact_uncovered_law(tree)
        else:
            probs = {}
            for m, p in exact_matching_law(tree, args.z).items():
                key = tuple(sorted(uncovered(m)))
                probs[key] = probs.get(key, 0.0) + p
            law = SubsetLaw(tuple(range(tree.n)), probs)
        summary["law"] = law.to_dict()["law"]
    records = []
    if args.samples:
        sampler = UniformMaxMatchingSampler(tree) if args.z is None else BoltzmannSampler(tree, args.z)
        for j, m in enumerate(sampler.sample_many(args.samples, args.seed)):
            records.append({"draw": j, "edges": [list(e) for e in m.edges], "uncovered": sorted(uncovered(m))})
    return ExperimentReport("matchings", {"tree": args.tree, "z": args.z}, records, summary, seed=args.seed)


def cmd_kernel(args) -> ExperimentReport:
    g = parse_graph(_read(args.tree))
    if args.window is not None:
        o, R = args.window
        Pi, Pbar = windowed_projection(g, o, R)
        P = Pbar if args.complement else Pi
    elif args.z is not None:
        if not isinstance(g, Tree):
            raise UsageError("--z needs a tree input")
        P = positive_temp_projection(g, _bip(g, args.root), args.z)
    else:
        K = kernel_projection(g)
        P = K if args.complement else K.complement("range")
    d = P.to_dict()
    entries = d.pop("entries")
    n = P.dim
    records = [{"row": i, "entries": entries[i * n : (i + 1) * n]} for i in range(n)]
    d["entries"] = [entries[i * n : (i + 1) * n] for i in range(n)]
    return ExperimentReport("kernel", {"tree": args.tree, "z": args.z, "window": args.window}, records, d)


def cmd_recursions(args) -> ExperimentReport:
    tree = _tree(args.tree)
    rt = root_at(tree, args.root)
    if args.z is None or args.z == 0:
        vals = solve_m_zero(rt)
        w = zero_w(rt, vals)
        row = zero_kernel_row(rt)
        ref = kernel_projection(tree).row(args.root) if tree.n <= 4000 else None
    else:
        bip = _bip(tree, args.root)
        vals = solve_m_z(rt, args.z, bip)
        w = list(vals.w)
        row = ptemp_kernel_row(rt, bip, args.z)
        ref = positive_temp_projection(tree, bip, args.z).row(args.root) if tree.n <= 4000 else None
    records = [
        {"vertex": x, "depth": rt.depth[x], "m": vals.m[x], "w": w[x], "row": row[x]}
        for x in range(tree.n)
    ]
    summary: dict = {"root": args.root, "z": args.z or 0.0}
    if ref is not None:
        dev = float(np.max(np.abs(np.asarray(row, dtype=float) - ref)))
        summary["row_vs_projection"] = dev
        summary["passed"] = dev < args.tol
    return ExperimentReport("recursions", {"tree": args.tree, "root": args.root, "z": args.z}, records,
                            summary, {"row_vs_projection": args.tol})


def cmd_detcheck(args) -> ExperimentReport:
    tree = _tree(args.tree)
    if args.window is not None:
        o, r, R = args.window
        K = kernel_projection(tree)
        _, PbarR = windowed_projection(tree, o, R)
        _, ids = ball(tree, o, r)
        W = sorted(ids)
        tv = tv_distance(window_marginal(K.entries, W), window_marginal(PbarR.entries, W))
        summary = {"o": o, "r": r, "R": R, "window": W, "tv": tv,
                   "diameter": tree.diameter()}
        # exact agreement is only asserted when the window covers the whole tree
        if R >= tree.diameter():
            summary["passed"] = tv < args.tol
        return ExperimentReport("detcheck-window", {"tree": args.tree}, [], summary, {"tv": args.tol})
    if args.z is None:
        rep = verify_uncovered_determinantal(tree, args.tol)
    else:
        rep = verify_boltzmann_determinantal(tree, _bip(tree, args.root), args.z, args.tol)
    summary = rep.to_dict()
    summary["passed"] = rep.passed
    records = []
    if args.per_subset:
        law = exact_law(kernel_projection(tree)) if args.z is None else None
        if law is not None:
            records = [{"subset": list(k), "prob": p} for k, p in sorted(law.probs.items())]
    return ExperimentReport("detcheck", {"tree": args.tree, "z": args.z}, records, summary,
                            {"max_dev": args.tol})


def cmd_local_approx(args) -> ExperimentReport:
    g = parse_graph(_read(args.graph))
    return local_approx_experiment(g, args.r, args.R, args.epsilon, tv=args.tv, workers=args.workers)


def cmd_entropy_seq(args) -> ExperimentReport:
    if args.family == "files":
        indices = args.files
        if not indices:
            raise UsageError("--family files needs --files")
    else:
        if not args.indices:
            raise UsageError("--indices is required")
        indices = args.indices
    return entropy_sequence(args.family, indices, k=args.k, d=args.d, workers=args.workers)


def cmd_canopy(args) -> ExperimentReport:
    return canopy_experiment(args.d, args.depth_max, terms=args.terms)


def cmd_pelda(args) -> ExperimentReport:
    return pelda_experiment(args.n_max)


# ----------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, fmt: str = "json") -> None:
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=fmt)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cap", type=int, default=None, help="vertex cap for generated trees")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="treedet", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"treedet {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a generated tree as an edge list")
    p.add_argument("--family", required=True, choices=("kary", "ball", "path", "alt", "star", "random"))
    p.add_argument("--n", type=int, required=True, help="depth, radius or vertex count")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--d", type=int, default=3)
    _common(p)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("matchings", help="counts, polynomial, exact law and samples")
    p.add_argument("tree")
    p.add_argument("--z", type=float, help="Boltzmann temperature (default: uniform maximum)")
    p.add_argument("--law", action="store_true", help="include the exact uncovered-set law")
    p.add_argument("--samples", type=int, default=0)
    _common(p)
    p.set_defaults(fn=cmd_matchings)

    p = sub.add_parser("kernel", help="projection matrices")
    p.add_argument("tree")
    p.add_argument("--z", type=float)
    p.add_argument("--root", type=int, default=0, help="vertex placed in S for --z")
    p.add_argument("--window", type=int, nargs=2, metavar=("O", "R"))
    p.add_argument("--complement", action="store_true", help="kernel side instead of row space")
    _common(p)
    p.set_defaults(fn=cmd_kernel)

    p = sub.add_parser("recursions", help="fixed-point values and the root row")
    p.add_argument("tree")
    p.add_argument("--root", type=int, default=0)
    p.add_argument("--z", type=float)
    p.add_argument("--tol", type=float, default=1e-8)
    _common(p)
    p.set_defaults(fn=cmd_recursions)

    p = sub.add_parser("detcheck", help="matching laws vs determinantal laws")
    p.add_argument("tree")
    p.add_argument("--z", type=float)
    p.add_argument("--root", type=int, default=0)
    p.add_argument("--window", type=int, nargs=3, metavar=("O", "r", "R"))
    p.add_argument("--per-subset", action="store_true")
    p.add_argument("--tol", type=float, default=1e-9)
    _common(p)
    p.set_defaults(fn=cmd_detcheck)

    p = sub.add_parser("local-approx", help="windowed vs global projection per root")
    p.add_argument("graph")
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--R", type=int, nargs="+", required=True)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--tv", action="store_true")
    _common(p)
    p.set_defaults(fn=cmd_local_approx)

    p = sub.add_parser("entropy-seq", help="log mm / n along a tree family")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--indices", type=int, nargs="+")
    p.add_argument("--files", nargs="+")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--d", type=int, default=3)
    _common(p)
    p.set_defaults(fn=cmd_entropy_seq)

    p = sub.add_parser("canopy", help="k-ary maximum-matching counts vs the limit series")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--depth-max", type=int, default=17)
    p.add_argument("--terms", type=int, default=100)
    _common(p, "csv")
    p.set_defaults(fn=cmd_canopy)

    p = sub.add_parser("pelda", help="root-uncovered probability on alternating trees")
    p.add_argument("--n-max", type=int, default=40)
    _common(p)
    p.set_defaults(fn=cmd_pelda)
    return ap


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    # --cap acts like TREEDET_CAP for this call only
    saved = os.environ.get("TREEDET_CAP")
    if args.cap is not None:
        os.environ["TREEDET_CAP"] = str(args.cap)
    t0 = time.perf_counter()
    try:
        result = args.fn(args)
    except (UsageError, TreeError, CapExceeded, ValueError) as e:
        print(f"treedet {args.command}: error: {e}", file=sys.stderr)
        return 2
    finally:
        if saved is None:
            os.environ.pop("TREEDET_CAP", None)
        else:
            os.environ["TREEDET_CAP"] = saved
    if isinstance(result, tuple):
        _emit(result[0], args.out)
        return 0
    result.seed = args.seed
    if not result.wall_time:
        result.wall_time = time.perf_counter() - t0
    _emit(result.render(args.format), args.out)
    if not result.passed:
        print(f"treedet {args.command}: verification failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
