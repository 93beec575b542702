"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numerical refusal (cancellation or
error-dominated estimates).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .approximants import ApproximantKind, approximate
from .bounds import (
    BOUND_IDS,
    BoundConfig,
    KnownBoundInputs,
    decompose_line_mixture,
    evaluate_bound,
    fit_constant,
)
from .errors import NumericalRefusalError
from .experiments import (
    ExampleSpec,
    example_mixture,
    lemma_scan,
    make_example,
    rate_slope,
    records_to_csv,
    sweep,
)
from .measure import SymmetricDistribution, read_measure, write_measure


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_grid(text):
    if ":" in text:
        start, stop, step = text.split(":")
        start, stop = int(start), int(stop)
        if not step.startswith("x"):
            raise _UsageError(f"grid step must look like x2, got {step!r}")
        factor = int(step[1:])
        if factor < 2 or start < 1 or stop < start:
            raise _UsageError(f"bad grid {text!r}")
        grid = []
        n = start
        while n <= stop:
            grid.append(n)
            n *= factor
        return grid
    return [int(tok) for tok in text.split(",") if tok]


def _parse_constants(pairs):
    values = {}
    for item in pairs or []:
        if "=" not in item:
            raise _UsageError(f"--C expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        values[key] = float(val)
    return BoundConfig(values)


def _load_distribution(args):
    if getattr(args, "infile", None):
        return SymmetricDistribution(read_measure(args.infile)), None
    if getattr(args, "id", None):
        spec = _spec_from_args(args)
        return make_example(spec), spec
    raise _UsageError("provide --in or --id")


def _spec_from_args(args):
    kwargs = {"id": args.id}
    if getattr(args, "K", None):
        kwargs["truncation_K"] = args.K
    if args.id == "ex2" and getattr(args, "n_atom", None):
        kwargs["location"] = args.n_atom
    if getattr(args, "exact", False):
        kwargs["exact"] = True
    return ExampleSpec(**kwargs)


def _emit(text, out):
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_input_flags(p, with_example_location=True):
    p.add_argument("--in", dest="infile", help="measure file")
    p.add_argument("--id", choices=["ex1", "ex2", "ex3"], help="built-in example")
    p.add_argument("--K", type=int, help="truncation for ex1/ex3")
    if with_example_location:
        p.add_argument("--n-atom", type=int, dest="n_atom",
                       help="ex2: location of the far atom pair")
    p.add_argument("--exact", action="store_true",
                   help="fold the tail mass into the origin (trunc_err 0)")


def build_parser():
    root = _Parser(prog="cpapprox", description=__doc__)
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("example", help="emit a built-in example as a measure file")
    p.add_argument("--id", required=True, choices=["ex1", "ex2", "ex3"])
    p.add_argument("--K", type=int)
    p.add_argument("--n", type=int, dest="n_atom",
                   help="ex2: location of the far atom pair")
    p.add_argument("--exact", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("approx", help="one (n, approximant) cell")
    _add_input_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out")

    p = sub.add_parser("sweep", help="grid of (n, approximant) cells as CSV")
    _add_input_flags(p)
    p.add_argument("--grid", required=True, help="e.g. 8:4096:x2 or 8,16,32")
    p.add_argument("--kinds", required=True, help="comma list: conv,cp,hipp,first,bergK")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--C", action="append", metavar="key=val")
    p.add_argument("--out")

    p = sub.add_parser("bounds", help="evaluate bound right-hand sides")
    _add_input_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--bound", action="append", help="restrict to these bound ids")
    p.add_argument("--C", action="append", metavar="key=val")
    p.add_argument("--out")

    p = sub.add_parser("check-lemma", help="randomized scan of a lemma inequality")
    p.add_argument("--lemma", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--dim-max", type=int, default=3)
    p.add_argument("--atoms-max", type=int, default=20)
    p.add_argument("--profile", default="scan-v1")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out")

    p = sub.add_parser("fit-c", help="empirical minimal constant over a grid")
    _add_input_flags(p)
    p.add_argument("--bound", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--kind", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--free-id", dest="free_id")
    p.add_argument("--C", action="append", metavar="key=val")
    p.add_argument("--out")
    return root


def _cmd_example(args):
    spec = ExampleSpec(
        id=args.id,
        **({"truncation_K": args.K} if args.K else {}),
        **({"location": args.n_atom} if args.n_atom else {}),
        **({"exact": True} if args.exact else {}),
    )
    write_measure(make_example(spec).measure, args.out)
    return 0


def _cmd_approx(args):
    F, _ = _load_distribution(args)
    kind = ApproximantKind.parse(args.kind)
    res = approximate(F, args.n, kind, args.tol)
    meta = {"command": "approx", "kind": kind.label(), "n": args.n, "tol": args.tol}
    lines = [f"# {k}={meta[k]}" for k in sorted(meta)]
    lines.append("kind,n,distance,err,support,elapsed_s")
    lines.append(",".join([kind.label(), str(res.n), repr(res.tv_distance),
                           repr(res.err_interval), str(res.support_size),
                           f"{res.elapsed:.3f}"]))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_sweep(args):
    F, spec = _load_distribution(args)
    kinds = [ApproximantKind.parse(tok) for tok in args.kinds.split(",") if tok]
    grid = _parse_grid(args.grid)
    cfg = _parse_constants(args.C)
    mixture = example_mixture(spec, F) if spec else None
    label = spec.id if spec else (args.infile or "measure")
    records = sweep(F, grid, kinds, args.tol, mixture=mixture, label=label, cfg=cfg)
    meta = {"command": "sweep", "grid": args.grid, "kinds": args.kinds,
            "tol": args.tol, "seed": args.seed, "example": label}
    if spec:
        meta["K"] = spec.truncation_K
    _emit(records_to_csv(records, meta), args.out)
    return 0


def _cmd_bounds(args):
    F, spec = _load_distribution(args)
    mixture = example_mixture(spec, F) if spec else decompose_line_mixture(F)
    cfg = _parse_constants(args.C)
    params = {}
    if args.n is not None:
        params["n"] = args.n
    if args.a is not None:
        params["a"] = args.a
    if args.b is not None:
        params["b"] = args.b
    if args.k is not None:
        params["k"] = args.k
    wanted = args.bound or BOUND_IDS
    rows = ["bound_id,n,explicit_part,coefficients,applicable,reason"]
    for bid in wanted:
        if bid not in BOUND_IDS:
            raise _UsageError(f"unknown bound id {bid!r}")
        if bid == "krc1":
            if args.n is None:
                continue
            inp = KnownBoundInputs.from_iid_mixture(mixture, args.n)
        elif bid in ("thm6", "thm6star", "thm7", "thm8", "thm9", "thm10", "p1is5"):
            inp = mixture
        else:
            inp = F
        try:
            rep = evaluate_bound(bid, inp, params, cfg)
        except ValueError:
            continue  # required parameter not supplied
        coefs = ";".join(f"{cid}={coef!r}" for cid, coef in rep.generic_terms)
        rows.append(",".join([
            rep.bound_id, str(params.get("n", "")), repr(rep.explicit_part),
            coefs, str(rep.applicable).lower(), rep.reason.replace(",", ";"),
        ]))
    _emit("\n".join(rows) + "\n", args.out)
    return 0


def _cmd_check_lemma(args):
    res = lemma_scan(args.lemma, args.trials, args.seed, args.dim_max,
                     args.atoms_max, args.profile, args.tol)
    text = (
        f"lemma={res.lemma_id} trials={res.trials} seed={args.seed} "
        f"profile={args.profile} worst_ratio={res.worst_ratio!r} "
        f"worst_adjusted={res.worst_adjusted!r} violations={res.violations} "
        f"worst_trial={res.worst_trial}\n"
    )
    _emit(text, args.out)
    return 0


def _cmd_fit_c(args):
    F, spec = _load_distribution(args)
    kind = ApproximantKind.parse(args.kind)
    grid = _parse_grid(args.grid)
    records = sweep(F, grid, [kind], args.tol,
                    mixture=example_mixture(spec, F) if spec else None)
    obs = [(r.n, r.distance) for r in records if not r.error]
    inp = F
    if args.bound in ("thm6", "thm6star", "thm7", "thm8", "thm9", "p1is5"):
        inp = example_mixture(spec, F) if spec else decompose_line_mixture(F)
    params_base = {"k": kind.k} if kind.tag == "berg" else {}
    c_hat = fit_constant(obs, args.bound, inp, params_base,
                         cfg_fixed=_parse_constants(args.C), free_id=args.free_id)
    _emit(f"bound={args.bound} kind={kind.label()} C_hat={c_hat!r}\n", args.out)
    return 0


_COMMANDS = {
    "example": _cmd_example,
    "approx": _cmd_approx,
    "sweep": _cmd_sweep,
    "bounds": _cmd_bounds,
    "check-lemma": _cmd_check_lemma,
    "fit-c": _cmd_fit_c,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except NumericalRefusalError as exc:
        print(f"numerical refusal: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
