"""Command-line front end: ``fblc0 verify|norm|decompose|select``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ParamConfig, load_config
from .embedding import parse_vector, resolve_evaluator
from .errors import FBLError
from .expr import parse
from .functionals import CUBE, DUAL
from .norm import dominance_upper_bound, norm_search
from .quotient import FAMILIES, decomposition_expr, greedy_decompose, phi_apply, select_subsequence
from .verify import SUITES, run_suite


def _n_seq(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.replace(" ", "").split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad N sequence {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with ParamConfig fields")
    common.add_argument("--n-seq", type=_n_seq, help="comma-separated N_1,N_2,...")
    common.add_argument("--trunc", type=int, help="truncation N")
    common.add_argument("--budget", type=int, help="search restarts")
    common.add_argument("--steps", type=int, help="ascent steps per restart")
    common.add_argument("--samples", type=int, help="sample count for sampled checks")
    common.add_argument("--workers", type=int, help="processes for the norm search")
    common.add_argument("--seed", type=int)
    common.add_argument("--eps", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--out", help="write the report here instead of stdout")

    p = argparse.ArgumentParser(prog="fblc0", description="Numerical checks for c0 inside free Banach lattices.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", choices=SUITES + ("all",))
    v.add_argument("--no-timing", action="store_true", help="omit the timing section from JSON")

    n = sub.add_parser("norm", parents=[common], help="search a norm lower bound")
    n.add_argument("literal", help="expression, e.g. '(add f:1 f:2)' or '(gen 1)'")
    n.add_argument("--ambient", choices=(DUAL, CUBE), default=DUAL,
                   help="dual: FBL[c0] (default); cube: FBL(A)")
    n.add_argument("--dominator", help="expression g for sampled evidence 0 <= f <= g")
    n.add_argument("--dominator-bound", type=float, default=1.0, help="known norm bound of the dominator")

    d = sub.add_parser("decompose", parents=[common], help="greedy preimage of a nonnegative vector")
    d.add_argument("vector", help="index:value pairs, e.g. 1:0.5,3:0.2")

    s = sub.add_parser("select", parents=[common], help="disjoint witness selection")
    s.add_argument("family", choices=sorted(FAMILIES))
    s.add_argument("--length", type=int, default=8)
    return p


def config_from_args(args) -> ParamConfig:
    overrides = {
        "n_seq": args.n_seq,
        "truncation": args.trunc,
        "restarts": args.budget,
        "steps": args.steps,
        "samples": args.samples,
        "workers": args.workers,
        "seed": args.seed,
        "eps": args.eps,
        "tol": args.tol,
    }
    return load_config(args.config, overrides=overrides)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _cmd_verify(args, cfg: ParamConfig) -> int:
    report = run_suite(args.suite, cfg)
    text = report.dumps(timing=not args.no_timing) if args.format == "json" else report.table()
    _emit(text, args.out)
    return 0 if report.passed else 1


def _cmd_norm(args, cfg: ParamConfig) -> int:
    resolver = lambda name: resolve_evaluator(name, cfg)  # noqa: E731
    expr = parse(args.literal, resolver)
    est = norm_search(expr, cfg, ambient=args.ambient)
    data = {"expression": args.literal, "ambient": args.ambient, "estimate": est.to_json()}
    dom = None
    if args.dominator:
        g = parse(args.dominator, resolver)
        dom = dominance_upper_bound(expr, g, args.dominator_bound, cfg.samples, seed=cfg.seed,
                                    ambient=args.ambient, coords=est.coords or None)
        data["dominance"] = dom.to_json()
    if args.format == "json":
        _emit(json.dumps(data, sort_keys=True, indent=1), args.out)
    else:
        lines = [f"expression   {args.literal}",
                 f"lower bound  {est.lower_bound!r}",
                 f"evaluations  {est.evaluations_used}",
                 "witness:"]
        w = est.best_witness
        lines += [f"  {x}" for x in w.functionals]
        lines.append(f"  dual-ball value {w.dual_ball_sup!r} ({w.mode})")
        if dom is not None:
            state = "no violation" if dom.holds else f"violation {dom.violation}"
            lines.append(f"dominance    {state} in {dom.samples} samples; "
                         f"upper bound {dom.bound!r} ({dom.label})")
        _emit("\n".join(lines), args.out)
    return 0 if dom is None or dom.holds else 1


def _cmd_decompose(args, cfg: ParamConfig) -> int:
    x = parse_vector(args.vector)
    dec = greedy_decompose(x)
    n_max = max(x, default=0)
    back = dec.reconstruct(n_max)
    image = phi_apply(decomposition_expr(dec), n_max, cfg.truncation) if n_max else back
    err = max((abs(back[i - 1] - v) for i, v in x.items()), default=0.0)
    err = max([err] + [abs(image[i - 1] - x.get(i, 0.0)) for i in range(1, n_max + 1)])
    err = float(err)
    ok = err <= 1e-12
    if args.format == "json":
        _emit(json.dumps({"decomposition": dec.to_json(), "max_error": err, "passed": ok},
                         sort_keys=True, indent=1), args.out)
    else:
        lines = [f"{lam!r} * 1_{{{','.join(map(str, sorted(A)))}}}" for lam, A in dec.terms]
        lines.append(f"reconstruction error {err!r}")
        _emit("\n".join(lines), args.out)
    return 0 if ok else 1


def _cmd_select(args, cfg: ParamConfig) -> int:
    fam = FAMILIES[args.family](args.length + 4) if args.family == "coordinate" else \
        FAMILIES[args.family](args.length + 4, max(cfg.truncation, args.length + 4))
    sel = select_subsequence(fam, cfg.eps, args.length)
    sums = sel.partial_sums()
    ok = all(s >= m - cfg.eps for m, s in enumerate(sums, start=1))
    if args.format == "json":
        _emit(json.dumps({"selection": sel.to_json(), "partial_sums": sums, "passed": ok},
                         sort_keys=True, indent=1), args.out)
    else:
        lines = [f"indices {list(sel.indices)}"]
        lines += [f"  m={m:<3d} sum={s!r}  bound m-eps={m - cfg.eps!r}"
                  for m, s in enumerate(sums, start=1)]
        _emit("\n".join(lines), args.out)
    return 0 if ok else 1


_COMMANDS = {"verify": _cmd_verify, "norm": _cmd_norm, "decompose": _cmd_decompose, "select": _cmd_select}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return _COMMANDS[args.command](args, cfg)
    except (FBLError, ValueError, KeyError) as exc:
        print(f"fblc0: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
