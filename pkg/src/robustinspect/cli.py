"""Command-line front end.

Exit codes: 0 success, 1 domain or input error, 2 numeric or LP failure,
64 bad usage.  With ``--json-errors`` the error goes to stderr as JSON.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import serialization
from .errors import DomainError, InvariantViolation, NumericalError, ParseError

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


EXAMPLES = {
    "synth": "robustinspect synth --mu 0.5 --rule maximal --out mech.json",
    "worst-case": "robustinspect worst-case --mu 0.2 --agents 1 --points 3",
    "verify": "robustinspect verify mech.json --grid 2001",
    "frontier": "robustinspect frontier --moments 0.5,0.3333333333333333 --grid 201",
    "multi-agent": "robustinspect multi-agent --agents 2 --grid 15 --extra-flags p_monotone_other_down",
    "experiment": "robustinspect experiment contamination --format svg --out contamination.svg",
    "sweep": "robustinspect sweep --what two-agent-bound --from 0.02 --to 0.98 --steps 30",
}


def _output_opts(p):
    p.add_argument("--out", help="write the result here instead of stdout")
    p.add_argument("--format", choices=("json", "csv", "svg"), default=None,
                   help="svg writes a figure to --out and the CSV next to it")
    p.add_argument("--figure", help="also render a figure to this path (.svg, .png, .pdf)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="robustinspect", description=__doc__.splitlines()[0],
                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name, help_):
        return sub.add_parser(name, help=help_, epilog=f"example:\n  {EXAMPLES[name]}",
                              formatter_class=argparse.RawDescriptionHelpFormatter)

    p = cmd("synth", "build a closed-form single-agent mechanism")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--rule", required=True,
                   choices=("linear", "clipped", "maximal", "three-point", "three-point-maximal"))
    p.add_argument("--blend", type=float, default=None,
                   help="with --rule linear: weight toward the clipped payment")
    _output_opts(p)

    p = cmd("worst-case", "worst-case distribution for a given mean")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--agents", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--points", type=int, choices=(2, 3), default=2)
    _output_opts(p)

    p = cmd("verify", "check IC/IR of a mechanism file or the constraints of a table file")
    p.add_argument("file")
    p.add_argument("--grid", type=int, default=2001)
    _output_opts(p)

    p = cmd("frontier", "moment-frontier LP for a single agent")
    p.add_argument("--moments", required=True, help="comma-separated k1[,k2,...]")
    p.add_argument("--grid", type=int, default=201)
    _output_opts(p)

    p = cmd("multi-agent", "symmetric multi-agent LP")
    p.add_argument("--agents", type=int, choices=(2, 3), required=True)
    p.add_argument("--grid", type=int, default=None, help="default 15 for two agents, 8 for three")
    p.add_argument("--flags", default="standard",
                   help="'standard' or a comma-separated list of constraint flags")
    p.add_argument("--extra-flags", default="", help="flags added on top of --flags")
    p.add_argument("--fix", default="", help="for --format csv: pinned axes as axis=index[,...]")
    p.add_argument("--nnz-cap", type=int, default=2_000_000)
    _output_opts(p)

    p = cmd("experiment", "reproduce a numerical study")
    p.add_argument("name", choices=("contamination", "uniform-table", "guarantees"))
    p.add_argument("--grid", type=int, default=100)
    p.add_argument("--eps-steps", type=int, default=101)
    _output_opts(p)

    p = cmd("sweep", "tabulate a quantity over a parameter range")
    p.add_argument("--what", required=True, choices=("zstar", "mu-prime", "two-agent-bound"))
    p.add_argument("--from", dest="lo", type=float, required=True)
    p.add_argument("--to", dest="hi", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    _output_opts(p)
    return ap


# ------------------------------------------------------------------ commands


class Result:
    """Text payload plus an optional figure factory."""

    def __init__(self, text: str, kind: str, figure=None, code: int = EXIT_OK):
        self.text = text
        self.kind = kind  # "json" or "csv"
        self.figure = figure
        self.code = code


def _json(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def _synth(a):
    from .plotting import mechanism_figure
    from .single_agent import blended_mechanism, synthesize

    if a.blend is not None:
        if a.rule != "linear":
            raise DomainError("--blend applies to --rule linear only")
        m = blended_mechanism(a.mu, a.blend)
    else:
        m = synthesize(a.mu, a.rule)
    return Result(serialization.dumps(m), "json", lambda: mechanism_figure(m))


def _worst_case(a):
    from .adversary import dirac_bound, three_point_worst_case, two_agent_worst_case, two_point_worst_case

    if a.agents == 1:
        q = two_point_worst_case(a.mu) if a.points == 2 else three_point_worst_case(a.mu)
        return Result(serialization.dumps(q), "json")
    if a.agents == 2:
        w = two_agent_worst_case(a.mu)
        d = serialization.distribution_to_dict(w.distribution)
        d["lemma"] = {"r": w.r, "nu_star": w.nu_star, "beta": w.beta, "f_mu": w.f_mu,
                      "bound": min(w.f_mu, w.mu)}
        return Result(_json(d), "json")
    v = dirac_bound(a.mu, 3)
    from .types import GridDistribution

    d = serialization.distribution_to_dict(GridDistribution(np.array([[a.mu] * 3]), [1.0]))
    d["bound"] = v
    return Result(_json(d), "json")


def _verify(a):
    from .types import MultiAgentTable, SingleAgentMechanism
    from .verify import check_feasibility

    try:
        text = Path(a.file).read_text()
    except OSError as exc:
        raise DomainError(f"cannot read {a.file}: {exc.strerror}") from None
    obj = serialization.loads(text)
    if isinstance(obj, SingleAgentMechanism):
        rep = check_feasibility(obj, a.grid)
        return Result(_json(rep.as_dict()), "json", code=EXIT_OK if rep.ok else EXIT_DOMAIN)
    if isinstance(obj, MultiAgentTable):
        from .multi_agent import table_residuals

        if not obj.feasible:
            return Result(_json({"status": obj.status, "ok": True}), "json")
        res = table_residuals(obj)
        ok = all(v <= 1e-7 for v in res.values())
        res["ok"] = ok
        return Result(_json(res), "json", code=EXIT_OK if ok else EXIT_DOMAIN)
    raise DomainError("verify expects a mechanism or a multi-agent table")


def _frontier(a):
    from .single_agent import moment_frontier_lp
    from .types import MomentSet

    try:
        ks = tuple(float(v) for v in a.moments.split(","))
    except ValueError:
        raise DomainError(f"bad moment list {a.moments!r}") from None
    res = moment_frontier_lp(MomentSet(ks), a.grid)
    if a.format == "csv":
        return Result(_csv(["nu", "x"], zip(res.nu.tolist(), res.x.tolist())), "csv")
    return Result(_json({"moments": list(ks), "grid": a.grid, "value": res.value,
                         "lambdas": res.lambdas.tolist()}), "json")


def _parse_flags(a):
    from .multi_agent import ConstraintSet, standard_flags

    if a.flags == "standard":
        cs = standard_flags(a.agents)
        base = set(cs.flags)
    else:
        base = {f for f in a.flags.split(",") if f}
    base |= {f for f in a.extra_flags.split(",") if f}
    return ConstraintSet.from_flags(base)


def _multi_agent(a):
    from .multi_agent import solve_multi_agent, table_surfaces
    from .plotting import surface_figure

    G = a.grid or (15 if a.agents == 2 else 8)
    t = solve_multi_agent(a.agents, G, cs=_parse_flags(a), nnz_cap=a.nnz_cap)
    fixed = {}
    for item in filter(None, a.fix.split(",")):
        try:
            ax, idx = item.split("=")
            fixed[int(ax)] = int(idx)
        except ValueError:
            raise DomainError(f"bad --fix entry {item!r}; use axis=index") from None
    if a.agents == 3 and not fixed:
        fixed = {2: 0}
    fig = (lambda: surface_figure(t, fixed)) if t.feasible else None
    if a.format in ("csv", "svg") and t.feasible:
        try:
            return Result(table_surfaces(t, fixed), "csv", fig)
        except IndexError as exc:
            raise DomainError(str(exc)) from None
    return Result(serialization.dumps(t), "json", fig)


def _experiment(a):
    from . import experiments as ex
    from . import plotting as pl

    if a.name == "uniform-table":
        rows = ex.uniform_comparison(G_nominal=a.grid)
        if a.format == "json":
            return Result(_json(dict(rows)), "json")
        return Result(ex.comparison_csv(rows), "csv", lambda: pl.comparison_figure(rows))
    if a.name == "contamination":
        run = ex.contamination(a.grid, a.eps_steps)
        if a.format == "json":
            return Result(run.summary_json(), "json")
        res = Result(run.to_csv(), "csv", lambda: pl.contamination_figure(run))
        res.summary = run.summary_json()
        return res
    rows = ex.guarantee_rows(ex.default_guarantee_grid())
    text = ex.guarantee_curves([g.mu for g in rows])
    return Result(text, "csv", lambda: pl.guarantee_figure(rows))


def _sweep(a):
    from . import plotting as pl

    if a.steps < 2 or not a.lo < a.hi:
        raise DomainError("sweep needs --from < --to and at least 2 steps")
    xs = np.linspace(a.lo, a.hi, a.steps)
    if a.what == "zstar":
        from .single_agent import z_star

        ys = [z_star(m) for m in xs]
        return Result(_csv(["mu", "z_star"], zip(xs.tolist(), ys)), "csv",
                      lambda: pl.sweep_figure(xs, {"z*": ys}, "mean"))
    if a.what == "mu-prime":
        from .single_agent import boundary_objective, radicand

        if a.lo < 0.0 or a.hi > 1.0:
            raise DomainError("t range must lie in [0, 1]")
        r = radicand(xs)
        z = np.where(r >= 0, boundary_objective(xs), np.nan)
        rows = [(float(t), float(rv), float(zv)) for t, rv, zv in zip(xs, r, z)]
        return Result(_csv(["t", "radicand", "objective"], rows), "csv",
                      lambda: pl.sweep_figure(xs, {"objective": z}, "t"))
    from .adversary import two_agent_upper_bound

    b = two_agent_upper_bound(xs)
    rows = [(float(m), float(f), float(g), float(h)) for m, f, g, h in zip(b.mu, b.f, b.g, b.hull)]
    text = _csv(["mu", "f", "min_f_mu", "hull"], rows)
    text += f"# mu_dprime={b.mu_dprime:.17g} f_mu_dprime={b.f_dprime:.17g}\n"
    return Result(text, "csv", lambda: pl.two_agent_figure(b))


HANDLERS = {
    "synth": _synth, "worst-case": _worst_case, "verify": _verify, "frontier": _frontier,
    "multi-agent": _multi_agent, "experiment": _experiment, "sweep": _sweep,
}


def _emit(a, res: Result) -> None:
    from .plotting import save

    if a.format == "svg":
        if not a.out:
            raise DomainError("--format svg needs --out")
        if res.figure is None:
            raise DomainError("this command has no figure")
        out = Path(a.out)
        save(res.figure(), out)
        out.with_suffix("." + res.kind).write_text(res.text)
    elif a.out:
        Path(a.out).write_text(res.text)
    else:
        sys.stdout.write(res.text)
    summary = getattr(res, "summary", None)
    if summary and a.out:
        Path(a.out).with_suffix(".summary.json").write_text(summary)
    if a.figure:
        if res.figure is None:
            raise DomainError("this command has no figure")
        save(res.figure(), a.figure)


def _fail(args, code: int, exc: BaseException) -> int:
    kind = type(exc).__name__
    if args is not None and getattr(args, "json_errors", False):
        sys.stderr.write(json.dumps({"error": kind, "message": str(exc), "exit_code": code}) + "\n")
    else:
        sys.stderr.write(f"error ({kind}): {exc}\n")
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    json_errors = "--json-errors" in argv
    if json_errors:
        argv = [x for x in argv if x != "--json-errors"]
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.json_errors = json_errors
    try:
        res = HANDLERS[args.command](args)
        _emit(args, res)
        return res.code
    except (DomainError, ParseError, InvariantViolation) as exc:
        return _fail(args, EXIT_DOMAIN, exc)
    except NumericalError as exc:
        return _fail(args, EXIT_NUMERIC, exc)


if __name__ == "__main__":
    raise SystemExit(main())
