"""Command-line interface: ``lrrfim {verify,scaling,bounds,exact,mcmc,geometry}``.

Exit codes: 0 on success, 1 when a verification check fails, 2 on usage or
input errors.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

from .. import __version__
from .. import bounds as bd
from ..events import EventSpec
from ..exact import ExactMeasure
from ..geometry.contours import decompose_contours, min_separation_constant, verify_contours
from ..geometry.entropy import entropy_sum
from ..geometry.peierls import peierls_check
from ..geometry.runs import runs
from ..geometry.triangles import triangles_from_spins
from ..mcmc import Chain, ChainConfig, estimate_events, format_snapshots
from ..model import DisorderField, ModelParams, SpinWindow, Window, sample_disorder, table_for
from .checks import run_all
from .scaling import ExperimentConfig, run_scaling

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _dump(obj) -> None:
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return None
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        return x
    sys.stdout.write(json.dumps(clean(obj), indent=2, default=str) + "\n")


# ---------------------------------------------------------------------------
# shared options


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--j1", type=float, default=10.0)
    p.add_argument("--disorder", default="bernoulli", choices=("bernoulli", "gaussian", "uniform"))
    p.add_argument("--disorder-seed", type=int, default=0)
    p.add_argument("--disorder-csv", help="read the field from a CSV written by DisorderField.to_csv")
    p.add_argument("--window", required=True, help="sites as lo..hi")
    p.add_argument("--boundary", choices=("+", "-"), default="+")


def _model(args):
    window = Window.parse(args.window, boundary=1 if args.boundary == "+" else -1)
    params = ModelParams(args.alpha, j1=args.j1, beta=args.beta, theta=args.theta, disorder=args.disorder)
    if args.disorder_csv:
        disorder = DisorderField.from_csv(Path(args.disorder_csv).read_text())
    else:
        disorder = sample_disorder(args.disorder, window, args.disorder_seed)
    return window, params, disorder


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    only = [int(x) for x in args.only.split(",")] if args.only else None
    results = run_all(master_seed=args.seed, only=only)
    for r in results:
        print(r.line(), file=sys.stderr)
    report = {"version": __version__, "master_seed": args.seed,
              "passed": all(r.passed for r in results),
              "checks": [r.to_dict() for r in results]}
    text = json.dumps(report, indent=2, default=str)
    if args.report:
        Path(args.report).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK if report["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# scaling


def cmd_scaling(args) -> int:
    if args.config:
        cfg = ExperimentConfig.from_dict(json.loads(Path(args.config).read_text()))
    else:
        cfg = ExperimentConfig(
            alphas=tuple(args.alpha), thetas=tuple(args.theta), beta=args.beta,
            window_size=args.window_size, n_disorder=args.seeds, sweeps=args.sweeps,
            burn_in=args.burn_in, thinning=args.thinning, initial=args.initial,
            update_rule=args.rule, j1=args.j1, master_seed=args.master_seed,
            allow_small_window=args.allow_small_window, write_records=not args.no_records,
        )
    res = run_scaling(cfg, args.out, workers=args.workers)
    if args.out is None:
        sys.stdout.write(res["summary_csv"])
    else:
        _dump({"out": str(args.out), "summary": res["summary"], "warnings": res["warnings"]})
    return EXIT_OK


# ---------------------------------------------------------------------------
# bounds


def cmd_bounds(args) -> int:
    what = args.what
    if what == "e-alpha":
        _dump({"E_alpha": bd.e_alpha(args.alpha, args.j1, args.delta),
               "exterior_sum": bd.exterior_sum(args.alpha, args.j1, int(args.delta))})
    elif what == "lecam":
        m = args.moment if args.moment is not None else bd.censored_moment(args.kind, args.tau)
        _dump({"bound": bd.lecam_bound(args.n, args.tau, m), "censored_moment": m,
               "gaussian_refinement": bd.gaussian_concentration(args.n, args.tau)})
    elif what == "berry-esseen":
        _dump(bd.berry_esseen_lower(args.theta, args.delta).to_dict())
    elif what == "b-bar":
        _dump({"b_bar": bd.b_bar(args.beta, args.theta, args.alpha)})
    elif what == "plan-upper":
        _dump(bd.plan_upper(args.alpha, args.theta, j1=args.j1, beta=args.beta, B=args.B,
                            g1_fn=args.g).to_dict())
    elif what == "plan-lower":
        _dump(bd.plan_lower(args.alpha, args.theta, beta=args.beta, D=args.D, g2_fn=args.g).to_dict())
    elif what == "summary":
        _dump(bd.theorem_summary(args.alpha, args.theta, beta=args.beta, j1=args.j1,
                                 B=args.B, D=args.D).to_dict())
    return EXIT_OK


# ---------------------------------------------------------------------------
# exact / mcmc


def cmd_exact(args) -> int:
    window, params, disorder = _model(args)
    meas = ExactMeasure(window, disorder, params)
    out = {"window": f"{window.lo}..{window.hi}", "log_partition": meas.log_partition}
    if args.action == "event":
        events = [EventSpec.parse(e) for e in args.event]
        out["events"] = {str(e): meas.probability(e) for e in events}
    _dump(out)
    return EXIT_OK


def cmd_mcmc(args) -> int:
    window, params, disorder = _model(args)
    cfg = ChainConfig(sweeps=args.sweeps, burn_in=args.burn_in, thinning=args.thinning,
                      seed=args.seed, update_rule=args.rule, initial=args.initial)
    if args.action == "sample":
        sys.stdout.write(format_snapshots(window, Chain(window, disorder, params, cfg).sample_array()))
        return EXIT_OK
    events = [EventSpec.parse(e) for e in args.event]
    ests = estimate_events(window, disorder, params, events, cfg)
    _dump({"window": f"{window.lo}..{window.hi}",
           "events": {str(e): {"mean": r.mean, "std_error": r.std_error,
                               "effective_samples": r.effective_samples, "n_samples": r.n_samples}
                      for e, r in zip(events, ests)}})
    return EXIT_OK


# ---------------------------------------------------------------------------
# geometry


def cmd_geometry(args) -> int:
    what = args.what
    if what == "separation":
        _dump({"C": min_separation_constant()})
        return EXIT_OK
    if what == "entropy":
        # report "holds" instead of asserting, so small b is explorable
        _dump(entropy_sum(args.m, args.b, args.alpha, C=args.C, origin=args.origin, c0=math.inf).to_dict())
        return EXIT_OK
    sigma = SpinWindow.from_string(args.spins, lo=args.lo)
    window = {"lo": sigma.lo, "hi": sigma.hi}
    if what == "runs":
        dec = runs(sigma)
        _dump({"window": window, "b_V": dec.b_V, "e_V": dec.e_V,
               "runs": [{"index": j, "start": r.start, "end": r.end, "sign": r.sign, "length": r.length}
                        for j, r in dec.indexed()]})
        return EXIT_OK
    fam = triangles_from_spins(sigma)
    if what == "triangles":
        _dump({"window": window, "triangles": [t.to_dict() for t in fam.triangles]})
    elif what == "contours":
        cs = decompose_contours(fam, args.C)
        _dump({"window": window, "contours": [c.to_dict() for c in cs],
               "audit": verify_contours(cs, args.C, fam).to_dict()})
    elif what == "peierls":
        rep = peierls_check(fam, table_for(ModelParams(args.alpha, j1=args.j1)), args.alpha, args.C)
        _dump({"window": window, "ok": rep.ok, "smallest_margin": rep.smallest_margin,
               "iterated_margins": rep.iterated_margins, "contour_margins": rep.contour_margins})
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lrrfim", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"lrrfim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--only", help="comma-separated check numbers")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scaling", help="run-length statistics across field strengths")
    p.add_argument("--config", help="JSON ExperimentConfig; overrides the flags")
    p.add_argument("--alpha", type=float, nargs="+", default=[0.0])
    p.add_argument("--theta", type=float, nargs="+", default=[0.5, 0.35, 0.25])
    p.add_argument("--beta", type=float, default=None, help="default: saturating value")
    p.add_argument("--window-size", type=int, default=2000)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--sweeps", type=int, default=4000)
    p.add_argument("--burn-in", type=int, default=2000)
    p.add_argument("--thinning", type=int, default=100)
    p.add_argument("--initial", choices=("random", "all_boundary"), default="random")
    p.add_argument("--rule", choices=("heat_bath", "metropolis"), default="heat_bath")
    p.add_argument("--j1", type=float, default=10.0)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--allow-small-window", action="store_true")
    p.add_argument("--no-records", action="store_true")
    p.add_argument("--out", help="output directory (default: summary CSV on stdout)")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("bounds", help="bound formulas and parameter plans")
    p.add_argument("what", choices=("e-alpha", "lecam", "berry-esseen", "b-bar",
                                    "plan-upper", "plan-lower", "summary"))
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--theta", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--j1", type=float, default=10.0)
    p.add_argument("--B", type=float, default=0.5)
    p.add_argument("--D", type=float, default=2.0)
    p.add_argument("--g", type=float, default=None, help="constant g1/g2 (default: theorem choice)")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--kind", default="bernoulli", choices=("bernoulli", "gaussian", "uniform"))
    p.add_argument("--moment", type=float, default=None)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("exact", help="exact enumeration on a small window")
    p.add_argument("action", choices=("event", "log-z"))
    _model_args(p)
    p.add_argument("--event", action="append", default=[], help="e.g. spin_at:0:+ (repeatable)")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("mcmc", help="Monte Carlo estimates and samples")
    p.add_argument("action", choices=("event", "sample"))
    _model_args(p)
    p.add_argument("--event", action="append", default=[])
    p.add_argument("--sweeps", type=int, default=20_000)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--thinning", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rule", choices=("heat_bath", "metropolis"), default="heat_bath")
    p.add_argument("--initial", choices=("all_boundary", "random"), default="all_boundary")
    p.set_defaults(func=cmd_mcmc)

    p = sub.add_parser("geometry", help="runs, triangles, contours and related sums")
    p.add_argument("what", choices=("runs", "triangles", "contours", "peierls", "separation", "entropy"))
    p.add_argument("--spins", help="e.g. '+,+,-,-,+' or '++--+'")
    p.add_argument("--lo", type=int, default=0, help="site of the first spin")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--j1", type=float, default=10.0)
    p.add_argument("--C", type=float, default=3)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--b", type=float, default=5.0)
    p.add_argument("--origin", choices=("cover", "member"), default="cover")
    p.set_defaults(func=cmd_geometry)
    return ap


_SPAN = re.compile(r"^-?\d+\.\.-?\d+$")
_GLUED = ("--spins", "--window")


def _glue_spans(argv: list[str]) -> list[str]:
    # argparse reads "-5..5" or "-+-" as an option; attach such values to their flag
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if nxt is not None and tok.startswith("--") and "=" not in tok and (tok in _GLUED or _SPAN.match(nxt)):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_spans(argv))
    if args.command == "geometry" and args.what in ("runs", "triangles", "contours", "peierls") and not args.spins:
        parser.error("--spins is required for this geometry command")
    if args.command in ("exact", "mcmc") and args.action == "event" and not args.event:
        parser.error("at least one --event is required")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        # library input errors (domain, regime, coverage, size) and unreadable files are usage errors here
        print(f"lrrfim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
