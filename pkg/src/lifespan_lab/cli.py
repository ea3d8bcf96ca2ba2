"""Command line entry point: ``lifespan-lab <subcommand> [--config PATH] [--out DIR] ...``.

Exit codes: 0 pass, 1 fail (including an inconclusive verdict), 2 error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .campaign import LifespanReport, atomic_write, reconcile, run_campaign, simulate_config
from .config import LabConfig, load_config, parse_config
from .errors import LifespanLabError
from .exponents import Criticality, compute_alpha, compute_pq, lifespan_exponent
from .ode_chain import build_chain, minorant
from .ode_engine import OdeSystemSpec, integrate
from .test_function import build_psi

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def _config(args, need=True) -> LabConfig | None:
    if args.config:
        return load_config(args.config)
    if getattr(args, "p", None):
        return parse_config(f"[system]\np = {args.p}\nn = {args.n}\n")
    if need:
        raise LifespanLabError("this subcommand needs --config (or --p for the system alone)")
    return None


def _emit(args, name: str, text: str) -> None:
    if args.out:
        atomic_write(Path(args.out) / name, text)


def cmd_exponents(args) -> int:
    cfg = _config(args)
    prof = compute_alpha(cfg.params)
    info = {
        "p": [str(x) for x in cfg.params.p],
        "n": cfg.params.n,
        "alpha": [str(a) for a in prof.alpha],
        "alpha_max": str(prof.alpha_max),
        "argmax": prof.argmax_index + 1,
        "criticality": prof.criticality.value,
    }
    if cfg.params.k >= 2:
        pq = compute_pq(cfg.params)
        info["P"] = [str(x) for x in pq.P]
        info["Q"] = [str(x) for x in pq.Q]
    if prof.criticality is Criticality.SUBCRITICAL:
        info["l_case1"] = [str(x) for x in prof.l_case1()]
    else:
        info["l_case2"] = [str(x) for x in prof.l_case2]
    if prof.criticality is Criticality.SUPERCRITICAL:
        info["lifespan_exponent"] = str(lifespan_exponent(prof))
    text = json.dumps(info, indent=2) + "\n"
    print(text, end="")
    _emit(args, "exponents.json", text)

    # one row per component; exact values as fractions
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    l_vec = info.get("l_case1") or info.get("l_case2")
    w.writerow(["j", "p", "alpha", "l", "P", "Q"])
    for j in range(cfg.params.k):
        w.writerow([j + 1, info["p"][j], info["alpha"][j], l_vec[j],
                    info["P"][j] if "P" in info else "", info["Q"][j] if "Q" in info else ""])
    _emit(args, "exponents.csv", buf.getvalue())
    return EXIT_PASS


def cmd_bound(args) -> int:
    from .campaign import _bound

    cfg = _config(args)
    spec = build_psi(cfg.params.n)
    b = _bound(cfg, cfg.data, spec)
    if b is None:
        print("no upper bound: the system is not supercritical")
        return EXIT_FAIL
    header = ["R0", "T0", "threshold", "T0_tilde", "U_R0", "j0", "factor"]
    header += [f"Lambda_{j + 1}" for j in range(len(b.Lambda))]
    row = [repr(float(x)) for x in (b.R0, b.T0, b.threshold, b.T0_tilde, b.U_R0)]
    row += [str(b.j0 + 1), repr(float(b.factor))] + [repr(float(x)) for x in b.Lambda]
    text = ",".join(header) + "\n" + ",".join(row) + "\n"
    print(text, end="")
    _emit(args, "bound.csv", text)
    return EXIT_PASS


def cmd_ode(args) -> int:
    cfg = _config(args)
    if cfg.ode_initial is None:
        raise LifespanLabError("[ode] needs initial")
    k = cfg.params.k
    coeff = cfg.ode_coefficients or (1.0,) * k
    spec = OdeSystemSpec(cfg.params.as_floats(), coeff, cfg.ode_lambda, cfg.ode_initial)
    traj, est = integrate(spec, cfg.ode_horizon, cfg.ode_rel_tol)
    rows = np.column_stack([traj.t, traj.y])
    _emit(args, "trajectory.csv", _csv(["t"] + [f"f_{j + 1}" for j in range(k)], rows))
    line = f"T_num={est.T_num!r} bracket={est.bracket!r} exponent={est.extrapolation_exponent!r} max={est.achieved_max!r}"
    if k >= 2 and cfg.ode_lambda > 0:
        pq = compute_pq(cfg.params)
        try:
            m = minorant(build_chain(pq, coeff, cfg.ode_lambda), pq, compute_alpha(cfg.params).alpha,
                         cfg.ode_initial[1])
            line += f" threshold={m.threshold!r} T0_tilde={m.T0_tilde!r}"
        except LifespanLabError as exc:
            line += f" minorant=unavailable ({exc})"
    print(line)
    return EXIT_PASS


def cmd_testfn(args) -> int:
    n = args.n
    if args.config:
        n = load_config(args.config).params.n
    spec = build_psi(n)
    _emit(args, f"psi_n{n}.csv", _csv(["r", "psi", "dpsi", "residual"], spec.profile_table()))
    slack = min(float(np.min(spec.phi_inequality_slack(np.linspace(0, R, 2001), R))) for R in (0.5, 1, 2, 8))
    print(f"n={n} lambda={spec.lam!r} eigen_residual={spec.eigen_residual():.3e} "
          f"mass={spec.mass()!r} min_phi_slack={slack:.3e}")
    return EXIT_PASS


def cmd_simulate(args) -> int:
    cfg = _config(args)
    report, bound, witness = simulate_config(cfg, args.eps)
    k = cfg.params.k
    cols = [report.t, report.M_trace] + list(report.sup) + list(report.l1)
    header = ["t", "M"] + [f"sup_{j + 1}" for j in range(k)] + [f"l1_{j + 1}" for j in range(k)]
    if report.trace_radii:
        cols += list(report.U[0])
        header += [f"U_{j + 1}" for j in range(k)]
    _emit(args, "trace.csv", _csv(header, np.column_stack(cols)))
    b = report.blowup
    parts = [f"T_num={b.T_num!r}" if b.blew_up else f"global_up_to={b.T_num.horizon!r}",
             f"steps={report.steps}", f"R_dom={report.R_dom!r}"]
    if bound is not None:
        parts += [f"R0={bound.R0!r}", f"T0={bound.T0!r}"]
    if witness is not None:
        parts.append(f"inequality={'holds' if witness.holds else 'violated'}")
    if report.decay_exponents is not None:
        parts.append("decay=" + ",".join(f"{d:.4f}" for d in report.decay_exponents))
    print(" ".join(parts))
    if bound is not None and b.blew_up and b.T_num > 1.05 * bound.T0:
        return EXIT_FAIL
    return EXIT_PASS


def cmd_campaign(args) -> int:
    cfg = _config(args)
    report = run_campaign(cfg, args.out, jobs=args.jobs, seed=args.seed)
    verdict = reconcile(report)
    print(verdict.text, end="")
    return EXIT_PASS if verdict.status == "PASS" else EXIT_FAIL


def cmd_reconcile(args) -> int:
    if args.report:
        report = LifespanReport.from_dict(json.loads(Path(args.report).read_text()))
    else:
        report = run_campaign(_config(args), None, jobs=args.jobs, seed=args.seed)
    verdict = reconcile(report)
    print(verdict.text, end="")
    _emit(args, "verdict.txt", verdict.text)
    return EXIT_PASS if verdict.status == "PASS" else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="parallel runs in a campaign")
    common.add_argument("--seed", type=int, default=0, help="seed for replicate jitter")

    parser = argparse.ArgumentParser(prog="lifespan-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("exponents", cmd_exponents, "critical exponents, P/Q sequences, decay vectors")
    sp.add_argument("--p", help="exponents, e.g. '2, 3' (instead of --config)")
    sp.add_argument("--n", type=int, default=1)
    add("bound", cmd_bound, "lifespan upper bound T0 for the configured data")
    add("ode", cmd_ode, "integrate the cyclic ODE system of [ode]")
    sp = add("testfn", cmd_testfn, "eigenfunction profile and residual report")
    sp.add_argument("--n", type=int, default=1)
    sp = add("simulate", cmd_simulate, "one PDE run with traces")
    sp.add_argument("--eps", type=float, default=1.0, help="amplitude multiplier")
    add("campaign", cmd_campaign, "amplitude sweep with slope fit and verdict")
    sp = add("reconcile", cmd_reconcile, "verdict from a saved report.json or a fresh campaign")
    sp.add_argument("--report", help="report.json written by 'campaign'")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (LifespanLabError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
