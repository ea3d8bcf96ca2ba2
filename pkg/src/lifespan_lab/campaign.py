"""Amplitude sweeps: lifespan against data size, checked against the analytic bounds.

A campaign runs the PDE for data ``eps * u0`` over a log grid of ``eps``,
fits the slope of ``log T_num`` against ``log eps`` and compares it with
``-1 / (alpha_max - n/2)``. Every supercritical run also gets the explicit
upper bound ``T0`` and a check of the functional inequality along its trace.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import stats

from .config import LabConfig
from .errors import CampaignFailed, InsufficientData, LifespanLabError, PreconditionError
from .exponents import Criticality, compute_alpha
from .ode_chain import UpperBoundResult, pde_upper_bound
from .pde_sim import InitialData, SimReport, domain_radius, run, verify_ode_inequality
from .test_function import build_psi, initial_functional

__all__ = [
    "RunRecord",
    "LifespanReport",
    "Verdict",
    "simulate_config",
    "run_campaign",
    "reconcile",
    "weighted_slope",
    "eps_grid",
    "atomic_write",
]

MAX_FAILED_FRACTION = 0.2
BOUND_SLACK = 0.05
EDGE_WEIGHT = 0.5


def atomic_write(path, text: str) -> None:
    """Write ``text`` to a temporary file in the target directory, then rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def eps_grid(eps_min: float, eps_max: float, points: int) -> tuple:
    if not 0 < eps_min < eps_max:
        raise PreconditionError("need 0 < eps_min < eps_max")
    if points < 6 or math.log10(eps_max / eps_min) < 2 - 1e-9:
        raise PreconditionError("the amplitude grid needs at least 6 points over at least 2 decades")
    return tuple(float(x) for x in np.logspace(math.log10(eps_min), math.log10(eps_max), points))


def weighted_slope(x, y, w=None, level: float = 0.95):
    """Weighted least-squares line; returns ``(slope, intercept, slope_halfwidth)``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    w = np.ones_like(x) if w is None else np.asarray(w, float)
    if x.size < 3:
        raise InsufficientData("need at least 3 points for a slope with an error bar")
    X = np.column_stack([x, np.ones_like(x)])
    XtW = X.T * w
    cov_unscaled = np.linalg.inv(XtW @ X)
    beta = cov_unscaled @ (XtW @ y)
    resid = y - X @ beta
    dof = x.size - 2
    s2 = float(w @ resid**2) / dof if dof > 0 else 0.0
    half = float(stats.t.ppf(0.5 + level / 2, dof) * math.sqrt(s2 * cov_unscaled[0, 0])) if dof > 0 else math.inf
    return float(beta[0]), float(beta[1]), half


@dataclass
class RunRecord:
    eps: float
    replicate: int
    width: float
    status: str  # blowup | global | error
    T_num: float | None = None
    T0: float | None = None
    R0: float | None = None
    bound_ok: bool | None = None
    inequality_ok: bool | None = None
    holder_min_slack: float | None = None
    decay_exponents: list | None = None
    steps: int = 0
    error: str | None = None


def _bound(cfg: LabConfig, data: InitialData, spec) -> UpperBoundResult | None:
    prof = compute_alpha(cfg.params)
    if prof.criticality is not Criticality.SUPERCRITICAL:
        return None
    j0 = prof.argmax_index
    k = cfg.params.k

    def U0(R):
        return initial_functional(lambda r: data.values(r, k)[j0], spec, R, data.support)

    return pde_upper_bound(cfg.params, spec.lam, U0, j0, cfg.factor)


def simulate_config(cfg: LabConfig, eps: float = 1.0, width: float | None = None):
    """One PDE run for data ``eps * u0``; returns ``(SimReport, bound or None, witness or None)``."""
    spec = build_psi(cfg.params.n)
    data = cfg.data.scaled(eps)
    if width is not None:
        data = replace(data, width=width)
    bound = _bound(cfg, data, spec)
    horizon = cfg.horizon
    radii = ()
    if bound is not None:
        horizon = min(horizon, 2.0 * bound.T0)
        radii = (bound.R0,)
    R_dom = cfg.R_dom or domain_radius(data.support, horizon, bound.R0 if bound else None)
    report = run(data, cfg.params, spec, horizon, R_dom=R_dom, h0=cfg.h0,
                 max_intervals=cfg.max_intervals, boundary=cfg.boundary, trace_radii=radii,
                 eta=cfg.eta, theta=cfg.theta)
    witness = None
    if bound is not None and report.samples >= 100:
        witness = verify_ode_inequality(report, spec, bound.R0, bound.Lambda)
    return report, bound, witness


def _execute(task) -> RunRecord:
    cfg, eps, rep, width = task
    rec = RunRecord(eps, rep, width, "error")
    try:
        report, bound, witness = simulate_config(cfg, eps, width)
    except (LifespanLabError, ArithmeticError, np.linalg.LinAlgError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        return rec
    rec.steps = report.steps
    rec.holder_min_slack = None if math.isinf(report.holder_min_slack) else float(report.holder_min_slack)
    if bound is not None:
        rec.T0, rec.R0 = float(bound.T0), float(bound.R0)
    if witness is not None:
        rec.inequality_ok = witness.holds
    if report.blowup.blew_up:
        rec.status = "blowup"
        rec.T_num = float(report.blowup.T_num)
        if bound is not None:
            rec.bound_ok = rec.T_num <= bound.T0 * (1 + BOUND_SLACK)
    else:
        rec.status = "global"
        if bound is not None and report.blowup.T_num.horizon >= bound.T0 * (1 + BOUND_SLACK):
            # survived past T0: the bound is violated; a shorter horizon leaves it untested
            rec.bound_ok = False
        if report.decay_exponents is not None:
            rec.decay_exponents = [float(x) for x in report.decay_exponents]
    return rec


@dataclass
class LifespanReport:
    p: list
    n: int
    criticality: str
    alpha_max: str
    predicted_slope: float | None
    slope_tol: float
    records: list = field(default_factory=list)
    slope: float | None = None
    intercept: float | None = None
    slope_halfwidth: float | None = None
    regime: str = "blowup"  # blowup | global
    failed_runs: int = 0

    def blown_up(self) -> list:
        return [r for r in self.records if r.status == "blowup"]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["records"] = [asdict(r) for r in self.records]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LifespanReport":
        d = dict(d)
        d["records"] = [RunRecord(**r) for r in d.get("records", [])]
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def runs_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["eps", "replicate", "width", "status", "T_num", "T0", "R0", "bound_ok",
                "inequality_ok", "holder_min_slack", "decay_exponents", "steps", "error"]
        w.writerow(cols)
        for r in self.records:
            row = asdict(r)
            row["decay_exponents"] = ";".join(repr(x) for x in r.decay_exponents or [])
            w.writerow(["" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else row[c])
                        for c in cols])
        return buf.getvalue()

    def fit_csv(self) -> str:
        """Plot data: measured points and the fitted and predicted lines in log-log form."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["log_eps", "log_T_num", "log_T_fit", "log_T_predicted_slope", "log_T0"])
        pts = self.blown_up()
        if not pts:
            return buf.getvalue()
        ref = pts[0]
        for r in pts:
            x = math.log(r.eps)
            fit = "" if self.slope is None else repr(self.intercept + self.slope * x)
            pred = "" if self.predicted_slope is None else repr(
                math.log(ref.T_num) + self.predicted_slope * (x - math.log(ref.eps)))
            t0 = "" if r.T0 is None else repr(math.log(r.T0))
            w.writerow([repr(x), repr(math.log(r.T_num)), fit, pred, t0])
        return buf.getvalue()


def _tasks(cfg: LabConfig, seed: int):
    grid = eps_grid(cfg.eps_min, cfg.eps_max, cfg.points)
    rng = np.random.default_rng(seed)
    widths = [cfg.data.width]
    for _ in range(1, cfg.replicates):
        widths.append(float(cfg.data.width * (1 + cfg.width_jitter * rng.uniform(-1, 1))))
    return [(cfg, eps, rep, widths[rep]) for eps in grid for rep in range(cfg.replicates)]


def run_campaign(cfg: LabConfig, out_dir=None, jobs: int = 1, seed: int = 0) -> LifespanReport:
    """Run the sweep, fit the slope and write ``runs.csv``, ``fit.csv`` and ``report.json``.

    Failed runs are recorded, not raised; more than 20% failures raise
    :class:`CampaignFailed` after the partial report is written.
    """
    if cfg.replicates < 1:
        raise PreconditionError("need at least one replicate")
    prof = compute_alpha(cfg.params)
    alpha_for_slope = prof.alpha_max
    if cfg.alpha_override is not None:
        alpha_for_slope = max(Fraction(a) for a in cfg.alpha_override)
    gap = alpha_for_slope - prof.half_n
    predicted = float(-1 / gap) if gap > 0 else None

    tasks = _tasks(cfg, seed)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_execute, tasks))
    else:
        records = [_execute(t) for t in tasks]

    report = LifespanReport(
        p=[str(x) for x in cfg.params.p], n=cfg.params.n, criticality=prof.criticality.value,
        alpha_max=str(prof.alpha_max), predicted_slope=predicted, slope_tol=cfg.slope_tol,
        records=records, failed_runs=sum(r.status == "error" for r in records),
    )
    done = report.blown_up()
    if not done and all(r.status == "global" for r in records):
        report.regime = "global"
    elif len(done) >= 3:
        x = np.log([r.eps for r in done])
        y = np.log([r.T_num for r in done])
        w = np.where((x == x.min()) | (x == x.max()), EDGE_WEIGHT, 1.0)
        report.slope, report.intercept, report.slope_halfwidth = weighted_slope(x, y, w)

    if out_dir is not None:
        out = Path(out_dir)
        atomic_write(out / "runs.csv", report.runs_csv())
        atomic_write(out / "fit.csv", report.fit_csv())
        atomic_write(out / "report.json", report.to_json())
    if report.failed_runs > MAX_FAILED_FRACTION * len(records):
        raise CampaignFailed(f"{report.failed_runs} of {len(records)} runs failed")
    return report


@dataclass
class Verdict:
    status: str  # PASS | FAIL | INCONCLUSIVE
    checks: list  # (name, ok, detail)

    @property
    def text(self) -> str:
        lines = [f"verdict: {self.status}"]
        for name, ok, detail in self.checks:
            lines.append(f"  [{'ok' if ok else 'FAIL'}] {name}: {detail}")
        return "\n".join(lines) + "\n"


def reconcile(report: LifespanReport) -> Verdict:
    """Two-sided check: measured lifespans under the per-run ``T0`` and along the predicted power law."""
    if not report.records:
        return Verdict("INCONCLUSIVE", [("runs", False, "empty report")])
    checks = []
    n_err = report.failed_runs
    checks.append(("run failures", n_err <= MAX_FAILED_FRACTION * len(report.records),
                   f"{n_err} of {len(report.records)}"))

    if report.regime == "global":
        ok = report.criticality == Criticality.SUBCRITICAL.value
        checks.append(("global regime", ok, f"all runs global, criticality {report.criticality}"))
        decays = [d for r in report.records for d in (r.decay_exponents or [])]
        if decays:
            target = report.n / 2
            worst = max(abs(d - target) / target for d in decays)
            checks.append(("sup-norm decay", worst <= 0.15, f"max relative deviation {worst:.3f} from n/2"))
        return Verdict("PASS" if all(c[1] for c in checks) else "FAIL", checks)

    done = report.blown_up()
    if report.slope is None or report.predicted_slope is None or len(done) < 3:
        checks.append(("slope fit", False, f"only {len(done)} blow-up runs or no prediction"))
        return Verdict("INCONCLUSIVE", checks)

    dev = abs(report.slope - report.predicted_slope)
    checks.append(("lifespan exponent", dev <= report.slope_tol,
                   f"fitted {report.slope:.4f} +/- {report.slope_halfwidth:.4f}, "
                   f"predicted {report.predicted_slope:.4f}, tolerance {report.slope_tol}"))
    # prefactors of the lower envelope c eps^{slope}: their spread must stay within the exponent tolerance
    pref = [math.log(r.T_num) - report.predicted_slope * math.log(r.eps) for r in done]
    span = math.log(max(r.eps for r in done) / min(r.eps for r in done))
    spread = max(pref) - min(pref)
    checks.append(("lower envelope", spread <= report.slope_tol * span,
                   f"c = {math.exp(min(pref)):.4g}, C = {math.exp(max(pref)):.4g}"))
    with_bound = [r for r in report.records if r.bound_ok is not None]
    bad = [r.eps for r in with_bound if not r.bound_ok]
    checks.append(("upper bound T0", bool(with_bound) and not bad,
                   f"{len(with_bound) - len(bad)} of {len(with_bound)} runs with T_num <= 1.05 T0"))
    ineq = [r for r in report.records if r.inequality_ok is not None]
    bad_i = [r.eps for r in ineq if not r.inequality_ok]
    checks.append(("functional inequality", not bad_i, f"{len(ineq) - len(bad_i)} of {len(ineq)} traces"))
    return Verdict("PASS" if all(c[1] for c in checks) else "FAIL", checks)
