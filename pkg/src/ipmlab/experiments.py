"""Experiment drivers behind the command line: checks, scalings, runs, sweeps."""
from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import __version__
from .config import ExperimentConfig
from .diagnostics import (NormSeries, commutator_probe, growth_fit, leading_term, leading_term_at,
                          lower_bound_report)
from .fields import Grid2D, RealField2D, derivative, riesz1
from .littlewood_paley import (BesovParams, bernstein_ratio, besov_norm, block_norms,
                               build_partition, random_shell_field, w1inf_norm)
from .seed import ResolutionError, SeedSpec, build_eta0, build_f_N, sample_seed_product
from .solver import (BlowUpError, FlowMapCloud, SimState, SolverConfig, StratProfile, run)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
SIX_LOG2 = 6.0 * math.log(2.0)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: str
    passed: bool
    note: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.note})" if self.note else ""
        return f"[{mark}] {self.name}: {self.value:.6g} vs {self.threshold}{extra}"

    def as_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "threshold": self.threshold,
                "passed": self.passed, "note": self.note}


class OutputExists(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# small helpers

def make_grid(cfg: ExperimentConfig, n: int | None = None) -> Grid2D:
    return Grid2D(cfg.grid.L, n or cfg.grid.n)


def make_profile(cfg: ExperimentConfig, grid: Grid2D) -> StratProfile:
    if cfg.profile.gprime is not None:
        return StratProfile(grid, np.asarray(cfg.profile.gprime, float))
    return StratProfile.constant(grid, cfg.profile.gamma)


def make_seed(cfg: ExperimentConfig, N: int, grid: Grid2D | None = None) -> SeedSpec:
    return SeedSpec(N, grid or make_grid(cfg), tuple(cfg.seed.x0), strict=cfg.seed.strict_resolution)


def ratio(values) -> float:
    v = np.asarray(values, float)
    return float(v.max() / v.min())


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def bandlimited_field(grid: Grid2D, kmax: int, rng: np.random.Generator, amp: float = 1.0) -> RealField2D:
    """Random real field with modes |m1|, |m2| <= kmax, mean zero, max |f| = amp."""
    m1, m2 = np.meshgrid(grid.m, grid.m, indexing="ij")
    sel = (np.abs(m1) <= kmax) & (np.abs(m2) <= kmax)
    c = np.zeros((grid.n, grid.n), complex)
    c[sel] = rng.standard_normal(sel.sum()) + 1j * rng.standard_normal(sel.sum())
    f = grid.ifft(c)
    f -= f.mean()
    return RealField2D(grid, amp * f / np.abs(f).max())


def l2(f: RealField2D) -> float:
    return float(np.sqrt(np.sum(f.samples**2)) * f.grid.h)


# ---------------------------------------------------------------------------
# verification checks

def check_operator_identity(grid: Grid2D, N: int = 8, tol: float = 1e-6) -> Check:
    """R1^2 f_N against -d1^3 (G_N chi), plus R1 Lambda w = d1 w on the same data.

    R1^2 is formed as R1 applied twice, so a sign fault in R1 would cancel
    there; the second identity is the one that catches it.
    """
    spec = SeedSpec(N, grid, strict=False)
    w = sample_seed_product(spec)
    with warnings.catch_warnings():
        # the identity is exact on the lattice whether or not the core is resolved
        warnings.simplefilter("ignore")
        f = build_f_N(spec)
    lhs = riesz1(riesz1(f))
    rhs = -derivative(w, 3, 0)
    e1 = (lhs - rhs).max_abs() / rhs.max_abs()
    lam_w = RealField2D(grid, grid.ifft(grid.kabs * grid.fft(w.samples)))
    d1w = derivative(w, 1, 0)
    e2 = (riesz1(lam_w) - d1w).max_abs() / d1w.max_abs()
    err = max(e1, e2)
    return Check("operator_identity", err, f"< {tol:g}", bool(err < tol),
                 f"R1^2 f_N vs -d1^3: {e1:.3g}; R1 Lambda vs d1: {e2:.3g}")


def check_partition(grid: Grid2D, tol: float = 1e-12) -> Check:
    part = build_partition(grid)
    r = max(part.partition_residual(False), part.partition_residual(True))
    return Check("partition_of_unity", r, f"<= {tol:g}", bool(r <= tol))


def bernstein_samples(grid: Grid2D, count: int = 20, seed: int = 7) -> list[tuple[int, float]]:
    part = build_partition(grid)
    rng = np.random.default_rng(seed)
    js = range(2, part.j_max - 1)
    out = []
    for i in range(count):
        j = js[i % len(js)]
        f = random_shell_field(grid, part, j, rng)
        out.append((j, bernstein_ratio(f, j, 2.0)))
    return out


def check_bernstein(grid: Grid2D, tol: float = 0.10) -> Check:
    r = np.array([v for _, v in bernstein_samples(grid)])
    C = float(np.exp(np.mean(np.log(r))))
    spread = float(np.max(np.abs(r / C - 1)))
    return Check("bernstein_spread", spread, f"<= {tol:g}", bool(spread <= tol), f"fitted constant {C:.4f}")


def check_sobolev_bracket(grid: Grid2D, s: float = 1.0, count: int = 5, seed: int = 11) -> Check:
    from .littlewood_paley import sobolev_bracket, sobolev_norm
    part = build_partition(grid)
    Cs = sobolev_bracket(part, s)
    rng = np.random.default_rng(seed)
    worst = 1.0
    for _ in range(count):
        f = bandlimited_field(grid, grid.n // 4, rng)
        b = besov_norm(f, BesovParams(s, 2, 2, True), part)
        q = b / sobolev_norm(f, s)
        worst = max(worst, q, 1 / q)
    return Check("sobolev_bracket", worst, f"<= C* = {Cs:.6g}", bool(worst <= Cs))


def check_steady(grid: Grid2D, T: float = 1.0, tol: float = 1e-10) -> Check:
    k = grid.k_min
    eta = grid.sample(lambda x1, x2: np.sin(k * x2) + 0.3 * np.cos(3 * k * x2))
    prof = StratProfile.from_function(grid, lambda x2: 1.0 + 0.5 * np.cos(k * x2))
    series = run(eta, prof, SolverConfig(T=T))
    err = (series.final_state.eta - eta).max_abs()
    return Check("stratified_steady", err, f"< {tol:g}", bool(err < tol))


def check_conservation(grid: Grid2D, T: float = 1.0, tol: float = 1e-6, seed: int = 1) -> Check:
    rho = bandlimited_field(grid, 8, np.random.default_rng(seed))
    series = run(rho, None, SolverConfig(T=T, formulation="full"))
    final = series.final_state.eta
    drift = abs(l2(final) - l2(rho)) / l2(rho) / max(T, 1e-300)
    return Check("l2_drift_per_unit_time", drift, f"< {tol:g}", bool(drift < tol),
                 f"mean drift {abs(final.mean() - rho.mean()):.2e}")


def single_mode_rate(grid: Grid2D, gamma: float = 1.0, T: float = 1.0, dt: float = 1e-3) -> float:
    k = grid.k_min
    eta = grid.sample(lambda x1, x2: np.cos(k * x1))
    series = run(eta, StratProfile.constant(grid, gamma), SolverConfig(T=T, fixed_dt=dt))
    return math.log(series.final_state.eta.max_abs() / eta.max_abs()) / T


def check_single_mode(grid: Grid2D, gamma: float = 1.0, tol: float = 1e-4) -> Check:
    rate = single_mode_rate(Grid2D(grid.half_length, 32), gamma)
    err = abs(rate - gamma) / abs(gamma)
    return Check("single_mode_rate", err, f"< {tol:g}", bool(err < tol), f"rate {rate:.10f}")


def rk4_self_convergence(grid: Grid2D, N: int = 6, T: float = 0.004, ms=(16, 32, 64, 128)) -> list[float]:
    from .solver import step_rk4
    with warnings.catch_warnings():
        # temporal order does not depend on resolving the core
        warnings.simplefilter("ignore")
        eta0 = build_eta0(SeedSpec(N, grid, strict=False))
    prof = StratProfile.constant(grid, 1.0)
    sols = []
    for m in ms:
        st = SimState.from_field(eta0)
        for _ in range(m):
            st = step_rk4(st, T / m, prof)
        sols.append(st.eta.samples)
    errs = [np.abs(a - b).max() for a, b in zip(sols, sols[1:])]
    return [math.log2(a / b) for a, b in zip(errs, errs[1:])]


def check_rk4_order(grid: Grid2D, tol: float = 3.8) -> Check:
    orders = rk4_self_convergence(Grid2D(grid.half_length, min(grid.n, 256)))
    return Check("rk4_order", min(orders), f">= {tol:g}", bool(min(orders) >= tol),
                 "orders " + ", ".join(f"{o:.3f}" for o in orders))


def formulation_gap(grid: Grid2D, T: float = 0.5, dt: float = 5e-3, seed: int = 3) -> float:
    k = grid.k_min
    G = grid.sample(lambda x1, x2: 0.5 * np.sin(k * x2) + 0.2 * np.cos(2 * k * x2))
    prof = StratProfile.from_function(grid, lambda x2: 0.5 * k * np.cos(k * x2) - 0.4 * k * np.sin(2 * k * x2))
    eta = bandlimited_field(grid, 6, np.random.default_rng(seed), 0.5)
    a = run(eta, prof, SolverConfig(T=T, fixed_dt=dt)).final_state.eta
    b = run(eta + G, None, SolverConfig(T=T, fixed_dt=dt, formulation="full")).final_state.eta
    return (a - (b - G)).max_abs()


def check_formulations(grid: Grid2D, tol: float = 1e-8) -> Check:
    gap = formulation_gap(Grid2D(grid.half_length, min(grid.n, 256)))
    return Check("full_vs_perturbation", gap, f"< {tol:g}", bool(gap < tol))


def verify_checks(cfg: ExperimentConfig) -> dict[str, Callable[[], Check]]:
    g = make_grid(cfg)
    tol = cfg.tolerances
    return {
        "operator_identity": lambda: check_operator_identity(g, 8, tol.operator_identity),
        "partition_of_unity": lambda: check_partition(g, tol.partition),
        "bernstein_spread": lambda: check_bernstein(g, tol.bernstein_spread),
        "sobolev_bracket": lambda: check_sobolev_bracket(g),
        "stratified_steady": lambda: check_steady(g, 1.0, tol.steady),
        "l2_drift_per_unit_time": lambda: check_conservation(g, 1.0, tol.conservation),
        "single_mode_rate": lambda: check_single_mode(g, cfg.profile.gamma or 1.0),
        "rk4_order": lambda: check_rk4_order(g, tol.rk4_order),
        "full_vs_perturbation": lambda: check_formulations(g),
    }


# ---------------------------------------------------------------------------
# output plumbing

class Manifest:
    """JSON manifest written at start and rewritten when the command finishes."""

    def __init__(self, outdir: Path, command: str, cfg: ExperimentConfig, force: bool = False):
        self.outdir = Path(outdir)
        self.path = self.outdir / "manifest.json"
        if self.path.exists() and not force:
            raise OutputExists(f"{self.path} exists; pass --force to overwrite")
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.data = {
            "command": command,
            "config": cfg.to_dict(),
            "versions": _versions(),
            "started": _now(),
            "finished": None,
            "status": "running",
            "outputs": [],
            "checks": [],
        }
        self.write()

    def add_output(self, path: Path) -> None:
        rel = os.path.relpath(path, self.outdir)
        if rel not in self.data["outputs"]:
            self.data["outputs"].append(rel)

    def finish(self, status: str, checks=(), **extra) -> None:
        self.data["checks"] = [c.as_dict() if isinstance(c, Check) else c for c in checks]
        self.data.update(extra)
        self.data["status"] = status
        self.data["finished"] = _now()
        self.write()

    def write(self) -> None:
        with open(self.path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o).__name__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _versions() -> dict:
    import scipy
    return {"ipmlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def write_table(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_json(path: Path, data) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _figure():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "ipmlab"
    plt.rcParams["svg.fonttype"] = "path"
    return plt


def save_svg(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


# ---------------------------------------------------------------------------
# seed scaling

SCALING_HEADER = ("N", "w1inf", "besov_low", "besov_high", "leading", "leading_center", "status")


def seed_scaling_rows(cfg: ExperimentConfig) -> list[dict]:
    grid = make_grid(cfg)
    prof = make_profile(cfg, grid)
    part = build_partition(grid)
    p = cfg.besov.p
    rows = []
    for N in cfg.seed.N:
        spec = SeedSpec(N, grid, tuple(cfg.seed.x0), strict=True)
        try:
            f = build_f_N(spec)
        except ResolutionError as exc:
            rows.append({"N": N, "status": f"skipped: {exc}"})
            continue
        norms = block_norms(f, part, p)
        rows.append({
            "N": N,
            "w1inf": w1inf_norm(f),
            "besov_low": besov_norm(f, BesovParams(2 / p, p, 1), part, norms),
            "besov_high": besov_norm(f, BesovParams(2 / p + 1, p, 1), part, norms),
            "leading": leading_term(f, prof),
            "leading_center": leading_term_at(f, prof, cfg.seed.x0),
            "status": "ok",
        })
    return rows


def seed_scaling_checks(rows: list[dict], cfg: ExperimentConfig) -> list[Check]:
    ok = [r for r in rows if r["status"] == "ok"]
    tol = cfg.tolerances
    if len(ok) < 3:
        return [Check("seed_scaling_rows", len(ok), ">= 3 resolved rows", False)]
    N = np.array([r["N"] for r in ok], float)
    target = SIX_LOG2 * make_profile(cfg, make_grid(cfg)).sup
    slope = float(np.polyfit(N, [r["leading"] for r in ok], 1)[0])
    slope_c = float(np.polyfit(N, [r["leading_center"] for r in ok], 1)[0])
    w = ratio([r["w1inf"] for r in ok])
    lo = ratio([r["besov_low"] / math.sqrt(math.log(r["N"])) for r in ok])
    hi = ratio([r["besov_high"] / r["N"] for r in ok])
    rel = abs(slope - target) / target
    return [
        Check("w1inf_bounded", w, f"max/min <= {tol.wlinf_ratio:g}", bool(w <= tol.wlinf_ratio)),
        Check("besov_low_sqrt_log", lo, f"max/min <= {tol.besov_low_ratio:g}", bool(lo <= tol.besov_low_ratio)),
        Check("besov_high_linear", hi, f"max/min <= {tol.besov_high_ratio:g}", bool(hi <= tol.besov_high_ratio)),
        Check("leading_slope", slope, f"{target:.6g} +/- {100 * tol.slope_rel:g}%", bool(rel <= tol.slope_rel),
              f"slope at the seed center {slope_c:.6g}"),
    ]


def plot_seed_scaling(rows, path: Path) -> None:
    plt = _figure()
    ok = [r for r in rows if r["status"] == "ok"]
    N = [r["N"] for r in ok]
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, label in [("w1inf", "W^{1,inf}"), ("besov_low", "B^{2/p}_{p,1}"),
                       ("besov_high", "B^{2/p+1}_{p,1}"), ("leading", "leading term"),
                       ("leading_center", "leading term at center")]:
        ax.plot(N, [r[key] for r in ok], "o-", label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("N")
    ax.legend(fontsize=7)
    fig.tight_layout()
    save_svg(fig, path)
    plt.close(fig)


def cmd_seed_scaling(cfg: ExperimentConfig, outdir: Path, force: bool = False, log=print) -> int:
    man = Manifest(outdir, "seed-scaling", cfg, force)
    rows = seed_scaling_rows(cfg)
    table = Path(outdir) / "seed_scaling.csv"
    write_table(table, SCALING_HEADER, [[r.get(k, "") for k in SCALING_HEADER] for r in rows])
    man.add_output(table)
    if cfg.output.svg and sum(r["status"] == "ok" for r in rows) > 0:
        svg = Path(outdir) / "seed_scaling.svg"
        plot_seed_scaling(rows, svg)
        man.add_output(svg)
    checks = seed_scaling_checks(rows, cfg)
    for r in rows:
        if r["status"] != "ok":
            log(f"N={r['N']}: {r['status']}")
    for c in checks:
        log(c.line())
    passed = all(c.passed for c in checks)
    man.finish("pass" if passed else "fail", checks)
    return EXIT_OK if passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# single runs

@dataclass
class MemberResult:
    N: int
    series: NormSeries
    leading: float
    leading_center: float
    t_N: float
    resolved: bool
    commutator: list
    reports: list
    slope: Optional[float]
    error: Optional[str] = None
    fold_t: Optional[float] = None

    @property
    def commutator_monotone(self) -> Optional[bool]:
        if len(self.commutator) < 3:
            return None
        d = np.array([c[1] for c in self.commutator])
        v = np.array([c[2] for c in self.commutator])
        order = np.argsort(d, kind="stable")
        return bool(np.all(np.diff(v[order]) >= 0))

    @property
    def eps(self) -> float:
        return self.series[0].grad_inf

    @property
    def M(self) -> float:
        return float(self.series.column("grad_inf").max())

    @property
    def M_stride_sensitivity(self) -> float:
        """Relative drop in M when only every second sample is kept."""
        g = self.series.column("grad_inf")
        if len(g) == 0:
            return 0.0
        return float(1.0 - g[::2].max() / g.max()) if g.max() > 0 else 0.0

    @property
    def flow_bound_ok(self) -> bool:
        return flow_bound_holds(self.series)


def flow_bound_holds(series: NormSeries) -> bool:
    """||Phi - Id||_inf <= (1 + 1e-6) int ||u||_inf dt at every sample."""
    if len(series) < 2:
        return all(r.flow_disp == 0.0 for r in series.records)
    bound = cumulative_trapezoid(series.column("u_inf"), series.t, initial=0.0)
    return bool(np.all(series.column("flow_disp") <= (1 + 1e-6) * bound + 1e-15))


def simulate_member(cfg: ExperimentConfig, N: int, probe_commutator: bool | None = None) -> MemberResult:
    grid = make_grid(cfg)
    spec = make_seed(cfg, N, grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        eta0 = build_eta0(spec)
    prof = make_profile(cfg, grid)
    T = cfg.horizon(N)
    lead = leading_term(eta0, prof)
    lead_c = leading_term_at(eta0, prof, cfg.seed.x0)
    cloud = FlowMapCloud.on_grid(grid, cfg.solver.particle_stride)
    if probe_commutator is None:
        probe_commutator = cfg.solver.particle_stride == 1
    s = cfg.solver
    scfg = SolverConfig(T=T, cfl_number=s.cfl_number, dt_max=s.dt_max, dealias=s.dealias,
                        output_stride=s.output_stride, besov_p=cfg.besov.p)
    comm = []
    theta0 = None
    if probe_commutator:
        from .fields import grad_perp
        theta0 = grad_perp(eta0)

    fold = {"t": None}

    def observer(state):
        if theta0 is not None and fold["t"] is None:
            try:
                comm.append((state.t, state.cloud.max_displacement(), commutator_probe(theta0, state.cloud)))
            except ValueError:
                # the discrete particle grid no longer resolves the flow map
                fold["t"] = state.t
        return False

    error = None
    try:
        series = run(eta0, prof, scfg, observers=[observer], cloud=cloud)
    except BlowUpError as exc:
        series = exc.series or NormSeries()
        error = str(exc)
    reports = [lower_bound_report(series, lead, r.t).as_dict() for r in series.records]
    slope = None
    win = cfg.tolerances.growth_window * T
    if len(series.window(0.0, win)) >= 3:
        slope = growth_fit(series, (0.0, win))
    return MemberResult(N, series, lead, lead_c, T, spec.resolved, comm, reports, slope, error, fold["t"])


def member_checks(res: MemberResult, cfg: ExperimentConfig) -> list[Check]:
    checks = []
    verdicts = [r["verdict"] for r in res.reports]
    checks.append(Check(f"N={res.N} lower_bound", float(sum(verdicts)), f"all {len(verdicts)} samples",
                        bool(verdicts and all(verdicts)),
                        f"threshold at t_N {res.reports[-1]['threshold']:.4g}" if res.reports else ""))
    if res.slope is None:
        checks.append(Check(f"N={res.N} growth_slope", float("nan"), ">= 3 samples in window", False))
    else:
        q = res.slope / res.leading if res.leading else float("nan")
        checks.append(Check(f"N={res.N} growth_slope/leading", q, "in [0.8, 1.2]", bool(0.8 <= q <= 1.2)))
    checks.append(Check(f"N={res.N} flow_map_bound", res.series[-1].flow_disp,
                        "<= (1+1e-6) int ||u||_inf dt", res.flow_bound_ok))
    mono = res.commutator_monotone
    if mono is not None:
        note = f"probed {len(res.commutator)} samples"
        if res.fold_t is not None:
            note += f"; particle grid folded at t={res.fold_t:.4g}"
        checks.append(Check(f"N={res.N} commutator_monotone", res.commutator[-1][2],
                            "nondecreasing in displacement", mono, note))
    if res.error:
        checks.append(Check(f"N={res.N} run", res.series[-1].t if len(res.series) else 0.0,
                            "completed", False, res.error))
    return checks


def write_member(res: MemberResult, outdir: Path, man: Manifest, svg: bool) -> None:
    outdir = Path(outdir)
    csv_path = outdir / f"series_N{res.N}.csv"
    res.series.write_csv(csv_path)
    man.add_output(csv_path)
    rep = outdir / f"report_N{res.N}.json"
    write_json(rep, {
        "N": res.N, "t_N": res.t_N, "resolved": res.resolved, "leading_term": res.leading,
        "leading_term_center": res.leading_center, "growth_slope": res.slope, "error": res.error,
        "steps": res.series.steps, "lower_bound": res.reports, "fold_t": res.fold_t,
        "commutator": [{"t": t, "displacement": d, "value": v} for t, d, v in res.commutator],
    })
    man.add_output(rep)
    if svg and len(res.series):
        path = outdir / f"theta_N{res.N}.svg"
        plot_theta(res, path)
        man.add_output(path)


def plot_theta(res: MemberResult, path: Path) -> None:
    plt = _figure()
    t = res.series.t
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, res.series.column("linf_theta"), label="||Theta(t)||_inf")
    th0 = res.series[0].linf_theta
    ax.plot(t, th0 + res.leading * t, "--", label="||Theta_0|| + t * leading")
    ax.plot(t, 0.5 * res.leading * t - th0, ":", label="lower bound")
    ax.set_xlabel("t")
    ax.legend(fontsize=7)
    fig.tight_layout()
    save_svg(fig, path)
    plt.close(fig)


def cmd_simulate(cfg: ExperimentConfig, N: int, outdir: Path, force: bool = False, log=print) -> int:
    man = Manifest(outdir, "simulate", cfg, force)
    res = simulate_member(cfg, N)
    write_member(res, outdir, man, cfg.output.svg)
    checks = member_checks(res, cfg)
    for c in checks:
        log(c.line())
    if res.error:
        man.finish("error", checks, note=res.error)
        return EXIT_RUNTIME
    passed = all(c.passed for c in checks)
    man.finish("pass" if passed else "fail", checks, resolved=res.resolved)
    return EXIT_OK if passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# sweeps

SWEEP_HEADER = ("N", "t_N", "eps", "M", "M_stride2_drop", "leading", "leading_center", "steps", "resolved",
                "status")


def sweep_checks(members: list[MemberResult], cfg: ExperimentConfig) -> list[Check]:
    tol = cfg.tolerances
    good = [m for m in members if m.error is None]
    N = np.array([m.N for m in good], float)
    checks = []
    if len(good) >= 3:
        slope = loglog_slope(N, [m.eps for m in good])
        checks.append(Check("eps_slope", slope, f"-0.5 +/- {tol.eps_slope:g}", bool(abs(slope + 0.5) <= tol.eps_slope)))
        r = ratio([m.M for m in good])
        checks.append(Check("M_ratio", r, f"max/min <= {tol.m_ratio:g}", bool(r <= tol.m_ratio)))
    else:
        checks.append(Check("sweep_members", len(good), ">= 3 completed runs", False))
    for m in members:
        checks.append(Check(f"N={m.N} flow_map_bound", m.series[-1].flow_disp if len(m.series) else 0.0,
                            "<= (1+1e-6) int ||u||_inf dt", m.flow_bound_ok))
    return checks


def plot_sweep(members, path: Path) -> None:
    plt = _figure()
    N = [m.N for m in members]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(N, [m.eps for m in members], "o-", label="eps_N = ||grad eta_0||_inf")
    ax.plot(N, [m.M for m in members], "s-", label="M_N = sup ||grad eta(t)||_inf")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("N")
    ax.legend(fontsize=7)
    fig.tight_layout()
    save_svg(fig, path)
    plt.close(fig)


def run_sweep(cfg: ExperimentConfig, log=print) -> list[MemberResult]:
    members = []
    for N in sorted(cfg.seed.N):
        log(f"sweep member N={N}")
        members.append(simulate_member(cfg, N, probe_commutator=False))
    return members


def cmd_sweep(cfg: ExperimentConfig, outdir: Path, force: bool = False, log=print) -> int:
    if len(cfg.seed.N) < 3:
        raise ValueError("sweep needs at least 3 values of N")
    man = Manifest(outdir, "sweep", cfg, force)
    members = run_sweep(cfg, log)
    for m in members:
        write_member(m, outdir, man, cfg.output.svg)
    table = Path(outdir) / "sweep.csv"
    write_table(table, SWEEP_HEADER, [
        [m.N, m.t_N, m.eps, m.M, m.M_stride_sensitivity, m.leading, m.leading_center, m.series.steps,
         m.resolved,
         "ok" if m.error is None else "failed"] for m in members])
    man.add_output(table)
    if cfg.output.svg:
        svg = Path(outdir) / "sweep.svg"
        plot_sweep(members, svg)
        man.add_output(svg)
    checks = sweep_checks(members, cfg)
    for c in checks:
        log(c.line())
    failed = [m.N for m in members if m.error]
    if failed:
        verdict = "indeterminate"
    else:
        verdict = "pass" if all(c.passed for c in checks) else "fail"
    vpath = Path(outdir) / "verdict.json"
    write_json(vpath, {"verdict": verdict, "failed_members": failed, "checks": [c.as_dict() for c in checks]})
    man.add_output(vpath)
    man.finish(verdict, checks)
    if failed:
        return EXIT_RUNTIME
    return EXIT_OK if verdict == "pass" else EXIT_FAIL


def cmd_verify(cfg: ExperimentConfig, outdir: Path | None = None, force: bool = False, log=print,
               only=None) -> int:
    man = Manifest(outdir, "verify", cfg, force) if outdir is not None else None
    results = []
    for name, fn in verify_checks(cfg).items():
        if only is not None and name not in only:
            continue
        c = fn()
        log(c.line())
        results.append(c)
    failed = [c.name for c in results if not c.passed]
    if failed:
        log("failing checks: " + ", ".join(failed))
    if man is not None:
        man.finish("fail" if failed else "pass", results)
    return EXIT_FAIL if failed else EXIT_OK
