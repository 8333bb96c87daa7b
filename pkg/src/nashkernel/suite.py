"""Named end-to-end checks, one per inequality or bound, with CSV/JSON output."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import bounds, fractional, nash, spectral
from .config import RunConfig
from .discretization import assemble_divergence_form, assemble_schrodinger
from .errors import ConfigError
from .models import DensityModel, exppower_threshold

GAP_TOL = nash.GAP_RTOL
EXPONENT_RTOL = 0.15
MONOTONE_FACTOR = 1.02


@dataclass(frozen=True)
class Metric:
    name: str
    value: float
    tolerance: float
    reference: float
    passed: bool
    worst: str = ""


@dataclass
class VerificationReport:
    scenario: str
    metrics: list[Metric]
    config_digest: str
    seed: int
    flags: list[str] = field(default_factory=list)
    detail: list[dict] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "pass" if all(m.passed for m in self.metrics) else "fail"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["scenario", "metric", "value", "tolerance", "reference", "passed", "worst"])
        for m in self.metrics:
            w.writerow([self.scenario, m.name, repr(float(m.value)), repr(float(m.tolerance)),
                        repr(float(m.reference)), "true" if m.passed else "false", m.worst])
        return buf.getvalue()

    def detail_csv(self) -> str:
        if not self.detail:
            return ""
        buf = io.StringIO()
        keys = list(self.detail[0])
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(keys)
        for row in self.detail:
            w.writerow([_fmt(row[k]) for k in keys])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"scenario": self.scenario, "status": self.status, "config_digest": self.config_digest,
                "seed": self.seed, "flags": list(self.flags),
                "metrics": [{"name": m.name, "value": _json_float(m.value), "tolerance": _json_float(m.tolerance),
                             "reference": _json_float(m.reference), "passed": m.passed, "worst": m.worst}
                            for m in self.metrics]}


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_float(v: float):
    v = float(v)
    return v if math.isfinite(v) else repr(v)


def le(name, value, bound, reference=math.nan, worst="") -> Metric:
    """Metric that passes when ``value <= bound``."""
    value = float(value)
    return Metric(name, value, float(bound), float(reference), bool(value <= bound), worst)


def ge(name, value, bound, reference=math.nan, worst="") -> Metric:
    value = float(value)
    return Metric(name, value, float(bound), float(reference), bool(value >= bound), worst)


# -- shared building blocks ----------------------------------------------------


class _Context:
    """Lazily assembled operator data for one configuration (private per scenario run)."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.model = cfg.model
        self.grid = cfg.grid
        self._op = None
        self._dec = None

    @property
    def op(self):
        if self._op is None:
            self._op = assemble_divergence_form(self.model, self.grid, self.cfg.bc)
        return self._op

    @property
    def dec(self):
        if self._dec is None:
            self._dec = spectral.eigendecompose(self.op)
        return self._dec

    @property
    def V(self):
        return self.model.V(self.grid.nodes)

    @property
    def c(self) -> float:
        return self.model.lyapunov_constant()


LAMBDA_GRID = np.concatenate([[0.0], np.logspace(-3, 6, 39)])
C_GRID = (0.0, 0.5, 3.0, 100.0)
ALPHA_GRID = (0.1, 0.5, 0.9, 1.0, 1.5, 3.0)


def scenario_scalar_inequality(ctx: _Context) -> VerificationReport:
    bad, worst_margin, worst = 0, math.inf, ""
    count = 0
    for lam in LAMBDA_GRID:
        for c in C_GRID:
            for a in ALPHA_GRID:
                lhs, rhs, ok = nash.lemma_2_8_scalar(float(lam), c, a)
                count += 1
                bad += not ok
                margin = rhs - lhs
                if margin < worst_margin:
                    worst_margin, worst = margin, f"lambda={float(lam)!r},c={c!r},alpha={a!r}"
    return _report(ctx, "lemma2.8", [
        le("violations", bad, 0, worst=worst),
        ge("checks", count, 960, 960),
        ge("min_rhs_minus_lhs", worst_margin, -1e-12, worst=worst),
    ])


def scenario_jensen(ctx: _Context) -> VerificationReport:
    dec = ctx.dec
    rng = np.random.default_rng(ctx.cfg.seed)
    lam_max = float(dec.clipped_eigenvalues[-1])
    phis: dict[str, Callable] = {
        "t^1.5": lambda t: np.asarray(t, dtype=float) ** 1.5,
        "t^2": lambda t: np.asarray(t, dtype=float) ** 2,
        # e^t rescaled to the spectral range so that it stays finite
        "exp(t/lam_max)": lambda t: np.exp(np.asarray(t, dtype=float) / lam_max),
    }
    metrics, detail = [], []
    for name, phi in phis.items():
        bad, worst_gap, worst = 0, math.inf, ""
        for k in range(200):
            f = rng.standard_normal(dec.n)
            f /= math.sqrt(float(np.dot(f * f, dec.weights)))
            lhs, rhs, ok = nash.jensen_check(dec, f, phi)
            bad += not ok
            rel = (rhs - lhs) / max(1.0, abs(rhs))
            if rel < worst_gap:
                worst_gap, worst = rel, f"vector {k}"
            detail.append({"phi": name, "vector": k, "lhs": lhs, "rhs": rhs})
        metrics.append(le(f"violations[{name}]", bad, 0, worst=worst))
    return _report(ctx, "prop2.6", metrics, detail=detail)


def scenario_gamma_recursion(ctx: _Context) -> VerificationReport:
    eps = ctx.cfg.epsilon
    metrics, detail = [], []
    seq = nash.gamma_sequence(eps, 12)
    b_err = max(abs(b - eps**k) for k, _, b in seq)
    a_vals = [a for _, a, _ in seq]
    metrics.append(le("max|b_n - eps^n|", b_err, 0.0))
    metrics.append(le("a_n non-decreasing steps", sum(a2 >= a1 for a1, a2 in zip(a_vals, a_vals[1:])), 0))
    alphas = sorted({a for a in ctx.cfg.alpha_list if a < 1} | {0.1, 0.2, 0.5, 0.9})
    for a in alphas:
        cert = nash.gamma_certificate(a, eps)
        detail.append({"alpha": a, "epsilon": eps, "n_steps": cert.n_steps, "a_n": cert.a_n,
                       "b_n": cert.b_n, "gamma": cert.gamma})
        ok = (cert.alpha_n <= a < 2 * cert.alpha_n and 0 < cert.gamma <= 1
              and 0 < cert.a_n <= 1 and 0 < cert.b_n <= 1)
        metrics.append(Metric(f"certificate[alpha={a!r}]", cert.gamma, 1.0, math.nan, bool(ok)))
    return _report(ctx, "prop2.5-recursion", metrics, detail=detail)


def _frozen_rate(ctx: _Context):
    probes = nash.probe_family(ctx.dec, ctx.V, ctx.cfg.seed)
    C, worst = nash.estimate_nash_constant(ctx.op, probes, ctx.c, ctx.model.d, ctx.V)
    return probes, nash.NashRate(ctx.model.d, C), worst


def _gap_metrics(rows: list[nash.NashRow], label: str) -> Metric:
    # probes have unit mu-norm, so the tolerance is -1e-8 ||f||^2
    worst = min(rows, key=lambda r: r.gap)
    return ge(f"min_gap[{label}]", worst.gap, -GAP_TOL, 0.0, worst=worst.probe_id)


def scenario_fractional_gap(ctx: _Context) -> VerificationReport:
    probes, rate, worst_probe = _frozen_rate(ctx)
    metrics = [ge("probe_count", len(probes), nash.PROBE_COUNT, nash.PROBE_COUNT),
               Metric("nash_constant_C_est", rate.C, math.nan, math.nan, True, worst_probe)]
    base = [nash.nash_gap(ctx.op, p.f, ctx.c, rate, ctx.V) for p in probes]
    metrics.append(ge("min_gap[classical]", min(base), -GAP_TOL, 0.0))
    detail = []
    for a in [a for a in ctx.cfg.alpha_list if a < 1] or [0.5]:
        rows = nash.fractional_sweep(ctx.dec, probes, a, ctx.c, rate, ctx.V, ctx.cfg.epsilon)
        metrics.append(_gap_metrics(rows, f"alpha={a!r}"))
        detail.extend(r.as_row() for r in rows)
    return _report(ctx, "thm2.2-gap", metrics, detail=detail)


def scenario_high_power_gap(ctx: _Context) -> VerificationReport:
    probes, rate, worst_probe = _frozen_rate(ctx)
    metrics = [Metric("nash_constant_C_est", rate.C, math.nan, math.nan, True, worst_probe)]
    detail = []
    for a in sorted({1.5, 2.0} | {a for a in ctx.cfg.alpha_list if a >= 1}):
        rows = nash.fractional_sweep(ctx.dec, probes, a, ctx.c, rate, ctx.V)
        metrics.append(_gap_metrics(rows, f"alpha={a!r}"))
        detail.extend(r.as_row() for r in rows)
    return _report(ctx, "rmk2.10-gap", metrics, detail=detail)


def scenario_balakrishnan(ctx: _Context) -> VerificationReport:
    metrics = []
    lam = np.logspace(-4, 6, 30)
    for a in (0.1, 0.3, 0.5, 0.7, 0.9):
        rule = fractional.balakrishnan_rule(a)
        rel = np.abs(fractional.balakrishnan_scalar(lam, a, rule) / lam**a - 1)
        k = int(np.argmax(rel))
        metrics.append(le(f"scalar_rel_err[alpha={a!r}]", rel[k], 1e-8, worst=f"lambda={float(lam[k])!r}"))
    rng = np.random.default_rng(ctx.cfg.seed)
    f = rng.standard_normal(ctx.op.n)
    w = ctx.op.weights
    for a in (0.3, 0.5, 0.7):
        rule = fractional.balakrishnan_rule(a)
        y = fractional.balakrishnan_apply(ctx.op, f, a, rule)
        z = spectral.apply_function(ctx.dec, spectral.power(a), f)
        rel = math.sqrt(float(np.dot((y - z) ** 2, w)) / float(np.dot(z * z, w)))
        metrics.append(le(f"operator_rel_err[alpha={a!r}]", rel, 1e-6))
    return _report(ctx, "balakrishnan", metrics)


def scenario_subordination(ctx: _Context) -> VerificationReport:
    metrics = []
    rng = np.random.default_rng(ctx.cfg.seed)
    f = rng.standard_normal(ctx.op.n)
    w = ctx.op.weights
    for t in (0.5, 1.0, 2.0):
        for a in (0.5, 0.7):
            meas = fractional.subordination_measure(t, a, check=False)
            lam = fractional.laplace_check_grid()
            err = np.abs(meas.laplace(lam) - np.exp(-t * lam**a))
            k = int(np.argmax(err))
            tag = f"t={t!r},alpha={a!r}"
            metrics.append(le(f"laplace_err[{tag}]", err[k], 1e-6, worst=f"lambda={float(lam[k])!r}"))
            metrics.append(le(f"mass_err[{tag}]", abs(meas.mass - 1), 1e-6))
            metrics.append(ge(f"min_weight[{tag}]", float(meas.weights.min()), 0.0))
            y = fractional.subordinate_semigroup(ctx.dec, meas, f)
            z = spectral.kernel(ctx.dec, t, a).apply(f)
            metrics.append(le(f"operator_err[{tag}]", math.sqrt(float(np.dot((y - z) ** 2, w))), 1e-6))
    return _report(ctx, "subordination", metrics)


def _monotone_violation(log_values) -> tuple[float, int]:
    """Largest ``r_{k+1} / r_k`` (from log values) and where it happens."""
    ratios = [math.exp(b - a) for a, b in zip(log_values, log_values[1:])]
    k = int(np.argmax(ratios))
    return float(ratios[k]), k


def scenario_subordinate_bound(ctx: _Context) -> VerificationReport:
    metrics, detail = [], []
    V = ctx.V
    t_mono = np.logspace(-3, 0, 10)
    for a in [a for a in ctx.cfg.alpha_list if a <= 1] or [0.5]:
        sups, sups35 = [], []
        for t in ctx.cfg.t_list:
            kern = spectral.kernel(ctx.dec, t, a)
            r = bounds.bound_ratio_detail(kern, V, ctx.c, ctx.cfg.interior_margin)
            sups.append(r.value)
            sups35.append(bounds.bound_ratio(kern, V, ctx.c, 0.35))
            detail.append({"alpha": a, "t": t, "sup_ratio": r.value, "bound_branch": r.branch,
                           "i": r.i, "j": r.j})
        tag = f"alpha={a!r}"
        metrics.append(Metric(f"finite_positive[{tag}]", min(sups), 0.0, math.nan,
                              bool(all(math.isfinite(s) and s > 0 for s in sups))))
        spread = max(abs(s / s35 - 1) for s, s35 in zip(sups, sups35))
        metrics.append(le(f"margin_sensitivity[{tag}]", spread, 0.05))
        undamped = [math.log(bounds.diagonal_sup(ctx.dec, t, a, V, ctx.cfg.interior_margin)[0]) for t in t_mono]
        worst, k = _monotone_violation(undamped)
        metrics.append(le(f"monotone_ratio[{tag}]", worst, MONOTONE_FACTOR, worst=f"t={float(t_mono[k + 1])!r}"))
    return _report(ctx, "thm3.3-bound", metrics, detail=detail)


def scenario_high_power_bound(ctx: _Context) -> VerificationReport:
    metrics, detail = [], []
    V = ctx.V
    t_list = np.logspace(-2, 0, 10)
    margin = ctx.cfg.interior_margin
    for a in sorted({1.0, 1.5, 2.0} | {a for a in ctx.cfg.alpha_list if a >= 1}):
        tag = f"alpha={a!r}"
        kernels = [spectral.kernel(ctx.dec, t, a) for t in t_list]
        # all-node constant, and the interior one that skips the truncation artifact
        for label, c_a in (("all", bounds.c_alpha_estimate(ctx.dec, V, a)),
                           ("interior", bounds.c_alpha_estimate(ctx.dec, V, a, margin))):
            vals = []
            for t, kern in zip(t_list, kernels):
                r = bounds.bound_ratio_alpha_ge1(kern, V, ctx.c, c_a, margin)
                vals.append(r.log_value)
                detail.append({"alpha": a, "c_alpha_nodes": label, "t": float(t), "log_sup_ratio": r.log_value,
                               "bound_branch": r.branch, "c_alpha": c_a})
            metrics.append(Metric(f"c_alpha[{label},{tag}]", c_a, math.nan, ctx.c**a, math.isfinite(c_a)))
            metrics.append(Metric(f"finite_log_ratio[{label},{tag}]", min(vals), math.nan, math.nan,
                                  bool(all(math.isfinite(v) for v in vals))))
            worst, k = _monotone_violation(vals)
            metrics.append(le(f"monotone_ratio[{label},{tag}]", worst, MONOTONE_FACTOR,
                              worst=f"t={float(t_list[k + 1])!r}"))
    return _report(ctx, "thm3.5-bound", metrics, detail=detail)


def resolution_flag(h: float, t_min: float, alpha: float) -> bool:
    """True when the kernel width ``t^(1/(2 alpha))`` at the smallest time is below two grid spacings."""
    return t_min ** (1.0 / (2.0 * alpha)) < 2.0 * h


def scenario_exponent(ctx: _Context) -> VerificationReport:
    metrics, detail, flags = [], [], []
    dec_B = spectral.eigendecompose(assemble_schrodinger(ctx.model, ctx.grid))
    for a in ctx.cfg.alpha_list:
        tag = f"alpha={a!r}"
        if resolution_flag(ctx.grid.h, ctx.cfg.t_list[0], a):
            flags.append(f"degraded-resolution[{tag}]")
        for kind, rep in (("p", bounds.exponent_sweep(ctx.dec, ctx.model, a, ctx.cfg.t_list, ctx.c,
                                                      ctx.cfg.interior_margin)),
                          ("k", bounds.schrodinger_sweep(dec_B, a, ctx.cfg.t_list, ctx.model.d,
                                                         ctx.cfg.interior_margin))):
            metrics.append(le(f"exponent_rel_err[{kind},{tag}]", rep.relative_exponent_error, EXPONENT_RTOL,
                              rep.reference_exponent, worst=f"slope={rep.fitted_exponent!r}"))
            metrics.append(Metric(f"C_fit[{kind},{tag}]", rep.C_fit, math.nan, math.nan, math.isfinite(rep.C_fit)))
            for t, s in zip(rep.t_values, rep.sup_ratio):
                detail.append({"kernel": kind, "alpha": a, "t": t, "sup_ratio": s, "bound_branch": rep.branch,
                               "slope": rep.fitted_exponent, "C_fit": rep.C_fit,
                               "reference_exponent": rep.reference_exponent})
    return _report(ctx, "cor4.1-exponent", metrics, detail=detail, flags=flags)


LYAPUNOV_GRID = np.linspace(-40.0, 40.0, 4001)


def _lyapunov_metrics(model: DensityModel, tag: str) -> list[Metric]:
    x = LYAPUNOV_GRID
    vals = model.minus_AV_over_V(x)
    k = int(np.argmax(vals))
    c = model.lyapunov_constant()
    hess = model.d2_log_rho(x)
    kh = int(np.argmax(hess))
    return [le(f"max(-AV/V)-c[{tag}]", vals[k] - c, 1e-12, c, worst=f"x={float(x[k])!r}"),
            le(f"max(logrho'')-M[{tag}]", hess[kh] - model.hessian_logrho_bound(), 1e-12,
               model.hessian_logrho_bound(), worst=f"x={float(x[kh])!r}")]


def scenario_cauchy_lyapunov(ctx: _Context) -> VerificationReport:
    model = ctx.model if ctx.model.family == "cauchy" else DensityModel("cauchy", 2.0, d=ctx.model.d)
    metrics = _lyapunov_metrics(model, f"beta={model.beta!r},d={model.d}")
    return _report(ctx, "cor4.2-lyapunov", metrics)


def scenario_exponential_lyapunov(ctx: _Context) -> VerificationReport:
    d = ctx.model.d
    metrics = []
    for a in (0.5, 1.0, 1.5):
        metrics += _lyapunov_metrics(DensityModel("expsmooth", a=a, d=d), f"expsmooth,a={a!r}")
    for a in (2.0, 3.0):
        m = DensityModel("exppower", a=a, d=d, K_cut=exppower_threshold(a, d))
        metrics += _lyapunov_metrics(m, f"exppower,a={a!r}")
    return _report(ctx, "cor4.3-lyapunov", metrics)


def scenario_schrodinger(ctx: _Context) -> VerificationReport:
    model, grid = ctx.model, ctx.grid
    x = grid.nodes
    identity = float(np.max(np.abs(model.schrodinger_potential(x) + model.minus_AV_over_V(x))))
    dec_B = spectral.eigendecompose(assemble_schrodinger(model, grid))
    low = abs(float(dec_B.eigenvalues[0]) - float(ctx.dec.eigenvalues[0]))
    idx = np.flatnonzero(bounds.interior_mask(x, ctx.cfg.interior_margin))
    a = ctx.cfg.alpha_list[0]
    t = ctx.cfg.t_list[-1]
    k_transformed = bounds.schrodinger_kernel(spectral.kernel(ctx.dec, t, a), model)[np.ix_(idx, idx)]
    k_direct = spectral.kernel(dec_B, t, a).values[np.ix_(idx, idx)]
    rel = float(np.abs(k_transformed - k_direct).max() / np.abs(k_direct).max())
    return _report(ctx, "schrodinger-remark", [
        le("max|q - AV/V|", identity, 1e-10),
        le("|lambda0(B) - lambda0(A)|", low, 1e-3),
        le(f"kernel_transform_rel_err[t={t!r},alpha={a!r}]", rel, 5e-3),
    ])


SCENARIOS: dict[str, Callable[[_Context], VerificationReport]] = {
    "lemma2.8": scenario_scalar_inequality,
    "prop2.6": scenario_jensen,
    "prop2.5-recursion": scenario_gamma_recursion,
    "thm2.2-gap": scenario_fractional_gap,
    "rmk2.10-gap": scenario_high_power_gap,
    "balakrishnan": scenario_balakrishnan,
    "subordination": scenario_subordination,
    "thm3.3-bound": scenario_subordinate_bound,
    "thm3.5-bound": scenario_high_power_bound,
    "cor4.1-exponent": scenario_exponent,
    "cor4.2-lyapunov": scenario_cauchy_lyapunov,
    "cor4.3-lyapunov": scenario_exponential_lyapunov,
    "schrodinger-remark": scenario_schrodinger,
}


def _report(ctx, name, metrics, detail=None, flags=None) -> VerificationReport:
    return VerificationReport(name, metrics, ctx.cfg.digest(), ctx.cfg.seed, flags or [], detail or [])


def run_scenario(name: str, cfg: RunConfig | None = None) -> VerificationReport:
    if name not in SCENARIOS:
        raise ConfigError(f"scenario: unknown name {name!r}; choose from {sorted(SCENARIOS)}")
    return SCENARIOS[name](_Context(cfg or RunConfig()))


def worker_count() -> int:
    env = os.environ.get("NKL_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"NKL_THREADS: expected an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError("NKL_THREADS: must be at least 1")
        return n
    return os.cpu_count() or 1


def run_all(cfg: RunConfig | None = None, names: list[str] | None = None) -> list[VerificationReport]:
    """Run scenarios (all by default); results come back in registry order."""
    cfg = cfg or RunConfig()
    names = list(SCENARIOS) if names is None else names
    for n in names:
        if n not in SCENARIOS:
            raise ConfigError(f"scenario: unknown name {n!r}")
    workers = min(worker_count(), len(names))
    if workers == 1:
        return [run_scenario(n, cfg) for n in names]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda n: run_scenario(n, cfg), names))


def write_reports(reports: list[VerificationReport], out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for r in reports:
        (out / f"{r.scenario}.csv").write_bytes(r.to_csv().encode())
        d = r.detail_csv()
        if d:
            (out / f"{r.scenario}.detail.csv").write_bytes(d.encode())
    summary = {"all_passed": all(r.passed for r in reports), "reports": [r.summary() for r in reports]}
    path = out / "summary.json"
    path.write_bytes((json.dumps(summary, indent=2, sort_keys=True) + "\n").encode())
    return path
