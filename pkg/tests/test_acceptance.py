"""Acceptance criteria, one test per criterion.

Each test appends a ``criterion N: PASS|FAIL ...`` line that is echoed in the
terminal summary, then asserts. Tolerances are pinned at module level.
"""
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from nashkernel import (DensityModel, NashRate, assemble_divergence_form, assemble_schrodinger, balakrishnan_rule,
                        balakrishnan_scalar, build_grid, eigendecompose, kernel, lemma_2_8_scalar,
                        matrix_exponential_oracle, subordinate_semigroup, subordination_measure)
from nashkernel import bounds, nash
from nashkernel.fractional import laplace_check_grid
from nashkernel.models import exppower_threshold
from nashkernel.spectral import spectral_exponential

LEMMA_SLACK = 1e-12
LEMMA_SECONDS = 1.0
BALA_RTOL = 1e-8
BALA_SECONDS = 5.0
LAPLACE_TOL = 1e-6
SUBORD_OP_TOL = 1e-6
ORACLE_TOL = 1e-8
ORACLE_SECONDS = 20.0
POSITIVITY_TOL = 1e-10
MASS_TOL = 1e-8
SEMIGROUP_TOL = 1e-8
LYAP_SLACK = 1e-12
GAP_TOL = 1e-8
NASH_SECONDS = 60.0
EXPONENT_RTOL = 0.15
EXPONENT_SECONDS = 300.0
MONOTONE_FACTOR = 1.02

CAUCHY2 = DensityModel("cauchy", beta=2.0)


def verdict(log, number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    log.append(line)
    assert ok, line


def unit(f, w):
    return f / math.sqrt(float(np.dot(f * f, w)))


def test_criterion_01_scalar_lemma(acceptance_log):
    t0 = time.perf_counter()
    lam = np.concatenate([[0.0], np.logspace(-3, 6, 39)])
    results = [lemma_2_8_scalar(float(l), c, a) for l in lam for c in (0.0, 0.5, 3.0, 100.0)
               for a in (0.1, 0.5, 0.9, 1.0, 1.5, 3.0)]
    elapsed = time.perf_counter() - t0
    bad = sum(lhs > rhs + LEMMA_SLACK for lhs, rhs, _ in results)
    ok = len(results) == 960 and bad == 0 and elapsed < LEMMA_SECONDS
    verdict(acceptance_log, 1, ok, f"checks={len(results)} violations={bad} time={elapsed:.3f}s")


def test_criterion_02_balakrishnan_scalar(acceptance_log):
    t0 = time.perf_counter()
    lam = np.logspace(-4, 6, 30)
    worst = 0.0
    for a in (0.1, 0.3, 0.5, 0.7, 0.9):
        rel = np.abs(balakrishnan_scalar(lam, a, balakrishnan_rule(a)) - lam**a) / lam**a
        worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - t0
    ok = worst <= BALA_RTOL and elapsed < BALA_SECONDS
    verdict(acceptance_log, 2, ok, f"max_rel_err={worst:.3e} tol={BALA_RTOL:g} time={elapsed:.2f}s")


def test_criterion_03_subordination(acceptance_log):
    lam = laplace_check_grid()
    assert lam[0] == 0.0 and lam[-1] == 100.0
    g = build_grid(10, 200)
    op = assemble_divergence_form(CAUCHY2, g)
    dec = eigendecompose(op)
    f = unit(np.random.default_rng(3).standard_normal(op.n), op.weights)
    lap_err = op_err = 0.0
    for t in (0.5, 1.0, 2.0):
        for a in (0.5, 0.7):
            meas = subordination_measure(t, a, check=False)
            lap_err = max(lap_err, float(np.abs(meas.laplace(lam) - np.exp(-t * lam**a)).max()))
            diff = subordinate_semigroup(dec, meas, f) - kernel(dec, t, a).apply(f)
            op_err = max(op_err, math.sqrt(float(np.dot(diff * diff, op.weights))))
    ok = lap_err <= LAPLACE_TOL and op_err <= SUBORD_OP_TOL
    verdict(acceptance_log, 3, ok, f"laplace_err={lap_err:.3e} operator_err={op_err:.3e} tol={LAPLACE_TOL:g}")


def test_criterion_04_oracle(acceptance_log):
    t0 = time.perf_counter()
    worst = 0.0
    for n in (50, 200):
        op = assemble_divergence_form(CAUCHY2, build_grid(10, n))
        dec = eigendecompose(op)
        for t in (0.1, 1.0):
            worst = max(worst, float(np.linalg.norm(matrix_exponential_oracle(op, t) - spectral_exponential(dec, t))))
    elapsed = time.perf_counter() - t0
    ok = worst <= ORACLE_TOL and elapsed < ORACLE_SECONDS
    verdict(acceptance_log, 4, ok, f"max_frobenius={worst:.3e} tol={ORACLE_TOL:g} time={elapsed:.2f}s")


def test_criterion_05_markov_structure(acceptance_log):
    g = build_grid(10, 200)
    op = assemble_divergence_form(CAUCHY2, g)
    dec = eigendecompose(op)
    parts, ok = [], True
    for a in (0.5, 1.0, 1.5):
        kmin = mass = semi = 0.0
        for t in (0.01, 0.1, 1.0):
            K = kernel(dec, t, a).values
            kmin = min(kmin, float(K.min()))
            mass = max(mass, float(np.abs(K @ op.weights - 1).max()))
            for s in (0.01, 0.1, 1.0):
                lhs = K @ (op.weights[:, None] * kernel(dec, s, a).values)
                semi = max(semi, float(np.abs(lhs - kernel(dec, t + s, a).values).max()))
        ok &= kmin >= -POSITIVITY_TOL and mass <= MASS_TOL and semi <= SEMIGROUP_TOL
        parts.append(f"alpha={a}: min_entry={kmin:.3e} mass_err={mass:.1e} semigroup_err={semi:.1e}")
    verdict(acceptance_log, 5, ok, "; ".join(parts))


def test_criterion_06_lyapunov_constants(acceptance_log):
    x = np.linspace(-40, 40, 4001)
    cases = [(DensityModel("cauchy", beta=b), b * 1, 4 * b) for b in (1.5, 2.0, 3.0)]
    cases += [(DensityModel("expsmooth", a=a), a / 2, a * (2 - a)) for a in (0.5, 1.0, 1.5)]
    for a in (2.0, 3.0):
        K = exppower_threshold(a, 1)
        cases.append((DensityModel("exppower", a=a, K_cut=K), 0.5 * a * (a - 1) * K ** (a - 2), 0.0))
    ok, worst = True, -math.inf
    for model, c_ref, m_ref in cases:
        lyap = float(np.max(model.minus_AV_over_V(x))) - c_ref
        hess = float(np.max(model.d2_log_rho(x))) - m_ref
        ok &= lyap <= LYAP_SLACK and hess <= LYAP_SLACK
        ok &= model.lyapunov_constant() == pytest.approx(c_ref, rel=1e-14)
        ok &= model.hessian_logrho_bound() == pytest.approx(m_ref, abs=1e-14)
        worst = max(worst, lyap, hess)
    verdict(acceptance_log, 6, ok, f"models={len(cases)} max_excess={worst:.3e} slack={LYAP_SLACK:g}")


def test_criterion_07_fractional_nash_gaps(acceptance_log):
    t0 = time.perf_counter()
    g = build_grid(40, 2001)
    op = assemble_divergence_form(CAUCHY2, g)
    dec = eigendecompose(op)
    V = CAUCHY2.V(g.nodes)
    c = CAUCHY2.lyapunov_constant()
    probes = nash.probe_family(dec, V)
    C, _ = nash.estimate_nash_constant(op, probes, c, 1, V)
    rate = NashRate(1, C)
    worst = {}
    for a in (0.25, 0.5, 0.75, 1.5, 2.0):
        rows = nash.fractional_sweep(dec, probes, a, c, rate, V, 0.5)
        # probes have unit mu-norm
        worst[a] = min(r.gap for r in rows)
    elapsed = time.perf_counter() - t0
    ok = len(probes) == 64 and min(worst.values()) >= -GAP_TOL and elapsed < NASH_SECONDS
    body = " ".join(f"alpha={a}:{v:.3e}" for a, v in worst.items())
    verdict(acceptance_log, 7, ok, f"C_est={C:.4g} min_gap {body} time={elapsed:.1f}s")


def test_criterion_08_kernel_exponent(acceptance_log):
    t0 = time.perf_counter()
    g = build_grid(40, 2001)
    dec = eigendecompose(assemble_divergence_form(CAUCHY2, g))
    dec_B = eigendecompose(assemble_schrodinger(CAUCHY2, g))
    t_list = np.logspace(-3, -2, 6)
    parts, ok = [], True
    for a in (0.5, 0.75, 1.0):
        p = bounds.exponent_sweep(dec, CAUCHY2, a, t_list)
        k = bounds.schrodinger_sweep(dec_B, a, t_list)
        ok &= p.relative_exponent_error <= EXPONENT_RTOL and k.relative_exponent_error <= EXPONENT_RTOL
        parts.append(f"alpha={a}: ref={p.reference_exponent:.3f} p={p.fitted_exponent:.3f} "
                     f"k={k.fitted_exponent:.3f} C_fit={p.C_fit:.3g}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < EXPONENT_SECONDS
    verdict(acceptance_log, 8, ok, "; ".join(parts) + f" time={elapsed:.1f}s")


def test_criterion_09_alpha_ge1_branch(acceptance_log):
    g = build_grid(40, 2001)
    dec = eigendecompose(assemble_divergence_form(CAUCHY2, g))
    V = CAUCHY2.V(g.nodes)
    c = CAUCHY2.lyapunov_constant()
    t_list = np.logspace(-2, 0, 10)
    parts, ok = [], True
    for a in (1.0, 1.5, 2.0):
        c_a = bounds.c_alpha_estimate(dec, V, a)
        logs = [bounds.bound_ratio_alpha_ge1(kernel(dec, t, a), V, c, c_a).log_value for t in t_list]
        step = max(math.exp(b - a_) for a_, b in zip(logs, logs[1:]))
        ok &= all(math.isfinite(v) for v in logs) and step <= MONOTONE_FACTOR
        parts.append(f"alpha={a}: c_alpha={c_a:.4g} max_step={step:.4f}")
    verdict(acceptance_log, 9, ok, "; ".join(parts))


def _verify_all(out_dir):
    env = {k: v for k, v in os.environ.items() if k != "NKL_THREADS"}
    proc = subprocess.run([sys.executable, "-m", "nashkernel.cli", "verify-all", "--out", str(out_dir)],
                          capture_output=True, env=env, timeout=900)
    files = {p.name: p.read_bytes() for p in sorted(out_dir.iterdir())}
    return proc.returncode, proc.stdout, files


def test_criterion_10_determinism(acceptance_log, tmp_path):
    code1, out1, files1 = _verify_all(tmp_path / "a")
    code2, out2, files2 = _verify_all(tmp_path / "b")
    identical = out1 == out2 and files1 == files2
    failing = [line.split(",")[0] for line in out1.decode().splitlines()[1:] if ",fail," in line]
    ok = identical and code1 == 0 and code2 == 0
    verdict(acceptance_log, 10, ok, f"byte_identical={identical} exit_codes=({code1},{code2}) "
                                    f"failing_scenarios={failing or 'none'}")
