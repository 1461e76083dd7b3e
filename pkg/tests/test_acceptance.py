"""Acceptance suite: each test prints one PASS/FAIL line and then asserts it.

The long linear runs are shared through module fixtures.  Runtimes are part
of each verdict.  Run with ``pytest tests/test_acceptance.py -v``; the lines
are repeated in the terminal summary.
"""
import time

import numpy as np
import pytest

from dampwave.experiments import (
    energy_rate_check,
    linear_decay,
    random_pair,
    contraction_ratio,
    impulse_response,
    nonlinear_run,
    summarize_impulse,
    summarize_linear,
)
from dampwave.fields import GridSpec, make_data
from dampwave.mode_oracle import mode_solution_operator
from dampwave.norms import ContractionParams
from dampwave.propagator import (
    DampingParams,
    propagator_matrix,
    psi,
    psi_hankel,
    psi_tt,
    psi_tt_hankel,
)
from dampwave.solver import WaveSolver, time_lattice
from dampwave.validation import run_specfun_suite

MUS = (2.1, 2.5, 2.9)
DECAY_T = 100.0


@pytest.fixture
def verdict(record_property):
    def emit(number, title, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2} {title}: {detail}"
        print(line)
        record_property("acceptance", line)
        return passed
    return emit


def amplitude(s, t, x):
    """Per-column local amplitude of a stack of S matrices and the frequency scale."""
    w = np.maximum(x, 1.0 / t)
    return np.hypot(s[..., 0, :], s[..., 1, :] / w[..., None]), w


# ---------------------------------------------------------------- propagator


def test_oracle_equivalence(verdict):
    start = time.perf_counter()
    ts = np.geomspace(1.0, 100.0, 10)
    taus = (1.0, 2.0, 5.0, 15.0, 40.0)
    xs = np.concatenate([[0.0], np.geomspace(1e-3, 50.0, 19)])
    worst = 0.0
    for mu in MUS:
        params = DampingParams(mu)
        for tau in taus:
            times = ts[ts >= tau]
            for x in xs:
                ref = mode_solution_operator(params, x, tau, times, tol=1e-9)
                got = propagator_matrix(params, times, tau, x)
                amp, w = amplitude(ref, times, np.full(times.shape, x))
                for k in (0, 1):
                    err = np.abs(got[:, k, :] - ref[:, k, :]) / (amp * (w ** k)[:, None])
                    worst = max(worst, float(err.max()))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed <= 60
    assert verdict(1, "propagator vs ODE oracle", ok,
                   f"max rel err {worst:.2e} (<= 1e-6), {elapsed:.1f}s (<= 60s)")


def test_form_agreement(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    n = 1000
    mu = rng.choice(MUS, n)
    tau = rng.uniform(1.0, 100.0, n)
    t = tau * (100.0 / tau) ** rng.uniform(0, 1, n)
    x = 10.0 ** rng.uniform(-3, np.log10(50.0), n)
    worst_re = worst_im = 0.0
    for m in MUS:
        sel = mu == m
        p = DampingParams(m)
        ts, ss, xx = t[sel], tau[sel], x[sel]
        w = np.maximum(xx, 1.0 / ts)
        for j in (0, 1):
            amp = np.hypot(psi(p, 0, j, ts, ss, xx), psi(p, 1, j, ts, ss, xx) / w)
            pairs = [(psi_hankel(p, k, j, ts, ss, xx), psi(p, k, j, ts, ss, xx), amp * w**k)
                     for k in (0, 1)]
            pairs.append((psi_tt_hankel(p, j, ts, ss, xx), psi_tt(p, j, ts, ss, xx), amp * w * w))
            for h, real, scale in pairs:
                worst_re = max(worst_re, float((np.abs(h.real - real) / scale).max()))
                worst_im = max(worst_im, float((np.abs(h.imag) / scale).max()))
    elapsed = time.perf_counter() - start
    ok = worst_re <= 1e-8 and worst_im <= 1e-9 and elapsed <= 10
    assert verdict(2, "Hankel form vs J form", ok,
                   f"rel {worst_re:.2e} (<= 1e-8), imag {worst_im:.2e} (<= 1e-9), "
                   f"{elapsed:.2f}s (<= 10s)")


def test_coincidence_identities(verdict):
    start = time.perf_counter()
    x = np.concatenate([[0.0, 1e-9, 1e-4], np.geomspace(1e-3, 50.0, 60)])
    worst = 0.0
    for mu in MUS:
        p = DampingParams(mu)
        for tau in (1.0, 3.7, 20.0, 100.0):
            worst = max(worst, float(np.abs(propagator_matrix(p, tau, tau, x) - np.eye(2)).max()))
            target0 = -x * x
            got0 = psi_tt(p, 0, tau, tau, x)
            worst = max(worst, float((np.abs(got0 - target0) / np.maximum(1.0, x * x)).max()))
            got1 = psi_tt(p, 1, tau, tau, x)
            worst = max(worst, float(np.abs(got1 + mu / tau).max()))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed <= 1
    assert verdict(3, "coincidence identities", ok,
                   f"max err {worst:.2e} (<= 1e-10), {elapsed:.2f}s (<= 1s)")


def test_semigroup_liouville(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    gap = det_err = 0.0
    for mu in MUS:
        p = DampingParams(mu)
        s = np.sort(rng.uniform(1.0, 100.0, (400, 3)), axis=1)
        x = 10.0 ** rng.uniform(-4, np.log10(50.0), 400)
        tau, r, t = s[:, 0], s[:, 1], s[:, 2]
        full = propagator_matrix(p, t, tau, x)
        comp = propagator_matrix(p, t, r, x) @ propagator_matrix(p, r, tau, x)
        scale = np.abs(full).max(axis=(1, 2))
        gap = max(gap, float((np.abs(comp - full).max(axis=(1, 2)) / scale).max()))
        det = np.linalg.det(full)
        det_err = max(det_err, float(np.abs(det / (tau / t) ** mu - 1.0).max()))
    elapsed = time.perf_counter() - start
    ok = gap <= 1e-7 and det_err <= 1e-7 and elapsed <= 10
    assert verdict(4, "semigroup and Liouville", ok,
                   f"composition {gap:.2e} (<= 1e-7), det {det_err:.2e} (<= 1e-7), "
                   f"{elapsed:.2f}s (<= 10s)")


# ---------------------------------------------------------------- linear decay


@pytest.fixture(scope="module")
def decay_runs():
    params = DampingParams(2.5)
    grid = GridSpec(512, 2.0 * (1.0 + DECAY_T))
    cparams = ContractionParams.default_for(params.p_exponent)
    out = {}
    start = time.perf_counter()
    for case in ("cancel", "generic"):
        rows = list(linear_decay(params, grid, DECAY_T, case))
        out[case] = (rows, summarize_linear(rows, params, cparams))
    out["elapsed"] = time.perf_counter() - start
    out["params"], out["grid"], out["cparams"] = params, grid, cparams
    return out


def test_linear_decay(verdict, decay_runs):
    cancel = decay_runs["cancel"][1]["fit_dZ12"]
    generic = decay_runs["generic"][1]["fit_dZ12"]
    elapsed = decay_runs["elapsed"]
    ok = cancel.exponent <= -1.15 and generic.exponent <= -0.9 and elapsed <= 600
    assert verdict(5, "linear decay of ||dv||_Z", ok,
                   f"cancel {cancel.exponent:.4f} (<= -1.15), generic {generic.exponent:.4f} "
                   f"(<= -0.9), {elapsed:.0f}s (<= 600s)")


def test_weighted_boundedness(verdict, decay_runs):
    summary = decay_runs["generic"][1]
    delta = decay_runs["cparams"].delta
    ratio = summary["weighted_ratio"]
    fit = summary["fit_Z12_from2"]
    ok = ratio <= 3.0 and fit.exponent <= delta - 1.0 + 0.1
    assert verdict(6, "weighted ||v||_Z boundedness", ok,
                   f"max/at t=2 {ratio:.3f} (<= 3), exponent {fit.exponent:.4f} "
                   f"(<= {delta - 1 + 0.1:.4f})")


def test_energy_monotone(verdict, decay_runs):
    start = time.perf_counter()
    params, grid = decay_runs["params"], decay_runs["grid"]
    rise = max(decay_runs[c][1]["energy_rise"] for c in ("cancel", "generic"))
    worst = 0.0
    for case in ("cancel", "generic"):
        for _, de, rate in energy_rate_check(params, grid, case):
            worst = max(worst, abs(de / rate - 1.0))
    elapsed = time.perf_counter() - start
    ok = rise <= 1e-10 and worst <= 0.01
    assert verdict(9, "energy monotonicity", ok,
                   f"max rise {rise:.2e} (<= 1e-10), rate mismatch {worst:.2e} (<= 1%), "
                   f"{elapsed:.0f}s")


def test_ks_boundedness(verdict, decay_runs):
    growth = max(decay_runs[c][1]["ks_growth"] for c in ("cancel", "generic"))
    ok = growth <= 2.0
    assert verdict(11, "Klainerman-Sobolev ratio", ok, f"max/initial {growth:.3f} (<= 2)")


# ---------------------------------------------------------------- inhomogeneous


def test_impulse_scaling(verdict):
    start = time.perf_counter()
    t_obs = 50.0
    params = DampingParams(2.5)
    grid = GridSpec(512, 2.0 * t_obs)
    rows = list(impulse_response(params, grid, t_obs))
    s = summarize_impulse(rows, t_obs, window=(10.0, t_obs))
    elapsed = time.perf_counter() - start
    slope, decay = s["slope_norm_L2"], s["fit_dZ12"].exponent
    ok = slope <= 1.1 and decay <= -0.9 and elapsed <= 300
    assert verdict(7, "impulse tau-scaling", ok,
                   f"L2 slope {slope:.4f} (<= 1.1), ||dw||_Z exponent {decay:.4f} (<= -0.9), "
                   f"{elapsed:.0f}s (<= 300s); diagnostics: Z slope {s['slope_norm_Z12']:.3f}, "
                   f"dZ slope {s['slope_norm_dZ12']:.3f}, "
                   f"Z slope over data norm {s['slope_Z12_over_data']:.3f}")


# ---------------------------------------------------------------- contraction


def test_contraction(verdict):
    start = time.perf_counter()
    params = DampingParams(2.5, 2.5, 1e-3)
    t_final, samples = 20.0, 40
    grid = GridSpec(256, 2.0 * (1.0 + t_final))
    cparams = ContractionParams.default_for(params.p_exponent)
    res = nonlinear_run(params, grid, t_final, "generic", samples=samples, cparams=cparams)
    rep = res.report
    solver = WaveSolver(grid, params)
    data = make_data(grid, "generic")
    times = time_lattice(t_final, samples)
    rng = np.random.default_rng(11)
    levels = rep.quad_levels
    pair_ratios = []
    for _ in range(5):
        u, v = random_pair(solver, times, cparams, res.budget, rng)
        r, levels = contraction_ratio(solver, data, u, v, cparams, levels)
        pair_ratios.append(r)
    elapsed = time.perf_counter() - start
    iter_ratios = [r for r in rep.ratios if np.isfinite(r)]
    ok = (rep.converged and rep.iterations <= 8 and max(pair_ratios) <= 0.5
          and all(r <= 0.5 for r in iter_ratios) and res.x_final <= res.budget
          and elapsed <= 900)
    assert verdict(8, "Picard contraction", ok,
                   f"pair ratios max {max(pair_ratios):.2e} (<= 0.5), {rep.iterations} iterations "
                   f"(<= 8), iteration ratios max {max(iter_ratios, default=0.0):.2e} (<= 0.5), "
                   f"X {res.x_final:.4f} vs M*eps {res.budget:.4f}, {elapsed:.0f}s (<= 900s)")


# ---------------------------------------------------------------- special functions


def test_specfun_suite(verdict):
    start = time.perf_counter()
    results = {r.name: r for r in run_specfun_suite()}
    elapsed = time.perf_counter() - start
    closed = results["half_integer_closed_forms"].worst
    ok = (all(r.passed for r in results.values()) and closed <= 1e-12 and elapsed <= 30)
    detail = ", ".join(f"{k} {r.worst:.1e}" for k, r in results.items())
    assert verdict(10, "special-function suite", ok,
                   f"{detail} (closed forms <= 1e-12, others <= 1e-9, envelope excess 0), "
                   f"{elapsed:.1f}s (<= 30s)")
