"""Desk-scale studies: linear decay, impulse responses and nonlinear runs.

Each study yields plain rows (dicts) as it goes, so callers can stream them
to CSV, and finishes with a summary of fitted exponents and bound checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import CauchyData, GridSpec, SpectralState, Trajectory, bump, make_data
from .norms import (
    ContractionParams,
    data_norm,
    damping_rate,
    decay_fit,
    dz_norm,
    energy,
    state_report,
    x_norm,
    z_norm,
    MixedNormSpec,
)
from .propagator import DampingParams
from .solver import QuadSpec, WaveSolver, time_lattice

__all__ = [
    "LINEAR_COLUMNS",
    "IMPULSE_COLUMNS",
    "NONLINEAR_COLUMNS",
    "decay_times",
    "linear_decay",
    "summarize_linear",
    "energy_rate_check",
    "impulse_response",
    "summarize_impulse",
    "NonlinearOutcome",
    "nonlinear_run",
    "random_pair",
    "contraction_ratio",
]

LINEAR_COLUMNS = ("t", "norm_Z12", "norm_dZ12", "energy", "linf", "ks_ratio",
                  "zone_a1", "zone_a2", "zone_a3")
IMPULSE_COLUMNS = ("tau", "t", "norm_L2", "norm_Z12", "norm_dZ12", "data_Z1eps")
NONLINEAR_COLUMNS = ("iter", "diff_xnorm", "ratio", "xnorm")


def decay_times(t_final: float, samples: int, anchors=(2.0, 10.0, 50.0)):
    """Log-uniform times on ``[1, t_final]`` plus the anchor times inside it."""
    if samples < 2:
        raise ValueError("at least two time samples are needed")
    t = np.geomspace(1.0, t_final, samples)
    extra = [a for a in anchors if 1.0 < a < t_final]
    t = np.unique(np.concatenate([t, extra]))
    t[0], t[-1] = 1.0, t_final
    return t


def linear_decay(params: DampingParams, grid: GridSpec, t_final: float,
                 case: str = "generic", samples: int = 121):
    """Yield one diagnostics row per time for the free evolution of bump data."""
    grid.check_tmax(t_final)
    solver = WaveSolver(grid, params)
    start = make_data(grid, case).state(mu=params.mu)
    for t in decay_times(t_final, samples):
        row = {"t": float(t)}
        row.update(state_report(solver.linear_evolve(start, t)))
        yield row


def energy_rate_check(params: DampingParams, grid: GridSpec, case: str = "generic",
                      times=None, rel_step: float = 1e-4):
    """Centred difference of E against ``-(mu/t) ||v_t||^2`` at ``times``.

    Returns ``[(t, dE/dt, rate), ...]``.
    """
    solver = WaveSolver(grid, params)
    start = make_data(grid, case).state(mu=params.mu)
    times = np.geomspace(2.0, 50.0, 13) if times is None else times
    out = []
    for t in times:
        h = rel_step * t
        ep = energy(solver.linear_evolve(start, t + h))
        em = energy(solver.linear_evolve(start, t - h))
        out.append((float(t), (ep - em) / (2 * h),
                    damping_rate(solver.linear_evolve(start, t))))
    return out


def _fit(rows, key, window):
    """Decay fit over ``window``, or None when it holds too few samples."""
    series = [(r["t"], r[key]) for r in rows]
    try:
        return decay_fit(series, window)
    except ValueError:
        return None


def summarize_linear(rows, params: DampingParams, cparams: ContractionParams,
                     window=(10.0, 100.0)):
    """Fitted exponents and the one-sided checks for a linear-decay run."""
    t_hi = min(window[1], rows[-1]["t"])
    win = (window[0], t_hi)
    out = {
        "fit_Z12": _fit(rows, "norm_Z12", win),
        "fit_dZ12": _fit(rows, "norm_dZ12", win),
    }
    t = np.array([r["t"] for r in rows])
    z = np.array([r["norm_Z12"] for r in rows])
    e = np.array([r["energy"] for r in rows])
    ks = np.array([r["ks_ratio"] for r in rows])
    weighted = z * t ** (1.0 - cparams.delta)
    i2 = int(np.argmin(np.abs(t - 2.0)))
    late = t >= t[i2]
    out["weighted_ratio"] = float(weighted[late].max() / weighted[i2]) if weighted[i2] > 0 else 0.0
    out["fit_Z12_from2"] = _fit(rows, "norm_Z12", (t[i2], t[-1])) if z[late].min() > 0 else None
    rises = np.diff(e)
    out["energy_rise"] = float(max(rises.max(), 0.0) / e[0]) if e[0] > 0 else 0.0
    out["ks_growth"] = float(ks.max() / ks[0]) if ks[0] > 0 else 0.0
    return out


def impulse_response(params: DampingParams, grid: GridSpec, t_obs: float,
                     taus=(1.0, 2.0, 4.0, 8.0), case: str = "generic",
                     samples: int = 24, eps1: float | None = None):
    """Free solutions with ``w(tau) = 0``, ``w_t(tau) = v1`` observed up to ``t_obs``.

    ``v1`` is the velocity profile of the named data case (the unit bump for
    ``cancel`` up to sign).  Rows carry the L^2 and Z norms of ``w`` and
    the data norm ``||v1||_{Z,1,(1+eps1,2)}`` of the impulse at time ``tau``.
    """
    grid.check_tmax(t_obs)
    solver = WaveSolver(grid, params)
    v1 = grid.fft(make_data(grid, case).u1)
    if eps1 is None:
        eps1 = ContractionParams.default_for(params.p_exponent).eps1
    spec = MixedNormSpec(1.0 + eps1, 2.0)
    for tau in taus:
        if not tau < t_obs:
            continue
        start = SpectralState(float(tau), np.zeros_like(v1), v1, grid, mu=params.mu)
        rhs = z_norm(start, 1, spec).value
        for t in np.unique(np.r_[np.geomspace(tau, t_obs, samples)[1:], t_obs]):
            w = solver.linear_evolve(start, t)
            yield {"tau": float(tau), "t": float(t), "norm_L2": grid.l2(w.vhat),
                   "norm_Z12": z_norm(w).value, "norm_dZ12": dz_norm(w).value,
                   "data_Z1eps": rhs}


def summarize_impulse(rows, t_obs: float, window=(10.0, None)):
    """tau-slopes at ``t_obs`` and the t-decay exponent of ``||dw||`` for tau = 1."""
    at = [r for r in rows if r["t"] == t_obs]
    taus = np.log([r["tau"] for r in at])
    out = {}
    if len(at) >= 2:
        for key in ("norm_L2", "norm_Z12", "norm_dZ12"):
            out[f"slope_{key}"] = float(np.polyfit(taus, np.log([r[key] for r in at]), 1)[0])
        ratio = [r["norm_Z12"] / r["data_Z1eps"] for r in at]
        out["slope_Z12_over_data"] = float(np.polyfit(taus, np.log(ratio), 1)[0])
    first = [r for r in rows if r["tau"] == 1.0]
    hi = window[1] if window[1] is not None else t_obs
    try:
        out["fit_dZ12"] = decay_fit([(r["t"], r["norm_dZ12"]) for r in first], (window[0], hi))
    except ValueError:
        out["fit_dZ12"] = None
    return out


# nonlinear


@dataclass
class NonlinearOutcome:
    trajectory: Trajectory
    report: object
    data_terms: dict
    c_fit: float
    budget: float
    x_final: float
    linear_x: float
    extras: dict = field(default_factory=dict)


def nonlinear_run(params: DampingParams, grid: GridSpec, t_final: float,
                  case: str = "generic", tol: float = 1e-10, max_iter: int = 20,
                  samples: int = 40, cparams: ContractionParams | None = None,
                  on_iteration=None, quad: QuadSpec = QuadSpec()) -> NonlinearOutcome:
    """Picard solve plus the a-priori budget ``M eps``.

    ``C`` is fitted as ``||u_lin||_X / ||(u0, u1)||_A`` for the unscaled
    free solution, and ``M = 3 C ||(u0, u1)||_A``.
    """
    cparams = cparams or ContractionParams.default_for(params.p_exponent)
    data = make_data(grid, case)
    solver = WaveSolver(grid, params)
    terms = data_norm(data, params, cparams)
    times = time_lattice(t_final, samples)
    lin_x = x_norm(solver.linear_trajectory(data, times, 1.0), cparams)
    a_norm = terms["total"]
    c_fit = lin_x / a_norm if a_norm > 0 else 0.0
    budget = 3.0 * c_fit * a_norm * params.epsilon
    traj, rep = solver.solve_semilinear(data, t_final, tol=tol, max_iter=max_iter,
                                        samples=samples, quad=quad, cparams=cparams,
                                        on_iteration=on_iteration)
    x_final = rep.xnorms[-1] if rep.xnorms else float("nan")
    return NonlinearOutcome(traj, rep, terms, c_fit, budget, x_final, lin_x)


def random_pair(solver: WaveSolver, times, cparams: ContractionParams, radius: float,
                rng: np.random.Generator):
    """Two free trajectories from random bump data, scaled into the X-ball of ``radius``."""
    grid = solver.grid
    out = []
    for _ in range(2):
        u0 = np.zeros((grid.n, grid.n))
        u1 = np.zeros_like(u0)
        for _ in range(3):
            c = rng.uniform(-0.4, 0.4, 2)
            r = rng.uniform(0.3, 0.6)
            u0 += bump(grid, c, r, rng.normal())
            u1 += bump(grid, c[::-1], r, rng.normal())
        data = CauchyData(u0, u1, "random", grid)
        traj = solver.linear_trajectory(data, times)
        size = x_norm(traj, cparams)
        out.append(traj.scaled(rng.uniform(0.2, 1.0) * radius / size))
    return tuple(out)


def contraction_ratio(solver: WaveSolver, data: CauchyData, u: Trajectory, v: Trajectory,
                      cparams: ContractionParams, levels=None):
    """``||N u - N v||_X / ||u - v||_X`` with the quadrature levels frozen."""
    nu, levels, _ = solver.picard_map(u, data, levels=levels)
    nv, _, _ = solver.picard_map(v, data, levels=levels)
    den = x_norm(u - v, cparams)
    return x_norm(nu - nv, cparams) / den, levels

