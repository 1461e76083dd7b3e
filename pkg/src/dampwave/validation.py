"""Self-checks of the Bessel layer and the propagator against the ODE oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mode_oracle import mode_solution_operator
from .propagator import DampingParams, propagator_matrix
from .specfun import bessel_j, bessel_j_prime, bessel_j_second, hankel

__all__ = ["CheckResult", "run_specfun_suite", "half_integer_closed"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tol)


def half_integer_closed(order: float, z):
    """Elementary forms of ``J_{1/2}``, ``J_{-1/2}`` and ``J_{-3/2}``."""
    z = np.asarray(z, dtype=float)
    a = np.sqrt(2.0 / (math.pi * z))
    if order == 0.5:
        return a * np.sin(z)
    if order == -0.5:
        return a * np.cos(z)
    if order == -1.5:
        return -a * (np.cos(z) / z + np.sin(z))
    raise ValueError(f"no closed form wired for order {order!r}")


def _non_integer(rng, n, lo=-3.9, hi=3.9, gap=1e-3):
    nu = rng.uniform(lo, hi, 4 * n)
    nu = nu[np.abs(nu - np.round(nu)) > gap]
    return nu[:n]


def _wronskian(rng, n):
    nu = _non_integer(rng, n)
    z = rng.uniform(0.1, 100.0, nu.size)
    worst = 0.0
    for a, b in zip(nu, z):
        w = bessel_j(a, b) * bessel_j_prime(-a, b) - bessel_j_prime(a, b) * bessel_j(-a, b)
        worst = max(worst, abs(w + 2.0 * math.sin(a * math.pi) / (math.pi * b)))
    return worst


def _ode_residual(rng, n):
    nu = rng.uniform(-3.9, 3.9, n)
    z = rng.uniform(0.05, 200.0, n)
    worst = 0.0
    for a, b in zip(nu, z):
        terms = (b * b * bessel_j_second(a, b), b * bessel_j_prime(a, b),
                 (b * b - a * a) * bessel_j(a, b))
        worst = max(worst, abs(sum(terms)) / (1.0 + sum(abs(x) for x in terms)))
    return worst


def _closed_forms():
    z = np.concatenate([np.geomspace(1e-2, 15.0, 60), np.linspace(15.0, 400.0, 60)])
    worst = 0.0
    for order in (0.5, -0.5, -1.5):
        worst = max(worst, float(np.abs(bessel_j(order, z) - half_integer_closed(order, z)).max()))
    return worst


def _envelope(rng, n):
    """Excess of the large- and small-argument envelopes over 5% of a constant fitted on a coarser grid.

    Returns ``max(ratio) - 1.05`` clipped at 0, so 0 means every check passed.
    """
    nu = _non_integer(rng, max(2, min(n, 8)), -2.9, 0.9, 0.05)
    excess = 0.0
    big_fit = np.linspace(10, 200, 300)
    big = np.linspace(10, 5000, 5000)
    small_fit = np.geomspace(1e-3, 0.5, 150)
    small = np.geomspace(1e-8, 0.5, 1500)
    for a in nu:
        c = np.max(np.abs(bessel_j(a, big_fit)) * np.sqrt(big_fit))
        excess = max(excess, np.max(np.abs(bessel_j(a, big)) * np.sqrt(big)) / c - 1.05)
        for kind in ("plus", "minus"):
            ch = np.max(np.abs(hankel(kind, a, big_fit)) * np.sqrt(big_fit))
            excess = max(excess, np.max(np.abs(hankel(kind, a, big)) * np.sqrt(big)) / ch - 1.05)
        c = np.max(np.abs(bessel_j(a, small_fit)) / small_fit**a)
        excess = max(excess, np.max(np.abs(bessel_j(a, small)) / small**a) / c - 1.05)
    return max(float(excess), 0.0)


def _oracle(rng, n, mu=2.5):
    """Amplitude-relative gap between the propagator and the RK oracle."""
    params = DampingParams(mu)
    worst = 0.0
    for _ in range(max(1, n // 10)):
        x = float(rng.choice([0.0, 10 ** rng.uniform(-3, math.log10(50))]))
        tau = float(rng.uniform(1, 20))
        times = np.geomspace(tau, 100.0, 6)
        ref = mode_solution_operator(params, x, tau, times, tol=1e-11)
        got = propagator_matrix(params, times, tau, x)
        w = np.maximum(x, 1.0 / times)[:, None]
        amp = np.hypot(ref[:, 0, :], ref[:, 1, :] / w)
        for k in (0, 1):
            err = np.abs(got[:, k, :] - ref[:, k, :]) / (amp * w**k)
            worst = max(worst, float(err.max()))
    return worst


def run_specfun_suite(tol: float = 1e-9, samples: int = 200, seed: int = 0):
    """Run every check; returns a list of :class:`CheckResult`.

    The envelope check reports its excess over the 5% margin, so its
    threshold is 0 independent of ``tol``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    return [
        CheckResult("wronskian", _wronskian(rng, samples), tol),
        CheckResult("ode_residual", _ode_residual(rng, samples), tol),
        CheckResult("half_integer_closed_forms", _closed_forms(), tol),
        CheckResult("asymptotic_envelopes", _envelope(rng, samples), 0.0),
        CheckResult("oracle_agreement", _oracle(rng, samples), tol),
    ]
