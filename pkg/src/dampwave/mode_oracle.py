"""Brute-force ODE oracle for the per-mode and Bessel equations.

Adaptive Dormand-Prince 5(4) integration, written from the published tableau
and compiled with numba.  This path is deliberately independent of
:mod:`dampwave.specfun` and :mod:`dampwave.propagator`; the test suite and
the ``validate-specfun`` command use it to check both.

Two right-hand sides are supported:

* mode ODE   ``y'' + xi^2 y + (mu/t) y' = c``  (``c`` a constant forcing)
* Bessel ODE ``z^2 y'' + z y' + (z^2 - nu^2) y = 0``
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .propagator import DampingParams

__all__ = [
    "OdeResult",
    "StepSizeUnderflow",
    "integrate_mode",
    "integrate_bessel",
    "mode_solution_operator",
    "liouville_wronskian",
]

TOL_RANGE = (1e-13, 1e-6)

# Dormand & Prince (1980), RK5(4)7M
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array(
    [
        [0, 0, 0, 0, 0, 0],
        [1 / 5, 0, 0, 0, 0, 0],
        [3 / 40, 9 / 40, 0, 0, 0, 0],
        [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
        [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
    ]
)
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array(
    [5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4

_MODE = 0
_NOISE = 8.0 * np.finfo(float).eps
_BESSEL = 1


class StepSizeUnderflow(RuntimeError):
    """The adaptive step collapsed below the representable resolution."""


@dataclass(frozen=True)
class OdeResult:
    """State ``(y, y')`` at ``t_final``.

    ``est_error`` is the sum of the accepted local error estimates, measured
    relative to the local oscillation amplitude.  The controller budgets
    error per unit step, so a successful run always has ``est_error <= tol``.
    Local estimates at the rounding floor (a few ulps) are not charged, so at
    the tightest tolerances the true error can exceed ``est_error`` by
    accumulated rounding.
    """

    t_final: float
    state: tuple
    est_error: float
    steps: int


@njit(cache=True)
def _rhs(kind, t, y0, y1, a, b, c):
    if kind == 0:
        # a = xi^2, b = mu, c = forcing
        return y1, -a * y0 - b / t * y1 + c
    # Bessel: a = nu^2
    return y1, -y1 / t - (1.0 - a / (t * t)) * y0


@njit(cache=True)
def _scale(kind, t, y0, y1, w):
    # amplitude of the local oscillation in each component
    if kind == 0:
        s0 = abs(y0) + abs(y1) / w
        s1 = w * abs(y0) + abs(y1)
    else:
        s0 = abs(y0) + abs(y1)
        s1 = s0
    return s0, s1


@njit(cache=True)
def _dopri(kind, t0, t1, y0, y1, a, b, c, w, tol, C, A, B5, E):
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    t = t0
    if span == 0.0:
        return t, y0, y1, 0.0, 0, 0
    h = min(span, 0.01 / max(w, 1e-3), 0.1 * span) * direction
    k0 = np.empty(7)
    k1 = np.empty(7)
    steps = 0
    total = 0.0
    status = 0
    while True:
        remaining = t1 - t
        if abs(remaining) <= 1e-14 * max(1.0, abs(t1)):
            break
        if abs(h) > abs(remaining):
            h = remaining
        f0, f1 = _rhs(kind, t, y0, y1, a, b, c)
        k0[0] = f0
        k1[0] = f1
        for s in range(1, 7):
            u0 = y0
            u1 = y1
            for r in range(s):
                u0 += h * A[s, r] * k0[r]
                u1 += h * A[s, r] * k1[r]
            g0, g1 = _rhs(kind, t + C[s] * h, u0, u1, a, b, c)
            k0[s] = g0
            k1[s] = g1
        n0 = y0
        n1 = y1
        e0 = 0.0
        e1 = 0.0
        for s in range(7):
            n0 += h * B5[s] * k0[s]
            n1 += h * B5[s] * k1[s]
            e0 += h * E[s] * k0[s]
            e1 += h * E[s] * k1[s]
        sa0, sa1 = _scale(kind, t, y0, y1, w)
        sb0, sb1 = _scale(kind, t + h, n0, n1, w)
        d0 = max(sa0, sb0, 1e-300)
        d1 = max(sa1, sb1, 1e-300)
        # error per unit step: the local budget is tol * |h| / span, so the
        # accumulated estimate over the whole interval stays below tol.
        # Estimates below the rounding floor are noise and are not charged.
        local = max(abs(e0) / d0, abs(e1) / d1)
        err = local / (tol * abs(h) / span + _NOISE)
        if err <= 1.0:
            t += h
            y0 = n0
            y1 = n1
            steps += 1
            total += max(local - _NOISE, 0.0)
            fac = 0.9 * err ** (-0.25) if err > 0.0 else 5.0
            h *= min(5.0, max(0.2, fac))
        else:
            h *= max(0.1, 0.9 * err ** (-0.25))
        if abs(h) < 1e-14 * max(1.0, abs(t)):
            status = 1
            break
    return t, y0, y1, total, steps, status


def _check_tol(tol):
    lo, hi = TOL_RANGE
    if not (lo <= tol <= hi):
        raise ValueError(f"tol must lie in [{lo:g}, {hi:g}], got {tol:g}")


def _run(kind, t0, t1, y0, y1, a, b, c, w, tol):
    t, u0, u1, worst, steps, status = _dopri(
        kind, float(t0), float(t1), float(y0), float(y1),
        float(a), float(b), float(c), float(w), float(tol), _C, _A, _B5, _E,
    )
    if status:
        raise StepSizeUnderflow(f"step size underflow at t = {t:g} after {steps} steps")
    return OdeResult(t_final=float(t1), state=(u0, u1), est_error=worst, steps=steps)


def integrate_mode(params: DampingParams, ximag: float, tau: float, y0: float,
                   y0p: float, t_end: float, tol: float = 1e-10,
                   forcing: float = 0.0) -> OdeResult:
    """Integrate ``y'' + xi^2 y + (mu/t) y' = forcing`` from ``tau`` to ``t_end``.

    ``t_end < tau`` integrates backwards (used for time-reversal checks);
    the public contract is ``1 <= tau <= t_end``.
    """
    _check_tol(tol)
    if tau < 1.0 or t_end < 1.0:
        raise ValueError("times must be >= 1")
    if ximag < 0:
        raise ValueError("ximag must be nonnegative")
    w = max(float(ximag), 1.0 / max(tau, t_end))
    return _run(_MODE, tau, t_end, y0, y0p, ximag * ximag, params.mu, forcing, w, tol)


def integrate_bessel(order: float, z0: float, y0: float, y0p: float,
                     z_end: float, tol: float = 1e-10) -> OdeResult:
    """Integrate the Bessel equation of order ``order`` from ``z0`` to ``z_end``."""
    _check_tol(tol)
    if not (0.0 < z0 < z_end):
        raise ValueError("need 0 < z0 < z_end")
    return _run(_BESSEL, z0, z_end, y0, y0p, order * order, 0.0, 0.0, 1.0, tol)


def mode_solution_operator(params: DampingParams, ximag: float, tau: float,
                           times, tol: float = 1e-10) -> np.ndarray:
    """Brute-force ``[[Psi0, Psi1], [dPsi0, dPsi1]]`` at each of ``times``.

    Integrates the two fundamental solutions through the sorted times,
    restarting from the previous output so each interval is integrated once.
    Returns an array of shape ``(len(times), 2, 2)``.
    """
    _check_tol(tol)
    times = np.asarray(times, dtype=float)
    order = np.argsort(times)
    out = np.empty((len(times), 2, 2))
    w = max(float(ximag), 1.0 / max(tau, float(times.max())))
    a = ximag * ximag
    for j, start in enumerate(((1.0, 0.0), (0.0, 1.0))):
        t_prev, u0, u1 = float(tau), start[0], start[1]
        for idx in order:
            t_next = float(times[idx])
            if t_next < tau:
                raise ValueError("all times must be >= tau")
            r = _run(_MODE, t_prev, t_next, u0, u1, a, params.mu, 0.0, w, tol)
            u0, u1 = r.state
            t_prev = t_next
            out[idx, 0, j] = u0
            out[idx, 1, j] = u1
    return out


def liouville_wronskian(params: DampingParams, ximag: float, tau: float,
                        t_end: float, tol: float = 1e-10) -> float:
    """Wronskian of the (1,0) and (0,1) solutions at ``t_end``."""
    a = integrate_mode(params, ximag, tau, 1.0, 0.0, t_end, tol).state
    b = integrate_mode(params, ximag, tau, 0.0, 1.0, t_end, tol).state
    return a[0] * b[1] - a[1] * b[0]
