r"""Exact Fourier-multiplier solution operator of the damped mode equation.

For each frequency magnitude :math:`\xi = |\xi|` the Fourier coefficient of a
linear solution satisfies

.. math::
    \hat v'' + \xi^2 \hat v + \frac{\mu}{t} \hat v' = 0,

and its state :math:`(\hat v, \partial_t \hat v)` at time ``t`` is
``S(t, tau) @ (v(tau), v_t(tau))`` with

.. math::
    S(t,\tau) = \begin{pmatrix} \Psi_0 & \Psi_1 \\
                \partial_t\Psi_0 & \partial_t\Psi_1 \end{pmatrix}.

With :math:`\rho = -(\mu-1)/2`, ``a = rho - k`` and ``b = rho - 1 + j``, the
real Bessel form used for evaluation is

.. math::
    \partial_t^k\Psi_j = \frac{\pi}{2\sin\rho\pi}\,\xi^{1+k-j} t^\rho \tau^{1-\rho}
    \bigl[J_{-b}(\tau\xi) J_a(t\xi) - (-1)^{1+k-j} J_b(\tau\xi) J_{-a}(t\xi)\bigr],

and the complex Hankel form (verification path) is

.. math::
    \partial_t^k\Psi_j = (-1)^j \frac{i\pi}{4}\,\xi^{1+k-j} t^\rho \tau^{1-\rho}
    \bigl[H^+_a(t\xi) H^-_b(\tau\xi) - H^-_a(t\xi) H^+_b(\tau\xi)\bigr].

Second time derivatives use the same pattern with ``k = 2`` plus the
correction :math:`t^{-1}\partial_t\Psi_j`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .specfun import _hankel_unchecked, _jv, _sin_pi

__all__ = [
    "DampingParams",
    "PropagatorSample",
    "NonFiniteMultiplierError",
    "MultiplierTable",
    "psi",
    "psi_hankel",
    "psi_tt",
    "psi_tt_hankel",
    "propagator_matrix",
    "propagator_sample",
    "zero_frequency",
]

MU_MARGIN = 1e-12
# below this value of t*xi the zero-frequency closed form is exact to O((t xi)^2)
SMALL_ARGUMENT = 1e-6


class NonFiniteMultiplierError(FloatingPointError):
    """A multiplier evaluated to inf/nan inside the valid domain."""


@dataclass(frozen=True)
class DampingParams:
    """Parameters of the damped equation.

    ``rho`` is derived from ``mu`` on every access, never stored.
    """

    mu: float
    p_exponent: float = 2.5
    epsilon: float = 0.0

    def __post_init__(self):
        mu = float(self.mu)
        if not (2.0 + MU_MARGIN < mu < 3.0 - MU_MARGIN):
            raise ValueError(f"mu must lie strictly inside (2, 3), got {mu!r}")
        if not float(self.p_exponent) > 2.0:
            raise ValueError(f"p must be > 2, got {self.p_exponent!r}")
        if not float(self.epsilon) >= 0.0:
            raise ValueError(f"eps must be >= 0, got {self.epsilon!r}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "p_exponent", float(self.p_exponent))
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def rho(self) -> float:
        return -(self.mu - 1.0) / 2.0


@dataclass(frozen=True)
class PropagatorSample:
    """``psi[k][j]`` holds d^k/dt^k Psi_j, ``psi_tt[j]`` the second derivative."""

    t: float
    tau: float
    ximag: float
    psi: np.ndarray
    psi_tt: np.ndarray


def _check_times(t, tau):
    t, tau = np.asarray(t), np.asarray(tau)
    if not (np.all(np.isfinite(t)) and np.all(1.0 <= tau) and np.all(tau <= t)):
        raise ValueError(f"need 1 <= tau <= t, got tau={tau!r}, t={t!r}")


def _check_xi(ximag, strict=False):
    x = np.asarray(ximag, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("ximag must be finite")
    if strict and np.any(x <= 0.0):
        raise ValueError("the Hankel form needs ximag > 0")
    if np.any(x < 0.0):
        raise ValueError("ximag must be nonnegative")
    return x


def _finite(v):
    if not np.all(np.isfinite(v)):
        raise NonFiniteMultiplierError("non-finite multiplier value")
    return v


def _out(a):
    return a.item() if np.ndim(a) == 0 else a


def zero_frequency(params: DampingParams, t, tau) -> np.ndarray:
    """Closed-form ``S(t, tau)`` at ``xi = 0`` (the ODE loses its xi^2 term).

    Broadcasts over ``t`` and ``tau``; the result has shape ``(..., 2, 2)``.
    """
    t, tau = np.broadcast_arrays(np.asarray(t, float), np.asarray(tau, float))
    mu = params.mu
    out = np.zeros(t.shape + (2, 2))
    out[..., 0, 0] = 1.0
    out[..., 0, 1] = tau ** mu * (tau ** (1.0 - mu) - t ** (1.0 - mu)) / (mu - 1.0)
    out[..., 1, 1] = (tau / t) ** mu
    return out


def _zero_tt(params, j, t, tau):
    # from the ODE with xi = 0: Psi_tt = -(mu/t) dPsi
    if j == 0:
        return np.zeros_like(t)
    return -params.mu / t * (tau / t) ** params.mu


def _jform(rho, k, j, t, tau, x, jt, jtau):
    """J-form core; ``jt(order)`` and ``jtau(order)`` supply J at t*x and tau*x."""
    a = rho - k
    b = rho - 1.0 + j
    sign = -1.0 if (1 + k - j) % 2 else 1.0
    pref = 0.5 * math.pi / _sin_pi(rho) * t ** rho * tau ** (1.0 - rho)
    det = jtau(-b) * jt(a) - sign * jtau(b) * jt(-a)
    return pref * x ** (1 + k - j) * det


def _prepare(t, tau, ximag, strict=False):
    """Validate and broadcast; returns flat (t, tau, x), the shape, and masks."""
    t, tau, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(tau, float),
                                    _check_xi(ximag, strict))
    _check_times(t, tau)
    shape = x.shape
    t, tau, x = t.ravel(), tau.ravel(), x.ravel()
    small = x * t < SMALL_ARGUMENT
    return t, tau, x, shape, small, ~small


def _check_kj(k, j):
    if k not in (0, 1) or j not in (0, 1):
        raise ValueError("k and j must be 0 or 1")


def psi(params: DampingParams, k: int, j: int, t, tau, ximag):
    """d^k/dt^k Psi_j(t, tau, xi) from the real Bessel-J form.

    Parameters
    ----------
    params : DampingParams
    k, j : {0, 1}
        Time-derivative order and multiplier index.
    t, tau : float or ndarray
        ``1 <= tau <= t``.
    ximag : float or ndarray
        Frequency magnitudes, ``>= 0``.  Modes with ``t*xi < 1e-6`` use the
        zero-frequency closed form.

    All of ``t``, ``tau`` and ``ximag`` broadcast against each other.
    """
    _check_kj(k, j)
    t, tau, x, shape, small, big = _prepare(t, tau, ximag)
    out = np.empty_like(x)
    if np.any(small):
        out[small] = zero_frequency(params, t[small], tau[small])[:, k, j]
    if np.any(big):
        tb, sb, xb = t[big], tau[big], x[big]
        out[big] = _jform(params.rho, k, j, tb, sb, xb,
                          _CachedJ(tb, xb), _CachedJ(sb, xb))
    return _out(_finite(out.reshape(shape)))


def _hform(rho, k, j, t, tau, x):
    a = rho - k
    b = rho - 1.0 + j
    det = (_hankel_unchecked("plus", a, t * x) * _hankel_unchecked("minus", b, tau * x)
           - _hankel_unchecked("minus", a, t * x) * _hankel_unchecked("plus", b, tau * x))
    sign = -1.0 if j else 1.0
    return sign * 0.25j * math.pi * x ** (1 + k - j) * t ** rho * tau ** (1.0 - rho) * det


def psi_hankel(params: DampingParams, k: int, j: int, t, tau, ximag):
    """d^k/dt^k Psi_j from the complex Hankel form (``ximag > 0``).

    The imaginary part is zero up to rounding; it is returned so callers can
    check that.
    """
    _check_kj(k, j)
    t, tau, x, shape, _, _ = _prepare(t, tau, ximag, strict=True)
    v = _hform(params.rho, k, j, t, tau, x)
    return _out(_finite(v.reshape(shape)))


def psi_tt(params: DampingParams, j: int, t, tau, ximag):
    """Second time derivative of Psi_j from the J-form with ``k = 2``.

    Uses the k = 2 Bessel determinant plus ``t^{-1} dPsi_j``; equals
    ``-xi^2 Psi_j - (mu/t) dPsi_j`` up to rounding.
    """
    _check_kj(0, j)
    t, tau, x, shape, small, big = _prepare(t, tau, ximag)
    out = np.empty_like(x)
    if np.any(small):
        out[small] = _zero_tt(params, j, t[small], tau[small])
    if np.any(big):
        tb, sb, xb = t[big], tau[big], x[big]
        jt, jtau = _CachedJ(tb, xb), _CachedJ(sb, xb)
        rho = params.rho
        out[big] = (_jform(rho, 2, j, tb, sb, xb, jt, jtau)
                    + _jform(rho, 1, j, tb, sb, xb, jt, jtau) / tb)
    return _out(_finite(out.reshape(shape)))


def psi_tt_hankel(params: DampingParams, j: int, t, tau, ximag):
    """Hankel-form second derivative (verification path, complex)."""
    _check_kj(0, j)
    t, tau, x, shape, _, _ = _prepare(t, tau, ximag, strict=True)
    rho = params.rho
    v = _hform(rho, 2, j, t, tau, x) + _hform(rho, 1, j, t, tau, x) / t
    return _out(_finite(v.reshape(shape)))


def propagator_matrix(params: DampingParams, t, tau, ximag):
    """``S(t, tau)``; shape ``(2, 2)`` for scalars, ``(..., 2, 2)`` otherwise."""
    t, tau, x, shape, small, big = _prepare(t, tau, ximag)
    out = np.empty(x.shape + (2, 2))
    if np.any(small):
        out[small] = zero_frequency(params, t[small], tau[small])
    if np.any(big):
        tb, sb, xb = t[big], tau[big], x[big]
        jt, jtau = _CachedJ(tb, xb), _CachedJ(sb, xb)
        for k in (0, 1):
            for jj in (0, 1):
                out[big, k, jj] = _jform(params.rho, k, jj, tb, sb, xb, jt, jtau)
    return _finite(out.reshape(shape + (2, 2)))


def propagator_sample(params: DampingParams, t: float, tau: float,
                      ximag: float) -> PropagatorSample:
    s = propagator_matrix(params, t, tau, float(ximag))
    tt = np.array([psi_tt(params, j, t, tau, float(ximag)) for j in (0, 1)])
    return PropagatorSample(float(t), float(tau), float(ximag), s, tt)


class _CachedJ:
    """J_order(time * x) memoised per order for one time and magnitude set."""

    def __init__(self, time, x):
        # z = 0 only occurs for modes served by the closed form; the dummy
        # argument keeps the Bessel kernel away from the singular point
        z = time * x
        self.z = np.where(z > 0.0, z, 1.0)
        self.cache = {}

    def __call__(self, order):
        key = round(order, 14)
        v = self.cache.get(key)
        if v is None:
            v = _jv(order, self.z)
            self.cache[key] = v
        return v


@dataclass
class MultiplierTable:
    """Propagator matrices for all magnitudes of a frequency grid.

    Grid modes share magnitudes, so the Bessel values are computed once per
    distinct ``|xi|`` and per time, then reused for every ``(t, tau)`` pair
    that mentions that time.  Populate from one thread; reads are safe.

    Parameters
    ----------
    params : DampingParams
    ximag : ndarray
        Magnitudes on the grid (any shape).
    """

    params: DampingParams
    ximag: np.ndarray
    max_cached_times: int = 256
    _unique: np.ndarray = field(init=False, repr=False)
    _inverse: np.ndarray = field(init=False, repr=False)
    _jcache: dict = field(init=False, repr=False, default_factory=dict)
    _memo: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        self.ximag = _check_xi(self.ximag)
        u, inv = np.unique(self.ximag.ravel(), return_inverse=True)
        self._unique = u
        self._inverse = inv.reshape(self.ximag.shape)

    @property
    def n_unique(self) -> int:
        return self._unique.size

    def _jt(self, time):
        key = float(time)
        c = self._jcache.get(key)
        if c is None:
            if len(self._jcache) >= self.max_cached_times:
                self._jcache.pop(next(iter(self._jcache)))
            c = _CachedJ(key, self._unique)
            self._jcache[key] = c
        return c

    def unique_matrix(self, t: float, tau: float) -> np.ndarray:
        """``S(t, tau)`` per distinct magnitude, shape ``(n_unique, 2, 2)``."""
        _check_times(t, tau)
        x = self._unique
        out = np.empty(x.shape + (2, 2))
        small = x * t < SMALL_ARGUMENT
        big = ~small
        if np.any(small):
            out[small] = zero_frequency(self.params, t, tau)
        if np.any(big):
            jt, jtau = self._jt(t), self._jt(tau)
            xb = x[big]
            for k in (0, 1):
                for j in (0, 1):
                    out[big, k, j] = _jform(self.params.rho, k, j, t, tau, xb,
                                            _Masked(jt, big), _Masked(jtau, big))
        return _finite(out)

    def cached_matrix(self, t: float, tau: float) -> np.ndarray:
        """:meth:`unique_matrix` with a small memo of recent pairs."""
        key = (float(t), float(tau))
        memo = self._memo
        s = memo.get(key)
        if s is None:
            s = self.unique_matrix(t, tau)
            if len(memo) >= 8:
                memo.pop(next(iter(memo)))
            memo[key] = s
        return s

    def matrix(self, t: float, tau: float) -> np.ndarray:
        """``S(t, tau)`` on the grid, shape ``ximag.shape + (2, 2)``."""
        return self.unique_matrix(t, tau)[self._inverse]

    def entries(self, t: float, tau: float):
        """The four grid-shaped multipliers ``(Psi0, Psi1, dPsi0, dPsi1)``."""
        s = self.cached_matrix(t, tau)
        inv = self._inverse
        return s[inv, 0, 0], s[inv, 0, 1], s[inv, 1, 0], s[inv, 1, 1]


class _Masked:
    def __init__(self, cj, mask):
        self.cj = cj
        self.mask = mask

    def __call__(self, order):
        return self.cj(order)[self.mask]
