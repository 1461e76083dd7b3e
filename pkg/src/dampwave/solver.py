"""Field-level evolution on the periodic grid.

Linear propagation applies the exact multipliers ``S(t, tau)`` mode by mode.
Forced problems are solved by Duhamel's principle, marched over a time
lattice ``1 = t_0 < t_1 < ... < t_M``::

    W(t_{m+1}) = S(t_{m+1}, t_m) W(t_m) + int_{t_m}^{t_{m+1}} S(t_{m+1}, s) [0, F(s)] ds

where ``W = (w_hat, dt w_hat)``.  The semigroup property makes the march
exact; only the interval integrals are approximated (composite Simpson with
node doubling and one Richardson step).

The nonlinear map for ``|u|^p`` evaluates ``u`` between lattice nodes by
blending the free evolutions launched from both neighbouring nodes, which
reproduces the stored states exactly at the nodes.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .fields import (
    CauchyData,
    GridError,
    GridSpec,
    SpectralState,
    Trajectory,
)
from .propagator import DampingParams, MultiplierTable

__all__ = [
    "QuadSpec",
    "QuadratureError",
    "ConvergenceReport",
    "WaveSolver",
    "time_lattice",
    "linear_evolve",
    "duhamel",
    "apply_nonlinearity",
    "picard_map",
    "solve_semilinear",
]

DEFAULT_SAMPLES = 40


class QuadratureError(RuntimeError):
    """Node doubling failed to meet the tolerance.

    ``history`` lists ``(interval, level, nodes, error_estimate)`` tuples.
    """

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class QuadSpec:
    """Composite Simpson rule per lattice interval.

    Level ``l`` uses ``2**l`` subintervals.  The error estimate is
    ``|S_l - S_{l-1}| / 15`` relative to the size of the marched state.
    """

    tol: float = 1e-7
    min_level: int = 2
    max_level: int = 9
    atol: float = 0.0

    def __post_init__(self):
        if not (self.tol > 0 and self.atol >= 0):
            raise ValueError("quadrature tolerances must be positive")
        if not (1 <= self.min_level <= self.max_level):
            raise ValueError("need 1 <= min_level <= max_level")


@dataclass
class ConvergenceReport:
    """Per-iteration record of a Picard run."""

    status: str = "running"
    iterations: int = 0
    diffs: list = field(default_factory=list)
    diff_xnorms: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    xnorms: list = field(default_factory=list)
    residual: float = float("nan")
    quad_levels: list | None = None
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def time_lattice(t_final: float, samples: int = DEFAULT_SAMPLES) -> np.ndarray:
    """Geometric lattice ``t_m = gamma^m`` covering ``[1, t_final]``."""
    if samples < 2:
        raise ValueError("a lattice needs at least two samples")
    if not t_final > 1.0:
        raise ValueError("t_final must exceed 1")
    t = np.geomspace(1.0, t_final, samples)
    t[0], t[-1] = 1.0, float(t_final)
    return t


def _pair_norm(a, b):
    return math.sqrt(float(np.vdot(a, a).real + np.vdot(b, b).real))


class WaveSolver:
    """Spectral evolution for one grid and one set of damping parameters.

    Parameters
    ----------
    grid : GridSpec
    params : DampingParams
    cache_times : int
        Number of time levels whose Bessel values are kept.
    """

    def __init__(self, grid: GridSpec, params: DampingParams, cache_times: int = 512):
        self.grid = grid
        self.params = params
        self.table = MultiplierTable(params, grid.kmag(), max_cached_times=cache_times)
        self.ik1, self.ik2 = grid.derivative_symbols()
        self.ksq = grid.kmag() ** 2

    # linear part

    def _check(self, state):
        if state.grid != self.grid:
            raise GridError("state grid does not match the solver grid")

    def apply(self, t, tau, vhat, vthat):
        """``S(t, tau)`` applied to a spectral pair."""
        if t == tau:
            return vhat.copy(), vthat.copy()
        p0, p1, d0, d1 = self.table.entries(t, tau)
        return p0 * vhat + p1 * vthat, d0 * vhat + d1 * vthat

    def linear_evolve(self, state: SpectralState, t_new: float) -> SpectralState:
        """Free evolution of ``state`` from ``state.time`` to ``t_new``."""
        self._check(state)
        if t_new < state.time:
            raise ValueError("linear_evolve only runs forward in time")
        vh, vth = self.apply(float(t_new), state.time, state.vhat, state.vthat)
        return SpectralState(float(t_new), vh, vth, self.grid, mu=self.params.mu)

    def linear_trajectory(self, data: CauchyData, times, scale: float = 1.0) -> Trajectory:
        start = data.state(scale, self.params.mu)
        return Trajectory(times, [self.linear_evolve(start, t) for t in times])

    # nonlinearity

    def nonlinearity_hat(self, uhat, p):
        """Spectrum of ``|u|^p`` with 2x zero-padding; Nyquist modes removed."""
        return _power_hat(uhat, p, self.grid.n)

    # Duhamel

    def duhamel_march(self, forcing_hat, times, quad: QuadSpec = QuadSpec(),
                      levels=None):
        """Solutions of the forced problem with zero data at ``times[0] = 1``.

        Parameters
        ----------
        forcing_hat : callable
            ``forcing_hat(s, m)`` returns the spectrum of ``F(s)`` for ``s`` in
            lattice interval ``m`` (``[times[m], times[m+1]]``).
        times : array_like
            Increasing lattice starting at 1.
        levels : list of int, optional
            Fixed Simpson level per interval; adaptive when omitted.

        Returns
        -------
        pairs : list of (w_hat, dt_w_hat) at every lattice time
        used : list of int
            Level used per interval.
        history : list
        """
        times = np.asarray(times, dtype=float)
        if times[0] != 1.0 or np.any(np.diff(times) <= 0):
            raise ValueError("lattice must start at 1 and increase")
        n = self.grid.n
        w = np.zeros((n, n), complex)
        wt = np.zeros((n, n), complex)
        out = [(w, wt)]
        used, history = [], []
        for m in range(len(times) - 1):
            a, b = times[m], times[m + 1]
            base = self.apply(b, a, w, wt)
            fixed = None if levels is None else levels[m]
            inc, lev, hist = self._simpson(lambda s: forcing_hat(s, m), a, b, base,
                                           quad, fixed, m)
            history.extend(hist)
            used.append(lev)
            w, wt = base[0] + inc[0], base[1] + inc[1]
            out.append((w, wt))
        return out, used, history

    def _integrand(self, F, s, b):
        if s == b:
            # Psi_1(b, b) = 0 and dPsi_1(b, b) = 1
            return np.zeros_like(F), F
        _, p1, _, d1 = self.table.entries(b, s)
        return p1 * F, d1 * F

    def _simpson(self, fh, a, b, base, quad, fixed, m):
        history = []

        def g(s):
            return self._integrand(fh(s), s, b)

        ga, gb = g(a), g(b)
        ends = (ga[0] + gb[0], ga[1] + gb[1])
        evens = (np.zeros_like(ga[0]), np.zeros_like(ga[1]))
        mid = g(0.5 * (a + b))
        odds = mid
        level = 1
        prev = None
        top = quad.max_level if fixed is None else max(fixed, 1)
        while True:
            h = (b - a) / 2 ** level
            cur = tuple(h / 3.0 * (ends[i] + 4.0 * odds[i] + 2.0 * evens[i]) for i in (0, 1))
            if prev is not None:
                d = (cur[0] - prev[0], cur[1] - prev[1])
                err = _pair_norm(*d) / 15.0
                scale = _pair_norm(base[0] + cur[0], base[1] + cur[1])
                history.append((m, level, 2 ** level + 1, err))
                done = level >= top if fixed is not None else (
                    level >= quad.min_level and err <= quad.tol * scale + quad.atol)
                if done:
                    return (cur[0] + d[0] / 15.0, cur[1] + d[1] / 15.0), level, history
                if level >= top:
                    raise QuadratureError(
                        f"Simpson rule did not reach tol={quad.tol:g} on interval "
                        f"[{a:g}, {b:g}] by level {level}", history)
            elif fixed is not None and fixed <= 1:
                return cur, level, history
            # double the nodes
            evens = (evens[0] + odds[0], evens[1] + odds[1])
            level += 1
            h = (b - a) / 2 ** level
            acc0 = np.zeros_like(ga[0])
            acc1 = np.zeros_like(ga[1])
            for i in range(1, 2 ** level, 2):
                gi = g(a + i * h)
                acc0 += gi[0]
                acc1 += gi[1]
            odds = (acc0, acc1)
            prev = cur

    def duhamel(self, forcing, t: float, quad: QuadSpec = QuadSpec(),
                samples: int = DEFAULT_SAMPLES, spectral: bool = False) -> SpectralState:
        """``w(t) = int_1^t Psi_1(t, s, D) F(s) ds`` and its time derivative.

        ``forcing(s)`` returns the real field ``F(s)`` (or its spectrum when
        ``spectral`` is true); a plain array is a time-independent source.
        Breakpoints follow :func:`time_lattice`.
        """
        if not callable(forcing):
            const = np.asarray(forcing)
            forcing = lambda s: const  # noqa: E731
        if t == 1.0:
            return SpectralState.zeros(self.grid, 1.0, self.params.mu)
        times = time_lattice(t, samples)
        grid = self.grid

        def fh(s, _m):
            f = forcing(s)
            return f if spectral else grid.fft(f)

        pairs, _, _ = self.duhamel_march(fh, times, quad)
        w, wt = pairs[-1]
        return SpectralState(float(t), w, wt, grid, forcing_hat=fh(t, None), forced=True,
                             mu=self.params.mu)

    # nonlinear map

    def interpolate(self, traj: Trajectory, m: int, s: float):
        """Displacement spectrum of ``traj`` at ``s`` in lattice interval ``m``."""
        a, b = traj.times[m], traj.times[m + 1]
        left, right = traj.states[m], traj.states[m + 1]
        if s == a:
            return left.vhat
        if s == b:
            return right.vhat
        theta = (s - a) / (b - a)
        p0, p1, _, _ = self.table.entries(s, a)
        fwd = p0 * left.vhat + p1 * left.vthat
        # first row of S(b, s)^{-1}; det S(b, s) = (s/b)^mu exactly
        q0, q1, _, e1 = self.table.entries(b, s)
        det = (s / b) ** self.params.mu
        bwd = (e1 * right.vhat - q1 * right.vthat) / det
        return (1.0 - theta) * fwd + theta * bwd

    def picard_map(self, traj: Trajectory, data: CauchyData, quad: QuadSpec = QuadSpec(),
                   levels=None):
        """One application of the nonlinear map on the lattice of ``traj``.

        Returns ``(image, levels_used, history)``; passing ``levels`` back in
        evaluates the identical discrete map.
        """
        p = self.params.p_exponent
        eps = self.params.epsilon
        times = traj.times
        for s in traj.states:
            self._check(s)

        def fh(s, m):
            return self.nonlinearity_hat(self.interpolate(traj, m, s), p)

        pairs, used, history = self.duhamel_march(fh, times, quad, levels)
        start = data.state(eps, self.params.mu)
        states = []
        for i, t in enumerate(times):
            lin = self.apply(t, 1.0, start.vhat, start.vthat)
            w, wt = pairs[i]
            forcing = self.nonlinearity_hat(traj.states[i].vhat, p)
            states.append(SpectralState(float(t), lin[0] + w, lin[1] + wt, self.grid,
                                        forcing_hat=forcing, forced=True,
                                        mu=self.params.mu))
        return Trajectory(times, states), used, history

    def solve_semilinear(self, data: CauchyData, t_final: float, tol: float = 1e-10,
                         max_iter: int = 20, samples: int = DEFAULT_SAMPLES,
                         quad: QuadSpec = QuadSpec(), cparams=None,
                         check_residual: bool = True, on_iteration=None,
                         blowup: float = 1e8):
        """Picard iteration ``u <- N u`` from the free solution.

        Stops when ``sup_m ||u^{k+1} - u^k||_{Z,1,2}(t_m) <= tol``.  The
        quadrature levels chosen on the first application are frozen so every
        iteration applies the same discrete map.

        Returns
        -------
        traj : Trajectory
        report : ConvergenceReport
        """
        from .norms import ContractionParams, sup_z_norm, x_norm

        self.grid.check_tmax(t_final)
        if cparams is None:
            cparams = ContractionParams.default_for(self.params.p_exponent)
        times = time_lattice(t_final, samples)
        u = self.linear_trajectory(data, times, self.params.epsilon)
        report = ConvergenceReport()
        levels = None
        x0 = x_norm(u, cparams)
        report.xnorms.append(x0)
        cap = blowup * max(1.0, x0)
        for k in range(1, max_iter + 1):
            try:
                new, used, _ = self.picard_map(u, data, quad, levels)
            except FloatingPointError as exc:  # pragma: no cover - defensive
                report.status, report.message = "diverged", str(exc)
                break
            levels = used
            delta = new - u
            diff = sup_z_norm(delta)
            dx = x_norm(delta, cparams)
            xn = x_norm(new, cparams)
            report.iterations = k
            report.diffs.append(diff)
            report.diff_xnorms.append(dx)
            prev = report.diff_xnorms[-2] if k > 1 else float("nan")
            report.ratios.append(dx / prev if prev and prev > 0 else float("nan"))
            report.xnorms.append(xn)
            if on_iteration is not None:
                on_iteration(k, dx, report.ratios[-1], xn)
            u = new
            if not (math.isfinite(diff) and math.isfinite(xn)) or xn > cap:
                report.status = "diverged"
                report.message = "iterates left every bounded set"
                break
            if diff <= tol:
                report.status = "converged"
                break
            r = report.ratios
            if len(r) >= 3 and r[-1] > 1 and r[-2] > 1:
                report.status = "diverged"
                report.message = "difference norms grow geometrically"
                break
        else:
            report.status = "diverged"
            report.message = f"no convergence within {max_iter} iterations"
        report.quad_levels = levels
        if report.converged and check_residual:
            again, _, _ = self.picard_map(u, data, quad, levels)
            report.residual = sup_z_norm(again - u)
        return u, report


def _pad_rows(a, m):
    """Zero-pad a spectrum along axis 0 from ``n`` to ``m`` modes.

    The Nyquist coefficient is split evenly between +-n/2 so real fields
    stay real.
    """
    n = a.shape[0]
    h = n // 2
    out = np.zeros((m,) + a.shape[1:], a.dtype)
    out[:h] = a[:h]
    out[m - h + 1:] = a[h + 1:]
    out[h] = out[m - h] = 0.5 * a[h]
    return out


def _truncate_rows(a, n):
    m = a.shape[0]
    h = n // 2
    out = np.empty((n,) + a.shape[1:], a.dtype)
    out[:h] = a[:h]
    out[h] = 0.0
    out[h + 1:] = a[m - h + 1:]
    return out


def _power_hat(uhat, p, n):
    m = 2 * n
    h = n // 2
    # half spectrum along axis 1 on the padded grid; the Nyquist column is
    # halved, and its mirror at -n/2 is implied by Hermitian symmetry
    half = np.zeros((n, m // 2 + 1), complex)
    half[:, :h] = uhat[:, :h]
    half[:, h] = 0.5 * uhat[:, h]
    big = _pad_rows(half, m)
    u = sfft.irfft2(big, s=(m, m)) * (m * m) / (n * n)
    fp = sfft.rfft2(np.abs(u) ** p) * (n * n) / (m * m)
    top = _truncate_rows(fp[:, : h + 1], n)
    top[:, h] = 0.0
    out = np.empty((n, n), complex)
    out[:, : h + 1] = top
    # negative columns from Hermitian symmetry: F(k1, -j) = conj F(-k1, j)
    neg = np.conj(top[(-np.arange(n)) % n, 1:h][:, ::-1])
    out[:, h + 1:] = neg
    return out


def apply_nonlinearity(u: np.ndarray, p: float) -> np.ndarray:
    """Dealiased ``|u|^p`` for a real periodic field ``u`` (``|0|^p = 0``).

    The field is interpolated to a 2x finer grid, raised to the power there,
    and the result truncated back to the original modes (Nyquist removed).
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise GridError("apply_nonlinearity expects a square field")
    if not p >= 1.0:
        raise ValueError(f"power must be >= 1, got {p!r}")

    return sfft.ifft2(_power_hat(sfft.fft2(u), p, u.shape[0])).real


@functools.lru_cache(maxsize=4)
def _solver(grid: GridSpec, params: DampingParams) -> WaveSolver:
    return WaveSolver(grid, params)


def linear_evolve(state: SpectralState, t_new: float, params: DampingParams) -> SpectralState:
    """Module-level convenience wrapper around :meth:`WaveSolver.linear_evolve`."""
    return _solver(state.grid, params).linear_evolve(state, t_new)


def duhamel(forcing, t: float, quad: QuadSpec, grid: GridSpec, params: DampingParams,
            **kwargs) -> SpectralState:
    return _solver(grid, params).duhamel(forcing, t, quad, **kwargs)


def picard_map(traj: Trajectory, data: CauchyData, params: DampingParams,
               quad: QuadSpec = QuadSpec()) -> Trajectory:
    return _solver(data.grid, params).picard_map(traj, data, quad)[0]


def solve_semilinear(data: CauchyData, params: DampingParams, T: float, tol: float = 1e-10,
                     max_iter: int = 20, **kwargs):
    return _solver(data.grid, params).solve_semilinear(data, T, tol, max_iter, **kwargs)
