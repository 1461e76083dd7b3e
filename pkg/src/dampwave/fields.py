"""Grid, spectral state and trajectory containers shared by solver and norms.

Fourier convention: ``vhat = fft2(v)`` (unnormalised) on the grid
``x_i = -L + i*dx``; wavenumbers ``k = (pi/L) * m`` for integer ``m`` in
FFT order.  Axis 0 is ``x1``, axis 1 is ``x2``.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import fft as sfft

__all__ = [
    "GridError",
    "MissingForcingError",
    "GridSpec",
    "SpectralState",
    "CauchyData",
    "Trajectory",
    "bump",
    "make_data",
    "write_snapshot",
    "read_snapshot",
    "SNAPSHOT_MAGIC",
]

SNAPSHOT_MAGIC = b"EPDW1"
_HEADER = struct.Struct("<5sIddd")


class GridError(ValueError):
    """Invalid grid, or states living on different grids."""


class MissingForcingError(RuntimeError):
    """A second time derivative of a forced state was requested without F."""


@dataclass(frozen=True)
class GridSpec:
    """Periodic box ``[-L, L)^2`` with ``n`` points per axis.

    Parameters
    ----------
    n : int
        Power of two, at least 64.
    domain_half_width : float
        ``L``.  Data supported in the unit ball and evolved to ``T`` stay
        inside the box, without wrap-around, when ``L >= 2 T``.
    """

    n: int
    domain_half_width: float

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 64 or n & (n - 1):
            raise GridError(f"grid n must be a power of two >= 64, got {n!r}")
        L = float(self.domain_half_width)
        if not (math.isfinite(L) and L > 0):
            raise GridError(f"domain half-width must be positive, got {L!r}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "domain_half_width", L)

    @property
    def L(self) -> float:
        return self.domain_half_width

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def cell_area(self) -> float:
        return self.dx * self.dx

    def check_tmax(self, t_max: float):
        """Raise unless the box holds the light cone of B(0,1) up to ``t_max``."""
        need = 2.0 * (1.0 + (t_max - 1.0))
        if self.L < need:
            raise GridError(
                f"domain half-width L={self.L:g} must be >= 2*(1 + (T-1)) = {need:g} "
                f"for T={t_max:g}"
            )

    def coords(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.n)

    def mesh(self):
        x = self.coords()
        return np.meshgrid(x, x, indexing="ij")

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def kmesh(self):
        k = self.wavenumbers()
        return np.meshgrid(k, k, indexing="ij")

    def kmag(self) -> np.ndarray:
        # built from the integer lattice so equal shells give identical floats
        m = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)
        a, b = np.meshgrid(m, m, indexing="ij")
        return (np.pi / self.L) * np.sqrt((a * a + b * b).astype(float))

    def derivative_symbols(self):
        """``(i k1, i k2)`` with the unpaired Nyquist wavenumber removed."""
        k = self.wavenumbers()
        k[self.n // 2] = 0.0
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        return 1j * k1, 1j * k2

    def fft(self, f):
        return sfft.fft2(f)

    def ifft(self, fh):
        return sfft.ifft2(fh).real

    def l2(self, fh) -> float:
        """L^2 norm of the field with coefficients ``fh`` (Parseval)."""
        return math.sqrt(float(np.sum(np.abs(fh) ** 2)) * self.cell_area) / self.n


def _readonly(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpectralState:
    """``(vhat, vthat)`` at ``time`` on ``grid``.

    ``forcing_hat`` is the spectrum of the source ``F`` acting at ``time``
    (``None`` for a free solution).  ``forced`` marks states produced by a
    forced evolution; for those the second time derivative needs
    ``forcing_hat``.  ``mu`` is the damping coefficient of the equation the
    state belongs to (needed only for second time derivatives).
    """

    time: float
    vhat: np.ndarray
    vthat: np.ndarray
    grid: GridSpec
    forcing_hat: np.ndarray | None = None
    forced: bool = False
    mu: float | None = None

    def __post_init__(self):
        shape = (self.grid.n, self.grid.n)
        if self.vhat.shape != shape or self.vthat.shape != shape:
            raise GridError("state arrays do not match the grid")
        if not self.time >= 1.0:
            raise ValueError(f"state time must be >= 1, got {self.time!r}")
        object.__setattr__(self, "vhat", _readonly(self.vhat))
        object.__setattr__(self, "vthat", _readonly(self.vthat))
        if self.forcing_hat is not None:
            object.__setattr__(self, "forcing_hat", _readonly(self.forcing_hat))

    @classmethod
    def from_physical(cls, grid, time, v, vt, forcing=None, forced=False, mu=None):
        fh = None if forcing is None else grid.fft(forcing)
        return cls(float(time), grid.fft(v), grid.fft(vt), grid, fh,
                   forced or forcing is not None, mu)

    @classmethod
    def zeros(cls, grid, time, mu=None):
        z = np.zeros((grid.n, grid.n), complex)
        return cls(float(time), z, z.copy(), grid, mu=mu)

    def physical(self):
        """``(v, v_t)`` as real fields."""
        return self.grid.ifft(self.vhat), self.grid.ifft(self.vthat)

    def _same(self, other):
        if other.grid != self.grid:
            raise GridError("states live on different grids")
        if other.time != self.time:
            raise ValueError("states are at different times")
        if None not in (self.mu, other.mu) and self.mu != other.mu:
            raise ValueError("states belong to different damping coefficients")
        return self.mu if self.mu is not None else other.mu

    def __add__(self, other):
        mu = self._same(other)
        return SpectralState(self.time, self.vhat + other.vhat, self.vthat + other.vthat,
                             self.grid, _combine(self.forcing_hat, other.forcing_hat, 1.0),
                             self.forced or other.forced, mu)

    def __sub__(self, other):
        mu = self._same(other)
        return SpectralState(self.time, self.vhat - other.vhat, self.vthat - other.vthat,
                             self.grid, _combine(self.forcing_hat, other.forcing_hat, -1.0),
                             self.forced or other.forced, mu)

    def scaled(self, c: float):
        fh = None if self.forcing_hat is None else c * self.forcing_hat
        return replace(self, vhat=c * self.vhat, vthat=c * self.vthat, forcing_hat=fh)

    def hermitian_defect(self) -> float:
        """Relative size of the anti-Hermitian part (zero for real fields)."""
        worst = 0.0
        for a in (self.vhat, self.vthat):
            flip = np.conj(np.roll(a[::-1, ::-1], 1, axis=(0, 1)))
            scale = np.abs(a).max()
            if scale > 0:
                worst = max(worst, float(np.abs(a - flip).max() / scale))
        return worst


def _combine(a, b, sign):
    if a is None and b is None:
        return None
    if a is None:
        return sign * b
    if b is None:
        return a
    return a + sign * b


@dataclass(frozen=True)
class CauchyData:
    """Initial displacement and velocity at ``t = 1`` (before the eps scaling)."""

    u0: np.ndarray
    u1: np.ndarray
    profile: str
    grid: GridSpec

    def state(self, scale: float = 1.0, mu: float | None = None) -> SpectralState:
        return SpectralState.from_physical(self.grid, 1.0, scale * self.u0, scale * self.u1,
                                           mu=mu)


def bump(grid: GridSpec, center=(0.0, 0.0), radius: float = 1.0,
         amplitude: float = 1.0) -> np.ndarray:
    """``amplitude * exp(1 - 1/(1 - r^2))`` with ``r = |x - center| / radius``, zero for r >= 1."""
    x1, x2 = grid.mesh()
    r2 = ((x1 - center[0]) ** 2 + (x2 - center[1]) ** 2) / (radius * radius)
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


PROFILES = ("generic", "cancel", "zero")


def make_data(grid: GridSpec, case: str = "generic") -> CauchyData:
    """Named compactly supported data inside the unit ball.

    ``generic``
        ``u0`` the unit bump, ``u1`` an off-centre bump of radius 1/2.
    ``cancel``
        ``u1 = -u0`` so that ``u0 + u1 = 0``.
    ``zero``
        Both fields vanish.
    """
    u0 = bump(grid)
    if case == "generic":
        u1 = bump(grid, center=(0.3, -0.2), radius=0.5, amplitude=0.8)
    elif case == "cancel":
        u1 = -u0
    elif case == "zero":
        u0 = np.zeros_like(u0)
        u1 = np.zeros_like(u0)
    else:
        raise ValueError(f"unknown data case {case!r}; expected one of {PROFILES}")
    return CauchyData(u0, u1, f"bump:{case}", grid)


@dataclass
class Trajectory:
    """States on a time lattice (immutable once built)."""

    times: np.ndarray
    states: list = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.states) != len(self.times):
            raise ValueError("one state per lattice time is required")
        for t, s in zip(self.times, self.states):
            if s.time != t:
                raise ValueError("state time does not match the lattice")

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __sub__(self, other):
        if not np.array_equal(self.times, other.times):
            raise ValueError("trajectories live on different lattices")
        return Trajectory(self.times, [a - b for a, b in zip(self.states, other.states)])

    def scaled(self, c):
        return Trajectory(self.times, [s.scaled(c) for s in self.states])

    def subset(self, idx):
        idx = np.asarray(idx)
        return Trajectory(self.times[idx], [self.states[i] for i in idx])


def write_snapshot(path, state: SpectralState, mu: float):
    """Flat little-endian record: header, then ``v`` and ``v_t`` in physical space."""
    v, vt = state.physical()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, state.grid.n, state.grid.L, state.time, mu))
        fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(vt, dtype="<f8").tobytes())


def read_snapshot(path):
    """Inverse of :func:`write_snapshot`; returns ``(state, mu)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated snapshot header")
    magic, n, L, time, mu = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"bad snapshot magic {magic!r}")
    count = n * n
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != 2 * count:
        raise ValueError("snapshot body has the wrong length")
    grid = GridSpec(n, L)
    v = body[:count].reshape(n, n)
    vt = body[count:].reshape(n, n)
    return SpectralState.from_physical(grid, time, v, vt, mu=mu), mu
