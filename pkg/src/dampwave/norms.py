r"""Mixed radial-angular norms, vector-field norms and decay diagnostics.

The mixed norm of a field ``v`` on the plane is

.. math::
    \|v\|_{(p,q)} = \Bigl(\int_0^\infty \Bigl(\int_0^{2\pi} |v(r\omega)|^q
    \,d\theta\Bigr)^{p/q} r\,dr\Bigr)^{1/p},

so ``(2, 2)`` is the ordinary :math:`L^2` norm.  The vector fields are

* ``dt``, ``d1``, ``d2`` (partial derivatives),
* ``L0 = t dt + x1 d1 + x2 d2`` (scaling),
* ``Lj = t dj + xj dt`` (boosts),
* ``Omega12 = x1 d2 - x2 d1`` (rotation),

and :math:`\|v\|_{Z,1,(p,q)}` sums the mixed norms of ``v`` and of the seven
fields applied to it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import CauchyData, GridSpec, MissingForcingError, SpectralState, Trajectory

__all__ = [
    "MixedNormSpec",
    "L2",
    "ZNormValue",
    "ContractionParams",
    "DecayFit",
    "ZFIELDS",
    "mixed_norm",
    "z_apply",
    "z_norm",
    "dz_norm",
    "sup_z_norm",
    "x_norm",
    "zone_norms",
    "decay_fit",
    "ks_ratio",
    "energy",
    "damping_rate",
    "data_norm",
    "state_report",
]

ZFIELDS = ("identity", "dt", "d1", "d2", "L0", "L1", "L2", "Omega12")


@dataclass(frozen=True)
class MixedNormSpec:
    """Exponents and polar resolution of a mixed norm.

    ``method="polar"`` resamples to a polar grid (bilinear interpolation,
    trapezoid rules; ``n_r`` defaults to twice the grid size).  For
    ``(2, 2)`` ``method="cartesian"`` sums the grid values directly, which
    is exact for the discrete field.
    """

    p_radial: float = 2.0
    q_angular: float = 2.0
    n_r: int | None = None
    n_theta: int = 256
    method: str = "polar"

    def __post_init__(self):
        for name in ("p_radial", "q_angular"):
            v = float(getattr(self, name))
            if not v >= 1.0:
                raise ValueError(f"{name} must be in [1, inf], got {v!r}")
        if self.n_theta < 64:
            raise ValueError("n_theta must be at least 64")
        if self.method not in ("polar", "cartesian"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "cartesian" and (self.p_radial, self.q_angular) != (2.0, 2.0):
            raise ValueError("the cartesian method only applies to (2, 2)")

    @property
    def pq(self):
        return self.p_radial, self.q_angular


L2 = MixedNormSpec(2.0, 2.0, method="cartesian")


@dataclass(frozen=True)
class ZNormValue:
    order_s: int
    pq: MixedNormSpec
    value: float
    breakdown: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ContractionParams:
    """Exponents of the contraction argument for a given ``eps1``.

    ``delta = 2 eps1/(1+eps1)``, ``kappa = (1-eps1)/(1+eps1)``,
    ``1/(1+eps1) = 1/2 + 1/q_tilde`` and ``1/2 = 1/(2+eps2) + 1/q_bar``.
    """

    eps1: float
    eps2: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.eps1 < 1.0):
            raise ValueError(f"eps1 must lie in (0, 1), got {self.eps1!r}")
        if not self.eps2 > 0.0:
            raise ValueError(f"eps2 must be positive, got {self.eps2!r}")

    @property
    def delta(self) -> float:
        return 2.0 * self.eps1 / (1.0 + self.eps1)

    @property
    def kappa(self) -> float:
        return (1.0 - self.eps1) / (1.0 + self.eps1)

    @property
    def q_tilde(self) -> float:
        return 2.0 * (1.0 + self.eps1) / (1.0 - self.eps1)

    @property
    def q_bar(self) -> float:
        return 1.0 / (0.5 - 1.0 / (2.0 + self.eps2))

    def margins(self, p: float):
        """Slack of the two integrability conditions (both must be positive)."""
        d, k = self.delta, self.kappa
        return (-1.0 - (1.0 + (p - 1.0 - k) / 2.0 + p * (d - 1.0)),
                -1.0 - (1.0 + p * (d - 1.0)))

    def admissible(self, p: float) -> bool:
        return min(self.margins(p)) > 0.0

    @staticmethod
    def largest_eps1(p: float) -> float:
        """Supremum of admissible ``eps1`` for power ``p`` (bisection)."""
        if not p > 2.0:
            raise ValueError(f"p must exceed 2, got {p!r}")
        lo, hi = 0.0, 1.0 - 1e-15
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if ContractionParams(mid).admissible(p) if mid > 0 else True:
                lo = mid
            else:
                hi = mid
        return lo

    @classmethod
    def default_for(cls, p: float, margin: float = 0.1) -> "ContractionParams":
        """Admissible ``eps1`` kept ``margin`` (relative) inside the boundary."""
        return cls((1.0 - margin) * cls.largest_eps1(p))


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    intercept: float
    rms_residual: float
    window: tuple
    samples: int


# polar resampling


def _bilinear(field_, grid: GridSpec, x1, x2):
    n, dx, L = grid.n, grid.dx, grid.L
    fx = (x1 + L) / dx
    fy = (x2 + L) / dx
    i0 = np.floor(fx).astype(np.int64)
    j0 = np.floor(fy).astype(np.int64)
    ax = fx - i0
    ay = fy - j0
    i0 %= n
    j0 %= n
    i1 = (i0 + 1) % n
    j1 = (j0 + 1) % n
    return ((1 - ax) * (1 - ay) * field_[i0, j0] + ax * (1 - ay) * field_[i1, j0]
            + (1 - ax) * ay * field_[i0, j1] + ax * ay * field_[i1, j1])


def _trapezoid(y, dx, axis=-1):
    y = np.moveaxis(y, axis, -1)
    return dx * (y.sum(axis=-1) - 0.5 * (y[..., 0] + y[..., -1]))


def mixed_norm(field_: np.ndarray, spec: MixedNormSpec, grid: GridSpec) -> float:
    """``||v||_(p,q)`` of a real grid field.

    Parameters
    ----------
    field_ : ndarray, shape (n, n)
    spec : MixedNormSpec
    grid : GridSpec
    """
    f = np.asarray(field_, dtype=float)
    if f.shape != (grid.n, grid.n):
        raise ValueError("field does not match the grid")
    if spec.method == "cartesian":
        return math.sqrt(float(np.sum(f * f)) * grid.cell_area)
    n_r = spec.n_r if spec.n_r is not None else 2 * grid.n
    if n_r < grid.n:
        raise ValueError(f"n_r must be at least the grid size {grid.n}")
    p, q = spec.pq
    r = np.linspace(0.0, grid.L, n_r + 1)
    theta = 2.0 * np.pi * np.arange(spec.n_theta) / spec.n_theta
    x1 = r[:, None] * np.cos(theta)[None, :]
    x2 = r[:, None] * np.sin(theta)[None, :]
    vals = np.abs(_bilinear(f, grid, x1, x2))
    # periodic trapezoid in theta is the plain mean
    if math.isinf(q):
        inner = vals.max(axis=1)
    else:
        inner = (2.0 * np.pi * np.mean(vals**q, axis=1)) ** (1.0 / q)
    if math.isinf(p):
        return float(inner.max())
    return float(_trapezoid(inner**p * r, r[1] - r[0]) ** (1.0 / p))


# vector fields


class _Fields:
    """Lazily computed physical fields of one state; keys are spectral recipes."""

    def __init__(self, state: SpectralState):
        self.s = state
        self.g = state.grid
        self.ik1, self.ik2 = self.g.derivative_symbols()
        self.cache = {}
        self._x = None

    @property
    def x(self):
        if self._x is None:
            self._x = self.g.mesh()
        return self._x

    def vtt_hat(self):
        s = self.s
        if s.forced and s.forcing_hat is None:
            raise MissingForcingError(
                "second time derivative of a forced state needs its |u|^p snapshot")
        if s.mu is None:
            raise ValueError("second time derivatives need the state's mu")
        ksq = -(self.ik1 * self.ik1 + self.ik2 * self.ik2).real
        # Nyquist-free Laplacian keeps the result Hermitian
        out = -ksq * s.vhat - (s.mu / s.time) * s.vthat
        if s.forcing_hat is not None:
            out = out + s.forcing_hat
        return out

    def get(self, key):
        """``key`` is (base, derivatives) with base in {v, vt, vtt}."""
        if key in self.cache:
            return self.cache[key]
        base, ders = key
        if base == "v":
            h = self.s.vhat
        elif base == "vt":
            h = self.s.vthat
        else:
            h = self.vtt_hat()
        for d in ders:
            h = h * (self.ik1 if d == "1" else self.ik2)
        out = self.g.ifft(h)
        self.cache[key] = out
        return out

    def z_fields(self, base="v", der="", nxt=None, names=ZFIELDS):
        """Z-fields applied to the function ``d`` = derivative ``der`` of ``base``.

        ``nxt`` is the time-derivative base of ``base`` (``v -> vt -> vtt``).
        """
        if nxt is None:
            nxt = {"v": "vt", "vt": "vtt"}[base]
        t = self.s.time
        x1, x2 = self.x
        d = lambda: self.get((base, der))  # noqa: E731
        dt = lambda: self.get((nxt, der))  # noqa: E731
        d1 = lambda: self.get((base, "".join(sorted(der + "1"))))  # noqa: E731
        d2 = lambda: self.get((base, "".join(sorted(der + "2"))))  # noqa: E731
        recipes = {
            "identity": lambda: d(),
            "dt": lambda: dt(),
            "d1": lambda: d1(),
            "d2": lambda: d2(),
            "L0": lambda: t * dt() + x1 * d1() + x2 * d2(),
            "L1": lambda: t * d1() + x1 * dt(),
            "L2": lambda: t * d2() + x2 * dt(),
            "Omega12": lambda: x1 * d2() - x2 * d1(),
        }
        return {k: recipes[k]() for k in names}


def z_apply(state: SpectralState, name: str) -> np.ndarray:
    """One vector field applied to the state's displacement, as a real field."""
    if name not in ZFIELDS:
        raise ValueError(f"unknown vector field {name!r}; expected one of {ZFIELDS}")
    return _Fields(state).z_fields(names=(name,))[name]


def _znorm_from(fields_: dict, s, spec, grid):
    names = ZFIELDS if s == 1 else ("identity",)
    parts = {k: mixed_norm(fields_[k], spec, grid) for k in names}
    return ZNormValue(s, spec, float(sum(parts.values())), parts)


def z_norm(state: SpectralState, s: int = 1, spec: MixedNormSpec = L2) -> ZNormValue:
    """``||v||_{Z,s,(p,q)}`` for ``s`` in {0, 1}."""
    if s not in (0, 1):
        raise ValueError("s must be 0 or 1")
    names = ZFIELDS if s == 1 else ("identity",)
    return _znorm_from(_Fields(state).z_fields(names=names), s, spec, state.grid)


_DERIVED = (("dt", "vt", ""), ("d1", "v", "1"), ("d2", "v", "2"))


def _dz(fx: _Fields, spec):
    total = 0.0
    parts = {}
    for name, base, der in _DERIVED:
        zv = _znorm_from(fx.z_fields(base, der), 1, spec, fx.g)
        parts[name] = zv.value
        total += zv.value
    return total, parts


def dz_norm(state: SpectralState, spec: MixedNormSpec = L2) -> ZNormValue:
    """``||dv||_{Z,1,(p,q)}``: the sum over ``dt v``, ``d1 v`` and ``d2 v``.

    ``dt`` of ``dt v`` comes from the equation,
    ``v_tt = Laplace v - (mu/t) v_t + F``.

    Raises
    ------
    MissingForcingError
        For a forced state without its forcing snapshot.
    """
    total, parts = _dz(_Fields(state), spec)
    return ZNormValue(1, spec, total, parts)


def _both(state, spec=L2):
    fx = _Fields(state)
    zu = _znorm_from(fx.z_fields(), 1, spec, state.grid).value
    dz, _ = _dz(fx, spec)
    return zu, dz, fx


def sup_z_norm(traj: Trajectory, spec: MixedNormSpec = L2) -> float:
    """``max_m ||u(t_m)||_{Z,1,(p,q)}`` over a trajectory."""
    return max(z_norm(s, 1, spec).value for s in traj)


def x_norm(traj: Trajectory, cparams: ContractionParams, spec: MixedNormSpec = L2,
           detail: bool = False):
    """``sup_m t^{1-delta} ||u||_{Z,1,2} + t ||du||_{Z,1,2}`` over the lattice."""
    best = 0.0
    rows = []
    for st in traj:
        zu, dz, _ = _both(st, spec)
        t = st.time
        val = t ** (1.0 - cparams.delta) * zu + t * dz
        rows.append((t, zu, dz, val))
        best = max(best, val)
    return (best, rows) if detail else best


def zone_norms(state: SpectralState):
    """Spectral mass ``int |v|^2`` split over ``|xi| >= 1``, ``|xi| < 1 <= t|xi|``, ``t|xi| < 1``."""
    g = state.grid
    k = g.kmag()
    w = np.abs(state.vhat) ** 2 * g.cell_area / (g.n * g.n)
    t = state.time
    a1 = k >= 1.0
    a3 = t * k < 1.0
    a2 = ~a1 & ~a3
    return float(w[a1].sum()), float(w[a2].sum()), float(w[a3].sum())


def energy(state: SpectralState) -> float:
    """``E = 1/2 int (|v_t|^2 + |grad v|^2) dx`` via Parseval.

    The gradient term uses ``|xi|^2`` from :meth:`GridSpec.kmag`, the same
    symbol the propagator evolves with (Nyquist modes included), so the
    identity ``dE/dt = -(mu/t) ||v_t||^2`` holds exactly for discrete free
    solutions.
    """
    g = state.grid
    ksq = g.kmag() ** 2
    tot = np.sum(np.abs(state.vthat) ** 2 + ksq * np.abs(state.vhat) ** 2)
    return 0.5 * float(tot) * g.cell_area / (g.n * g.n)


def damping_rate(state: SpectralState) -> float:
    """``-(mu/t) int |v_t|^2``, the exact energy derivative of a free solution."""
    g = state.grid
    return -(state.mu / state.time) * g.l2(state.vthat) ** 2


def decay_fit(series, window=None) -> DecayFit:
    """Least-squares line through ``(log t, log value)``.

    Parameters
    ----------
    series : sequence of (t, value)
    window : (t_lo, t_hi), optional
        Inclusive; all samples when omitted.
    """
    arr = np.asarray(series, dtype=float)
    t, v = arr[:, 0], arr[:, 1]
    if window is not None:
        keep = (t >= window[0] * (1 - 1e-12)) & (t <= window[1] * (1 + 1e-12))
        t, v = t[keep], v[keep]
    if t.size < 8:
        raise ValueError(f"a decay fit needs at least 8 samples, got {t.size}")
    if np.any(v <= 0) or np.any(t <= 0):
        raise ValueError("decay fits need strictly positive times and values")
    x, y = np.log(t), np.log(v)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - (slope * x + icpt)
    win = (float(t.min()), float(t.max())) if window is None else tuple(window)
    return DecayFit(float(slope), float(icpt), float(np.sqrt(np.mean(res**2))), win, int(t.size))


def ks_ratio(state: SpectralState) -> float:
    """``||u||_inf / (t^{1/2} (||u||_{Z,1,2} + ||du||_{Z,1,2}))`` (0 for the zero state)."""
    zu, dz, fx = _both(state)
    denom = math.sqrt(state.time) * (zu + dz)
    if denom == 0.0:
        return 0.0
    return float(np.abs(fx.get(("v", ""))).max() / denom)


def state_report(state: SpectralState) -> dict:
    """All per-time diagnostics of one state, sharing the transformed fields.

    Keys: ``norm_Z12``, ``norm_dZ12``, ``energy``, ``linf``, ``ks_ratio``,
    ``zone_a1``, ``zone_a2``, ``zone_a3``.
    """
    zu, dz, fx = _both(state)
    linf = float(np.abs(fx.get(("v", ""))).max())
    denom = math.sqrt(state.time) * (zu + dz)
    a1, a2, a3 = zone_norms(state)
    return {
        "norm_Z12": zu,
        "norm_dZ12": dz,
        "energy": energy(state),
        "linf": linf,
        "ks_ratio": linf / denom if denom > 0 else 0.0,
        "zone_a1": a1,
        "zone_a2": a2,
        "zone_a3": a3,
    }


def data_norm(data: CauchyData, params, cparams: ContractionParams,
              polar: MixedNormSpec | None = None):
    """The six terms of the data norm and their sum.

    The data are treated as a state at ``t = 1`` with ``v_t = u1`` and
    ``v_tt = Laplace u0 - mu u1 + eps^{p-1} |u0|^p``.  ``u1`` and ``u0 + u1``
    on their own are taken as time-independent fields.

    Parameters
    ----------
    data : CauchyData
    params : DampingParams
    cparams : ContractionParams
    polar : MixedNormSpec, optional
        Spec for the ``(1+eps1, 2)`` terms.
    """
    g = data.grid
    mu, eps, p = params.mu, params.epsilon, params.p_exponent
    spec1 = polar or MixedNormSpec(1.0 + cparams.eps1, 2.0)

    def st(a, b, forcing=None):
        return SpectralState.from_physical(g, 1.0, a, b, forcing=forcing, mu=mu)

    src = eps ** (p - 1.0) * np.abs(data.u0) ** p if eps > 0 else None
    s0 = st(data.u0, data.u1, src)
    zero = np.zeros_like(data.u1)
    s1 = st(data.u1, zero)
    s01 = st(data.u0 + data.u1, zero)
    fx0 = _Fields(s0)
    grad = sum(_znorm_from(fx0.z_fields("v", d), 1, L2, g).value for d in ("1", "2"))
    terms = {
        "u0_Z12": _znorm_from(fx0.z_fields(), 1, L2, g).value,
        "grad_u0_Z12": grad,
        "u1_Z12": z_norm(s1).value,
        "u1_Z1_eps": z_norm(s1, 1, spec1).value,
        "u0pu1_Z1_eps": z_norm(s01, 1, spec1).value,
        "u0pu1_Z12": z_norm(s01).value,
    }
    terms["total"] = float(sum(terms.values()))
    return terms
