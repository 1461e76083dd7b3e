import math

import numpy as np
import pytest

from dampwave.mode_oracle import (
    StepSizeUnderflow,
    integrate_bessel,
    integrate_mode,
    liouville_wronskian,
    mode_solution_operator,
)
from dampwave.propagator import DampingParams
from dampwave.specfun import bessel_j

P = DampingParams(2.5)
J_M075_HALF = 0.5899242250902666984132701
JP_M075_HALF = -1.626542907792546110441896


def test_zero_frequency_velocity_data():
    r = integrate_mode(P, 0.0, 1.0, 0.0, 1.0, 2.0, tol=1e-12)
    assert abs(r.state[0] - 0.43096440627115085) <= 1e-11
    assert r.est_error <= 1e-12
    assert r.steps > 0
    assert r.t_final == 2.0


def test_constant_solution():
    r = integrate_mode(P, 0.0, 1.0, 1.0, 0.0, 37.0, tol=1e-10)
    assert r.state == (1.0, 0.0)


@pytest.mark.parametrize("xi", [0.0, 0.3, 3.0, 25.0])
def test_liouville(xi):
    w = liouville_wronskian(P, xi, 1.5, 20.0, tol=1e-11)
    assert abs(w / (1.5 / 20.0) ** 2.5 - 1) <= 1e-8


def test_forcing_zero_frequency():
    # y'' + (mu/t) y' = 1 from rest: (t^mu y')' = t^mu, so y' = (t - t^-mu)/(mu+1)
    mu = P.mu
    t = 3.0
    yp = (t - t ** -mu) / (mu + 1)
    y = (t * t / 2 - 0.5) / (mu + 1) - (t ** (1 - mu) - 1) / ((1 - mu) * (mu + 1))
    r = integrate_mode(P, 0.0, 1.0, 0.0, 0.0, t, tol=1e-12, forcing=1.0)
    assert abs(r.state[0] - y) <= 1e-10
    assert abs(r.state[1] - yp) <= 1e-10


def test_bessel_transport_closed_form():
    z0 = 0.5
    y0 = math.sqrt(2 / (math.pi * z0)) * math.cos(z0)
    y0p = -math.sqrt(2 / (math.pi * z0)) * (math.cos(z0) / (2 * z0) + math.sin(z0))
    r = integrate_bessel(-0.5, z0, y0, y0p, math.pi, tol=1e-11)
    assert abs(r.state[0] - (-0.45015815807855304)) <= 1e-8


def test_bessel_transport_validates_asymptotic_branch():
    r = integrate_bessel(-0.75, 0.5, J_M075_HALF, JP_M075_HALF, 20.0, tol=1e-12)
    assert abs(r.state[0] - bessel_j(-0.75, 20.0)) <= 1e-7


def test_bessel_zero_solution():
    r = integrate_bessel(1.3, 0.2, 0.0, 0.0, 50.0, tol=1e-9)
    assert r.state == (0.0, 0.0)


def test_time_reversal():
    tol = 1e-10
    fwd = integrate_mode(P, 2.0, 1.0, 0.7, -0.2, 9.0, tol=tol)
    back = integrate_mode(P, 2.0, 9.0, *fwd.state, 1.0, tol=tol)
    assert abs(back.state[0] - 0.7) <= 10 * tol
    assert abs(back.state[1] + 0.2) <= 10 * tol


def test_order_of_accuracy():
    ref = integrate_mode(P, 4.0, 1.0, 1.0, 0.0, 30.0, tol=1e-13).state[0]
    errs = []
    for tol in (1e-6, 5e-7, 2.5e-7, 1.25e-7):
        errs.append(abs(integrate_mode(P, 4.0, 1.0, 1.0, 0.0, 30.0, tol=tol).state[0] - ref))
    errs = np.array(errs)
    assert np.all(errs[1:] < errs[:-1])
    # error tracks tol: each halving roughly halves the error
    ratios = errs[:-1] / errs[1:]
    assert np.all((ratios > 1.3) & (ratios < 4.0))


def test_est_error_within_tol():
    for tol in (1e-6, 1e-9, 1e-12):
        r = integrate_mode(P, 10.0, 1.0, 1.0, 0.0, 50.0, tol=tol)
        assert r.est_error <= tol


def test_solution_operator_shape_and_identity():
    s = mode_solution_operator(P, 2.0, 3.0, [3.0, 5.0, 4.0])
    assert s.shape == (3, 2, 2)
    assert np.allclose(s[0], np.eye(2))
    one = integrate_mode(P, 2.0, 3.0, 0.0, 1.0, 4.0).state
    assert abs(s[2, 0, 1] - one[0]) <= 1e-9


@pytest.mark.parametrize("tol", [1e-14, 1e-5])
def test_tolerance_range(tol):
    with pytest.raises(ValueError):
        integrate_mode(P, 1.0, 1.0, 1.0, 0.0, 2.0, tol=tol)


def test_domain_errors():
    with pytest.raises(ValueError):
        integrate_mode(P, 1.0, 0.5, 1.0, 0.0, 2.0)
    with pytest.raises(ValueError):
        integrate_bessel(0.5, 0.0, 1.0, 0.0, 2.0)
    assert issubclass(StepSizeUnderflow, RuntimeError)
