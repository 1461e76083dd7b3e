"""
A tour of the per-mode propagator
=================================

Each Fourier mode of a linear solution obeys a damped oscillator equation
with friction mu/t.  Its solution operator S(t, tau) has a closed form in
Bessel functions; here we poke at it and compare with brute-force ODE steps.
"""

import numpy as np

from dampwave.mode_oracle import mode_solution_operator
from dampwave.propagator import DampingParams, propagator_matrix, psi, psi_hankel

params = DampingParams(mu=2.5)
print("mu =", params.mu, " rho =", params.rho)

# At coincident times the operator is the identity.
print(propagator_matrix(params, 3.0, 3.0, 1.7))

# Advance a single frequency from tau = 1 to a few later times and compare
# with the Dormand-Prince integrator, which knows nothing about Bessel functions.
times = np.array([2.0, 10.0, 50.0])
exact = propagator_matrix(params, times, 1.0, 4.0)
brute = mode_solution_operator(params, 4.0, 1.0, times, tol=1e-11)
print("largest gap vs oracle:", np.abs(exact - brute).max())

# The velocity multiplier decays roughly like t^(-mu/2) at fixed frequency.
t = np.geomspace(10, 100, 200)
env = np.hypot(psi(params, 0, 1, t, 1.0, 3.0), psi(params, 1, 1, t, 1.0, 3.0) / 3.0)
print("fitted envelope slope:", np.polyfit(np.log(t), np.log(env), 1)[0], " vs", -params.mu / 2)

# The complex Hankel form gives the same numbers with a vanishing imaginary part.
h = psi_hankel(params, 0, 1, 20.0, 2.0, 0.5)
print("Hankel:", h, " Bessel J:", psi(params, 0, 1, 20.0, 2.0, 0.5))

# Liouville: det S(t, tau) = (tau/t)^mu for every frequency.
for x in (0.0, 0.3, 12.0):
    print(x, np.linalg.det(propagator_matrix(params, 8.0, 2.0, x)), (2.0 / 8.0) ** params.mu)
