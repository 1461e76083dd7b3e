"""
Picard iteration for the semilinear problem
===========================================

Solve u_tt - Lap u + (mu/t) u_t = eps^(p-1) |u|^p from t = 1 by iterating
the Duhamel map.  Small eps contracts in a couple of steps; large eps blows
through the iteration cap or overflows, which the solver reports as divergence.
"""

from dampwave.experiments import nonlinear_run
from dampwave.fields import GridSpec
from dampwave.propagator import DampingParams

T = 6.0
grid = GridSpec(128, 2 * (1 + T))


def show(it, diff, ratio, x):
    print(f"  iter {it}: diff {diff:.3e}  ratio {ratio:.3e}  X {x:.4f}")


for eps in (1e-3, 0.3, 10.0):
    print(f"eps = {eps}")
    res = nonlinear_run(DampingParams(2.5, 2.5, eps), grid, T, samples=20, on_iteration=show)
    rep = res.report
    print(f"  -> {rep.status} after {rep.iterations} iterations;"
          f" X = {res.x_final:.4f}, budget M*eps = {res.budget:.4f}")
