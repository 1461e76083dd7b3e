"""
Decay of free solutions
=======================

Evolve smooth bump data and watch the weighted norms fall off.  The
derivative norm should decay at least like t^-1 for generic data and like
t^(-mu/2) when u1 = -u0 (the "cancel" profile).  A coarse grid keeps this
quick; the acceptance suite repeats it at n = 512 and T = 100.
"""

import numpy as np

from dampwave.experiments import linear_decay, summarize_linear
from dampwave.fields import GridSpec
from dampwave.norms import ContractionParams
from dampwave.propagator import DampingParams
from dampwave.svg import line_chart

params = DampingParams(mu=2.5)
T = 40.0
grid = GridSpec(256, 2 * (1 + T))
cparams = ContractionParams.default_for(2.5)

series = {}
for case in ("generic", "cancel"):
    rows = list(linear_decay(params, grid, T, case, samples=60))
    s = summarize_linear(rows, params, cparams, window=(10, T))
    print(f"{case:8s} ||dv|| exponent {s['fit_dZ12'].exponent:+.3f}"
          f"   energy rise {s['energy_rise']:.1e}   KS growth {s['ks_growth']:.2f}")
    t = np.array([r["t"] for r in rows])
    series[f"{case} dv"] = (t, [r["norm_dZ12"] for r in rows])

# reference slopes -1 and -mu/2
series["t^-1"] = (t, series["generic dv"][1][0] / t)
series["t^-1.25"] = (t, series["cancel dv"][1][0] * t ** -1.25)
line_chart(series, "linear_decay.svg", "free decay", "t", "||dv||_Z")
print("wrote linear_decay.svg")
