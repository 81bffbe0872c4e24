"""
Gate shapes and their gradient weights
======================================

Each smooth gate is a function of the importance ratio r whose slope is
exactly 1 at r = 1. The slope is the weight a token's gradient receives,
so how fast it decays away from 1 decides how hard off-policy tokens are
damped. Temperature narrows the peak.
"""

import numpy as np

from softgate import SMOOTH_GATES, gate_derivative

r = np.array([0.25, 0.5, 0.8, 1.0, 1.2, 1.5, 2.0, 3.0])

# weights at tau = 5, one row per gate
print("ratio     " + "".join(f"{x:>9.2f}" for x in r))
for kind in SMOOTH_GATES:
    w = gate_derivative(kind, 5.0, r)
    print(f"{kind.value:<10}" + "".join(f"{v:>9.2e}" for v in w))

# half-maximum width of the weight curve shrinks as tau grows
x = np.linspace(0.0, 3.0, 3001)
for kind in SMOOTH_GATES:
    widths = []
    for tau in (1.0, 5.0, 10.0):
        d = gate_derivative(kind, tau, x)
        above = x[d >= 0.5]
        widths.append(above.max() - above.min())
    print(kind.value, "half-max widths for tau 1, 5, 10:", np.round(widths, 3))

# the same curves as CSV, ready for plotting:
#   softgate curves --output curves.csv
