"""
Which gates are admissible?
===========================

A gate qualifies when its derivative is continuous, peaks at exactly 1 at
r = 1, never grows moving away from 1, and r f'(r) fades at large r.
The checker samples all of this on a grid.
"""

from softgate import GateKind, check_admissibility, check_gate
from softgate.cli import CUSTOM_GATES, custom_gate_functions

for kind in (GateKind.SIGMOID, GateKind.ERF, GateKind.ARCTAN, GateKind.SOFTSIGN):
    report = check_gate(kind, 5.0)
    print(f"{kind.value:<9} ok={report.all_ok}  tail r f'(r) at 1000 = {report.tail_value:.2e}")

# a few shapes that fail, each for a different reason
for name in CUSTOM_GATES:
    report = check_admissibility(*custom_gate_functions(name))
    failed = [k for k in ("smooth_ok", "peak_ok", "monotone_ok", "tail_ok") if not getattr(report, k)]
    print(f"{name:<13} fails {', '.join(failed)}")

# the full report is plain JSON
print(check_gate(GateKind.ARCTAN, 1.0).to_json())
