"""Map the heavy-ball stability regions and watch a transient.

Run with ``python3 tutorials/stability_regions.py``. Prints a coarse ASCII
map of the (beta, h*lambda) plane, then the norm of powers of one iteration
matrix that is stable yet grows before it decays.
"""

import numpy as np

from optlab.spectral import classify_region, power_norm

symbol = {"Monotonic": ".", "Oscillation": "o", "Ripples": "~", "Divergent": "#"}
betas = np.linspace(1.0, -0.2, 13)
hls = np.linspace(0.0, 4.2, 43)
print("rows: beta from 1.0 down to -0.2, columns: h*lambda from 0 to 4.2")
for b in betas:
    line = "".join(symbol[classify_region(float(b), float(hl)).region] for hl in hls)
    print(f"{b:5.1f} {line}")

# stable in the limit, but the power norm first climbs above one
b, hl = 0.984, 3.95
rep = classify_region(b, hl)
print(f"\nbeta={b}, h*lambda={hl}: {rep.region}, spectral radius {rep.spectral_radius:.5f}")
for n in (1, 50, 100, 200, 400, 1000):
    print(f"  ||R^{n}|| = {power_norm(b, hl, n):.3e}")
