"""Compare GD, heavy ball and Nesterov on an ill-conditioned quadratic.

Run with ``python3 tutorials/momentum_rates.py``. Prints the fitted
per-step contraction of each method next to its predicted rate.
"""

import math

import numpy as np

from optlab.harness import estimate_rate
from optlab.optimizers import run_dynamic_nesterov, run_gd, run_heavy_ball
from optlab.problems import SpectralQuadratic
from optlab.spectral import optimal_hb

kappa = 100.0
p = SpectralQuadratic.with_condition(20, kappa, mu=1.0, seed=0)
w0 = p.minimizer + p.rotation @ np.ones(p.d)

# gradient descent with the best constant step
gd, _ = run_gd(p, w0, 2.0 / (p.L + p.mu), 300, tol=None)

# heavy ball at its optimal (h, beta)
h, beta, hb_rate = optimal_hb(p.mu, p.L)
hb, _ = run_heavy_ball(p, w0, h, beta, 300, tol=None)

# Nesterov with gamma_0 = sqrt(1/kappa), i.e. constant momentum
nest, _ = run_dynamic_nesterov(p, w0, p.L, 1.0 / kappa, 300, kappa0_inv=1.0 / kappa, tol=None)

rows = [
    ("gd", estimate_rate(gd, (50, 300)), 1 - 2 / (1 + kappa)),
    ("heavy ball", estimate_rate(hb, (100, 300)), hb_rate),
    ("nesterov", estimate_rate(nest, (100, 300)), 1 - 1 / math.sqrt(kappa)),
]
print(f"{'method':<12}{'fitted':>10}{'predicted':>12}")
for name, fit, pred in rows:
    print(f"{name:<12}{fit:>10.4f}{pred:>12.4f}")
