"""Constant-step SGD settles at a noise floor; a harmonic schedule does not.

Run with ``python3 tutorials/sgd_noise_floor.py``. Uses an ensemble of
independent replicas to estimate the mean squared distance to the minimizer.
"""

import numpy as np

from optlab.oracles import GradientOracle, NoiseSpec
from optlab.optimizers import Schedule, sgd_run
from optlab.problems import SpectralQuadratic

p = SpectralQuadratic.with_condition(10, 4.0, mu=1.0, seed=0)
noise = NoiseSpec("isotropic-gaussian", 1.0, "scaled")
oracle = GradientOracle(p, noise)
w0 = p.minimizer + 1.0
alpha = 1.0 / (p.L + p.mu)

const = sgd_run(p, oracle, Schedule("constant", {"alpha": alpha}), w0, 2000, replicas=500, seed=0)
a = 1.0 / p.mu
harm = sgd_run(p, oracle, Schedule("harmonic", {"a": a, "b": a * p.L}), w0, 2000, replicas=500, seed=0)

level = noise.sigma_sq(p) * alpha * (p.L + p.mu) / 2
print(f"upper bound on the constant-step floor: {level:.4f}")
print(f"{'n':>6}{'constant':>12}{'harmonic':>12}")
for n in (0, 10, 100, 500, 1000, 2000):
    print(f"{n:>6}{const.mean_dist2()[n]:>12.4f}{harm.mean_dist2()[n]:>12.4f}")
