"""Named audit suites used by ``optlab audit``."""

from __future__ import annotations

from typing import Callable, Dict, List

from ..oracles import NoiseSpec
from ..optimizers import Schedule
from ..problems import SpectralQuadratic
from . import audits as A

__all__ = ["SUITES", "SUITE_NAMES", "run_suite"]

AuditFn = Callable[[int], A.BoundAudit]


def _noise() -> NoiseSpec:
    return NoiseSpec("isotropic-gaussian", 1.0, "scaled")


def _quad(d: int = 10, kappa: float = 4.0, seed: int = 0) -> SpectralQuadratic:
    return SpectralQuadratic.with_condition(d, kappa, 1.0, seed)


def _area(seed: int) -> A.BoundAudit:
    p = _quad()
    return A.area_convergence_check(p, _noise(), 1.0 / (p.L + p.mu), 300, 500, seed)


def _gap(seed: int) -> A.BoundAudit:
    p = _quad()
    return A.sgd_gd_gap_check(p, _noise(), Schedule("constant", {"alpha": 1.0 / (2.0 * p.L)}), 1.0, 500, seed)


def _harmonic(a_scale: float) -> AuditFn:
    def run(seed: int) -> A.BoundAudit:
        p = _quad(5, 4.0, 1)
        a = a_scale / p.mu
        return A.diminishing_schedule_check(p, _noise(), a, a * p.L, 4000, 500, seed)

    return run


def _averaging(seed: int) -> A.BoundAudit:
    return A.averaging_check(_quad(), _noise(), 1000, 200, seed)


SUITES: Dict[str, List[AuditFn]] = {
    "gd": [
        lambda s: A.gd_strong_rate_audit(seed=s),
        lambda s: A.gd_convex_rate_audit(),
        lambda s: A.armijo_audit(seed=s),
    ],
    "sgd": [
        _area,
        _gap,
        _harmonic(1.0),
        _harmonic(0.25),
        _averaging,
        lambda s: A.sample_mean_audit(seed=s),
        lambda s: A.contraction_sequence_audit(),
    ],
    "momentum": [
        lambda s: A.hb_rate_audit(seed=s),
        lambda s: A.nesterov_corollary_audit(seed=s),
        lambda s: A.gamma_exact_audit(),
        lambda s: A.gamma_bound_check(A.gamma_sequence(0.5, 0.01, 2000), 0.5, 0.01),
        lambda s: A.gamma_bound_check(A.gamma_sequence(1.0, 0.0, 10_000), 1.0, 0.0, "gamma-product-bound[shifted]"),
        lambda s: A.equivalence_audit(seed=s),
        lambda s: A.c_gamma_audit(),
    ],
    "spectral": [
        lambda s: A.spectral_oracle_audit(),
        lambda s: A.ripples_radius_audit(),
        lambda s: A.norm_power_audit(seed=s),
        lambda s: A.schur_audit(seed=s),
    ],
    "lower-bounds": [
        *[(lambda m: (lambda s: A.lower_bound_audit(m)))(m) for m in A.LOWER_BOUND_METHODS],
        *[(lambda m: (lambda s: A.strong_lower_bound_audit(m)))(m) for m in A.LOWER_BOUND_METHODS],
    ],
}

SUITE_NAMES = ("all",) + tuple(SUITES)


def run_suite(name: str, seed: int = 0) -> List[A.BoundAudit]:
    """Run every audit of suite ``name`` (``"all"`` runs them all)."""
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise KeyError(f"unknown suite {name!r}; choose from {SUITE_NAMES}")
    out = []
    for n in names:
        out.extend(fn(seed) for fn in SUITES[n])
    return out
