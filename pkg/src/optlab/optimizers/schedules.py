"""Learning-rate schedules for SGD.

Schedules that depend on the expected squared distance to the minimizer
(``optimal-*`` and ``piecewise-halving``) take it as ``ensemble_dist2``; the
SGD runner supplies the across-replica mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..problems import ContractError

SCHEDULE_KINDS = {
    "constant": ("alpha",),
    "harmonic": ("a", "b"),
    "piecewise-halving": ("L", "mu", "sigma2"),
    "optimal-quadratic": ("lam1", "lamd", "sigma2"),
    "optimal-strongly-convex": ("L", "mu", "sigma2"),
    "averaging-constant": ("dist0", "M", "sigma", "N"),
}
ENSEMBLE_KINDS = ("piecewise-halving", "optimal-quadratic", "optimal-strongly-convex")
R_CAP = 60


@dataclass(frozen=True)
class Schedule:
    """Learning-rate schedule.

    Parameters
    ----------
    kind : str
        One of ``constant``, ``harmonic``, ``piecewise-halving``,
        ``optimal-quadratic``, ``optimal-strongly-convex``,
        ``averaging-constant``.
    params : dict
        Kind-specific parameters:

        ========================  ==========================================
        constant                  alpha
        harmonic                  a, b  (``a / (n + b)``)
        piecewise-halving         L, mu, sigma2
        optimal-quadratic         lam1, lamd, sigma2 (distance in V,inf norm)
        optimal-strongly-convex   L, mu, sigma2
        averaging-constant        dist0, M, sigma, N
        ========================  ==========================================

        ``sigma2`` is the scale-free noise level (``E||xi||^2 <= sigma2 L mu``).
    """

    kind: str
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ContractError(f"unknown schedule kind {self.kind!r}")
        need = SCHEDULE_KINDS[self.kind]
        missing = [k for k in need if k not in self.params]
        extra = [k for k in self.params if k not in need]
        if missing or extra:
            raise ContractError(f"schedule {self.kind!r} needs {need}; missing {missing}, unexpected {extra}")
        p = self.params
        if self.kind == "constant" and not p["alpha"] > 0:
            raise ContractError("alpha must be positive")
        if self.kind == "harmonic" and not (p["a"] > 0 and p["b"] > 0):
            raise ContractError("harmonic schedule needs a > 0 and b > 0")
        if self.kind in ("piecewise-halving", "optimal-strongly-convex"):
            if not (p["L"] >= p["mu"] > 0) or p["sigma2"] < 0:
                raise ContractError("need L >= mu > 0 and sigma2 >= 0")
        if self.kind == "optimal-quadratic":
            if not (p["lamd"] >= p["lam1"] > 0) or p["sigma2"] < 0:
                raise ContractError("need lamd >= lam1 > 0 and sigma2 >= 0")
        if self.kind == "averaging-constant":
            if not (p["dist0"] > 0 and p["N"] >= 1) or p["M"] < 0 or p["sigma"] < 0 or p["M"] + p["sigma"] == 0:
                raise ContractError("averaging schedule needs dist0 > 0, N >= 1 and M^2 + sigma^2 > 0")

    @property
    def needs_ensemble(self) -> bool:
        return self.kind in ENSEMBLE_KINDS


def piecewise_r(dist2: float, sigma2: float, cap: int = R_CAP) -> int:
    """``max{k >= 0 : dist2 <= 2^(1-k) sigma2}``, 0 if no ``k`` qualifies, capped."""
    if sigma2 <= 0 or dist2 > 2.0 * sigma2:
        return 0
    if dist2 <= 0:
        return cap
    # 2^(1-k) >= dist2/sigma2  <=>  k <= 1 - log2(dist2/sigma2)
    k = int(np.floor(1.0 - np.log2(dist2 / sigma2)))
    # guard the floor against rounding at exact powers of two
    while k + 1 <= cap and dist2 <= 2.0 ** (-k) * sigma2:
        k += 1
    while k > 0 and dist2 > 2.0 ** (1 - k) * sigma2:
        k -= 1
    return min(max(k, 0), cap)


def schedule_lr(s: Schedule, n: int, ensemble_dist2: Optional[float] = None, r_floor: int = 0) -> float:
    """Learning rate at step ``n``.

    Parameters
    ----------
    s : Schedule
    n : int
        Step index, starting at 0.
    ensemble_dist2 : float, optional
        Estimate of ``E||W_n - w*||^2`` (V,inf norm for ``optimal-quadratic``).
        Required exactly when ``s.needs_ensemble``.
    r_floor : int
        Lower bound for the halving exponent (hysteresis), piecewise only.

    Returns
    -------
    float
    """
    if s.needs_ensemble and ensemble_dist2 is None:
        raise ContractError(f"schedule {s.kind!r} needs the ensemble distance estimate")
    p = s.params
    k = s.kind
    if k == "constant":
        return float(p["alpha"])
    if k == "harmonic":
        return float(p["a"] / (n + p["b"]))
    if k == "averaging-constant":
        return float(p["dist0"] / (np.sqrt(p["M"] ** 2 + p["sigma"] ** 2) * np.sqrt(p["N"])))
    d2 = float(ensemble_dist2)
    if k == "piecewise-halving":
        r = max(piecewise_r(d2, p["sigma2"]), int(r_floor))
        return float(2.0 ** (-r) / (p["L"] + p["mu"]))
    if k == "optimal-strongly-convex":
        L, mu, s2 = p["L"], p["mu"], p["sigma2"]
        cap = 2.0 / (L + mu)
        if s2 == 0:
            return cap
        return float(min(d2 / (s2 * (L + mu)), cap))
    if k == "optimal-quadratic":
        l1, ld, s2 = p["lam1"], p["lamd"], p["sigma2"]
        kappa = ld / l1
        if s2 == 0:
            return 2.0 / (l1 + ld)
        if d2 <= 0:
            ratio = np.inf
        else:
            ratio = s2 / d2
        if ratio <= (kappa - 1.0) / (2.0 * kappa) and kappa > 1:
            return 2.0 / (l1 + ld)
        return float(1.0 / (ld * (1.0 / kappa + ratio)))
    raise ContractError(k)  # pragma: no cover


def optimal_quadratic_phase(s: Schedule, ensemble_dist2: float) -> str:
    """``"transient"`` or ``"asymptotic"`` branch of the quadratic schedule."""
    p = s.params
    kappa = p["lamd"] / p["lam1"]
    ratio = np.inf if ensemble_dist2 <= 0 else p["sigma2"] / ensemble_dist2
    if kappa > 1 and ratio <= (kappa - 1.0) / (2.0 * kappa):
        return "transient"
    return "asymptotic"


class LearningRates:
    """Stateful wrapper applying the piecewise hysteresis.

    The halving exponent ``r_n`` never decreases; everything else is passed
    straight to :func:`schedule_lr`.
    """

    def __init__(self, schedule: Schedule):
        self.schedule = schedule
        self.r = 0

    def __call__(self, n: int, ensemble_dist2: Optional[float] = None) -> float:
        s = self.schedule
        if s.kind == "piecewise-halving":
            self.r = max(self.r, piecewise_r(float(ensemble_dist2), s.params["sigma2"]))
            return schedule_lr(s, n, ensemble_dist2, r_floor=self.r)
        return schedule_lr(s, n, ensemble_dist2)
