"""Eigenvalue analysis of the 2x2 momentum iteration blocks.

On each Hessian eigenspace with eigenvalue ``lam``, heavy ball with
parameters ``(h, beta)`` iterates the block

    R = [[0, 1], [-beta, 1 + beta - h*lam]]

acting on consecutive errors. Nesterov's method produces the same block with
``beta`` replaced by ``beta (1 - h*lam)``. All functions take the product
``hlam = h*lam`` directly and use complex arithmetic throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ContractError

__all__ = [
    "EigenPair",
    "StabilityReport",
    "SchurForm",
    "REGIONS",
    "hb_matrix",
    "opnorm_2x2",
    "hb_eigenvalues",
    "classify_region",
    "spectral_radius_empirical",
    "optimal_hb",
    "optimal_beta_given_lr",
    "nesterov_effective",
    "nesterov_stable",
    "schur_2x2",
    "norm_power_bound",
    "power_norm",
    "schur_closed_form",
    "is_complex_regime",
    "region_grid",
    "power_oracle_grid",
]

REGIONS = ("Monotonic", "Oscillation", "Ripples", "Divergent")


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalues of the 2x2 block; ``sigma1`` uses the ``+`` root."""

    sigma1: complex
    sigma2: complex

    @property
    def radius(self) -> float:
        return max(abs(self.sigma1), abs(self.sigma2))


@dataclass(frozen=True)
class StabilityReport:
    """Region label, spectral radius and eigenvalues of one ``(beta, hlam)``."""

    region: str
    spectral_radius: float
    eigenpair: EigenPair


@dataclass(frozen=True)
class SchurForm:
    """``R = Q T Q^*`` with unitary ``Q`` and upper triangular ``T``."""

    Q: np.ndarray
    T: np.ndarray


def hb_matrix(beta: float, hlam: float) -> np.ndarray:
    """The heavy-ball block ``[[0, 1], [-beta, 1 + beta - hlam]]``."""
    return np.array([[0.0, 1.0], [-beta, 1.0 + beta - hlam]])


def opnorm_2x2(A: np.ndarray) -> float:
    """Exact spectral norm of a 2x2 (real or complex) matrix.

    Uses ``s_max^2 = (F + sqrt(F^2 - 4|det A|^2)) / 2`` with ``F`` the squared
    Frobenius norm.
    """
    a, b, c, d = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    F = abs(a) ** 2 + abs(b) ** 2 + abs(c) ** 2 + abs(d) ** 2
    det = abs(a * d - b * c)
    # F^2 - 4 det^2 = (F - 2 det)(F + 2 det) avoids cancellation
    disc = max((F - 2.0 * det) * (F + 2.0 * det), 0.0)
    return math.sqrt(0.5 * (F + math.sqrt(disc)))


def hb_eigenvalues(beta: float, hlam: float) -> EigenPair:
    """Roots of ``s^2 - (1 + beta - hlam) s + beta``."""
    t = 1.0 + beta - hlam
    disc = np.sqrt(complex(t * t - 4.0 * beta))
    return EigenPair(complex((t + disc) / 2.0), complex((t - disc) / 2.0))


def is_complex_regime(beta: float, hlam: float) -> bool:
    """``beta > 0`` and ``(1 - sqrt(beta))^2 < hlam < (1 + sqrt(beta))^2``."""
    if not beta > 0:
        return False
    sb = math.sqrt(beta)
    return (1.0 - sb) ** 2 < hlam < (1.0 + sb) ** 2


def _stable(beta: float, hlam: float) -> bool:
    return 0.0 < hlam < 2.0 * (1.0 + beta) and abs(beta) < 1.0


def classify_region(beta: float, hlam: float) -> StabilityReport:
    """Region of ``(beta, hlam)``.

    Checked in order: ``Divergent`` unless ``0 < hlam < 2(1+beta)`` and
    ``|beta| < 1``; ``Ripples`` in the complex band (radius ``sqrt(beta)``);
    ``Monotonic`` if ``hlam < 1 + beta``; ``Oscillation`` otherwise.
    """
    ep = hb_eigenvalues(beta, hlam)
    if not _stable(beta, hlam):
        return StabilityReport("Divergent", ep.radius, ep)
    if is_complex_regime(beta, hlam):
        return StabilityReport("Ripples", math.sqrt(beta), ep)
    region = "Monotonic" if hlam < 1.0 + beta else "Oscillation"
    return StabilityReport(region, ep.radius, ep)


def _log_opnorm_power(R: np.ndarray, n: int) -> float:
    """``log ||R^n||`` by binary powering with renormalization (``-inf`` if zero)."""
    res, res_log = np.eye(R.shape[0], dtype=R.dtype), 0.0
    base, base_log = R.copy(), 0.0
    k = n
    while True:
        if k & 1:
            res = res @ base
            res_log += base_log
            s = opnorm_2x2(res)
            if s == 0.0:
                return -math.inf
            res = res / s
            res_log += math.log(s)
        k >>= 1
        if not k:
            break
        base = base @ base
        base_log *= 2.0
        s = opnorm_2x2(base)
        if s == 0.0:
            return -math.inf
        base = base / s
        base_log += math.log(s)
    return res_log


def spectral_radius_empirical(beta: float, hlam: float, n: int) -> float:
    """``||R^n||^(1/n)`` with the exact 2x2 operator norm.

    The power is formed in log scale, so divergent parameters do not
    overflow and fast-decaying ones do not underflow.

    Parameters
    ----------
    beta, hlam : float
    n : int
        Power, ``n >= 1``.
    """
    if n < 1:
        raise ContractError("n must be >= 1")
    lg = _log_opnorm_power(hb_matrix(beta, hlam), n)
    return 0.0 if lg == -math.inf else math.exp(lg / n)


def power_norm(beta: float, hlam: float, n: int) -> float:
    """``||R^n||`` (may overflow to ``inf`` for divergent parameters)."""
    lg = _log_opnorm_power(hb_matrix(beta, hlam), n)
    if lg == -math.inf:
        return 0.0
    return math.exp(lg) if lg < 709.0 else math.inf


def optimal_hb(lam1: float, lamd: float) -> Tuple[float, float, float]:
    """Optimal heavy-ball parameters for spectrum ``[lam1, lamd]``.

    Returns
    -------
    h : float
        ``(2 / (sqrt(lam1) + sqrt(lamd)))^2``.
    beta : float
        ``(1 - 2/(1 + sqrt(kappa)))^2``.
    rate : float
        ``sqrt(beta) = 1 - 2/(1 + sqrt(kappa))``.
    """
    if not 0 < lam1 <= lamd:
        raise ContractError("need 0 < lam1 <= lamd")
    sq = 2.0 / (math.sqrt(lam1) + math.sqrt(lamd))
    rate = 1.0 - 2.0 / (1.0 + math.sqrt(lamd / lam1))
    return sq * sq, rate * rate, rate


def optimal_beta_given_lr(h: float, lam1: float, lamd: float) -> float:
    """Smallest momentum reaching the complex regime on both extreme eigenvalues.

    ``max{(1 - sqrt(h lam1))^2, (1 - sqrt(h lamd))^2}``.
    """
    if not (h > 0 and 0 < lam1 <= lamd):
        raise ContractError("need h > 0 and 0 < lam1 <= lamd")
    if h * lamd >= 4.0:
        raise ContractError("need h * lamd < 4")
    return max((1.0 - math.sqrt(h * lam1)) ** 2, (1.0 - math.sqrt(h * lamd)) ** 2)


def nesterov_stable(beta: float, hlam: float) -> bool:
    """Closed-form stability of Nesterov's block (valid for ``1 + 2 beta > 0``)."""
    if 1.0 + 2.0 * beta <= 0:
        raise ContractError("closed form needs 1 + 2 beta > 0")
    cond1 = 0.0 < hlam < 1.0 + 1.0 / (1.0 + 2.0 * beta)
    cond2 = beta == 0 or abs(1.0 - hlam) < 1.0 / abs(beta)
    return cond1 and cond2


def nesterov_effective(beta: float, hlam: float) -> Tuple[float, StabilityReport]:
    """Effective heavy-ball momentum ``beta (1 - hlam)`` of Nesterov's method.

    Nesterov's block ``[[0, 1], [-beta(1-hlam), (1+beta)(1-hlam)]]`` equals
    the heavy-ball block at ``(beta (1 - hlam), hlam)``, so the report is
    :func:`classify_region` at that point.
    """
    bt = beta * (1.0 - hlam)
    rep = classify_region(bt, hlam)
    return bt, rep


def schur_2x2(beta: float, xi: float) -> SchurForm:
    """Schur form of ``R = [[0, 1], [-beta, xi]]``.

    ``Q = [[1, conj(r1)], [r1, -1]] / sqrt(1 + |r1|^2)`` where ``r1`` is the
    ``+`` root of ``r^2 - xi r + beta``; ``T = Q^* R Q``.
    """
    r1 = (xi + np.sqrt(complex(xi * xi - 4.0 * beta))) / 2.0
    nrm = math.sqrt(1.0 + abs(r1) ** 2)
    Q = np.array([[1.0, np.conj(r1)], [r1, -1.0]], dtype=complex) / nrm
    R = np.array([[0.0, 1.0], [-beta, xi]], dtype=complex)
    T = Q.conj().T @ R @ Q
    return SchurForm(Q, T)


def schur_closed_form(beta: float, xi: float) -> np.ndarray:
    """Closed-form ``T`` entries ``[[r1, -(1+beta)(1+conj(r1)^2)/(1+|r1|^2)], [0, (beta conj(r1) + r2)/(1+|r1|^2)]]``."""
    disc = np.sqrt(complex(xi * xi - 4.0 * beta))
    r1, r2 = (xi + disc) / 2.0, (xi - disc) / 2.0
    den = 1.0 + abs(r1) ** 2
    rc = np.conj(r1)
    return np.array([[r1, -(1.0 + beta) * (1.0 + rc * rc) / den], [0.0, (beta * rc + r2) / den]])


def norm_power_bound(beta: float, hlam: float, n: int) -> Tuple[float, float]:
    """Operator-norm bound for ``R^n`` in the complex regime.

    Returns
    -------
    bound : float
        ``rho^(n-1) (rho + n (1 + rho^2))`` with ``rho = sqrt(beta)``.
    actual : float
        ``||R^n||``.
    """
    if not (beta < 1.0 and is_complex_regime(beta, hlam)):
        raise ContractError("(beta, hlam) must be in the complex regime with beta < 1")
    if n < 1:
        raise ContractError("n must be >= 1")
    rho = math.sqrt(beta)
    bound = rho ** (n - 1) * (rho + n * (1.0 + rho * rho))
    return bound, power_norm(beta, hlam, n)


def region_grid(kind: str, bmin: float, bmax: float, hmin: float, hmax: float, steps: int):
    """Classify a ``steps x steps`` grid of ``(beta, hlam)``.

    Parameters
    ----------
    kind : {"hb-region", "nesterov-region"}
        For Nesterov the classification uses the effective momentum, while
        the reported ``beta`` is the nominal one.

    Returns
    -------
    list of (beta, hlam, region, radius)
    """
    if steps < 1:
        raise ContractError("grid must have at least one step")
    if kind not in ("hb-region", "nesterov-region"):
        raise ContractError(f"unknown sweep kind {kind!r}")
    rows = []
    for b in np.linspace(bmin, bmax, steps):
        for hl in np.linspace(hmin, hmax, steps):
            b, hl = float(b), float(hl)
            if kind == "hb-region":
                rep = classify_region(b, hl)
            else:
                rep = classify_region(b * (1.0 - hl), hl)
            rows.append((b, hl, rep.region, rep.spectral_radius))
    return rows


def power_oracle_grid(bmin=-1.2, bmax=1.2, hmin=0.0, hmax=5.0, steps=101, n=200, band=1e-3):
    """Compare formula stability with ``||R^n|| < 1`` on a grid.

    Cells with ``|max|sigma| - 1| < band`` are skipped.

    Returns
    -------
    checked : int
    disagreements : list of (beta, hlam, radius, ||R^n||)
    """
    checked = 0
    bad = []
    for b in np.linspace(bmin, bmax, steps):
        for hl in np.linspace(hmin, hmax, steps):
            b, hl = float(b), float(hl)
            rho = hb_eigenvalues(b, hl).radius
            if abs(rho - 1.0) < band:
                continue
            checked += 1
            pn = power_norm(b, hl, n)
            if (rho < 1.0) != (pn < 1.0):
                bad.append((b, hl, rho, pn))
    return checked, bad
