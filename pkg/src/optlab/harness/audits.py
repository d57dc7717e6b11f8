"""Bound audits: every closed-form rate, bound and floor as a pass/fail check.

Each audit returns a :class:`BoundAudit` holding pairs ``(lhs, rhs)`` that
must satisfy ``lhs <= rhs``. Lower bounds are stored with the floor on the
left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import ContractError
from ..linesearch import armijo_test_bound, run_backtracking_gd
from ..oracles import GradientOracle, NoiseSpec, make_stream, split_streams
from ..optimizers import (
    Schedule, averaged_sgd_run, cg_run, gamma_product, run_dynamic_nesterov, run_gd,
    run_general_schema, run_heavy_ball, run_nesterov, schedule_lr, sgd_run,
)
from ..optimizers.momentum import gamma_recursion
from ..problems import ChainProblem, SpectralQuadratic, sink_minimizer
from .rates import diminishing_contraction, fit_loglog_exponent

__all__ = [
    "BoundAudit",
    "merge_audits",
    "expected_noise_sq",
    "gd_strong_rate_audit",
    "gd_convex_rate_audit",
    "lower_bound_audit",
    "strong_lower_bound_audit",
    "gamma_sequence",
    "gamma_bound_check",
    "c_gamma",
    "c_gamma_audit",
    "nesterov_corollary_audit",
    "equivalence_audit",
    "hb_rate_audit",
    "sgd_gd_gap_check",
    "area_convergence_check",
    "diminishing_schedule_check",
    "averaging_check",
    "sample_mean_audit",
    "armijo_audit",
    "contraction_sequence_audit",
    "gamma_exact_audit",
    "spectral_oracle_audit",
    "ripples_radius_audit",
    "norm_power_audit",
    "schur_audit",
    "LOWER_BOUND_METHODS",
]

LOWER_BOUND_METHODS = ("gd", "heavy-ball", "nesterov-optimal", "cg")


@dataclass
class BoundAudit:
    """Per-iteration comparison ``lhs <= rhs``.

    Parameters
    ----------
    bound_name : str
    lhs, rhs : array_like
        Pairs; entries with non-finite ``rhs`` are not checked.
    rtol, atol : float
        Slack: a pair violates when ``lhs > rhs + atol + rtol |rhs|``.
    note : str
        States the slack and its reason.
    """

    bound_name: str
    lhs: np.ndarray
    rhs: np.ndarray
    rtol: float = 0.0
    atol: float = 0.0
    note: str = ""
    extra: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.lhs = np.atleast_1d(np.asarray(self.lhs, dtype=np.float64))
        self.rhs = np.atleast_1d(np.asarray(self.rhs, dtype=np.float64))
        if self.lhs.shape != self.rhs.shape:
            raise ContractError("lhs and rhs must have the same shape")

    @property
    def pairs(self) -> List[tuple]:
        return list(zip(self.lhs.tolist(), self.rhs.tolist()))

    @property
    def _checked(self) -> np.ndarray:
        return np.isfinite(self.rhs)

    @property
    def n_checked(self) -> int:
        return int(np.sum(self._checked))

    @property
    def _excess(self) -> np.ndarray:
        m = self._checked
        lhs = np.where(np.isnan(self.lhs), np.inf, self.lhs)
        return (lhs - self.rhs)[m], self.rhs[m]

    @property
    def violations(self) -> int:
        ex, r = self._excess
        return int(np.sum(ex > self.atol + self.rtol * np.abs(r)))

    @property
    def max_rel_violation(self) -> float:
        ex, r = self._excess
        if ex.size == 0:
            return 0.0
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            rel = np.where(r != 0, ex / np.abs(r), np.where(ex > 0, np.inf, 0.0))
        return float(max(np.max(rel), 0.0))

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def report(self, seed: Optional[int] = None, config_hash: Optional[str] = None) -> dict:
        """JSON-ready summary."""
        mrv = self.max_rel_violation
        return {
            "bound_name": self.bound_name,
            "n_checked": self.n_checked,
            "violations": self.violations,
            "max_rel_violation": mrv if math.isfinite(mrv) else "inf",
            "seed": seed,
            "config_hash": config_hash,
            "note": self.note,
        }


def merge_audits(name: str, audits: Sequence[BoundAudit], note: str = "") -> BoundAudit:
    """Concatenate audits that share one name (slack is applied per pair)."""
    lhs, rhs = [], []
    for a in audits:
        # fold each audit's slack into its rhs so the merged audit is exact
        ex = a.atol + a.rtol * np.abs(a.rhs)
        lhs.append(a.lhs)
        rhs.append(a.rhs + ex)
    return BoundAudit(name, np.concatenate(lhs), np.concatenate(rhs), note=note)


def expected_noise_sq(problem, noise: NoiseSpec, batch_size: int = 1) -> float:
    """``E||xi||^2`` of one (batched) gradient sample."""
    if noise.is_zero:
        return 0.0
    std = np.broadcast_to(np.asarray(noise.component_std(problem), dtype=np.float64), (problem.d,))
    return float(np.sum(std * std)) / batch_size


# Deterministic gradient descent ------------------------------------------

def gd_strong_rate_audit(kappa: float = 100.0, d: int = 50, iters: int = 1000, seed: int = 0) -> BoundAudit:
    """``||w_n - w*|| <= (1 - 2/(1+kappa))^n ||w_0 - w*||`` with ``alpha = 2/(L+mu)``."""
    p = SpectralQuadratic.with_condition(d, kappa, 1.0, seed)
    w0 = p.minimizer + p.rotation @ np.ones(d)
    tr, _ = run_gd(p, w0, 2.0 / (p.L + p.mu), iters, tol=None)
    q = 1.0 - 2.0 / (1.0 + kappa)
    rhs = q ** tr.n * tr.dist[0]
    return BoundAudit("gd-strongly-convex-rate", tr.dist, rhs, rtol=1e-9,
                      note="rtol 1e-9 absorbs rounding; the extreme eigen-components meet the bound with equality")


def gd_convex_rate_audit(d: int = 51, L: float = 4.0, iters: int = 1000) -> BoundAudit:
    """``f(w_n) - f* <= 2 L ||w_0 - w*||^2 / (4 + n)`` with ``alpha = 1/L`` on the convex chain."""
    p = ChainProblem(d, L)
    tr, _ = run_gd(p, np.zeros(d), 1.0 / L, iters, tol=None)
    rhs = 2.0 * L * tr.dist[0] ** 2 / (4.0 + tr.n)
    return BoundAudit("gd-convex-rate", tr.loss_gap, rhs)


# Complexity floors --------------------------------------------------------

def _span_run(method: str, p, w0, iters: int, kappa_inv: float = 0.0):
    L = p.L
    if method == "gd":
        _, its = run_gd(p, w0, 1.0 / L if kappa_inv == 0 else 2.0 / (L + p.mu), iters, tol=None, keep_iterates=True)
    elif method == "heavy-ball":
        if kappa_inv > 0:
            sk = math.sqrt(1.0 / kappa_inv)
            h, beta = (2.0 / (math.sqrt(p.mu) + math.sqrt(L))) ** 2, (1.0 - 2.0 / (1.0 + sk)) ** 2
        else:
            h, beta = 1.0 / L, 0.5
        _, its = run_heavy_ball(p, w0, h, beta, iters, tol=None, keep_iterates=True)
    elif method == "nesterov-optimal":
        _, its = run_dynamic_nesterov(p, w0, L, kappa_inv, iters, optimal=True, tol=None, keep_iterates=True)
    elif method == "nesterov":
        sk = math.sqrt(kappa_inv)
        _, its = run_nesterov(p, w0, 1.0 / L, (1 - sk) / (1 + sk), iters, tol=None, keep_iterates=True)
    elif method == "cg":
        # replay the CG directions to recover every iterate
        its = [np.array(w0, dtype=np.float64)]
        _, dirs = cg_run(p, w0, max_iters=iters, tol=0.0)
        w = np.array(w0, dtype=np.float64)
        g = p.gradient(w)
        for dvec in dirs:
            alpha = (g @ dvec) / (dvec @ p.hvp(dvec))
            w = w - alpha * dvec
            g = p.gradient(w)
            its.append(w.copy())
        while len(its) < iters + 1:
            its.append(its[-1].copy())
    else:
        raise ContractError(f"unknown span method {method!r}")
    return its


def lower_bound_audit(method: str, n: int = 20, L: float = 4.0) -> BoundAudit:
    """Complexity floors for a span-respecting method on the convex chain.

    For every ``k <= n`` the loss floor ``L ||w_0 - w*||^2 / (16 (k+1)^2)`` is
    checked on the worst-case ``(2k+1)``-chain after ``k`` steps. On the full
    ``d = 2n+1`` chain the audit checks, for every ``k <= n``, the distance
    floor ``||w_k - w*||^2 >= ||w_0 - w*||^2 / 2``, the sink floor
    ``f(w_k) - f* >= L / (8 (k+1))`` and exact zeros beyond coordinate ``k``.
    """
    if method not in LOWER_BOUND_METHODS:
        raise ContractError(f"method must be one of {LOWER_BOUND_METHODS}")
    lhs, rhs = [], []
    for k in range(n + 1):
        pk = ChainProblem(2 * k + 1, L)
        wk = _span_run(method, pk, np.zeros(pk.d), k)[k]
        dist0_sq = float(np.sum(pk.minimizer**2))
        lhs.append(L * dist0_sq / (16.0 * (k + 1) ** 2))
        rhs.append(float(pk.value(wk)) - pk.min_value)
    p = ChainProblem(2 * n + 1, L)
    its = _span_run(method, p, np.zeros(p.d), n)
    ws = p.minimizer
    d0 = float(np.sum(ws**2))
    for k, wk in enumerate(its[: n + 1]):
        lhs.append(0.5 * d0)
        rhs.append(float(np.sum((wk - ws) ** 2)))
        lhs.append(sink_minimizer(k, p.d, L)[1])
        rhs.append(float(p.value(wk)) - p.min_value)
        # zeros beyond coordinate k: |w_k[i]| <= 0 exactly
        lhs.append(float(np.max(np.abs(wk[k:]))) if k < p.d else 0.0)
        rhs.append(0.0)
    return BoundAudit(f"complexity-floor[{method}]", lhs, rhs, rtol=1e-12,
                      note="rtol 1e-12: conjugate gradients attain the sink floor exactly")


def strong_lower_bound_audit(method: str, kappa: float = 10.0, d: int = 101, n: int = 40, L: float = 1.0,
                             slack: float = 0.05) -> BoundAudit:
    """``||w_k - w*|| >= (1 - 2/(1+sqrt(kappa)))^k ||w_0 - w*||`` on the strongly convex chain.

    The finite chain stands in for the infinite one; ``slack`` scales the
    floor by ``1 - slack``.
    """
    if 2 * n + 1 > d:
        raise ContractError("need 2n+1 <= d")
    p = ChainProblem(d, L, L / kappa)
    its = _span_run(method, p, np.zeros(d), n, kappa_inv=1.0 / kappa)
    ws = p.minimizer
    d0 = float(np.linalg.norm(ws))
    q = 1.0 - 2.0 / (1.0 + math.sqrt(kappa))
    k = np.arange(n + 1)
    floor = (1.0 - slack) * q**k * d0
    dist = np.array([np.linalg.norm(w - ws) for w in its[: n + 1]])
    return BoundAudit(f"strong-complexity-floor[{method}]", floor, dist,
                      note=f"floor scaled by {1 - slack:g} for the finite truncation (d={d})")


# Nesterov -----------------------------------------------------------------

def gamma_sequence(kappa0_inv: float, kappa_inv: float, n: int) -> np.ndarray:
    """``gamma_1 .. gamma_n`` from ``gamma_0 = sqrt(kappa0_inv)``."""
    g = math.sqrt(kappa0_inv)
    out = np.empty(n)
    for k in range(n):
        g = gamma_recursion(g, kappa_inv)
        out[k] = g
    return out


def _log_two_sinh(x: float) -> float:
    # log(e^x - e^-x) for x > 0
    return x + math.log1p(-math.exp(-2.0 * x))


def gamma_bound_check(gammas: Sequence[float], kappa0_inv: float, kappa_inv: float,
                      name: str = "gamma-product-bound") -> BoundAudit:
    """Check ``Gamma^n = prod (1 - gamma_k)`` against both closed-form bounds.

    ``Gamma^n <= 4 kinv / ((k0inv - kinv) (e^x - e^-x)^2)`` with
    ``x = (n+1) sqrt(kinv) / 2``, and ``<= 4 / ((k0inv - kinv) (n+1)^2)``.

    Parameters
    ----------
    gammas : sequence of float
        ``gamma_1, gamma_2, ...``.
    kappa0_inv : float
        In ``(kappa_inv, 3 + kappa_inv]``.
    kappa_inv : float
    name : str
        Audit name.

    Notes
    -----
    For the optimal start ``gamma_1 = 1`` pass ``gamma_2, gamma_3, ...`` with
    ``kappa0_inv = 1``: the shifted product then obeys
    ``4 / ((1 - kinv) n^2)``.
    """
    if not (kappa_inv < kappa0_inv <= 3.0 + kappa_inv) or kappa_inv < 0:
        raise ContractError("need kappa_inv < kappa0_inv <= 3 + kappa_inv")
    G = gamma_product(gammas)[1:]
    n = np.arange(1, G.size + 1, dtype=np.float64)
    c = kappa0_inv - kappa_inv
    simple = 4.0 / (c * (n + 1) ** 2)
    if kappa_inv == 0:
        sinh_form = simple.copy()
    else:
        x = (n + 1) * math.sqrt(kappa_inv) / 2.0
        logb = math.log(4.0 * kappa_inv / c) - 2.0 * np.array([_log_two_sinh(v) for v in x])
        sinh_form = np.exp(logb)
    lhs = np.concatenate([G, G])
    rhs = np.concatenate([sinh_form, simple])
    return BoundAudit(name, lhs, rhs, rtol=1e-12)


def c_gamma(gamma1: float, kappa_inv: float, L: float) -> float:
    """``2L (1 - gamma1 (1 + kinv) + gamma1^2) / (gamma1^2 - kinv)``; ``c(1) = 2L``."""
    if not (math.sqrt(kappa_inv) < gamma1 <= 1.0):
        raise ContractError("gamma1 must lie in (sqrt(kappa_inv), 1]")
    if gamma1 == 1.0:
        return 2.0 * L
    return 2.0 * L * (1.0 - gamma1 * (1.0 + kappa_inv) + gamma1 * gamma1) / (gamma1 * gamma1 - kappa_inv)


def c_gamma_audit(kappa_inv: float = 0.01, L: float = 1.0, points: int = 100) -> BoundAudit:
    """``c(1) = 2L`` and strict decrease on a grid of ``(sqrt(kinv), 1]``."""
    lo = math.sqrt(kappa_inv)
    grid = np.linspace(lo, 1.0, points + 1)[1:]
    vals = np.array([c_gamma(g, kappa_inv, L) for g in grid])
    # strict decrease: c(g_{i+1}) < c(g_i)  <=>  c(g_{i+1}) - c(g_i) <= -tiny
    diffs = np.diff(vals)
    lhs = np.concatenate([diffs, [abs(c_gamma(1.0, kappa_inv, L) - 2.0 * L)]])
    rhs = np.concatenate([np.full(diffs.size, -np.finfo(float).tiny), [0.0]])
    return BoundAudit("c-gamma-decreasing", lhs, rhs)


def nesterov_corollary_audit(kappa: float = 100.0, d: int = 50, iters: int = 1000, seed: int = 0) -> BoundAudit:
    """Optimal Nesterov: ``f(w_n) - f* <= 2 L ||w_0 - w*||^2 / n^2`` for ``1 <= n <= iters``."""
    p = SpectralQuadratic.with_condition(d, kappa, 1.0, seed)
    w0 = p.minimizer + p.rotation @ np.ones(d)
    tr, _ = run_dynamic_nesterov(p, w0, p.L, 1.0 / kappa, iters, optimal=True, tol=None)
    n = tr.n[1:]
    rhs = 2.0 * p.L * tr.dist[0] ** 2 / n**2
    return BoundAudit("nesterov-optimal-bound", tr.loss_gap[1:], rhs)


def equivalence_audit(count: int = 10, iters: int = 100, d: int = 10, seed: int = 0) -> BoundAudit:
    """General estimating-sequence scheme vs dynamic Nesterov: max iterate gap per quadratic."""
    rng = make_stream(seed, 0)
    gaps = []
    for i in range(count):
        kappa = float(10 ** rng.uniform(0.5, 3))
        mu = float(10 ** rng.uniform(-1, 1))
        p = SpectralQuadratic.with_condition(d, kappa, mu, seed=seed * 1000 + i, spacing="geometric")
        w0 = rng.standard_normal(d)
        k0 = float(rng.uniform(1.0 / kappa, 1.0))
        _, a = run_general_schema(p, w0, p.L, p.mu, p.L * k0, iters, keep_iterates=True)
        _, b = run_dynamic_nesterov(p, w0, p.L, p.mu / p.L, iters, kappa0_inv=k0, tol=None, keep_iterates=True)
        gaps.append(max(float(np.max(np.abs(x - y))) for x, y in zip(a, b)))
    return BoundAudit("schema-equivalence", gaps, np.full(count, 1e-12))


# Heavy ball ---------------------------------------------------------------

def hb_rate_audit(kappas: Sequence[float] = (4.0, 9.0, 100.0), d: int = 20, seed: int = 0, rel: float = 0.02,
                  window=(100, 300)) -> BoundAudit:
    """Fitted heavy-ball rate within ``rel`` of ``1 - 2/(1+sqrt(kappa))``.

    Uses the optimal ``(h, beta)``. The extreme eigenvalues sit on the edge
    of the complex band, where the error decays like ``n rate^n``; a late
    window keeps the polynomial factor's bias small.
    """
    from ..spectral import optimal_hb
    from .rates import estimate_rate

    lhs, rhs = [], []
    for kappa in kappas:
        p = SpectralQuadratic.with_condition(d, kappa, 1.0, seed)
        h, beta, rate = optimal_hb(p.mu, p.L)
        w0 = p.minimizer + p.rotation @ np.ones(d)
        tr, _ = run_heavy_ball(p, w0, h, beta, window[1], tol=None)
        est = estimate_rate(tr, window)
        lhs.append(abs(est - rate))
        rhs.append(rel * rate)
    return BoundAudit("heavy-ball-optimal-rate", lhs, rhs)


# SGD ------------------------------------------------------------------------

def sgd_gd_gap_check(p, noise: NoiseSpec, schedule: Schedule, T: float, replicas: int = 500, seed: int = 0) -> BoundAudit:
    """Coupled SGD and GD from one start: ``E||w_n - W_n||^2 <= a T s^2 exp(T (a L^2 + 2L))``.

    ``a`` is the largest learning rate used and ``s^2 = E||xi||^2``; steps
    are taken while the elapsed time stays within ``T``.
    """
    if schedule.needs_ensemble:
        raise ContractError("the coupled gap check needs a deterministic schedule")
    lrs = []
    t = 0.0
    while True:
        a = schedule_lr(schedule, len(lrs))
        if t + a > T * (1 + 1e-12):
            break
        lrs.append(a)
        t += a
    if not lrs:
        raise ContractError("T is shorter than the first step")
    abar = max(lrs)
    s2 = expected_noise_sq(p, noise)
    L = p.L
    bound = abar * T * s2 * math.exp(T * (abar * L * L + 2.0 * L))
    oracle = GradientOracle(p, noise)
    streams = split_streams(seed, replicas)
    w = p.minimizer + 1.0
    W = np.tile(w, (replicas, 1))
    gaps = [0.0]
    for a in lrs:
        w = w - a * p.gradient(w)
        W = W - a * oracle.ensemble(W, streams)
        gaps.append(float(np.mean(np.sum((W - w) ** 2, axis=1))))
    # the batched and single-point gradients round differently
    atol = (64.0 * np.finfo(float).eps) ** 2 * float(p.d)
    return BoundAudit("sgd-gd-distance", gaps, np.full(len(gaps), bound), atol=atol,
                      note="atol at rounding scale: batched and single-point gradients differ in the last bits",
                      extra={"abar": abar, "T": t})


def area_convergence_check(p, noise: NoiseSpec, alpha: float, iters: int, replicas: int = 500, seed: int = 0,
                           envelope: float = 1.2, w0=None) -> BoundAudit:
    """Constant-step SGD against the area bound.

    ``E||W_n - w*||^2 <= l + (1 - 2 alpha L mu/(L+mu))^n (||w_0 - w*||^2 - l)``
    with ``l = sigma^2 alpha (L+mu)/2`` and ``E||xi||^2 = sigma^2 L mu``;
    the Monte Carlo mean is compared with ``envelope`` times the right side.
    """
    L, mu = p.L, p.mu
    if not mu > 0:
        raise ContractError("the area bound needs mu > 0")
    if not 0 < alpha <= 2.0 / (L + mu) * (1 + 1e-12):
        raise ContractError("need 0 < alpha <= 2/(L+mu)")
    sigma2 = expected_noise_sq(p, noise) / (L * mu)
    w0 = p.minimizer + 1.0 if w0 is None else np.asarray(w0, dtype=np.float64)
    res = sgd_run(p, GradientOracle(p, noise), Schedule("constant", {"alpha": alpha}), w0, iters, replicas, seed)
    level = sigma2 * alpha * (L + mu) / 2.0
    n = np.arange(iters + 1)
    d0 = float(np.sum((w0 - p.minimizer) ** 2))
    rhs = level + (1.0 - 2.0 * alpha * L * mu / (L + mu)) ** n * (d0 - level)
    return BoundAudit("sgd-area", res.mean_dist2(), envelope * rhs,
                      note=f"Monte Carlo envelope {envelope}x at {replicas} replicas",
                      extra={"level": level})


def diminishing_schedule_check(p, noise: NoiseSpec, a: float, b: float, iters: int, replicas: int = 500,
                               seed: int = 0, window=None, w0=None) -> BoundAudit:
    """Fitted decay exponent of ``E||W_n - w*||^2`` under ``alpha_n = a/(n+b)``.

    With ``a >= 1/(2 lam_1)`` the exponent must be at least 0.8; otherwise it
    must not exceed ``2 lam_1 a + 0.2``.
    """
    lam1, lamd = p.mu, p.L
    if b < a * lamd:
        raise ContractError("need b >= a * lam_d")
    w0 = p.minimizer + 1.0 if w0 is None else np.asarray(w0, dtype=np.float64)
    res = sgd_run(p, GradientOracle(p, noise), Schedule("harmonic", {"a": a, "b": b}), w0, iters, replicas, seed)
    expo = fit_loglog_exponent(res.mean_dist2(), window)
    if 2.0 * lam1 * a >= 1.0:
        return BoundAudit("harmonic-exponent-fast", 0.8, expo, extra={"exponent": expo})
    return BoundAudit("harmonic-exponent-slow", expo, 2.0 * lam1 * a + 0.2, extra={"exponent": expo})


def averaging_check(p, noise: NoiseSpec, N: int = 1000, replicas: int = 200, seed: int = 0,
                    envelope: float = 1.2, w0=None) -> BoundAudit:
    """``E f(mean W) - f* <= ||w_0 - w*|| sqrt(M^2 + s^2) / sqrt(N)`` with ``M = L ||w_0 - w*||``."""
    w0 = p.minimizer + 1.0 if w0 is None else np.asarray(w0, dtype=np.float64)
    dist0 = float(np.linalg.norm(w0 - p.minimizer))
    M = p.L * dist0
    s2 = expected_noise_sq(p, noise)
    res = averaged_sgd_run(p, GradientOracle(p, noise), w0, N, M, math.sqrt(s2), replicas, seed)
    rhs = dist0 * math.sqrt(M * M + s2) / math.sqrt(N)
    return BoundAudit("averaging-rate", res.mean_loss_gap()[N], envelope * rhs,
                      note=f"Monte Carlo envelope {envelope}x at {replicas} replicas")


def sample_mean_audit(d: int = 3, iters: int = 10_000, seed: int = 0, tol: float = 1e-12) -> BoundAudit:
    """Harmonic SGD ``1/(n+1)`` on the mean-estimation oracle equals the running sample mean."""
    from ..oracles import MeanEstimationOracle

    orc = MeanEstimationOracle(np.linspace(-1.0, 2.0, d))
    s1, s2 = make_stream(seed, 0), make_stream(seed, 0)
    sched = Schedule("harmonic", {"a": 1.0, "b": 1.0})
    W = np.zeros(d)
    S = np.zeros(d)
    err = np.empty(iters)
    for n in range(iters):
        W = W - schedule_lr(sched, n) * orc.sample(W, s1).gradient
        S += orc.draw_x(s2)
        err[n] = np.max(np.abs(W - S / (n + 1)))
    return BoundAudit("sgd-sample-mean", err, np.full(iters, tol))


# Line search and sequences ------------------------------------------------

def _armijo_counts(count: int, seed: int, steps: int = 1):
    rng = make_stream(seed, 0)
    out = []
    for i in range(count):
        d = int(rng.integers(2, 20))
        lam = np.sort(rng.uniform(0.1, 50.0, d))
        p = SpectralQuadratic.from_seed(lam, seed=i)
        w0 = 3.0 * rng.standard_normal(d)
        a0 = float(10 ** rng.uniform(-3, 1))
        _, tests = run_backtracking_gd(p, w0, a0, steps, 0.5, tol=0.0)
        bound = armijo_test_bound(p.L, 1.0 / a0, 0.5)
        out.extend((t, bound) for t in tests)
    return out


def armijo_audit(count: int = 100, seed: int = 0, count_evaluations: bool = False) -> BoundAudit:
    """Backtracking effort on random quadratics against ``ceil(log(L/L0)/log(1/delta))``.

    By default the number of step reductions (evaluations minus one) is
    compared, which is the quantity the bound controls. With
    ``count_evaluations`` the raw number of condition evaluations is used.
    """
    pairs = _armijo_counts(count, seed)
    lhs = [t if count_evaluations else t - 1 for t, _ in pairs]
    rhs = [b for _, b in pairs]
    name = "armijo-evaluations" if count_evaluations else "armijo-reductions"
    return BoundAudit(name, lhs, rhs)


def contraction_sequence_audit(q: float = 0.5, a0: float = 1.0, n: int = 100_000) -> BoundAudit:
    """``a_n <= 1/(n q + 1/a_0)`` for all ``n`` and ``|n a_n q - 1| <= 0.01`` at the end."""
    a = diminishing_contraction(a0, q, n)
    k = np.arange(n + 1)
    with np.errstate(divide="ignore"):
        bound = 1.0 / (k * q + 1.0 / a0) if a0 > 0 else np.zeros(n + 1)
    lhs = np.concatenate([a, [abs(n * a[-1] * q - 1.0)]])
    rhs = np.concatenate([bound, [0.01]])
    return BoundAudit("diminishing-contraction", lhs, rhs, rtol=1e-12)


def gamma_exact_audit(kappa: float = 100.0, n: int = 1000) -> BoundAudit:
    """With ``kappa_0 = kappa`` the product is exactly ``(1 - 1/sqrt(kappa))^n``."""
    kinv = 1.0 / kappa
    G = gamma_product(gamma_sequence(kinv, kinv, n))
    exact = (1.0 - math.sqrt(kinv)) ** np.arange(n + 1)
    return BoundAudit("gamma-product-exact", np.abs(G - exact), np.full(n + 1, 1e-12))


# Spectral -------------------------------------------------------------------

def spectral_oracle_audit(steps: int = 101, n: int = 200, band: float = 1e-3) -> BoundAudit:
    """Region formulas against ``||R^n|| < 1`` on the standard grid (one pair per checked cell)."""
    from ..spectral import power_oracle_grid

    checked, bad = power_oracle_grid(steps=steps, n=n, band=band)
    lhs = np.zeros(checked)
    lhs[: len(bad)] = 1.0
    return BoundAudit("spectral-region-oracle", lhs, np.zeros(checked),
                      note=f"cells with | max|sigma| - 1 | < {band:g} excluded",
                      extra={"disagreements": float(len(bad))})


def ripples_radius_audit(points: int = 50) -> BoundAudit:
    """Inside the complex band the radius is ``sqrt(beta)`` for every ``hlam``."""
    from ..spectral import classify_region, hb_eigenvalues

    err = []
    for beta in np.linspace(0.01, 0.99, points):
        sb = math.sqrt(beta)
        for hl in np.linspace((1 - sb) ** 2, (1 + sb) ** 2, points + 2)[1:-1]:
            rep = classify_region(beta, hl)
            ep = hb_eigenvalues(beta, hl)
            err.append(max(abs(rep.spectral_radius - sb), abs(abs(ep.sigma1) - sb), abs(abs(ep.sigma2) - sb),
                           0.0 if rep.region == "Ripples" else 1.0))
    return BoundAudit("ripples-radius", err, np.full(len(err), 1e-12))


def norm_power_audit(count: int = 10, n: int = 100, seed: int = 0) -> BoundAudit:
    """``||R^k|| <= rho^(k-1)(rho + k(1+rho^2)) <= (2k+1) rho^(k-1)`` for ``k <= n`` at complex-regime points."""
    from ..spectral import norm_power_bound

    rng = make_stream(seed, 0)
    pts = [(0.81, 1.0)]
    while len(pts) < count:
        beta = float(rng.uniform(0.05, 0.98))
        sb = math.sqrt(beta)
        pts.append((beta, float(rng.uniform((1 - sb) ** 2, (1 + sb) ** 2))))
    lhs, rhs = [], []
    for beta, hl in pts:
        rho = math.sqrt(beta)
        for k in range(1, n + 1):
            bound, actual = norm_power_bound(beta, hl, k)
            lhs += [actual, bound]
            rhs += [bound, (2 * k + 1) * rho ** (k - 1)]
    return BoundAudit("norm-power-bound", lhs, rhs, rtol=1e-12)


def schur_audit(count: int = 1000, seed: int = 0) -> BoundAudit:
    """Unitarity, triangularity and reconstruction of the 2x2 Schur form; complex-case corner entries."""
    from ..spectral import schur_2x2

    rng = make_stream(seed, 0)
    errs = []
    for _ in range(count):
        beta = float(rng.uniform(-1.0, 1.0))
        xi = float(rng.uniform(-2.5, 2.5))
        sf = schur_2x2(beta, xi)
        Q, T = sf.Q, sf.T
        R = np.array([[0.0, 1.0], [-beta, xi]])
        e = [np.max(np.abs(Q.conj().T @ Q - np.eye(2))), abs(T[1, 0]), np.max(np.abs(Q @ T @ Q.conj().T - R))]
        if xi * xi < 4.0 * beta:
            r1 = (xi + np.sqrt(complex(xi * xi - 4.0 * beta))) / 2.0
            e.append(abs(T[0, 1] + (1.0 + np.conj(r1) ** 2)))
            e.append(abs(T[1, 1] - np.conj(r1)))
        errs.append(max(e))
    return BoundAudit("schur-2x2", errs, np.full(count, 1e-12))
