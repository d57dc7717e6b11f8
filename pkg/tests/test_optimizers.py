"""Iteration rules: GD, momentum, Nesterov family, SGD schedules, CG, secant, LM, adaptive."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optlab.errors import ConfigError, ContractError, ConvergenceError
from optlab.harness import estimate_rate
from optlab.oracles import GradientOracle, MeanEstimationOracle, NoiseSpec, make_stream
from optlab.optimizers import (
    ADAPTIVE_VARIANTS,
    CurvatureError,
    LBFGSMemory,
    LearningRates,
    OptimizerState,
    Schedule,
    adaptive_step,
    averaged_sgd_run,
    bfgs_inverse_update,
    cg_run,
    conjugacy_residuals,
    dfp_inverse_update,
    dynamic_init,
    friction_to_flat,
    gamma_product,
    gamma_recursion,
    gd_step,
    general_schema_init,
    heavy_ball_step,
    heavy_ball_two_line,
    lbfgs_apply,
    lm_step,
    nesterov_dynamic_step,
    nesterov_gap_bound,
    nesterov_general_schema_step,
    nesterov_step,
    optimal_quadratic_phase,
    piecewise_r,
    quasi_newton_run,
    run_adaptive,
    run_dynamic_nesterov,
    run_gd,
    run_general_schema,
    run_heavy_ball,
    run_nesterov,
    schedule_lr,
    secant_update,
    sgd_run,
)
from optlab.problems import ChainProblem, SpectralQuadratic
from optlab.spectral import optimal_hb

seeds = st.integers(0, 2**31 - 1)


def _quad(d=20, kappa=100.0, seed=0):
    return SpectralQuadratic.with_condition(d, kappa, 1.0, seed)


def _w0(p):
    return p.minimizer + p.rotation @ np.ones(p.d)


# gd_step -----------------------------------------------------------------

def test_gd_single_eigenvalue_one_step():
    p = SpectralQuadratic.from_seed([3.0, 3.0, 3.0], 1, minimizer=np.array([1.0, 2.0, 3.0]))
    w = gd_step(np.zeros(3), p.gradient(np.zeros(3)), 1 / 3.0)
    np.testing.assert_allclose(w, p.minimizer, atol=1e-14)


def test_gd_extreme_contraction_factors():
    lam = np.array([1.0, 4.0, 10.0])
    p = SpectralQuadratic(lam)
    alpha = 2 / (lam[0] + lam[-1])
    w = gd_step(np.ones(3), p.gradient(np.ones(3)), alpha)
    kappa = lam[-1] / lam[0]
    assert abs(w[0]) == pytest.approx(1 - 2 / (1 + kappa), rel=1e-14)
    assert abs(w[-1]) == pytest.approx(1 - 2 / (1 + kappa), rel=1e-14)


def test_gd_zero_gradient_and_contract():
    w = np.array([1.0, -2.0])
    np.testing.assert_array_equal(gd_step(w, np.zeros(2), 0.3), w)
    with pytest.raises(ContractError):
        gd_step(w, np.zeros(2), 0.0)
    with pytest.raises(FloatingPointError):
        gd_step(w, np.array([np.nan, 0.0]), 0.1)


def test_gd_eigencomponents_decay_exactly():
    lam = np.array([0.5, 1.0, 3.0, 7.5])
    p = SpectralQuadratic(lam)
    alpha = 0.2
    w0 = np.array([1.0, -2.0, 0.5, 3.0])
    _, its = run_gd(p, w0, alpha, 30, tol=None, keep_iterates=True)
    for n, w in enumerate(its):
        np.testing.assert_allclose(w, (1 - alpha * lam) ** n * w0, rtol=1e-12, atol=1e-300)


def test_gd_strong_convexity_rate_every_step():
    p = _quad(30, 50.0)
    w0 = _w0(p)
    tr, _ = run_gd(p, w0, 2 / (p.L + p.mu), 500, tol=None)
    q = 1 - 2 / (1 + p.kappa)
    bound = q ** np.arange(len(tr)) * tr.dist[0]
    assert np.all(tr.dist <= bound * (1 + 1e-9))


def test_gd_convex_rate_every_step():
    p = ChainProblem(31, 4.0)
    w0 = np.zeros(31)
    tr, _ = run_gd(p, w0, 1 / p.L, 500, tol=None)
    dist0 = np.linalg.norm(w0 - p.minimizer)
    bound = 2 * p.L * dist0**2 / (4 + tr.n)
    assert np.all(tr.loss_gap <= bound)


def test_trace_length_includes_start():
    p = _quad(5, 4.0)
    tr, _ = run_gd(p, _w0(p), 0.1, 17, tol=None)
    assert len(tr) == 18
    assert list(tr.n) == list(range(18))


def test_gd_stops_on_tolerance():
    p = SpectralQuadratic([1.0, 1.0])
    tr, _ = run_gd(p, np.ones(2), 1.0, 100)
    assert len(tr) == 2


# heavy ball --------------------------------------------------------------

def test_heavy_ball_zero_momentum_is_gd():
    p = _quad(6, 10.0)
    w = _w0(p)
    s = OptimizerState(w=w, w_prev=w + 1.0)
    g = p.gradient(w)
    np.testing.assert_array_equal(heavy_ball_step(s, g, 0.05, 0.0).w, gd_step(w, g, 0.05))


def test_heavy_ball_fixed_point():
    w = np.array([1.0, 2.0])
    s = heavy_ball_step(OptimizerState(w=w, w_prev=w.copy()), np.zeros(2), 0.1, 0.9)
    np.testing.assert_array_equal(s.w, w)
    assert s.n == 1


def test_heavy_ball_optimal_rate_kappa9():
    p = _quad(20, 9.0)
    h, beta, rate = optimal_hb(p.mu, p.L)
    assert np.sqrt(beta) == pytest.approx(0.5)
    tr, _ = run_heavy_ball(p, _w0(p), h, beta, 300, tol=None)
    assert estimate_rate(tr, (100, 300)) == pytest.approx(rate, rel=0.02)


def test_heavy_ball_flat_and_two_line_agree():
    p = _quad(8, 20.0, 3)
    alpha, f = 0.2, 1.5
    h, beta = friction_to_flat(alpha, f)
    w = _w0(p)
    s = OptimizerState(w=w)
    pm = np.zeros(p.d)
    for _ in range(50):
        w, pm = heavy_ball_two_line(w, pm, p.gradient(w), alpha, f)
        s = heavy_ball_step(s, p.gradient(s.w), h, beta)
        np.testing.assert_allclose(s.w, w, rtol=1e-12, atol=1e-12)


# nesterov ----------------------------------------------------------------

def test_nesterov_zero_momentum_is_gd():
    p = _quad(6, 10.0)
    w = _w0(p)
    s = nesterov_step(OptimizerState(w=w, w_prev=w - 1.0), p.gradient, 0.05, 0.0)
    np.testing.assert_array_equal(s.w, gd_step(w, p.gradient(w), 0.05))


def test_nesterov_fixed_point():
    p = _quad(4, 10.0)
    s = nesterov_step(OptimizerState(w=p.minimizer), p.gradient, 0.1, 0.7)
    np.testing.assert_allclose(s.w, p.minimizer, atol=1e-15)


def test_nesterov_constant_momentum_rate():
    p = _quad(20, 100.0)
    sk = np.sqrt(1 / p.kappa)
    tr, _ = run_nesterov(p, _w0(p), 1 / p.L, (1 - sk) / (1 + sk), 500, tol=None)
    assert estimate_rate(tr, (100, 300)) == pytest.approx(1 - sk, rel=0.02)


def test_gamma_recursion_examples():
    assert gamma_recursion(0.3, 0.09) == pytest.approx(0.3, abs=1e-15)
    assert gamma_recursion(1.0, 0.0) == pytest.approx((np.sqrt(5) - 1) / 2, abs=1e-15)
    assert gamma_recursion(1.0, 0.0) == pytest.approx(0.6180339887, abs=1e-10)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
@settings(max_examples=100, deadline=None)
def test_gamma_recursion_monotone_toward_fixed_point(kinv, frac):
    root = np.sqrt(kinv)
    g = root + frac * (1 - root)
    if g <= 0:
        return
    seq = [g]
    for _ in range(30):
        seq.append(gamma_recursion(seq[-1], kinv))
    seq = np.array(seq)
    assert np.all((seq > 0) & (seq <= 1))
    assert np.all(np.diff(seq) <= 1e-15)
    assert np.all(seq >= root - 1e-12)


def test_general_schema_constant_gamma():
    p = _quad(10, 25.0)
    tr, _ = run_general_schema(p, _w0(p), p.L, p.mu, p.mu, 30)
    np.testing.assert_allclose(tr.gamma[1:], 1 / np.sqrt(p.kappa), rtol=1e-12)


def test_general_schema_descent_lemma():
    p = _quad(10, 25.0, 2)
    s = general_schema_init(_w0(p), p.L)
    for _ in range(40):
        s = nesterov_general_schema_step(s, p, p.L, p.mu)
        gy = p.gradient(s.y)
        assert p.value(s.w) <= p.value(s.y) - gy @ gy / (2 * p.L) + 1e-13


def test_general_schema_equals_dynamic():
    rng = np.random.default_rng(0)
    for seed in range(3):
        lam = np.sort(rng.uniform(0.1, 10, 8))
        p = SpectralQuadratic.from_seed(lam, seed, minimizer=rng.standard_normal(8))
        w0 = rng.standard_normal(8)
        k0 = 0.5
        _, a = run_general_schema(p, w0, p.L, p.mu, k0 * p.L, 100, keep_iterates=True)
        _, b = run_dynamic_nesterov(p, w0, p.L, p.mu / p.L, 100, kappa0_inv=k0, tol=None, keep_iterates=True)
        np.testing.assert_allclose(np.array(a), np.array(b), atol=1e-12)


def test_dynamic_constant_momentum_when_kappa0_is_kappa():
    p = _quad(10, 49.0)
    kinv = 1 / p.kappa
    tr, _ = run_dynamic_nesterov(p, _w0(p), p.L, kinv, 50, kappa0_inv=kinv, tol=None)
    sk = np.sqrt(kinv)
    np.testing.assert_allclose(tr.beta[1:], (1 - sk) / (1 + sk), rtol=1e-12)


def test_dynamic_gamma_one_starts_with_gd():
    p = _quad(5, 10.0)
    s = dynamic_init(_w0(p), gamma0=1.0)
    s1 = nesterov_dynamic_step(s, p.gradient, p.L, 0.1)
    assert s1.beta == 0.0
    np.testing.assert_allclose(s1.w, gd_step(s.w, p.gradient(s.w), 1 / p.L), rtol=1e-15, atol=1e-15)


def test_dynamic_beta_matches_simplified_form():
    p = _quad(20, 100.0)
    tr, _ = run_dynamic_nesterov(p, _w0(p), p.L, 0.0, 60, optimal=True, tol=None)
    # row n+1 holds the coefficient beta_n used to leave w_n
    for n in range(1, 51):
        assert abs(tr.beta[n + 1] - (n - 1) / (n + 2)) <= 0.05


def test_nesterov_loss_gap_bound_from_gammas():
    p = _quad(20, 100.0, 4)
    w0 = _w0(p)
    lam0 = p.L
    tr, _ = run_general_schema(p, w0, p.L, p.mu, lam0, 300)
    bound = nesterov_gap_bound(tr.gamma[1:], p.L, lam0, tr.dist[0] ** 2)
    assert np.all(tr.loss_gap <= bound * (1 + 1e-12))


def test_gamma_product():
    np.testing.assert_allclose(gamma_product([0.5, 0.5, 0.2]), [1.0, 0.5, 0.25, 0.2])


# schedules ---------------------------------------------------------------

def test_harmonic_value():
    assert schedule_lr(Schedule("harmonic", {"a": 2.0, "b": 3.0}), 7) == pytest.approx(0.2, abs=1e-15)


def test_optimal_quadratic_kappa_one_is_asymptotic():
    s = Schedule("optimal-quadratic", {"lam1": 2.0, "lamd": 2.0, "sigma2": 0.5})
    for d2 in (1e6, 1.0, 1e-6):
        assert optimal_quadratic_phase(s, d2) == "asymptotic"
        assert schedule_lr(s, 0, d2) == pytest.approx(1 / (2.0 * (1.0 + 0.5 / d2)))


def test_optimal_quadratic_branches():
    s = Schedule("optimal-quadratic", {"lam1": 1.0, "lamd": 9.0, "sigma2": 1.0})
    # switch at sigma2/dist2 = (kappa-1)/(2 kappa) = 4/9
    assert schedule_lr(s, 0, 10.0) == pytest.approx(0.2)
    assert optimal_quadratic_phase(s, 10.0) == "transient"
    assert schedule_lr(s, 0, 1.0) == pytest.approx(1 / (9 * (1 / 9 + 1.0)))
    # continuous at the switch
    d2 = 9 / 4
    assert schedule_lr(s, 0, d2) == pytest.approx(1 / (9 * (1 / 9 + 4 / 9)))


def test_optimal_strongly_convex():
    s = Schedule("optimal-strongly-convex", {"L": 4.0, "mu": 1.0, "sigma2": 2.0})
    assert schedule_lr(s, 0, 100.0) == pytest.approx(2 / 5)
    assert schedule_lr(s, 0, 1.0) == pytest.approx(1 / (2.0 * 5.0))


def _r_by_enumeration(dist2, sigma2):
    ks = [k for k in range(0, 200) if dist2 <= 2.0 ** (1 - k) * sigma2]
    return max(ks) if ks else 0


def test_piecewise_half_sigma():
    s = Schedule("piecewise-halving", {"L": 3.0, "mu": 1.0, "sigma2": 2.0})
    assert piecewise_r(1.0, 2.0) == 2 == _r_by_enumeration(1.0, 2.0)
    assert schedule_lr(s, 0, 1.0) == pytest.approx(0.25 / 4.0)


@given(st.floats(1e-8, 1e3), st.floats(1e-3, 1e3))
@settings(max_examples=200, deadline=None)
def test_piecewise_r_matches_enumeration(d2, s2):
    assert piecewise_r(d2, s2) == min(_r_by_enumeration(d2, s2), 60)


def test_piecewise_hysteresis():
    rates = LearningRates(Schedule("piecewise-halving", {"L": 1.0, "mu": 1.0, "sigma2": 1.0}))
    a1 = rates(0, 0.1)
    a2 = rates(1, 10.0)
    assert a2 == a1
    assert rates.r == piecewise_r(0.1, 1.0)


def test_schedule_needs_ensemble_estimate():
    s = Schedule("piecewise-halving", {"L": 1.0, "mu": 1.0, "sigma2": 1.0})
    with pytest.raises(ContractError):
        schedule_lr(s, 0)
    with pytest.raises(ContractError):
        Schedule("harmonic", {"a": 1.0})


@pytest.mark.parametrize("kind,params", [
    ("constant", {"alpha": 0.1}),
    ("harmonic", {"a": 1.0, "b": 2.0}),
    ("piecewise-halving", {"L": 2.0, "mu": 1.0, "sigma2": 0.5}),
    ("optimal-quadratic", {"lam1": 1.0, "lamd": 4.0, "sigma2": 0.5}),
    ("optimal-strongly-convex", {"L": 2.0, "mu": 1.0, "sigma2": 0.5}),
    ("averaging-constant", {"dist0": 1.0, "M": 1.0, "sigma": 1.0, "N": 100}),
])
def test_schedule_rates_positive(kind, params):
    s = Schedule(kind, params)
    for n in range(0, 100, 7):
        for d2 in (1e-8, 1.0, 1e4):
            assert schedule_lr(s, n, d2 if s.needs_ensemble else None) > 0


# sgd ---------------------------------------------------------------------

def test_sgd_sample_mean():
    o = MeanEstimationOracle(np.array([1.0, 2.0, 3.0]), 2.0)
    iters = 500
    res = sgd_run(o.problem, o, Schedule("harmonic", {"a": 1.0, "b": 1.0}), np.full(3, -7.0), iters, 3, seed=4)
    for r in range(3):
        X = o.draw_x(make_stream(4, r), size=iters)
        np.testing.assert_allclose(res.final[r], X.mean(axis=0), atol=1e-12)


def test_sgd_zero_noise_equals_gd():
    p = _quad(8, 10.0)
    alpha = 1.5 / p.L
    o = GradientOracle(p, NoiseSpec("isotropic-gaussian", 0.0))
    res = sgd_run(p, o, Schedule("constant", {"alpha": alpha}), _w0(p), 100, 2, seed=0)
    tr, _ = run_gd(p, _w0(p), alpha, 100, tol=None)
    np.testing.assert_allclose(np.sqrt(res.dist2[:, 0]), tr.dist, rtol=1e-12)
    np.testing.assert_allclose(res.loss_gap[:, 1], tr.loss_gap, rtol=1e-10, atol=1e-300)


def test_sgd_constant_step_area_level():
    p = _quad(10, 4.0)
    noise = NoiseSpec("isotropic-gaussian", 1.0, "scaled")
    o = GradientOracle(p, noise)
    alpha = 1 / (p.L + p.mu)
    res = sgd_run(p, o, Schedule("constant", {"alpha": alpha}), _w0(p), 400, 300, seed=1)
    level = noise.sigma_sq(p) * alpha * (p.L + p.mu) / 2
    assert np.all(res.mean_dist2()[200:] <= 1.3 * level)


def test_sgd_ensemble_schedule_needs_replicas():
    p = _quad(4, 4.0)
    o = GradientOracle(p, NoiseSpec("isotropic-gaussian", 1.0))
    s = Schedule("piecewise-halving", {"L": p.L, "mu": p.mu, "sigma2": 1.0})
    with pytest.raises(ConfigError):
        sgd_run(p, o, s, _w0(p), 10, 1)


def test_sgd_deterministic_and_thread_independent():
    p = _quad(6, 4.0)
    o = GradientOracle(p, NoiseSpec("isotropic-gaussian", 1.0, "scaled"))
    s = Schedule("optimal-strongly-convex", {"L": p.L, "mu": p.mu, "sigma2": 1.0})
    a = sgd_run(p, o, s, _w0(p), 50, 8, seed=3, threads=1)
    b = sgd_run(p, o, s, _w0(p), 50, 8, seed=3, threads=1)
    c = sgd_run(p, o, s, _w0(p), 50, 8, seed=3, threads=3)
    assert a.dist2.tobytes() == b.dist2.tobytes()
    np.testing.assert_array_equal(a.final, c.final)


def test_averaged_sgd_n1_is_w0():
    p = _quad(4, 4.0)
    o = GradientOracle(p, NoiseSpec("isotropic-gaussian", 1.0))
    res = averaged_sgd_run(p, o, _w0(p), 1, 1.0, 1.0, 2)
    np.testing.assert_allclose(res.final, np.tile(_w0(p), (2, 1)))
    with pytest.raises(ContractError):
        averaged_sgd_run(p, o, _w0(p), 0, 1.0, 1.0)


def test_averaged_noise_free_convexity():
    p = _quad(6, 10.0)
    o = GradientOracle(p, NoiseSpec())
    w0 = _w0(p)
    N = 50
    res = averaged_sgd_run(p, o, w0, N, p.L * np.linalg.norm(w0 - p.minimizer), 0.0)
    alpha = res.lr[0]
    _, its = run_gd(p, w0, alpha, N - 1, tol=None, keep_iterates=True)
    mean_loss = np.mean([p.value(w) for w in its]) - p.min_value
    assert res.loss_gap[-1, 0] <= mean_loss + 1e-14


def test_averaged_sgd_rate_bound():
    p = _quad(10, 4.0)
    noise = NoiseSpec("isotropic-gaussian", 1.0, "scaled")
    o = GradientOracle(p, noise)
    w0 = p.minimizer + 1.0
    dist0 = np.linalg.norm(w0 - p.minimizer)
    M = p.L * dist0
    s = np.sqrt(noise.sigma_tilde_sq(p))
    N = 1000
    res = averaged_sgd_run(p, o, w0, N, M, s, 200, seed=0)
    assert res.mean_loss_gap()[-1] <= 1.2 * dist0 * np.sqrt(M**2 + s**2) / np.sqrt(N)


# conjugate gradients -----------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_cg_two_dimensions(seed):
    rng = np.random.default_rng(seed)
    p = SpectralQuadratic.from_seed(np.sort(rng.uniform(0.1, 100, 2)), seed, minimizer=rng.standard_normal(2))
    tr, _ = cg_run(p, rng.standard_normal(2), max_iters=2, tol=0.0)
    assert tr.grad_norm[2] <= 1e-10


def test_cg_kappa_one():
    p = SpectralQuadratic.from_seed(np.full(6, 2.5), 0, minimizer=np.arange(6.0))
    tr, _ = cg_run(p, np.zeros(6), max_iters=1, tol=0.0)
    assert tr.grad_norm[1] <= 1e-10


@pytest.mark.parametrize("kappa", [4.0, 10.0, 100.0])
@pytest.mark.parametrize("seed", range(3))
def test_cg_conjugacy_d20(kappa, seed):
    p = _quad(20, kappa, seed)
    tr, dirs = cg_run(p, _w0(p), max_iters=20, tol=1e-8)
    assert tr.grad_norm[-1] <= 1e-8
    assert np.max(conjugacy_residuals(dirs, p.hvp)) <= 1e-8


def test_cg_conjugacy_loss_on_geometric_spectrum():
    # finite precision: clustered small eigenvalues destroy global conjugacy
    p = SpectralQuadratic.with_condition(20, 100.0, 1.0, 0, "geometric")
    _, dirs = cg_run(p, _w0(p), max_iters=20, tol=1e-8)
    assert np.max(conjugacy_residuals(dirs, p.hvp)) > 1e-3


def test_cg_requires_hvp():
    class NoHvp:
        def gradient(self, w):
            return w
    with pytest.raises(ContractError):
        cg_run(NoHvp(), np.ones(2))


# secant ------------------------------------------------------------------

def _pair(rng, d):
    A = rng.standard_normal((d, d))
    H = A @ A.T + d * np.eye(d)
    dw = rng.standard_normal(d)
    return dw, H @ dw


def test_bfgs_secant_equation_from_identity():
    rng = np.random.default_rng(0)
    dw, dg = _pair(rng, 5)
    B = secant_update("BFGS-inverse", np.eye(5), dw, dg)
    assert np.linalg.norm(B @ dg - dw) <= 1e-12 * np.linalg.norm(dw)
    np.testing.assert_array_equal(B, B.T)


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_bfgs_preserves_positive_definiteness(seed):
    rng = np.random.default_rng(seed)
    d = 6
    A = rng.standard_normal((d, d))
    B = A @ A.T + 0.1 * np.eye(d)
    dw = rng.standard_normal(d)
    dg = rng.standard_normal(d)
    if dg @ dw <= 1e-3:
        dg = -dg if dg @ dw < -1e-3 else dg + dw
    B2 = bfgs_inverse_update(B, dw, dg)
    Z = rng.standard_normal((100, d))
    assert np.all(np.einsum("ij,jk,ik->i", Z, B2, Z) > 0)
    assert np.linalg.norm(B2 @ dg - dw) <= 1e-10 * np.linalg.norm(dw)


def test_dfp_and_bfgs_differ_but_both_secant():
    rng = np.random.default_rng(3)
    dw, dg = _pair(rng, 4)
    B0 = np.eye(4) * 0.5
    b = bfgs_inverse_update(B0, dw, dg)
    f = dfp_inverse_update(B0, dw, dg)
    np.testing.assert_allclose(b @ dg, dw, rtol=1e-10)
    np.testing.assert_allclose(f @ dg, dw, rtol=1e-10)
    assert np.max(np.abs(b - f)) > 1e-3


def test_curvature_violation_signalled():
    with pytest.raises(CurvatureError):
        secant_update("BFGS-inverse", np.eye(2), np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
    with pytest.raises(ContractError):
        secant_update("SR1", np.eye(2), np.ones(2), np.ones(2))
    mem = LBFGSMemory(3)
    assert not mem.push(np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
    assert mem.skipped == 1


def test_lbfgs_empty_memory_identity():
    v = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(lbfgs_apply([], v), v)


def _qn_pairs(p, n, seed):
    rng = np.random.default_rng(seed)
    ws = rng.standard_normal((n + 1, p.d))
    return [(ws[k + 1] - ws[k], p.gradient(ws[k + 1]) - p.gradient(ws[k])) for k in range(n)]


def test_lbfgs_full_memory_matches_dense():
    p = _quad(12, 50.0, 5)
    pairs = _qn_pairs(p, 8, 0)
    B = np.eye(p.d)
    for dw, dg in pairs:
        B = bfgs_inverse_update(B, dw, dg)
    v = np.random.default_rng(9).standard_normal(p.d)
    assert np.linalg.norm(lbfgs_apply(pairs, v) - B @ v) <= 1e-10 * np.linalg.norm(B @ v)


def test_lbfgs_truncation_restarts_dense():
    p = _quad(12, 50.0, 6)
    pairs = _qn_pairs(p, 10, 1)
    k = 4
    mem = LBFGSMemory(k)
    for dw, dg in pairs:
        mem.push(dw, dg)
    B = np.eye(p.d)
    for dw, dg in pairs[-k:]:
        B = bfgs_inverse_update(B, dw, dg)
    v = np.ones(p.d)
    np.testing.assert_allclose(mem.apply(v), B @ v, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("memory", [None, 5])
def test_quasi_newton_converges(memory):
    p = SpectralQuadratic.with_condition(10, 3.0, 0.5, 2)
    tr = quasi_newton_run(p, _w0(p), 200, memory=memory, alpha=1.0, tol=1e-9)
    assert tr.grad_norm[-1] < 1e-6 * tr.grad_norm[0]


# Levenberg-Marquardt -----------------------------------------------------

def test_lm_undamped_is_newton():
    p = _quad(10, 100.0, 1)
    w = _w0(p)
    step = lm_step(p.gradient(w), p.hvp, 0.0, 1e-14, 200)
    np.testing.assert_allclose(w + step, p.minimizer, atol=1e-8)


def test_lm_heavy_damping_is_gradient_step():
    p = _quad(10, 100.0, 1)
    w = _w0(p)
    g = p.gradient(w)
    M = 1e6 * p.L
    step = lm_step(g, p.hvp, M)
    assert np.linalg.norm(step + g / M) / np.linalg.norm(g / M) <= 1e-3


def test_lm_zero_gradient():
    p = _quad(5, 10.0)
    np.testing.assert_array_equal(lm_step(np.zeros(5), p.hvp, 1.0), np.zeros(5))


def test_lm_inner_budget_error():
    p = _quad(30, 1e4, 1)
    with pytest.raises(ConvergenceError):
        lm_step(np.ones(30), p.hvp, 0.0, 1e-14, 2)
    with pytest.raises(ContractError):
        lm_step(np.ones(30), p.hvp, -1.0)


# adaptive ----------------------------------------------------------------

def test_adam_first_step():
    g = np.array([0.5, -2.0, 1e-3])
    a = 0.01
    s = adaptive_step("Adam", OptimizerState(w=np.zeros(3)), g, {"alpha": a})
    np.testing.assert_allclose(s.moment1 / (1 - 0.9), g, rtol=1e-14)
    np.testing.assert_allclose(s.w, -a * g / (np.abs(g) + 1e-8), rtol=1e-12)


def test_adagrad_accumulator_monotone():
    p = _quad(6, 10.0)
    rng = np.random.default_rng(0)
    s = OptimizerState(w=_w0(p))
    prev = np.zeros(6)
    for _ in range(100):
        s = adaptive_step("AdaGrad", s, p.gradient(s.w) + rng.standard_normal(6), {"alpha": 0.1})
        assert np.all(s.accumulated_sq >= prev)
        prev = s.accumulated_sq


def test_amsgrad_running_max_dominates_rmsprop():
    rng = np.random.default_rng(2)
    a = OptimizerState(w=np.zeros(5))
    r = OptimizerState(w=np.zeros(5))
    for _ in range(200):
        g = rng.standard_normal(5) * rng.uniform(0.1, 3)
        a = adaptive_step("AMSGrad", a, g)
        r = adaptive_step("RMSProp", r, g, {"gamma": 0.999})
        assert np.all(a.running_max >= r.moment2)


@pytest.mark.parametrize("variant", ADAPTIVE_VARIANTS)
def test_adaptive_permutation_equivariance(variant):
    rng = np.random.default_rng(4)
    perm = rng.permutation(7)
    s = OptimizerState(w=rng.standard_normal(7))
    sp = OptimizerState(w=s.w[perm])
    for _ in range(20):
        g = rng.standard_normal(7)
        s = adaptive_step(variant, s, g)
        sp = adaptive_step(variant, sp, g[perm])
        np.testing.assert_array_equal(sp.w, s.w[perm])
        assert sp.n == s.n


@pytest.mark.parametrize("variant", ADAPTIVE_VARIANTS)
def test_adaptive_reduces_loss(variant):
    p = _quad(5, 10.0)
    tr, s = run_adaptive(variant, p, _w0(p), 2000, {"alpha": 0.05} if variant != "AdaDelta" else None)
    assert tr.loss_gap[-1] < tr.loss_gap[0]
    assert np.all(np.isfinite(s.w))


def test_adaptive_eps_validated():
    with pytest.raises(ContractError):
        adaptive_step("Adam", OptimizerState(w=np.zeros(2)), np.ones(2), {"eps": 0.0})
    with pytest.raises(ContractError):
        adaptive_step("Adamax", OptimizerState(w=np.zeros(2)), np.ones(2))
