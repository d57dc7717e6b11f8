"""Stochastic first-order oracles.

Every oracle is immutable configuration; randomness enters only through an
explicit ``numpy.random.Generator`` passed at call time. Streams come from
:func:`make_stream`, which builds a counter-based Philox generator keyed by
``(seed, replica)`` so that replicas are reproducible and independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Sequence, Union

import numpy as np

from .problems import ContractError, SpectralQuadratic

__all__ = [
    "make_stream",
    "split_streams",
    "NoiseSpec",
    "GradientSample",
    "GradientOracle",
    "MeanEstimationOracle",
    "CoordinateOracle",
    "sample_gradient",
    "batch_gradient",
    "mean_estimation_oracle",
    "coordinate_filter_gradient",
    "v_inf_norm_sq",
]

NOISE_KINDS = ("none", "isotropic-gaussian", "eigenspace-gaussian")
CONVENTIONS = ("raw", "scaled")


def make_stream(seed: int, replica: int = 0) -> np.random.Generator:
    """Counter-based generator for replica ``replica`` of experiment ``seed``."""
    ss = np.random.SeedSequence([int(seed), int(replica)])
    return np.random.Generator(np.random.Philox(ss))


def split_streams(seed: int, n: int) -> list:
    """Independent streams ``make_stream(seed, r)`` for ``r < n``."""
    return [make_stream(seed, r) for r in range(n)]


@dataclass(frozen=True)
class NoiseSpec:
    """Additive gradient noise.

    Parameters
    ----------
    kind : {"none", "isotropic-gaussian", "eigenspace-gaussian"}
        Isotropic noise lives in the standard basis with total second moment
        ``E||xi||^2 = sigma_tilde^2``. Eigenspace noise has independent
        components along the Hessian eigenvectors with standard deviations
        ``sigma_i`` (scalar ``sigma`` broadcasts).
    sigma : float or sequence of float
        Noise level(s).
    convention : {"raw", "scaled"}
        ``raw`` reads ``sigma`` as ``sigma_tilde``. ``scaled`` reads it as
        ``sigma`` with ``sigma_tilde^2 = sigma^2 * lambda_1 * lambda_d``
        (``= sigma^2 L mu``), the scale-invariant form.
    """

    kind: str = "none"
    sigma: Union[float, Sequence[float]] = 0.0
    convention: str = "raw"

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ContractError(f"unknown noise kind {self.kind!r}")
        if self.convention not in CONVENTIONS:
            raise ContractError(f"unknown variance convention {self.convention!r}")
        s = np.asarray(self.sigma, dtype=np.float64)
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ContractError("sigma must be finite and non-negative")
        if s.ndim > 0 and self.kind != "eigenspace-gaussian":
            raise ContractError("vector sigma is only allowed for eigenspace noise")

    @property
    def is_zero(self) -> bool:
        return self.kind == "none" or not np.any(np.asarray(self.sigma) > 0)

    def _factor(self, problem) -> float:
        if self.convention == "raw":
            return 1.0
        return float(np.sqrt(problem.L * problem.mu))

    def component_std(self, problem) -> np.ndarray:
        """Per-coordinate noise std (standard basis or eigenbasis)."""
        d = problem.d
        if self.kind == "none":
            return np.zeros(d)
        s = np.broadcast_to(np.asarray(self.sigma, dtype=np.float64), (d,)).copy()
        s *= self._factor(problem)
        if self.kind == "isotropic-gaussian":
            s /= np.sqrt(d)
        return s

    def sigma_tilde_sq(self, problem) -> float:
        """Second-moment bound of one draw.

        ``E||xi||^2`` for isotropic noise and ``E||xi||_{V,inf}^2`` for
        eigenspace noise.
        """
        s = self.component_std(problem)
        if self.kind == "eigenspace-gaussian":
            return float(np.max(s**2))
        return float(np.sum(s**2))

    def sigma_sq(self, problem) -> float:
        """Scale-free level ``sigma^2 = sigma_tilde^2 / (L mu)``."""
        lm = problem.L * problem.mu
        if lm <= 0:
            raise ContractError("scaled noise level needs mu > 0")
        return self.sigma_tilde_sq(problem) / lm

    def draw(self, problem, stream: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        """Draw noise of shape ``(d,)`` or ``(size, d)``."""
        d = problem.d
        shape = (d,) if size is None else (size, d)
        if self.kind == "none":
            return np.zeros(shape)
        z = stream.standard_normal(shape) * self.component_std(problem)
        if self.kind == "eigenspace-gaussian":
            V = getattr(problem, "rotation", None)
            if V is None:
                raise ContractError("eigenspace noise needs a problem with a known eigenbasis")
            z = z @ V.T
        return z


@dataclass
class GradientSample:
    """One oracle answer.

    Attributes
    ----------
    gradient : ndarray
    batch_size : int
    rng_position : Any
        Snapshot of the bit generator state after the draw.
    """

    gradient: np.ndarray
    batch_size: int = 1
    rng_position: Any = field(default=None, repr=False)


def _position(stream: Optional[np.random.Generator]):
    if stream is None:
        return None
    st = stream.bit_generator.state
    inner = st.get("state", {})
    return (st.get("bit_generator"), tuple(np.atleast_1d(inner.get("counter", ()))), st.get("buffer_pos"))


def _check_finite(g: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("oracle produced non-finite gradient")
    return g


class GradientOracle:
    """Gradient of ``problem`` plus independent additive noise.

    Parameters
    ----------
    problem : object
        Anything with ``d``, ``gradient``, ``L`` and ``mu``.
    noise : NoiseSpec
    batch_size : int
        Number of independent draws averaged per call.
    """

    def __init__(self, problem, noise: Optional[NoiseSpec] = None, batch_size: int = 1):
        if batch_size < 1:
            raise ContractError("batch size must be >= 1")
        self.problem = problem
        self.noise = noise if noise is not None else NoiseSpec()
        self.batch_size = int(batch_size)
        if self.noise.kind == "eigenspace-gaussian" and getattr(problem, "rotation", None) is None:
            raise ContractError("eigenspace noise needs a problem with a known eigenbasis")
        self._std = self.noise.component_std(problem)

    @property
    def d(self) -> int:
        return self.problem.d

    def _noise(self, stream, m: int) -> np.ndarray:
        if self.noise.is_zero:
            return np.zeros(self.d)
        if m == 1:
            return self.noise.draw(self.problem, stream)
        return self.noise.draw(self.problem, stream, size=m).mean(axis=0)

    def sample(self, w: np.ndarray, stream: Optional[np.random.Generator] = None, m: Optional[int] = None) -> GradientSample:
        m = self.batch_size if m is None else int(m)
        if m < 1:
            raise ContractError("batch size must be >= 1")
        g = self.problem.gradient(w)
        if not self.noise.is_zero:
            if stream is None:
                raise ContractError("a random stream is required for noisy oracles")
            g = g + self._noise(stream, m)
        return GradientSample(_check_finite(g), m, _position(stream))

    def ensemble(self, W: np.ndarray, streams: Sequence[np.random.Generator]) -> np.ndarray:
        """Gradients for a stack of replicas, row ``r`` drawing from ``streams[r]``."""
        G = self.problem.gradient(W)
        if not self.noise.is_zero:
            m, d = self.batch_size, self.d
            # same per-stream consumption as ``sample``; scaling is batched
            Z = np.empty((len(streams), d))
            for r, s in enumerate(streams):
                z = s.standard_normal((d,) if m == 1 else (m, d))
                Z[r] = z if m == 1 else z.mean(axis=0)
            Z *= self._std
            if self.noise.kind == "eigenspace-gaussian":
                Z = Z @ self.problem.rotation.T
            G = G + Z
        return _check_finite(G)

    def per_draw_std(self) -> np.ndarray:
        """Standard deviation of each gradient coordinate for one call."""
        s = self.noise.component_std(self.problem)
        if self.noise.kind == "eigenspace-gaussian":
            s = np.sqrt((self.problem.rotation**2) @ (s**2))
        return s / np.sqrt(self.batch_size)


class MeanEstimationOracle:
    """Samples ``w - X`` with ``X ~ N(target, scale^2 I)``.

    The implied objective is ``0.5 E||w - X||^2`` with identity Hessian and
    minimizer ``target``; it is available as :attr:`problem`.
    """

    def __init__(self, target: np.ndarray, scale: float = 1.0):
        self.target = np.asarray(target, dtype=np.float64).ravel()
        if scale < 0:
            raise ContractError("scale must be non-negative")
        self.scale = float(scale)
        d = self.target.size
        self.problem = SpectralQuadratic(np.ones(d), minimizer=self.target, offset=0.5 * d * self.scale**2)

    @property
    def d(self) -> int:
        return self.target.size

    def draw_x(self, stream: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        shape = (self.d,) if size is None else (size, self.d)
        return self.target + self.scale * stream.standard_normal(shape)

    def sample(self, w: np.ndarray, stream: np.random.Generator) -> GradientSample:
        w = np.asarray(w, dtype=np.float64)
        return GradientSample(_check_finite(w - self.draw_x(stream)), 1, _position(stream))

    def ensemble(self, W: np.ndarray, streams: Sequence[np.random.Generator]) -> np.ndarray:
        return _check_finite(W - np.stack([self.draw_x(s) for s in streams]))


class CoordinateOracle:
    """Importance-weighted single-coordinate gradient.

    Returns ``(d_i L(w) / p_i) e_i`` for a coordinate ``i`` drawn from
    ``dist``; the expectation is the full gradient.
    """

    def __init__(self, problem, dist: Optional[Sequence[float]] = None):
        self.problem = problem
        d = problem.d
        p = np.full(d, 1.0 / d) if dist is None else np.asarray(dist, dtype=np.float64)
        if p.shape != (d,):
            raise ContractError("distribution has the wrong length")
        if np.any(p <= 0):
            raise ContractError("every coordinate needs positive probability")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ContractError("distribution must sum to one")
        self.dist = p

    @property
    def d(self) -> int:
        return self.problem.d

    def _filter(self, g: np.ndarray, i: int) -> np.ndarray:
        out = np.zeros_like(g)
        out[i] = g[i] / self.dist[i]
        return out

    def sample(self, w: np.ndarray, stream: np.random.Generator) -> GradientSample:
        g = self.problem.gradient(w)
        i = int(stream.choice(self.d, p=self.dist))
        return GradientSample(_check_finite(self._filter(g, i)), 1, _position(stream))

    def ensemble(self, W: np.ndarray, streams: Sequence[np.random.Generator]) -> np.ndarray:
        G = self.problem.gradient(W)
        return np.stack([self._filter(G[r], int(s.choice(self.d, p=self.dist))) for r, s in enumerate(streams)])


def sample_gradient(p, w: np.ndarray, noise: NoiseSpec, stream: Optional[np.random.Generator]) -> GradientSample:
    """One unbiased gradient sample of ``p`` at ``w``."""
    return GradientOracle(p, noise).sample(w, stream)


def batch_gradient(p, w: np.ndarray, m: int, noise: NoiseSpec, stream: Optional[np.random.Generator]) -> GradientSample:
    """Average of ``m`` independent samples (variance scaled by ``1/m``)."""
    if m < 1:
        raise ContractError("batch size must be >= 1")
    return GradientOracle(p, noise, batch_size=m).sample(w, stream)


def mean_estimation_oracle(X_stream: np.random.Generator, w: np.ndarray, target=None, scale: float = 1.0) -> GradientSample:
    """Sample ``w - X`` with ``X ~ N(target, scale^2 I)`` (target zero by default)."""
    w = np.asarray(w, dtype=np.float64)
    t = np.zeros_like(w) if target is None else target
    return MeanEstimationOracle(t, scale).sample(w, X_stream)


def coordinate_filter_gradient(p, w: np.ndarray, dist: Sequence[float], stream: np.random.Generator) -> GradientSample:
    """Random-coordinate gradient, unbiased for ``grad p(w)``."""
    return CoordinateOracle(p, dist).sample(w, stream)


def v_inf_norm_sq(X: np.ndarray, rotation: np.ndarray) -> float:
    """Monte Carlo ``||X||_{V,inf}^2 = max_i E <X, v_i>^2`` from samples.

    Parameters
    ----------
    X : ndarray, shape (n_samples, d)
        Draws of the random vector.
    rotation : ndarray, shape (d, d)
        Eigenvectors ``v_i`` as columns.
    """
    X = np.atleast_2d(X)
    return float(np.max(np.mean((X @ rotation) ** 2, axis=0)))
