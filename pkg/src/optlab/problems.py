"""Deterministic test objectives with known minimizers and curvature.

Two families are provided:

* :class:`SpectralQuadratic`, a quadratic defined by its eigen-decomposition.
* :class:`ChainProblem`, the tridiagonal "heat chain" used to build
  worst-case instances for first order methods.

Both expose ``value``, ``gradient``, ``evaluate`` (value and gradient),
``hvp`` and an :class:`ObjectiveInfo` summary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ContractError

__all__ = [
    "ContractError",
    "ObjectiveInfo",
    "SpectralQuadratic",
    "ChainProblem",
    "modified_gram_schmidt",
    "random_rotation",
    "quadratic_eval",
    "quadratic_hvp",
    "chain_eval",
    "chain_minimizer",
    "sink_minimizer",
    "complexity_floor",
]


@dataclass(frozen=True)
class ObjectiveInfo:
    """Smoothness summary of an objective.

    Attributes
    ----------
    L : float
        Lipschitz constant of the gradient.
    mu : float
        Strong convexity constant (0 for merely convex problems).
    has_known_minimizer : bool
        Whether ``minimizer`` is available in closed form.
    min_value : float
        Value of the objective at its minimizer.
    """

    L: float
    mu: float
    has_known_minimizer: bool
    min_value: float

    def __post_init__(self):
        if not (0.0 <= self.mu <= self.L):
            raise ContractError(f"need 0 <= mu <= L, got mu={self.mu}, L={self.L}")

    @property
    def kappa(self) -> float:
        return np.inf if self.mu == 0 else self.L / self.mu


def _as_vector(w, d: int, name: str = "w") -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape[-1:] != (d,):
        raise ContractError(f"{name} has shape {w.shape}, expected trailing dimension {d}")
    return w


def modified_gram_schmidt(A: np.ndarray) -> np.ndarray:
    """Orthonormalize the columns of a square matrix.

    Parameters
    ----------
    A : ndarray, shape (d, d)
        Matrix with linearly independent columns.

    Returns
    -------
    Q : ndarray, shape (d, d)
        Matrix with orthonormal columns spanning the same flag of subspaces.
    """
    Q = np.array(A, dtype=np.float64, copy=True)
    d = Q.shape[1]
    for j in range(d):
        orig = np.linalg.norm(Q[:, j])
        for i in range(j):
            Q[:, j] -= (Q[:, i] @ Q[:, j]) * Q[:, i]
        nrm = np.linalg.norm(Q[:, j])
        if nrm <= 1e-12 * orig or nrm == 0.0:
            raise ContractError("columns are linearly dependent")
        Q[:, j] /= nrm
    # one reorthogonalization pass keeps ||Q^T Q - I|| at machine precision
    for j in range(d):
        for i in range(j):
            Q[:, j] -= (Q[:, i] @ Q[:, j]) * Q[:, i]
        Q[:, j] /= np.linalg.norm(Q[:, j])
    return Q


def random_rotation(d: int, seed: int = 0) -> np.ndarray:
    """Seeded random orthonormal matrix (MGS of a Gaussian matrix)."""
    rng = np.random.default_rng(seed)
    return modified_gram_schmidt(rng.standard_normal((d, d)))


class SpectralQuadratic:
    """Quadratic ``c + 0.5 (w-w*)^T V diag(lam) V^T (w-w*)``.

    Parameters
    ----------
    eigenvalues : sequence of float
        Hessian eigenvalues, sorted ascending.
    rotation : ndarray, optional
        Orthonormal eigenvector matrix ``V``. Identity if omitted.
    minimizer : ndarray, optional
        The minimizer ``w*``. Zero if omitted.
    offset : float
        Minimal value ``c``.
    """

    def __init__(
        self,
        eigenvalues: Sequence[float],
        rotation: Optional[np.ndarray] = None,
        minimizer: Optional[np.ndarray] = None,
        offset: float = 0.0,
    ):
        lam = np.asarray(eigenvalues, dtype=np.float64).ravel()
        if lam.size == 0 or not np.all(np.isfinite(lam)):
            raise ContractError("eigenvalues must be finite and non-empty")
        if np.any(np.diff(lam) < 0):
            raise ContractError("eigenvalues must be sorted ascending")
        d = lam.size
        V = np.eye(d) if rotation is None else np.asarray(rotation, dtype=np.float64)
        if V.shape != (d, d):
            raise ContractError(f"rotation has shape {V.shape}, expected {(d, d)}")
        if np.max(np.abs(V.T @ V - np.eye(d))) > 1e-12:
            raise ContractError("rotation is not orthonormal")
        ws = np.zeros(d) if minimizer is None else _as_vector(minimizer, d, "minimizer")
        self.eigenvalues = lam
        self.rotation = V
        self.minimizer = ws.copy()
        self.offset = float(offset)
        self.d = d
        self._identity = rotation is None
        self.hessian = (V * lam) @ V.T
        self.hessian = 0.5 * (self.hessian + self.hessian.T)

    @classmethod
    def from_seed(
        cls,
        eigenvalues: Sequence[float],
        seed: int = 0,
        minimizer: Optional[np.ndarray] = None,
        offset: float = 0.0,
    ) -> "SpectralQuadratic":
        """Quadratic with a seeded random rotation."""
        lam = np.asarray(eigenvalues, dtype=np.float64)
        return cls(lam, random_rotation(lam.size, seed), minimizer, offset)

    @classmethod
    def with_condition(
        cls, d: int, kappa: float, mu: float = 1.0, seed: Optional[int] = 0,
        spacing: str = "linear",
    ) -> "SpectralQuadratic":
        """Quadratic with eigenvalues spanning ``[mu, kappa*mu]``.

        Parameters
        ----------
        d : int
            Dimension (the extreme eigenvalues are always included).
        kappa : float
            Condition number.
        mu : float
            Smallest eigenvalue.
        seed : int or None
            Rotation seed; ``None`` keeps the identity.
        spacing : {"linear", "geometric"}
            How interior eigenvalues are placed.
        """
        if spacing == "linear":
            lam = np.linspace(mu, kappa * mu, d)
        elif spacing == "geometric":
            lam = np.geomspace(mu, kappa * mu, d)
        else:
            raise ContractError(f"unknown spacing {spacing!r}")
        if d == 1:
            lam = np.array([mu])
        if seed is None:
            return cls(lam)
        return cls.from_seed(lam, seed)

    @property
    def L(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def mu(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def kappa(self) -> float:
        return self.L / self.mu if self.mu > 0 else np.inf

    @property
    def min_value(self) -> float:
        return self.offset

    def info(self) -> ObjectiveInfo:
        return ObjectiveInfo(self.L, max(self.mu, 0.0), True, self.offset)

    def to_eigenbasis(self, w: np.ndarray) -> np.ndarray:
        """Coordinates of ``w - w*`` in the eigenbasis (works on batches)."""
        w = _as_vector(w, self.d)
        return (w - self.minimizer) @ self.rotation

    def hvp(self, v: np.ndarray) -> np.ndarray:
        v = _as_vector(v, self.d, "v")
        if self._identity:
            return self.eigenvalues * v
        return v @ self.hessian

    def gradient(self, w: np.ndarray) -> np.ndarray:
        w = _as_vector(w, self.d)
        return self.hvp(w - self.minimizer)

    def value(self, w: np.ndarray):
        w = _as_vector(w, self.d)
        diff = w - self.minimizer
        return self.offset + 0.5 * np.sum(diff * self.hvp(diff), axis=-1)

    def evaluate(self, w: np.ndarray) -> Tuple[float, np.ndarray]:
        w = _as_vector(w, self.d)
        diff = w - self.minimizer
        g = self.hvp(diff)
        return self.offset + 0.5 * np.sum(diff * g, axis=-1), g


class ChainProblem:
    """Tridiagonal worst-case chain objective.

    ``f(w) = (L-mu)/8 [(w_1-1)^2 + sum_k (w_k - w_{k+1})^2] + mu/2 ||w||^2``.

    Its Hessian ``(L-mu)/4 (A + e_1 e_1^T) + mu I`` (``A`` the path graph
    Laplacian) has spectrum inside ``[mu, L]``.

    Parameters
    ----------
    dimension : int
        Number of coordinates ``d >= 1``.
    lipschitz : float
        Gradient Lipschitz constant ``L > 0``.
    strong_convexity : float
        ``0 <= mu <= L``.
    """

    def __init__(self, dimension: int, lipschitz: float, strong_convexity: float = 0.0):
        if int(dimension) != dimension or dimension < 1:
            raise ContractError(f"dimension must be an integer >= 1, got {dimension}")
        if not lipschitz > 0:
            raise ContractError("lipschitz must be positive")
        if not (0.0 <= strong_convexity <= lipschitz):
            raise ContractError("need 0 <= strong_convexity <= lipschitz")
        self.d = int(dimension)
        self.L = float(lipschitz)
        self.mu = float(strong_convexity)
        self._exact = None

    @property
    def scale(self) -> float:
        """The factor ``(L-mu)/4`` multiplying the unit chain."""
        return (self.L - self.mu) / 4.0

    @property
    def kappa(self) -> float:
        return self.L / self.mu if self.mu > 0 else np.inf

    def _lap(self, w: np.ndarray) -> np.ndarray:
        # (A + e1 e1^T) w along the last axis
        out = np.zeros_like(w)
        if self.d == 1:
            out[...] = w
            return out
        diff = w[..., :-1] - w[..., 1:]
        out[..., :-1] = diff
        out[..., 1:] -= diff
        out[..., 0] += w[..., 0]
        return out

    def hvp(self, v: np.ndarray) -> np.ndarray:
        v = _as_vector(v, self.d, "v")
        return self.scale * self._lap(v) + self.mu * v

    def gradient(self, w: np.ndarray) -> np.ndarray:
        w = _as_vector(w, self.d)
        g = self.hvp(w)
        g[..., 0] -= self.scale
        return g

    def value(self, w: np.ndarray):
        w = _as_vector(w, self.d)
        s = (w[..., 0] - 1.0) ** 2 + np.sum(np.diff(w, axis=-1) ** 2, axis=-1)
        return self.scale / 2.0 * s + 0.5 * self.mu * np.sum(w * w, axis=-1)

    def evaluate(self, w: np.ndarray):
        return self.value(w), self.gradient(w)

    def hessian(self) -> np.ndarray:
        """Dense Hessian (for small oracles only)."""
        return self.hvp(np.eye(self.d))

    def analytic_minimizer(self) -> np.ndarray:
        """Closed-form minimizer of the infinite chain, truncated to ``d``."""
        return chain_minimizer(self)

    def exact_minimizer(self) -> np.ndarray:
        """Minimizer of the finite-``d`` problem (tridiagonal solve)."""
        if self._exact is None:
            if self.mu == 0.0:
                self._exact = np.ones(self.d)
            else:
                from scipy.linalg import solveh_banded

                ab = np.zeros((2, self.d))
                # diagonal of A + e1 e1^T
                diag = np.full(self.d, 2.0)
                diag[0] = diag[-1] = 1.0
                if self.d == 1:
                    diag[0] = 0.0
                diag[0] += 1.0
                ab[1] = self.scale * diag + self.mu
                ab[0, 1:] = -self.scale
                rhs = np.zeros(self.d)
                rhs[0] = self.scale
                self._exact = solveh_banded(ab, rhs)
        return self._exact.copy()

    @property
    def min_value(self) -> float:
        return float(self.value(self.exact_minimizer()))

    def truncation_residual(self) -> float:
        """Gradient norm at the analytic (infinite chain) minimizer."""
        return float(np.linalg.norm(self.gradient(self.analytic_minimizer())))

    def info(self) -> ObjectiveInfo:
        return ObjectiveInfo(self.L, self.mu, True, self.min_value)

    @property
    def minimizer(self) -> np.ndarray:
        return self.exact_minimizer()

    @property
    def offset(self) -> float:
        return self.min_value


def quadratic_eval(p: SpectralQuadratic, w: np.ndarray) -> Tuple[float, np.ndarray]:
    """Value and gradient of a spectral quadratic.

    Parameters
    ----------
    p : SpectralQuadratic
    w : ndarray, shape (d,)

    Returns
    -------
    value : float
    gradient : ndarray, shape (d,)
    """
    v, g = p.evaluate(w)
    return float(v), g


def quadratic_hvp(p: SpectralQuadratic, v: np.ndarray) -> np.ndarray:
    """Hessian-vector product ``V diag(lam) V^T v``."""
    return p.hvp(v)


def chain_eval(p: ChainProblem, w: np.ndarray) -> Tuple[float, np.ndarray]:
    """Value and gradient of the chain objective."""
    v, g = p.evaluate(w)
    return float(v), g


def chain_minimizer(p: ChainProblem) -> np.ndarray:
    """Analytic minimizer of the chain.

    Returns all ones for ``mu = 0``, zero for ``mu = L`` and ``q**i`` with
    ``q = (sqrt(kappa)-1)/(sqrt(kappa)+1)`` otherwise. For ``0 < mu < L`` this
    is exact only for the infinite chain; see
    :meth:`ChainProblem.truncation_residual`.
    """
    if p.mu == 0.0:
        return np.ones(p.d)
    if p.mu == p.L:
        return np.zeros(p.d)
    sk = np.sqrt(p.kappa)
    q = (sk - 1.0) / (sk + 1.0)
    return q ** np.arange(1, p.d + 1, dtype=np.float64)


def sink_minimizer(n: int, d: int, L: float) -> Tuple[np.ndarray, float]:
    """Minimizer of the chain restricted to its first ``n`` coordinates.

    Parameters
    ----------
    n : int
        Number of free coordinates (iterations of a span-respecting method).
    d : int
        Ambient dimension, ``2n + 1 <= d``.
    L : float
        Lipschitz constant of the chain.

    Returns
    -------
    w_hat : ndarray, shape (d,)
        ``1 - i/(n+1)`` for ``i <= n`` and zero beyond.
    value : float
        ``L / (8 (n+1))``.
    """
    if n < 0 or 2 * n + 1 > d:
        raise ContractError(f"need 0 <= n and 2n+1 <= d, got n={n}, d={d}")
    w = np.zeros(d)
    i = np.arange(1, n + 1)
    w[:n] = 1.0 - i / (n + 1.0)
    return w, L / (8.0 * (n + 1))


def complexity_floor(n: int, dist0: float, L: float) -> float:
    """Loss-gap lower bound ``L dist0^2 / (16 (n+1)^2)`` for span methods."""
    if n < 0 or not dist0 > 0:
        raise ContractError("need n >= 0 and dist0 > 0")
    return L * dist0**2 / (16.0 * (n + 1) ** 2)
