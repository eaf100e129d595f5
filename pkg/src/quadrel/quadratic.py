"""Quadratic-form algebra.

Correlation eigen-decomposition, stacking of equivalent-normal marginals
and the exact affine transformation of a quadratic limit state into
uncorrelated standard-normal space, plus the spectral preprocessing
(eigenvalues, rotated linear term, moment sums) consumed by the
closed-form probability kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NotACorrelationMatrixError
from .variables import RandomVariable, equivalent_normal

DEFAULT_EPS = 1e-7

# Eigenvalues below this (relative) threshold count as structurally zero
# when classifying the sign pattern of the transformed quadratic.
SIGN_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class QuadraticForm:
    """Q(z) = z'Az + k'z + c with A symmetrized on construction."""

    a: np.ndarray
    k: np.ndarray
    c: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        k = np.asarray(self.k, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"A must be square, got shape {a.shape}")
        if k.shape != (a.shape[0],):
            raise DomainError(f"k has shape {k.shape}, expected ({a.shape[0]},)")
        object.__setattr__(self, "a", 0.5 * (a + a.T))
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "c", float(self.c))

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def __call__(self, z):
        """Evaluate at one point (n,) or a batch (m, n)."""
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            return float(z @ self.a @ z + self.k @ z + self.c)
        return np.einsum("ij,jk,ik->i", z, self.a, z) + z @ self.k + self.c

    def gradient(self, z):
        z = np.asarray(z, dtype=float)
        return 2.0 * self.a @ z + self.k

    def to_flat(self) -> np.ndarray:
        """Flat layout (c, k_1..k_n, upper triangle of A row-major)."""
        iu = np.triu_indices(self.dim)
        return np.concatenate(([self.c], self.k, self.a[iu]))

    @classmethod
    def from_flat(cls, coeffs, dim: int) -> "QuadraticForm":
        coeffs = np.asarray(coeffs, dtype=float)
        n_upper = dim * (dim + 1) // 2
        expected = 1 + dim + n_upper
        if coeffs.shape != (expected,):
            raise DomainError(
                f"flat quadratic for dim {dim} needs {expected} coefficients, got {coeffs.shape}"
            )
        c = coeffs[0]
        k = coeffs[1 : 1 + dim]
        a = np.zeros((dim, dim))
        a[np.triu_indices(dim)] = coeffs[1 + dim :]
        # mirror the strict upper triangle; diagonal stays as given
        a = a + np.triu(a, 1).T
        return cls(a=a, k=k, c=c)


@dataclass(frozen=True)
class CorrelationModel:
    """Eigen-decomposition C = (T diag(d)) (T diag(d))' of a correlation matrix."""

    c: np.ndarray
    t: np.ndarray
    d: np.ndarray  # square roots of the eigenvalues of C

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def l(self) -> np.ndarray:
        """The mixing matrix T diag(d), mapping uncorrelated scores to correlated ones."""
        return self.t * self.d


def identity_correlation(n: int) -> CorrelationModel:
    eye = np.eye(n)
    return CorrelationModel(c=eye, t=eye, d=np.ones(n))


def correlation_decompose(c) -> CorrelationModel:
    """Eigen-decompose a correlation matrix into (T, D) with (TD)(TD)' = C."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise NotACorrelationMatrixError(f"correlation matrix must be square, got {c.shape}")
    if not np.allclose(c, c.T, atol=1e-10):
        raise NotACorrelationMatrixError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(c), 1.0, atol=1e-10):
        raise NotACorrelationMatrixError("correlation matrix must have unit diagonal")
    c = 0.5 * (c + c.T)
    lam, t = np.linalg.eigh(c)
    if np.any(lam < -1e-10):
        raise NotACorrelationMatrixError(
            f"correlation matrix is not positive semidefinite (min eigenvalue {lam.min():.3e})"
        )
    lam = np.clip(lam, 0.0, None)
    return CorrelationModel(c=c, t=t, d=np.sqrt(lam))


@dataclass(frozen=True)
class StandardNormalQuadratic:
    """Quadratic limit state expressed in uncorrelated standard-normal space."""

    a: np.ndarray
    k: np.ndarray
    c: float
    expansion_point: np.ndarray = field(default=None)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        object.__setattr__(self, "a", 0.5 * (a + a.T))
        object.__setattr__(self, "k", np.asarray(self.k, dtype=float))
        object.__setattr__(self, "c", float(self.c))
        if self.expansion_point is not None:
            object.__setattr__(self, "expansion_point", np.asarray(self.expansion_point, dtype=float))

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def __call__(self, z_n):
        z_n = np.asarray(z_n, dtype=float)
        if z_n.ndim == 1:
            return float(z_n @ self.a @ z_n + self.k @ z_n + self.c)
        return np.einsum("ij,jk,ik->i", z_n, self.a, z_n) + z_n @ self.k + self.c


def to_standard_normal(
    q: QuadraticForm,
    variables: list[RandomVariable],
    corr: CorrelationModel | None,
    at,
) -> StandardNormalQuadratic:
    """Transform Q into uncorrelated standard-normal space around ``at``.

    ``at`` is the stacked vector of current means; each variable is
    equivalently normalized at its own mean, deterministic entries map to
    (value, 0).  The returned form satisfies the exact identity
    Q_N(z_N) = Q(S T D z_N + mu_eq).
    """
    n = q.dim
    if len(variables) != n:
        raise DomainError(f"quadratic has dim {n} but {len(variables)} variables given")
    at = np.asarray(at, dtype=float)
    if at.shape != (n,):
        raise DomainError(f"expansion point has shape {at.shape}, expected ({n},)")
    if corr is None:
        corr = identity_correlation(n)

    sigma_eq = np.empty(n)
    mu_eq = np.empty(n)
    for i, v in enumerate(variables):
        eq = equivalent_normal(v.with_mean(at[i]) if v.mean != at[i] else v, at[i])
        sigma_eq[i] = eq.sigma_eq
        mu_eq[i] = eq.mu_eq

    m = sigma_eq[:, None] * corr.l  # S T D
    a_n = m.T @ q.a @ m
    k_n = m.T @ (q.k + 2.0 * q.a @ mu_eq)
    c_n = q.c + mu_eq @ q.a @ mu_eq + q.k @ mu_eq
    return StandardNormalQuadratic(a=a_n, k=k_n, c=c_n, expansion_point=mu_eq)


@dataclass(frozen=True)
class SpectralForm:
    """Eigen-data of a standard-normal quadratic plus the moment sums m_1..m_4.

    ``gamma`` holds the (possibly epsilon-regularized) eigenvalues,
    ``kbar`` the linear term rotated into the eigenbasis.
    """

    gamma: np.ndarray
    kbar: np.ndarray
    cprime: float
    m: tuple

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]


def classify_signs(gamma: np.ndarray, scale: float):
    """Split eigenvalues into (positive, negative, zero) masks.

    ``scale`` sets the zero threshold: |gamma| <= SIGN_ZERO_TOL * max(1, scale)
    counts as zero, so structurally singular forms (deterministic rows)
    route to the intended branch.
    """
    tol = SIGN_ZERO_TOL * max(1.0, scale)
    pos = gamma > tol
    neg = gamma < -tol
    zero = ~(pos | neg)
    return pos, neg, zero


def moment_sums(gamma: np.ndarray, kbar: np.ndarray) -> tuple:
    """m_r = sum_j (gamma_j^r + (r/4) gamma_j^{r-2} kbar_j^2), r = 1..4.

    For r = 1 a zero eigenvalue with a nonzero kbar component yields an
    infinite term; that combination only occurs in the mixed-sign branch,
    which never consumes m_1.
    """
    g2 = gamma * gamma
    k2 = kbar * kbar
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_g = np.where(gamma != 0.0, 1.0 / np.where(gamma != 0.0, gamma, 1.0), np.inf)
        m1_terms = np.where(k2 == 0.0, gamma, gamma + 0.25 * inv_g * k2)
    m1 = float(np.sum(m1_terms))
    m2 = float(np.sum(g2 + 0.5 * k2))
    m3 = float(np.sum(g2 * gamma + 0.75 * gamma * k2))
    m4 = float(np.sum(g2 * g2 + g2 * k2))
    return (m1, m2, m3, m4)


def spectral(qn: StandardNormalQuadratic, eps: float = DEFAULT_EPS) -> SpectralForm:
    """Eigen-decompose A', rotate k' and evaluate the moment sums.

    When all eigenvalues share one sign, zeros are replaced by +/-eps
    before the moments are computed; the mixed-sign branch keeps them.
    """
    if eps <= 0.0:
        raise DomainError(f"eps must be > 0, got {eps}")
    gamma, p = np.linalg.eigh(qn.a)
    kbar = p.T @ qn.k
    scale = float(np.linalg.norm(qn.a))
    pos, neg, zero = classify_signs(gamma, scale)
    gamma = np.where(zero, 0.0, gamma)
    if not (pos.any() and neg.any()):
        if pos.any():
            gamma = np.where(zero, eps, gamma)
        elif neg.any():
            gamma = np.where(zero, -eps, gamma)
    return SpectralForm(gamma=gamma, kbar=kbar, cprime=qn.c, m=moment_sums(gamma, kbar))
