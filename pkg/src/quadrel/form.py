"""First- and second-order reliability methods.

Most-probable-point search via a damped Hasofer-Lind-Rackwitz-Fiessler
iteration with a constrained-minimization fallback, and the Breitung
curvature correction evaluated on a quadratic limit state at the MPP.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize

from .errors import BreitungSingularityError, ConvergenceError, DomainError
from .montecarlo import transform_samples
from .quadratic import CorrelationModel, StandardNormalQuadratic, identity_correlation
from .variables import RandomVariable, std_normal


def _g_in_standard_space(g, variables, corr):
    """Wrap g(z) as g_N(z_N) through the exact marginal transform."""

    def g_n(z_n):
        z = transform_samples(np.atleast_2d(np.asarray(z_n, dtype=float)), variables, corr)
        out = np.asarray(g(z), dtype=float)
        return float(out[0]) if out.shape == (1,) else out

    return g_n


def _fd_gradient(f, x, rel_step=1e-6):
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy(); xp[i] += h
        xm = x.copy(); xm[i] -= h
        grad[i] = (f(xp) - f(xm)) / (2.0 * h)
    return grad


def form_mpp(g, variables: list[RandomVariable], corr: CorrelationModel | None,
             start=None, tol: float = 1e-8, opt_tol: float = 1e-6,
             max_iter: int = 200):
    """Find the most probable point of Prob[g(z) < 0].

    Returns (beta_hl, mpp_zN, mpp_z).  The search runs a damped HLRF
    iteration in uncorrelated standard-normal space and falls back to
    direct constrained minimization of ||z_N|| subject to g = 0 on stall.
    """
    n = len(variables)
    if corr is None:
        corr = identity_correlation(n)
    g_n = _g_in_standard_space(g, variables, corr)
    z = np.zeros(n) if start is None else np.asarray(start, dtype=float).copy()

    g0 = g_n(np.zeros(n))
    scale = max(abs(g0), 1.0)
    trace = []

    def converged(z, gval, grad):
        gnorm = np.linalg.norm(grad)
        if gnorm == 0.0:
            return False
        u = grad / gnorm
        tangential = z - (z @ u) * u
        return (abs(gval) <= tol * scale
                and np.linalg.norm(tangential) <= opt_tol * max(1.0, np.linalg.norm(z)))

    gval = g_n(z)
    for it in range(max_iter):
        grad = _fd_gradient(g_n, z)
        gnorm = np.linalg.norm(grad)
        trace.append((it, float(np.linalg.norm(z)), float(gval)))
        if converged(z, gval, grad):
            beta = float(np.linalg.norm(z))
            mpp_z = transform_samples(z[None, :], variables, corr)[0]
            return beta, z, mpp_z
        if gnorm == 0.0:
            break
        alpha = grad / gnorm
        z_new = (grad @ z - gval) / gnorm * alpha
        d = z_new - z
        # merit line search: m(z) = 0.5||z||^2 + c_m |g(z)|
        c_m = 2.0 * np.linalg.norm(z_new) / gnorm + 10.0
        m0 = 0.5 * z @ z + c_m * abs(gval)
        step = 1.0
        for _ in range(8):
            z_try = z + step * d
            g_try = g_n(z_try)
            if 0.5 * z_try @ z_try + c_m * abs(g_try) < m0:
                break
            step *= 0.5
        else:
            break  # stalled; switch to the fallback solver
        z = z + step * d
        gval = g_n(z)

    # Fallback: minimize ||z||^2 subject to g_N = 0.
    best = None
    for z0 in (z, np.full(n, 0.1)):
        res = minimize(
            lambda u: u @ u,
            z0,
            jac=lambda u: 2.0 * u,
            method="SLSQP",
            constraints=[{"type": "eq", "fun": lambda u: g_n(u) / scale}],
            options={"maxiter": 300, "ftol": 1e-12},
        )
        if res.success and abs(g_n(res.x)) <= 1e-6 * scale:
            if best is None or res.fun < best.fun:
                best = res
    if best is None:
        raise ConvergenceError("MPP search did not converge", trace=trace)
    z = best.x
    beta = float(np.linalg.norm(z))
    mpp_z = transform_samples(z[None, :], variables, corr)[0]
    return beta, z, mpp_z


def _tangent_basis(alpha: np.ndarray) -> np.ndarray:
    """Orthonormal matrix whose last column is ``alpha`` (Householder)."""
    n = alpha.size
    e = np.zeros(n)
    e[-1] = 1.0
    v = alpha - e
    nv = np.linalg.norm(v)
    if nv < 1e-14:
        return np.eye(n)
    v = v / nv
    return np.eye(n) - 2.0 * np.outer(v, v)


def sorm_breitung(qn: StandardNormalQuadratic, beta_hl: float, mpp_zN) -> float:
    """Breitung's curvature-corrected failure probability for a quadratic
    limit state at a known MPP.

    Curvatures rho_i are the eigenvalues of the tangent-space block of
    the Hessian divided by the signed radial gradient component, so that
    a failure surface curving away from the origin shrinks the estimate.
    """
    if beta_hl <= 0.0:
        raise DomainError(f"sorm_breitung requires beta_hl > 0, got {beta_hl}")
    z = np.asarray(mpp_zN, dtype=float)
    alpha = z / beta_hl
    grad = qn.a @ z * 2.0 + qn.k
    g_alpha = float(grad @ alpha)
    if g_alpha == 0.0:
        raise DomainError("gradient orthogonal to the MPP direction")
    r = _tangent_basis(alpha)
    hess = 2.0 * qn.a
    block = (r.T @ hess @ r)[:-1, :-1] / g_alpha
    rho = np.linalg.eigvalsh(block)
    factors = 1.0 - beta_hl * rho
    if np.any(factors <= 0.0):
        raise BreitungSingularityError(
            f"1 - beta*rho non-positive (min {factors.min():.3e}); "
            "Breitung's formula is singular here"
        )
    _, cdf = std_normal(-beta_hl)
    return float(cdf * np.prod(factors**-0.5))
