"""Equality-constrained problem model and first-order geometry.

Holds the problem data (objective, constraints, their derivatives) and
provides the Gram matrix G = J J^T, its pseudoinverse, the tangent-space
projector P = I - J^T G^+ J, KKT residuals, and a finite-difference audit
of user-supplied derivatives.

All operations broadcast over a leading batch axis when the problem's
evaluators are vectorized: states may be shaped (n,) or (..., n).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionMismatchError

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class ProblemSpec:
    """Equality-constrained problem: minimize objective(x) s.t. constraints(x) = 0.

    Evaluators must be pure functions of the state. When ``vectorized`` is
    true they must broadcast over a leading batch axis. ``constant_jacobian``
    marks affine constraint maps so downstream code may cache J, G^+ and P.
    """

    n: int
    m: int
    objective: Callable[[NDArray], NDArray]
    gradient: Callable[[NDArray], NDArray]
    constraints: Callable[[NDArray], NDArray]
    jacobian: Callable[[NDArray], NDArray]
    hessian: Optional[Callable[[NDArray], NDArray]] = None
    vectorized: bool = False
    constant_jacobian: bool = False

    def __post_init__(self):
        if self.m > self.n:
            raise DimensionMismatchError(f"m={self.m} exceeds n={self.n}")
        if self.n <= 0 or self.m <= 0:
            raise DimensionMismatchError("n and m must be positive")


@dataclass(frozen=True)
class KktResidual:
    """First-order optimality residuals at a state.

    stationarity = ||P(x) grad(x)||_2, feasibility = ||h(x)||_2, and the
    least-squares multiplier estimate -G^+ J grad. Both residuals vanish
    exactly at a KKT point.
    """

    stationarity: float
    feasibility: float
    multiplier_estimate: NDArray = field(repr=False)


def check_state(problem: ProblemSpec, x: NDArray) -> NDArray:
    """Validate trailing dimension of a state array against problem.n."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != problem.n:
        raise DimensionMismatchError(
            f"state has trailing dimension {x.shape[-1]}, expected n={problem.n}"
        )
    return x


def eval_objective(problem: ProblemSpec, x: NDArray) -> NDArray:
    """Objective value at x (scalar, or batch of scalars)."""
    x = check_state(problem, x)
    return np.asarray(problem.objective(x), dtype=float)


def gram(problem: ProblemSpec, x: NDArray) -> NDArray:
    """Gram matrix G(x) = J(x) J(x)^T, shape (..., m, m)."""
    x = check_state(problem, x)
    J = np.asarray(problem.jacobian(x), dtype=float)
    return J @ np.swapaxes(J, -1, -2)


def pinv_psd(G: NDArray, rank_tol: float = DEFAULT_RANK_TOL) -> NDArray:
    """Moore-Penrose pseudoinverse of a symmetric PSD matrix via eigendecomposition.

    Eigenvalues below rank_tol times the largest eigenvalue are zeroed.
    Coincides with the exact inverse when G is full rank.
    """
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    G = np.asarray(G, dtype=float)
    if G.shape[-1] == 1:
        g = G[..., 0, 0]
        inv = np.where(g > rank_tol * np.clip(g, 0.0, None), np.divide(1.0, g, where=g != 0.0), 0.0)
        return inv[..., None, None]
    w, V = np.linalg.eigh((G + np.swapaxes(G, -1, -2)) / 2.0)
    wmax = np.clip(w[..., -1:], 0.0, None)
    inv = np.where(w > rank_tol * wmax, np.divide(1.0, w, where=w != 0.0), 0.0)
    return (V * inv[..., None, :]) @ np.swapaxes(V, -1, -2)


def pinv_gram(problem: ProblemSpec, x: NDArray, rank_tol: float = DEFAULT_RANK_TOL) -> NDArray:
    """Pseudoinverse G(x)^+, handling rank-deficient constraint Jacobians."""
    return pinv_psd(gram(problem, x), rank_tol)


def projector(problem: ProblemSpec, x: NDArray) -> NDArray:
    """Tangent-space projector P(x) = I - J^T G^+ J, shape (..., n, n).

    Symmetric and idempotent; annihilates J rows on the range of G.
    """
    x = check_state(problem, x)
    J = np.asarray(problem.jacobian(x), dtype=float)
    G = J @ np.swapaxes(J, -1, -2)
    Gp = pinv_psd(G)
    P = -np.swapaxes(J, -1, -2) @ Gp @ J
    idx = np.arange(problem.n)
    P[..., idx, idx] += 1.0
    return P


def multiplier_estimate(problem: ProblemSpec, x: NDArray) -> NDArray:
    """Least-squares multiplier -G^+ J grad, shape (..., m)."""
    x = check_state(problem, x)
    g = np.asarray(problem.gradient(x), dtype=float)
    J = np.asarray(problem.jacobian(x), dtype=float)
    Gp = pinv_psd(J @ np.swapaxes(J, -1, -2))
    Jg = (J @ g[..., None])[..., 0]
    return -(Gp @ Jg[..., None])[..., 0]


def kkt_residual(problem: ProblemSpec, x: NDArray) -> KktResidual:
    """Stationarity/feasibility residuals and multiplier estimate at a single state."""
    x = check_state(problem, x)
    g = np.asarray(problem.gradient(x), dtype=float)
    h = np.asarray(problem.constraints(x), dtype=float)
    P = projector(problem, x)
    lam = multiplier_estimate(problem, x)
    stat = float(np.linalg.norm(P @ g))
    feas = float(np.linalg.norm(h))
    return KktResidual(stationarity=stat, feasibility=feas, multiplier_estimate=lam)


def finite_difference_audit(
    problem: ProblemSpec, x: NDArray, step: float = 1e-6
) -> tuple[float, float]:
    """Max scaled errors between supplied derivatives and central differences.

    Errors are ||fd - analytic||_inf / max(1, ||analytic||_inf), one for the
    gradient and one for the Jacobian. This is an audit of user-supplied
    derivatives, not an evaluation path.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x = check_state(problem, x)
    n = problem.n
    grad_an = np.asarray(problem.gradient(x), dtype=float)
    jac_an = np.asarray(problem.jacobian(x), dtype=float)
    grad_fd = np.empty(n)
    jac_fd = np.empty((problem.m, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        grad_fd[i] = (problem.objective(x + e) - problem.objective(x - e)) / (2 * step)
        jac_fd[:, i] = (
            np.asarray(problem.constraints(x + e)) - np.asarray(problem.constraints(x - e))
        ) / (2 * step)
    grad_err = np.max(np.abs(grad_fd - grad_an)) / max(1.0, np.max(np.abs(grad_an)))
    jac_err = np.max(np.abs(jac_fd - jac_an)) / max(1.0, np.max(np.abs(jac_an)))
    return float(grad_err), float(jac_err)
