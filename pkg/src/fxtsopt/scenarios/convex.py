"""Strongly convex quadratic test problem with a linear equality constraint.

phi(x) = mu/2 ||x - c||^2 with constraint A (x - c) = 0: the constraint
plane passes through the unconstrained minimizer, so the constrained
optimum is exactly c with zero multiplier. Used to exercise the fixed-time
convex flow and its total settling bound on a problem whose optimum and
strong-convexity constant are known in closed form.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from ..controllers import ConvexFlowGains, FxtsGains, Law
from ..problem import ProblemSpec

DEFAULT_CENTER = np.array([1.0, -2.0, 0.5])
DEFAULT_NORMALS = np.array([[1.0, 1.0, -1.0]])


def build_convex_quadratic(
    mu: float = 1.0,
    center: NDArray = DEFAULT_CENTER,
    normals: NDArray = DEFAULT_NORMALS,
) -> tuple[ProblemSpec, NDArray]:
    """ProblemSpec plus the known optimizer (= center)."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    c = np.asarray(center, dtype=float)
    A = np.atleast_2d(np.asarray(normals, dtype=float))
    m, n = A.shape
    if c.size != n:
        raise ValueError("center and constraint normals disagree on dimension")

    def phi(x):
        return 0.5 * mu * np.sum((x - c) ** 2, axis=-1)

    def grad(x):
        return mu * (x - c)

    def hess(x):
        return np.broadcast_to(mu * np.eye(n), x.shape[:-1] + (n, n))

    def constraints(x):
        return np.einsum("ij,...j->...i", A, x - c)

    def jacobian(x):
        return np.broadcast_to(A, x.shape[:-1] + (m, n))

    problem = ProblemSpec(
        n=n,
        m=m,
        objective=phi,
        gradient=grad,
        constraints=constraints,
        jacobian=jacobian,
        hessian=hess,
        vectorized=True,
        constant_jacobian=True,
    )
    return problem, c.copy()


def default_gains(mu: float = 1.0) -> tuple[FxtsGains, ConvexFlowGains]:
    return (
        FxtsGains(alpha=5.0, beta=5.0, p=0.5, q=1.5),
        ConvexFlowGains(gamma1=2.0, gamma2=2.0, r1=0.5, r2=1.5, epsilon=1e-6, mu=mu),
    )


def default_law() -> Law:
    return Law("convex-fxts")
