"""Unit-circle constrained scenario.

Two states constrained to h(x) = ||x||^2 - 1 = 0 with a documented default
quadratic objective phi(x) = x^T diag(1, -2) x + (0.5, 0.5)^T x; a custom
objective can be supplied through the user-objective hook. The reference
optimum comes from a brute-force angle-grid oracle, independent of the flow.

Default gains: alpha = beta = 5, p = 0.5, q = 1.5, whose worst-case
manifold-reach bound evaluates to 1.6.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray

from ..controllers import FxtsGains, Law
from ..errors import ConfigurationError
from ..problem import ProblemSpec

DEFAULT_A = np.diag([1.0, -2.0])
DEFAULT_B = np.array([0.5, 0.5])
DEFAULT_X0 = np.array([2.0, 0.0])


def default_gains() -> FxtsGains:
    return FxtsGains(alpha=5.0, beta=5.0, p=0.5, q=1.5)


def build_sphere(
    objective: str = "default-quadratic",
    user_objective: Optional[tuple[Callable, Callable]] = None,
) -> tuple[ProblemSpec, NDArray]:
    """Problem with h(x) = ||x||^2 - 1 and the default (or user) objective.

    Returns (problem, default_x0). A user objective is a pair
    (phi, grad_phi) of vectorized maps.
    """
    if objective == "default-quadratic":
        A, b = DEFAULT_A, DEFAULT_B

        def phi(x):
            return np.einsum("...i,ij,...j->...", x, A, x) + x @ b

        def grad(x):
            return 2.0 * (x @ A) + b

    elif objective == "user-supplied":
        if user_objective is None:
            raise ConfigurationError("objective 'user-supplied' needs (phi, grad) callables")
        phi, grad = user_objective
    else:
        raise ConfigurationError(f"unknown sphere objective selector {objective!r}")

    def constraints(x):
        return (np.sum(x * x, axis=-1) - 1.0)[..., None]

    def jacobian(x):
        return 2.0 * x[..., None, :]

    def hess(x):
        if objective != "default-quadratic":
            raise ConfigurationError("hessian available only for the default quadratic")
        return np.broadcast_to(2.0 * A, x.shape[:-1] + (2, 2)).copy()

    problem = ProblemSpec(
        n=2,
        m=1,
        objective=phi,
        gradient=grad,
        constraints=constraints,
        jacobian=jacobian,
        hessian=hess if objective == "default-quadratic" else None,
        vectorized=True,
    )
    return problem, DEFAULT_X0.copy()


def angle_grid_oracle(problem: ProblemSpec, points: int = 1_000_000) -> tuple[NDArray, float]:
    """Brute-force minimizer of the objective on the unit circle.

    Dense sweep over the angle; independent of the flow dynamics.
    """
    theta = np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)
    pts = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    vals = np.asarray(problem.objective(pts), dtype=float)
    k = int(np.argmin(vals))
    return pts[k], float(vals[k])


def default_law() -> Law:
    return Law("nonconvex-fxts")
