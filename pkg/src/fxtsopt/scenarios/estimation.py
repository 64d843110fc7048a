"""Distributed parameter estimation over a communication graph.

N agents each hold a local estimate theta_i of a common parameter
theta* in R^{n_theta} from measurements y_i = H_i theta* + v_i. The
stacked state x = col(theta_1, ..., theta_N) minimizes the weighted
least-squares cost

    phi(x) = 1/2 sum_i (y_i - H_i theta_i)^T R_i^{-1} (y_i - H_i theta_i)

subject to exact consensus s(x) = (L kron I) x = 0, where L is the graph
Laplacian. The Jacobian L kron I is constant, so the Gram pseudoinverse
is computed once per run. The closed loop uses the fixed-time convex
descent direction with norm-regularized switching.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..controllers import ConvexFlowGains, FxtsGains, Law
from ..errors import InvalidNetworkError, OracleFailureError
from ..problem import ProblemSpec

DEFAULT_THETA_STAR = np.array([2.0, -1.0])
CONNECTIVITY_TOL = 1e-10


def laplacian_path(node_count: int) -> NDArray:
    """Laplacian of the path graph on node_count vertices."""
    if node_count < 2:
        raise InvalidNetworkError("a network needs at least 2 nodes")
    L = np.zeros((node_count, node_count))
    for i in range(node_count - 1):
        L[i, i] += 1.0
        L[i + 1, i + 1] += 1.0
        L[i, i + 1] -= 1.0
        L[i + 1, i] -= 1.0
    return L


@dataclass(frozen=True)
class EstimationNetwork:
    """Measurement model and topology for one estimation instance.

    H and R are stacked per-node matrices of shape (N, m_i, n_theta) and
    (N, m_i, m_i); y holds the realized measurements (N, m_i).
    """

    laplacian: NDArray
    y: NDArray
    H: NDArray
    R: NDArray
    theta_star: NDArray = field(default_factory=lambda: DEFAULT_THETA_STAR.copy())

    def __post_init__(self):
        L = np.asarray(self.laplacian, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise InvalidNetworkError("laplacian must be square")
        if not np.allclose(L, L.T) or not np.allclose(L.sum(axis=1), 0.0):
            raise InvalidNetworkError("laplacian must be symmetric with zero row sums")
        evals = np.linalg.eigvalsh(L)
        if evals.size < 2 or evals[1] <= CONNECTIVITY_TOL:
            raise InvalidNetworkError("communication graph is disconnected")
        if not (self.H.shape[0] == self.R.shape[0] == self.y.shape[0] == L.shape[0]):
            raise InvalidNetworkError("per-node arrays must match the node count")

    @property
    def node_count(self) -> int:
        return self.laplacian.shape[0]

    @property
    def parameter_dim(self) -> int:
        return self.H.shape[2]


def make_network(
    node_count: int = 5,
    theta_star: NDArray = DEFAULT_THETA_STAR,
    noise_seed: int | None = None,
    measurement_variance: float = 0.01,
    laplacian: NDArray | None = None,
) -> EstimationNetwork:
    """Identity-observation instance: H_i = I, R_i = variance * I.

    noise_seed None draws no noise (y_i = theta* exactly); an integer seed
    draws v_i ~ N(0, R_i) reproducibly.
    """
    theta_star = np.asarray(theta_star, dtype=float)
    dim = theta_star.size
    L = laplacian_path(node_count) if laplacian is None else np.asarray(laplacian, float)
    H = np.broadcast_to(np.eye(dim), (node_count, dim, dim)).copy()
    R = np.broadcast_to(measurement_variance * np.eye(dim), (node_count, dim, dim)).copy()
    y = np.tile(theta_star, (node_count, 1))
    if noise_seed is not None:
        rng = np.random.default_rng(noise_seed)
        chol = np.linalg.cholesky(R)
        y = y + np.einsum("nij,nj->ni", chol, rng.standard_normal((node_count, dim)))
    return EstimationNetwork(laplacian=L, y=y, H=H, R=R, theta_star=theta_star.copy())


def default_gains() -> tuple[FxtsGains, ConvexFlowGains]:
    return (
        FxtsGains(alpha=5.0, beta=5.0, p=0.5, q=1.5),
        ConvexFlowGains(gamma1=2.0, gamma2=2.0, r1=0.5, r2=1.5, epsilon=1e-6),
    )


def default_law() -> Law:
    return Law("convex-fxts", switching="norm")


def build_estimation(
    net: EstimationNetwork,
    ic_seed: int = 7,
) -> tuple[ProblemSpec, NDArray]:
    """ProblemSpec for the stacked consensus problem and a seeded x0.

    The initial state is standard normal of length N * n_theta, matching
    the reference experiment's randn initialization.
    """
    N, dim = net.node_count, net.parameter_dim
    n = N * dim
    A = np.kron(np.asarray(net.laplacian, float), np.eye(dim))
    Rinv = np.linalg.inv(net.R)
    # per-node quadratic pieces: 1/2 th^T Wi th - bi^T th + ci
    W = np.einsum("nji,njk,nkl->nil", net.H, Rinv, net.H)
    bvec = np.einsum("nji,njk,nk->ni", net.H, Rinv, net.y)
    const = 0.5 * np.einsum("ni,nij,nj->", net.y, Rinv, net.y)

    def theta_blocks(x):
        return x.reshape(x.shape[:-1] + (N, dim))

    def phi(x):
        th = theta_blocks(x)
        quad = 0.5 * np.einsum("...ni,nij,...nj->...", th, W, th)
        lin = np.einsum("ni,...ni->...", bvec, th)
        return quad - lin + const

    def grad(x):
        th = theta_blocks(x)
        g = np.einsum("nij,...nj->...ni", W, th) - bvec
        return g.reshape(x.shape)

    Hess = np.zeros((n, n))
    for i in range(N):
        Hess[i * dim:(i + 1) * dim, i * dim:(i + 1) * dim] = W[i]

    def hessian(x):
        return np.broadcast_to(Hess, x.shape[:-1] + (n, n))

    def constraints(x):
        return np.einsum("ij,...j->...i", A, x)

    def jacobian(x):
        return np.broadcast_to(A, x.shape[:-1] + (n, n))

    problem = ProblemSpec(
        n=n,
        m=n,
        objective=phi,
        gradient=grad,
        constraints=constraints,
        jacobian=jacobian,
        hessian=hessian,
        vectorized=True,
        constant_jacobian=True,
    )
    x0 = np.random.default_rng(ic_seed).standard_normal(n)
    return problem, x0


def centralized_ls_oracle(net: EstimationNetwork) -> NDArray:
    """Weighted least-squares estimate pooling all measurements.

    theta_hat = (sum_i H_i^T R_i^{-1} H_i)^{-1} sum_i H_i^T R_i^{-1} y_i,
    the minimizer of the stacked cost on the consensus subspace.
    """
    Rinv = np.linalg.inv(net.R)
    info = np.einsum("nji,njk,nkl->il", net.H, Rinv, net.H)
    rhs = np.einsum("nji,njk,nk->i", net.H, Rinv, net.y)
    if np.linalg.cond(info) > 1e12:
        raise OracleFailureError("singular information matrix")
    return np.linalg.solve(info, rhs)
