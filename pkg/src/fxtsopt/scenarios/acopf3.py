"""Three-bus AC optimal power flow scenario.

Minimizes the quadratic generation cost a*Pg3^2 + b*Pg3 subject to the AC
power-balance equalities at buses 2 and 3. State vector:
x = (theta2, theta3, V2, V3, Pg3, Qg3); bus 1 is the slack with
(V1, theta1) = (1, 0). The constraint block is

    [ P2(x) + Pd2, Q2(x) + Qd2, P3(x) - Pg3, Q3(x) - Qg3 ] = 0

with a lossless network (zero conductance). Note that the slack-bus balance
is not part of the block, so Pg3 is coupled only through the P3 row and the
cost-minimizing stationary point over the feasible set sits at the
unconstrained vertex of the cost parabola, Pg3 = -b/(2a).

Defaults: alpha = beta = 4, p = 0.5, q = 2, x0 = (0.4, -0.3, 0.9, 1.1, 0.5, 0.2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..controllers import FxtsGains, Law
from ..errors import OracleFailureError
from ..problem import ProblemSpec, kkt_residual

DEFAULT_B = np.array([[0.0, -10.0, -5.0], [-10.0, 0.0, -8.0], [-5.0, -8.0, 0.0]])
DEFAULT_X0 = np.array([0.4, -0.3, 0.9, 1.1, 0.5, 0.2])


@dataclass(frozen=True)
class AcopfData:
    """Parameter bundle for the 3-bus network (per-unit)."""

    susceptance: NDArray = field(default_factory=lambda: DEFAULT_B.copy())
    conductance: NDArray = field(default_factory=lambda: np.zeros((3, 3)))
    active_demand: NDArray = field(default_factory=lambda: np.array([0.0, 0.6, 0.4]))
    reactive_demand: NDArray = field(default_factory=lambda: np.array([0.0, 0.3, 0.2]))
    cost_a: float = 0.2
    cost_b: float = 1.0
    slack_voltage: float = 1.0
    slack_angle: float = 0.0

    def __post_init__(self):
        B = np.asarray(self.susceptance, dtype=float)
        if B.shape != (3, 3) or not np.allclose(B, B.T):
            raise ValueError("susceptance must be a symmetric 3x3 matrix")
        if self.cost_a <= 0:
            raise ValueError("cost_a must be positive")


def default_gains() -> FxtsGains:
    return FxtsGains(alpha=4.0, beta=4.0, p=0.5, q=2.0)


def default_law() -> Law:
    return Law("nonconvex-fxts")


def bus_injections(V: NDArray, theta: NDArray, G: NDArray, B: NDArray) -> tuple[NDArray, NDArray]:
    """Active/reactive injections of an N-bus network from the standard flow equations.

    V and theta may carry leading batch axes; the bus axis is last.
    """
    dth = theta[..., :, None] - theta[..., None, :]
    VV = V[..., :, None] * V[..., None, :]
    P = np.sum(VV * (G * np.cos(dth) + B * np.sin(dth)), axis=-1)
    Q = np.sum(VV * (G * np.sin(dth) - B * np.cos(dth)), axis=-1)
    return P, Q


def power_injections(V: NDArray, theta: NDArray, data: AcopfData) -> tuple[NDArray, NDArray]:
    """(P, Q) at the three buses for given magnitudes and angles (radians)."""
    V = np.asarray(V, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(V <= 0):
        raise ValueError("voltage magnitudes must be positive")
    return bus_injections(V, theta, np.asarray(data.conductance, float), np.asarray(data.susceptance, float))


def injection_jacobian(V: NDArray, theta: NDArray, G: NDArray, B: NDArray):
    """Partials of (P_i, Q_i) w.r.t. theta_k and V_k for all buses.

    Returns (dP_dth, dP_dV, dQ_dth, dQ_dV), each ... x N x N; V and theta
    may carry leading batch axes.
    """
    N = V.shape[-1]
    dth = theta[..., :, None] - theta[..., None, :]
    c, s = np.cos(dth), np.sin(dth)
    VV = V[..., :, None] * V[..., None, :]
    off = ~np.eye(N, dtype=bool)
    idx = np.arange(N)

    dP_dth = np.where(off, VV * (G * s - B * c), 0.0)
    dP_dth[..., idx, idx] = np.sum(np.where(off, VV * (-G * s + B * c), 0.0), axis=-1)

    dP_dV = np.where(off, V[..., :, None] * (G * c + B * s), 0.0)
    dP_dV[..., idx, idx] = 2.0 * V * np.diag(G) + np.sum(np.where(off, V[..., None, :] * (G * c + B * s), 0.0), axis=-1)

    dQ_dth = np.where(off, -VV * (G * c + B * s), 0.0)
    dQ_dth[..., idx, idx] = np.sum(np.where(off, VV * (G * c + B * s), 0.0), axis=-1)

    dQ_dV = np.where(off, V[..., :, None] * (G * s - B * c), 0.0)
    dQ_dV[..., idx, idx] = -2.0 * V * np.diag(B) + np.sum(np.where(off, V[..., None, :] * (G * s - B * c), 0.0), axis=-1)

    return dP_dth, dP_dV, dQ_dth, dQ_dV


def _split(x: NDArray, data: AcopfData):
    slack_v = np.broadcast_to(data.slack_voltage, x.shape[:-1])
    slack_a = np.broadcast_to(data.slack_angle, x.shape[:-1])
    V = np.stack([slack_v, x[..., 2], x[..., 3]], axis=-1)
    theta = np.stack([slack_a, x[..., 0], x[..., 1]], axis=-1)
    return V, theta


def build_acopf3(data: AcopfData = AcopfData()) -> tuple[ProblemSpec, NDArray]:
    """ProblemSpec for the 3-bus AC-OPF and its default initial state."""
    Gm = np.asarray(data.conductance, dtype=float)
    Bm = np.asarray(data.susceptance, dtype=float)
    a, b = data.cost_a, data.cost_b
    Pd2, Qd2 = data.active_demand[1], data.reactive_demand[1]

    def phi(x):
        pg3 = x[..., 4]
        return a * pg3**2 + b * pg3

    def grad(x):
        g = np.zeros_like(x)
        g[..., 4] = 2.0 * a * x[..., 4] + b
        return g

    def hess(x):
        H = np.zeros(x.shape[:-1] + (6, 6))
        H[..., 4, 4] = 2.0 * a
        return H

    def constraints(x):
        V, theta = _split(x, data)
        P, Q = bus_injections(V, theta, Gm, Bm)
        return np.stack(
            [P[..., 1] + Pd2, Q[..., 1] + Qd2, P[..., 2] - x[..., 4], Q[..., 2] - x[..., 5]],
            axis=-1,
        )

    def jacobian(x):
        V, theta = _split(x, data)
        dP_dth, dP_dV, dQ_dth, dQ_dV = injection_jacobian(V, theta, Gm, Bm)
        J = np.zeros(x.shape[:-1] + (4, 6))
        # columns: theta2, theta3, V2, V3 (buses 1 and 2 in 0-based indexing)
        for col, bus in ((0, 1), (1, 2)):
            J[..., 0, col] = dP_dth[..., 1, bus]
            J[..., 1, col] = dQ_dth[..., 1, bus]
            J[..., 2, col] = dP_dth[..., 2, bus]
            J[..., 3, col] = dQ_dth[..., 2, bus]
            J[..., 0, col + 2] = dP_dV[..., 1, bus]
            J[..., 1, col + 2] = dQ_dV[..., 1, bus]
            J[..., 2, col + 2] = dP_dV[..., 2, bus]
            J[..., 3, col + 2] = dQ_dV[..., 2, bus]
        J[..., 2, 4] = -1.0
        J[..., 3, 5] = -1.0
        return J

    problem = ProblemSpec(
        n=6,
        m=4,
        objective=phi,
        gradient=grad,
        constraints=constraints,
        jacobian=jacobian,
        hessian=hess,
        vectorized=True,
    )
    return problem, DEFAULT_X0.copy()


def acopf_feasible_oracle(
    data: AcopfData = AcopfData(),
    z0: NDArray | None = None,
    max_iter: int = 200,
    kkt_tol: float = 1e-6,
) -> tuple[NDArray, float]:
    """Reference KKT point, independent of the sliding-mode flow.

    (Pg3, Qg3) are eliminated through the bus-3 balance rows, leaving the
    cost as a function of z = (theta2, theta3, V2, V3) constrained by the
    two bus-2 balance equations. Because the cost depends on the state only
    through Pg3, any feasible point with Pg3 at the unconstrained cost
    minimizer -b/(2a) is a global constrained minimum with zero multiplier,
    so the oracle first runs a damped Gauss-Newton on the three equations
    [bus-2 balance; P3(z) + b/(2a)] over z. If no such point is found it
    falls back to a damped Newton iteration on the reduced first-order
    system (gradient of the reduced Lagrangian plus the two constraints)
    from the supplied seed. Derivatives are formed by central differences.
    The returned full state is verified to have KKT residual <= kkt_tol;
    otherwise an oracle failure is raised.
    """
    problem, x_default = build_acopf3(data)
    Gm = np.asarray(data.conductance, dtype=float)
    Bm = np.asarray(data.susceptance, dtype=float)
    a, b = data.cost_a, data.cost_b
    Pd2, Qd2 = data.active_demand[1], data.reactive_demand[1]

    def full_state(z):
        V = np.array([data.slack_voltage, z[2], z[3]])
        th = np.array([data.slack_angle, z[0], z[1]])
        P, Q = bus_injections(V, th, Gm, Bm)
        return np.array([z[0], z[1], z[2], z[3], P[2], Q[2]])

    def cost(z):
        V = np.array([data.slack_voltage, z[2], z[3]])
        th = np.array([data.slack_angle, z[0], z[1]])
        P, _ = bus_injections(V, th, Gm, Bm)
        return a * P[2] ** 2 + b * P[2]

    def cons(z):
        V = np.array([data.slack_voltage, z[2], z[3]])
        th = np.array([data.slack_angle, z[0], z[1]])
        P, Q = bus_injections(V, th, Gm, Bm)
        return np.array([P[1] + Pd2, Q[1] + Qd2])

    h_fd = 1e-6

    def fd_grad(f, z, size):
        out = np.zeros((size, z.size)) if size > 1 else np.zeros(z.size)
        for i in range(z.size):
            e = np.zeros(z.size)
            e[i] = h_fd
            if size > 1:
                out[:, i] = (f(z + e) - f(z - e)) / (2 * h_fd)
            else:
                out[i] = (f(z + e) - f(z - e)) / (2 * h_fd)
        return out

    def kkt_map(y):
        z, nu = y[:4], y[4:]
        gc = fd_grad(cost, z, 1)
        Jc = fd_grad(cons, z, 2)
        return np.concatenate([gc + Jc.T @ nu, cons(z)])

    def verified(z):
        x_star = full_state(z)
        res = kkt_residual(problem, x_star)
        if res.stationarity > kkt_tol or res.feasibility > kkt_tol:
            raise OracleFailureError(
                f"reference point fails KKT check: stat={res.stationarity:.3e}, feas={res.feasibility:.3e}"
            )
        return x_star, float(cost(z))

    p_star = -b / (2.0 * a)

    def pinned(z):
        V = np.array([data.slack_voltage, z[2], z[3]])
        th = np.array([data.slack_angle, z[0], z[1]])
        P, Q = bus_injections(V, th, Gm, Bm)
        return np.array([P[1] + Pd2, Q[1] + Qd2, P[2] - p_star])

    z = np.array(z0 if z0 is not None else x_default[:4], dtype=float)
    for _ in range(max_iter):
        F = pinned(z)
        if np.linalg.norm(F, np.inf) < 1e-12:
            return verified(z)
        Jp = fd_grad(pinned, z, 3)
        d = -np.linalg.pinv(Jp, rcond=1e-10) @ F
        step, base = 1.0, np.linalg.norm(F)
        while step > 1e-8 and np.linalg.norm(pinned(z + step * d)) > (1.0 - 1e-4 * step) * base:
            step /= 2.0
        if step <= 1e-8:
            break
        z = z + step * d

    y = np.concatenate([(z0 if z0 is not None else x_default[:4]), np.zeros(2)])
    for _ in range(max_iter):
        F = kkt_map(y)
        if np.linalg.norm(F, np.inf) < 1e-10:
            break
        Jf = np.zeros((6, 6))
        for i in range(6):
            e = np.zeros(6)
            e[i] = h_fd
            Jf[:, i] = (kkt_map(y + e) - kkt_map(y - e)) / (2 * h_fd)
        try:
            d = np.linalg.solve(Jf, -F)
        except np.linalg.LinAlgError as exc:
            raise OracleFailureError(f"singular Newton matrix: {exc}") from exc
        # backtracking damping on the residual norm
        step, base = 1.0, np.linalg.norm(F)
        while step > 1e-8 and np.linalg.norm(kkt_map(y + step * d)) > (1.0 - 1e-4 * step) * base:
            step /= 2.0
        if step <= 1e-8:
            raise OracleFailureError("damped Newton stalled")
        y = y + step * d
    else:
        raise OracleFailureError(f"Newton did not converge in {max_iter} iterations")

    return verified(y[:4])
