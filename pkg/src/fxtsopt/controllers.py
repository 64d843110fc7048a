"""Multiplier control laws, flow right-hand sides, and settling-time bounds.

The closed loop treats the Lagrange multiplier as a feedback control: an
equivalent part keeps the constraint manifold invariant and a switching
part (elementwise signed powers, or a norm-regularized variant) reaches it
in bounded time. A fixed-time descent direction replaces the plain gradient
for strongly convex objectives, and a discontinuous robust term rejects
matched disturbances.

All functions are pure in (problem, gains, x, t) and broadcast over a
leading batch axis on the state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError, GainConditionError, SingularEvaluationError
from .problem import ProblemSpec, check_state, pinv_psd

LAW_NAMES = (
    "nonconvex-fxts",
    "robust-fxts",
    "convex-fxts",
    "projected-gradient-baseline",
)

SWITCHING_STYLES = ("elementwise", "norm")


def _positive_vector(v, name: str) -> NDArray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1 or np.any(arr <= 0):
        raise ValueError(f"{name} must be a positive scalar or 1-d vector")
    return arr


@dataclass(frozen=True)
class FxtsGains:
    """Switching/equivalent-control gain set for the sliding multiplier.

    alpha, beta are per-constraint positive gains (scalars broadcast),
    p in (0,1) and q > 1 are the signed-power exponents, rho is the robust
    switching gain against matched disturbances bounded by eta_bar, and
    boundary_layer smooths the discontinuous robust term (0 recovers the
    exact sign law).
    """

    alpha: NDArray
    beta: NDArray
    p: float
    q: float
    rho: float = 0.0
    eta_bar: float = 0.0
    boundary_layer: float = 1e-4

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive_vector(self.alpha, "alpha"))
        object.__setattr__(self, "beta", _positive_vector(self.beta, "beta"))
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.q <= 1.0:
            raise ValueError("q must exceed 1")
        if self.rho < 0 or self.eta_bar < 0 or self.boundary_layer < 0:
            raise ValueError("rho, eta_bar and boundary_layer must be non-negative")

    @property
    def alpha_min(self) -> float:
        return float(np.min(self.alpha))

    @property
    def beta_min(self) -> float:
        return float(np.min(self.beta))


@dataclass(frozen=True)
class ConvexFlowGains:
    """Gains of the fixed-time descent direction and its settling bound.

    gamma1, gamma2 > 0 scale the two gradient terms, r1 in (0,1) and r2 > 1
    are their exponents, epsilon regularizes the denominators, and mu is the
    strong-convexity modulus used only when reporting the optimality bound.
    """

    gamma1: float
    gamma2: float
    r1: float
    r2: float
    epsilon: float = 1e-6
    mu: float = 1.0

    def __post_init__(self):
        if self.gamma1 <= 0 or self.gamma2 <= 0:
            raise ValueError("gamma1 and gamma2 must be positive")
        if not 0.0 < self.r1 < 1.0:
            raise ValueError("r1 must lie in (0, 1)")
        if self.r2 <= 1.0:
            raise ValueError("r2 must exceed 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.mu <= 0:
            raise ValueError("mu must be positive")


@dataclass(frozen=True)
class DisturbanceSpec:
    """Matched disturbance channel: x_dot gains + J^T eta(t, x), ||eta|| <= bound."""

    eta: Callable[[float, NDArray], NDArray]
    bound: float

    def __post_init__(self):
        if self.bound < 0:
            raise ValueError("bound must be non-negative")


def sin_disturbance(amplitude: float, frequency: float, m: int = 1) -> DisturbanceSpec:
    """Deterministic eta(t) = amplitude * sin(frequency * t) in every component."""
    amp = float(amplitude)

    def eta(t, x):
        return np.full(m, amp * np.sin(frequency * t))

    return DisturbanceSpec(eta=eta, bound=abs(amp) * float(np.sqrt(m)))


@dataclass(frozen=True)
class Law:
    """Controller selector: which closed loop to assemble.

    switching chooses elementwise signed powers or the norm-regularized
    variant; mu_pgf is the projected-gradient baseline gain.
    """

    name: str
    switching: str = "elementwise"
    mu_pgf: float = 5.0

    def __post_init__(self):
        if self.name not in LAW_NAMES:
            raise ConfigurationError(f"unknown law selector {self.name!r}; expected one of {LAW_NAMES}")
        if self.switching not in SWITCHING_STYLES:
            raise ConfigurationError(f"unknown switching style {self.switching!r}")
        if self.mu_pgf <= 0:
            raise ConfigurationError("mu_pgf must be positive")


def as_law(law: Union[str, Law]) -> Law:
    return law if isinstance(law, Law) else Law(name=law)


def signed_power(v: NDArray, e: float) -> NDArray:
    """Elementwise sgn(v_i) |v_i|^e; odd, and continuous at 0 for e > 0."""
    if e <= 0:
        raise ValueError("exponent must be positive")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.abs(v) ** e


def _mv(A: NDArray, v: NDArray) -> NDArray:
    return (A @ v[..., None])[..., 0]


def _geometry(problem: ProblemSpec, x: NDArray):
    """Shared per-state quantities: gradient, h, J, G^+."""
    x = check_state(problem, x)
    g = np.asarray(problem.gradient(x), dtype=float)
    h = np.asarray(problem.constraints(x), dtype=float)
    J = np.asarray(problem.jacobian(x), dtype=float)
    Gp = pinv_psd(J @ np.swapaxes(J, -1, -2))
    return g, h, J, Gp


def lambda_eq(problem: ProblemSpec, x: NDArray) -> NDArray:
    """Equivalent control -G^+ J grad: keeps the manifold invariant once reached."""
    g, _, J, Gp = _geometry(problem, x)
    return -_mv(Gp, _mv(J, g))


def switching_drive(
    h: NDArray, gains: FxtsGains, style: str = "elementwise", epsilon: float = 0.0
) -> NDArray:
    """The raw switching vector before multiplication by G^+.

    elementwise: alpha o sgn(h)|h|^p + beta o sgn(h)|h|^q.
    norm: alpha h/(||h||+eps)^(1-p) + beta h (||h||+eps)^(q-1), i.e. the
    direction h/||h|| scaled by alpha ||h||^p + beta ||h||^q, mirroring the
    elementwise magnitudes. Both term magnitudes vanish with h, so the
    power q > 1 keeps the drive bounded near the manifold; this is the
    exponent required by the fixed-time reaching analysis V' <= -c1 V^(1+p)/2
    - c2 V^(1+q)/2, and the regularization eps only guards the 0/0 division
    in the sublinear term.
    """
    h = np.asarray(h, dtype=float)
    if style == "elementwise":
        return gains.alpha * signed_power(h, gains.p) + gains.beta * signed_power(h, gains.q)
    if style == "norm":
        nrm = np.linalg.norm(h, axis=-1, keepdims=True) + epsilon
        if epsilon == 0.0 and np.any(nrm == 0.0):
            # direction-preserving form: zero stays zero
            nrm = np.where(nrm == 0.0, 1.0, nrm)
        return gains.alpha * h / nrm ** (1.0 - gains.p) + gains.beta * h * nrm ** (gains.q - 1.0)
    raise ConfigurationError(f"unknown switching style {style!r}")


def lambda_sw(
    problem: ProblemSpec,
    x: NDArray,
    gains: FxtsGains,
    style: str = "elementwise",
    epsilon: float = 0.0,
) -> NDArray:
    """Switching multiplier G^+ (switching drive); zero on the manifold."""
    _, h, _, Gp = _geometry(problem, x)
    return _mv(Gp, switching_drive(h, gains, style, epsilon))


def lambda_fxts(
    problem: ProblemSpec,
    x: NDArray,
    gains: FxtsGains,
    style: str = "elementwise",
    epsilon: float = 0.0,
) -> NDArray:
    """Full fixed-time multiplier: equivalent + switching parts."""
    g, h, J, Gp = _geometry(problem, x)
    return _mv(Gp, -_mv(J, g) + switching_drive(h, gains, style, epsilon))


def saturated_sign(h: NDArray, boundary_layer: float) -> NDArray:
    """Exact sign when boundary_layer == 0 (with sgn(0) = 0), else h/(|h|+width)."""
    h = np.asarray(h, dtype=float)
    if boundary_layer == 0.0:
        return np.sign(h)
    return h / (np.abs(h) + boundary_layer)


def robust_switch(problem: ProblemSpec, x: NDArray, gains: FxtsGains) -> NDArray:
    """Robust multiplier G^+ rho sgn_bl(h) rejecting matched disturbances."""
    _, h, _, Gp = _geometry(problem, x)
    return _mv(Gp, gains.rho * saturated_sign(h, gains.boundary_layer))


def f1_direction(problem: ProblemSpec, x: NDArray, gains: ConvexFlowGains) -> NDArray:
    """Fixed-time descent direction.

    gamma1 grad/(||grad||+eps)^(1-r1) + gamma2 grad (||grad||+eps)^(r2-1):
    the gradient direction scaled by gamma1 ||grad||^r1 + gamma2 ||grad||^r2.
    With r1 in (0,1) and r2 > 1 this is exactly the pair of Lyapunov decay
    exponents behind the fixed-time optimality bound (phi' <= -gamma1 (2 mu
    V)^((1+r1)/2) - gamma2 (2 mu V)^((1+r2)/2) under mu-strong convexity);
    both term magnitudes vanish with the gradient, so with eps > 0 the map
    is globally defined and returns 0 at a critical point.
    """
    x = check_state(problem, x)
    g = np.asarray(problem.gradient(x), dtype=float)
    nrm = np.linalg.norm(g, axis=-1, keepdims=True)
    if gains.epsilon == 0.0 and np.any(nrm == 0.0):
        raise SingularEvaluationError("f1_direction undefined at a critical point with epsilon = 0")
    d = nrm + gains.epsilon
    return gains.gamma1 * g / d ** (1.0 - gains.r1) + gains.gamma2 * g * d ** (gains.r2 - 1.0)


def capital_lambda_fxts(
    problem: ProblemSpec,
    x: NDArray,
    fxts: FxtsGains,
    convex: ConvexFlowGains,
    style: str = "elementwise",
) -> NDArray:
    """Multiplier for the convex flow: G^+[-J F1 + switching drive]."""
    _, h, J, Gp = _geometry(problem, x)
    F1 = f1_direction(problem, x, convex)
    drive = switching_drive(h, fxts, style, convex.epsilon)
    return _mv(Gp, -_mv(J, F1) + drive)


def make_rhs(
    problem: ProblemSpec,
    law: Union[str, Law],
    fxts: Optional[FxtsGains] = None,
    convex: Optional[ConvexFlowGains] = None,
    disturbance: Optional[DisturbanceSpec] = None,
) -> Callable[[float, NDArray], NDArray]:
    """Assemble the closed-loop right-hand side x_dot = f(t, x) for a law.

    For problems with a constant constraint Jacobian, J, G^+ and the tangent
    projector are evaluated once and reused.
    """
    law = as_law(law)
    if law.name in ("nonconvex-fxts", "robust-fxts") and fxts is None:
        raise ConfigurationError(f"law {law.name!r} requires FxtsGains")
    if law.name == "convex-fxts" and (fxts is None or convex is None):
        raise ConfigurationError("law 'convex-fxts' requires FxtsGains and ConvexFlowGains")
    if law.name == "robust-fxts" and fxts is not None and fxts.eta_bar > 0:
        if fxts.alpha_min <= fxts.eta_bar:
            raise GainConditionError(
                f"robust law needs min(alpha) > eta_bar; got {fxts.alpha_min} <= {fxts.eta_bar}"
            )

    eps = convex.epsilon if convex is not None else 0.0

    cached = {}
    if problem.constant_jacobian:
        probe = np.zeros(problem.n)
        J0 = np.asarray(problem.jacobian(probe), dtype=float)
        Gp0 = pinv_psd(J0 @ J0.T)
        cached["J"] = J0
        cached["Gp"] = Gp0

    def geometry(x):
        if cached:
            return cached["J"], cached["Gp"]
        J = np.asarray(problem.jacobian(x), dtype=float)
        return J, pinv_psd(J @ np.swapaxes(J, -1, -2))

    def rhs(t: float, x: NDArray) -> NDArray:
        x = np.asarray(x, dtype=float)
        h = np.asarray(problem.constraints(x), dtype=float)
        J, Gp = geometry(x)
        Jt = np.swapaxes(J, -1, -2)

        if law.name == "projected-gradient-baseline":
            g = np.asarray(problem.gradient(x), dtype=float)
            Pg = g - _mv(Jt, _mv(Gp, _mv(J, g)))
            xdot = -law.mu_pgf * Pg - _mv(Jt, _mv(Gp, h))
        elif law.name == "convex-fxts":
            F1 = f1_direction(problem, x, convex)
            lam = _mv(Gp, -_mv(J, F1) + switching_drive(h, fxts, law.switching, eps))
            xdot = -F1 - _mv(Jt, lam)
        else:
            g = np.asarray(problem.gradient(x), dtype=float)
            lam = _mv(Gp, -_mv(J, g) + switching_drive(h, fxts, law.switching, eps))
            if law.name == "robust-fxts":
                lam = lam + _mv(Gp, fxts.rho * saturated_sign(h, fxts.boundary_layer))
            xdot = -g - _mv(Jt, lam)

        if disturbance is not None:
            xdot = xdot + _mv(Jt, np.asarray(disturbance.eta(t, x), dtype=float) + np.zeros_like(h))
        return xdot

    return rhs


def closed_loop_rhs(
    problem: ProblemSpec,
    law: Union[str, Law],
    x: NDArray,
    t: float = 0.0,
    fxts: Optional[FxtsGains] = None,
    convex: Optional[ConvexFlowGains] = None,
    disturbance: Optional[DisturbanceSpec] = None,
) -> NDArray:
    """Closed-loop state derivative at (t, x) under the selected law."""
    x = check_state(problem, x)
    return make_rhs(problem, law, fxts, convex, disturbance)(t, x)


def settling_bound_nonconvex(gains: FxtsGains) -> float:
    """Worst-case manifold reach time 2/(a_min(1-p)) + 2/(b_min(q-1))."""
    return 2.0 / (gains.alpha_min * (1.0 - gains.p)) + 2.0 / (gains.beta_min * (gains.q - 1.0))


def settling_bound_robust(gains: FxtsGains) -> float:
    """Reach-time bound under matched disturbances bounded by eta_bar."""
    margin = gains.alpha_min - gains.eta_bar
    if margin <= 0:
        raise GainConditionError(
            f"robust bound requires min(alpha) > eta_bar; got {gains.alpha_min} <= {gains.eta_bar}"
        )
    return 2.0 / (margin * (1.0 - gains.p)) + 2.0 / (gains.beta_min * (gains.q - 1.0))


def settling_bound_convex(
    fxts: FxtsGains, convex: ConvexFlowGains, proof_exponents: bool = False
) -> tuple[float, float, float]:
    """(T_c, T_o, T_total) for the convex flow.

    T_c is the manifold-reach bound; T_o uses exponents (1+r)/2 on the 2*mu
    factor, matching the Lyapunov decay rates of the descent direction.
    proof_exponents=True switches to the alternative r/2 form.
    """
    t_c = settling_bound_nonconvex(fxts)
    two_mu = 2.0 * convex.mu
    if proof_exponents:
        e1, e2 = convex.r1 / 2.0, convex.r2 / 2.0
    else:
        e1, e2 = (1.0 + convex.r1) / 2.0, (1.0 + convex.r2) / 2.0
    t_o = 2.0 / (convex.gamma1 * two_mu**e1 * (1.0 - convex.r1)) + 2.0 / (
        convex.gamma2 * two_mu**e2 * (convex.r2 - 1.0)
    )
    return t_c, t_o, t_c + t_o
