"""Fixed-step RK4 integration of the closed-loop flows.

Fixed stepping is deliberate: the right-hand sides are non-Lipschitz on the
constraint manifold (Holder powers) and discontinuous when the robust term
is active, so adaptive error control thrashes there. Reach and KKT times
are detected with a sustained-tolerance rule since exact h = 0 is
unattainable in discrete time.

A batch of initial conditions can be integrated simultaneously when the
problem's evaluators broadcast; per-sample failures are isolated.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .controllers import ConvexFlowGains, DisturbanceSpec, FxtsGains, Law, as_law, make_rhs
from .errors import ConfigurationError, NumericalBlowupError
from .problem import ProblemSpec, check_state, pinv_psd


@dataclass(frozen=True)
class IntegrationConfig:
    """Fixed-step integration and detection settings.

    sustain_steps is the number of consecutive steps the tolerance must hold
    for reach/KKT detection (a duration of sustain_steps * step).
    """

    step: float = 1e-4
    t_end: float = 2.0
    record_stride: int = 10
    reach_tol: float = 1e-3
    kkt_tol: float = 1e-3
    sustain_steps: int = 50

    def __post_init__(self):
        if self.step <= 0:
            raise ConfigurationError("step must be positive")
        if self.t_end <= self.step:
            raise ConfigurationError("t_end must exceed step")
        if self.record_stride < 1:
            raise ConfigurationError("record_stride must be >= 1")
        if self.reach_tol <= 0 or self.kkt_tol <= 0:
            raise ConfigurationError("tolerances must be positive")
        if self.sustain_steps < 1:
            raise ConfigurationError("sustain_steps must be >= 1")

    @property
    def sustain_window(self) -> float:
        return self.sustain_steps * self.step


@dataclass
class Trajectory:
    """Recorded time history of one closed-loop run."""

    times: NDArray
    states: NDArray
    feasibility: NDArray
    feasibility_inf: NDArray
    stationarity: NDArray
    objective: NDArray
    multipliers: NDArray
    reach_time: Optional[float] = None
    kkt_time: Optional[float] = None

    def terminal_state(self) -> NDArray:
        return self.states[-1]

    def to_csv(self, path) -> None:
        """Write `t,x_1..x_n,feas,stat,obj,lam_1..lam_m` with 12+ significant digits."""
        n = self.states.shape[1]
        m = self.multipliers.shape[1]
        header = (
            ["t"]
            + [f"x_{i+1}" for i in range(n)]
            + ["feas", "stat", "obj"]
            + [f"lam_{i+1}" for i in range(m)]
        )
        buf = io.StringIO()
        buf.write(",".join(header) + "\n")
        table = np.column_stack(
            [self.times, self.states, self.feasibility, self.stationarity, self.objective, self.multipliers]
        )
        for row in table:
            buf.write(",".join(f"{v:.12e}" for v in row) + "\n")
        with open(path, "w", newline="\n") as fh:
            fh.write(buf.getvalue())


def step_rk4(rhs: Callable[[float, NDArray], NDArray], x: NDArray, t: float, step: float) -> NDArray:
    """One classical 4-stage Runge-Kutta update."""
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    k1 = np.asarray(rhs(t, x), dtype=float)
    k2 = np.asarray(rhs(t + step / 2.0, x + (step / 2.0) * k1), dtype=float)
    k3 = np.asarray(rhs(t + step / 2.0, x + (step / 2.0) * k2), dtype=float)
    k4 = np.asarray(rhs(t + step, x + step * k3), dtype=float)
    out = x + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if out.ndim == 1 and not np.all(np.isfinite(out)):
        raise NumericalBlowupError(t, x)
    return out


def detect_sustained(
    times: Sequence[float], values: Sequence[float], tol: float, sustain_window: float
) -> Optional[float]:
    """Earliest t with values <= tol throughout [t, t + sustain_window].

    The window must be fully observed within the trace; a dip that recovers
    above tol inside the window is rejected.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size == 0:
        return None
    ok = values <= tol
    start = None
    for i in range(times.size):
        if ok[i]:
            if start is None:
                start = i
            if times[i] - times[start] >= sustain_window:
                return float(times[start])
        else:
            start = None
    return None


def detect_reach_time(traj: Trajectory, tol: float, sustain_window: float) -> Optional[float]:
    """Reach time of the constraint manifold from the recorded ||h||_inf trace."""
    return detect_sustained(traj.times, traj.feasibility_inf, tol, sustain_window)


def _loop_wrap(f):
    def wrapped(X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return np.asarray(f(X), dtype=float)
        return np.stack([np.asarray(f(row), dtype=float) for row in X])

    return wrapped


def _vectorized_view(problem: ProblemSpec) -> ProblemSpec:
    """A view whose evaluators accept a leading batch axis, looping if needed."""
    if problem.vectorized:
        return problem
    return ProblemSpec(
        n=problem.n,
        m=problem.m,
        objective=_loop_wrap(problem.objective),
        gradient=_loop_wrap(problem.gradient),
        constraints=_loop_wrap(problem.constraints),
        jacobian=_loop_wrap(problem.jacobian),
        hessian=problem.hessian,
        vectorized=True,
        constant_jacobian=problem.constant_jacobian,
    )


def _record_arrays(problem: ProblemSpec, X: NDArray):
    """Per-sample feasibility, stationarity, objective, multipliers at states X (B, n)."""
    h = np.asarray(problem.constraints(X), dtype=float)
    g = np.asarray(problem.gradient(X), dtype=float)
    J = np.asarray(problem.jacobian(X), dtype=float)
    Gp = pinv_psd(J @ np.swapaxes(J, -1, -2))
    Jg = (J @ g[..., None])[..., 0]
    lam = -(Gp @ Jg[..., None])[..., 0]
    Pg = g + (np.swapaxes(J, -1, -2) @ lam[..., None])[..., 0]
    feas = np.linalg.norm(h, axis=-1)
    feas_inf = np.max(np.abs(h), axis=-1)
    stat = np.linalg.norm(Pg, axis=-1)
    obj = np.asarray(problem.objective(X), dtype=float)
    return h, feas, feas_inf, stat, obj, lam


def _integrate_batch(
    problem: ProblemSpec,
    rhs: Callable[[float, NDArray], NDArray],
    X0: NDArray,
    config: IntegrationConfig,
    disturbance: Optional[DisturbanceSpec] = None,
):
    """Advance a (B, n) batch, recording every record_stride steps.

    Returns (times, states (T,B,n), feas, feas_inf, stat, obj (T,B), lam
    (T,B,m), blowup_time (B,)). Samples that turn non-finite are frozen at
    their last finite state and flagged.
    """
    X = np.array(X0, dtype=float, ndmin=2)
    B = X.shape[0]
    n_steps = int(round(config.t_end / config.step))
    blowup = np.full(B, np.nan)
    active = np.ones(B, dtype=bool)

    rec_t, rec_x, rec_h = [], [], []
    rec = {k: [] for k in ("feas", "feas_inf", "stat", "obj", "lam")}

    def record(t, X):
        h, feas, feas_inf, stat, obj, lam = _record_arrays(problem, X)
        rec_t.append(t)
        rec_x.append(X.copy())
        rec["feas"].append(feas)
        rec["feas_inf"].append(feas_inf)
        rec["stat"].append(stat)
        rec["obj"].append(obj)
        rec["lam"].append(lam)
        if disturbance is not None:
            eta = np.asarray(disturbance.eta(t, X), dtype=float)
            if np.any(np.linalg.norm(np.atleast_1d(eta), axis=-1) > disturbance.bound + 1e-12):
                raise ConfigurationError("disturbance exceeded its declared bound")

    record(0.0, X)
    t = 0.0
    with np.errstate(all="ignore"):
        for k in range(1, n_steps + 1):
            k1 = np.asarray(rhs(t, X), dtype=float)
            k2 = np.asarray(rhs(t + config.step / 2.0, X + (config.step / 2.0) * k1), dtype=float)
            k3 = np.asarray(rhs(t + config.step / 2.0, X + (config.step / 2.0) * k2), dtype=float)
            k4 = np.asarray(rhs(t + config.step, X + config.step * k3), dtype=float)
            X_new = X + (config.step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            finite = np.all(np.isfinite(X_new), axis=-1)
            died = active & ~finite
            if np.any(died):
                blowup[died] = t
                active &= finite
            X = np.where((active & finite)[:, None], X_new, X)
            t = k * config.step
            if k % config.record_stride == 0 or k == n_steps:
                record(t, X)

    times = np.asarray(rec_t)
    states = np.asarray(rec_x)
    return (
        times,
        states,
        np.asarray(rec["feas"]),
        np.asarray(rec["feas_inf"]),
        np.asarray(rec["stat"]),
        np.asarray(rec["obj"]),
        np.asarray(rec["lam"]),
        blowup,
    )


def _trajectory_from_batch(arrays, b: int, config: IntegrationConfig) -> Trajectory:
    times, states, feas, feas_inf, stat, obj, lam, _ = arrays
    traj = Trajectory(
        times=times,
        states=states[:, b, :],
        feasibility=feas[:, b],
        feasibility_inf=feas_inf[:, b],
        stationarity=stat[:, b],
        objective=obj[:, b],
        multipliers=lam[:, b, :],
    )
    traj.reach_time = detect_sustained(times, traj.feasibility_inf, config.reach_tol, config.sustain_window)
    traj.kkt_time = detect_sustained(times, traj.stationarity, config.kkt_tol, config.sustain_window)
    return traj


def simulate(
    problem: ProblemSpec,
    law: Union[str, Law],
    x0: NDArray,
    fxts: Optional[FxtsGains] = None,
    convex: Optional[ConvexFlowGains] = None,
    disturbance: Optional[DisturbanceSpec] = None,
    config: IntegrationConfig = IntegrationConfig(),
) -> Trajectory:
    """Integrate one run from x0 and return its recorded trajectory.

    reach_time / kkt_time are populated with the sustained-tolerance rule.
    Inputs are never mutated; identical inputs give identical trajectories.
    """
    x0 = check_state(problem, np.asarray(x0, dtype=float))
    if x0.ndim != 1:
        raise ConfigurationError("simulate takes a single state; use simulate_batch for batches")
    problem = _vectorized_view(problem)
    rhs = make_rhs(problem, law, fxts, convex, disturbance)
    arrays = _integrate_batch(problem, rhs, x0[None, :], config, disturbance)
    blowup = arrays[-1]
    if np.isfinite(blowup[0]):
        idx = int(np.searchsorted(arrays[0], blowup[0], side="right")) - 1
        raise NumericalBlowupError(float(blowup[0]), arrays[1][max(idx, 0), 0])
    return _trajectory_from_batch(arrays, 0, config)


def simulate_batch(
    problem: ProblemSpec,
    law: Union[str, Law],
    X0: NDArray,
    fxts: Optional[FxtsGains] = None,
    convex: Optional[ConvexFlowGains] = None,
    disturbance: Optional[DisturbanceSpec] = None,
    config: IntegrationConfig = IntegrationConfig(),
) -> list[Optional[Trajectory]]:
    """Integrate a (B, n) batch of initial conditions simultaneously.

    Requires vectorized problem evaluators. Rows that blow up yield None
    instead of aborting the batch.
    """
    if not problem.vectorized:
        raise ConfigurationError("simulate_batch requires a problem with vectorized evaluators")
    X0 = check_state(problem, np.asarray(X0, dtype=float))
    rhs = make_rhs(problem, law, fxts, convex, disturbance)
    arrays = _integrate_batch(problem, rhs, X0, config, disturbance)
    blowup = arrays[-1]
    out: list[Optional[Trajectory]] = []
    for b in range(X0.shape[0]):
        out.append(None if np.isfinite(blowup[b]) else _trajectory_from_batch(arrays, b, config))
    return out


@dataclass
class SweepRow:
    x0: NDArray
    reach_time: Optional[float]
    kkt_time: Optional[float]
    error: Optional[str] = None


@dataclass
class SweepResult:
    rows: list[SweepRow]
    max_reach_time: Optional[float]
    trajectories: Optional[list[Optional[Trajectory]]] = field(default=None, repr=False)

    def to_csv(self, path) -> None:
        n = len(self.rows[0].x0)
        header = [f"x0_{i+1}" for i in range(n)] + ["reach_time", "kkt_time", "error"]
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for r in self.rows:
                vals = [f"{v:.12e}" for v in r.x0]
                vals.append("" if r.reach_time is None else f"{r.reach_time:.12e}")
                vals.append("" if r.kkt_time is None else f"{r.kkt_time:.12e}")
                vals.append(r.error or "")
                fh.write(",".join(vals) + "\n")


def log_radius_sampler(n: int, radius_min: float, radius_max: float, seed: int) -> Callable[[int], NDArray]:
    """Seeded sampler: uniform directions on log-spaced radii in [radius_min, radius_max]."""
    if not 0 < radius_min <= radius_max:
        raise ConfigurationError("need 0 < radius_min <= radius_max")

    def sample(count: int) -> NDArray:
        rng = np.random.default_rng(seed)
        radii = np.exp(rng.uniform(np.log(radius_min), np.log(radius_max), size=count))
        dirs = rng.standard_normal((count, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        return radii[:, None] * dirs

    return sample


def sweep_initial_conditions(
    problem: ProblemSpec,
    law: Union[str, Law],
    sampler: Callable[[int], NDArray],
    count: int,
    fxts: Optional[FxtsGains] = None,
    convex: Optional[ConvexFlowGains] = None,
    config: IntegrationConfig = IntegrationConfig(),
    disturbance: Optional[DisturbanceSpec] = None,
    keep_trajectories: bool = False,
) -> SweepResult:
    """Run simulate over `count` sampled initial conditions.

    Per-row failures are recorded, not fatal. Vectorized problems are
    integrated as one batch.
    """
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    X0 = np.asarray(sampler(count), dtype=float)
    rows: list[SweepRow] = []
    trajs: list[Optional[Trajectory]] = []
    if problem.vectorized:
        trajs = simulate_batch(problem, law, X0, fxts, convex, disturbance, config)
        for b, traj in enumerate(trajs):
            if traj is None:
                rows.append(SweepRow(X0[b], None, None, error="numerical blowup"))
            else:
                rows.append(SweepRow(X0[b], traj.reach_time, traj.kkt_time))
    else:
        for b in range(count):
            try:
                traj = simulate(problem, law, X0[b], fxts, convex, disturbance, config)
                rows.append(SweepRow(X0[b], traj.reach_time, traj.kkt_time))
                trajs.append(traj)
            except NumericalBlowupError as exc:
                rows.append(SweepRow(X0[b], None, None, error=str(exc)))
                trajs.append(None)
    reach = [r.reach_time for r in rows if r.reach_time is not None]
    return SweepResult(
        rows=rows,
        max_reach_time=max(reach) if reach else None,
        trajectories=trajs if keep_trajectories else None,
    )
