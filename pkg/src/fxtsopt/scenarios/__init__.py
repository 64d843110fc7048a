"""Scenario registry: named problem instances with their default laws/gains.

Each scenario bundles a ProblemSpec, an initial state, the gain sets and
law used for it, and a reference-solution callable used by reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray

from ..controllers import ConvexFlowGains, FxtsGains, Law
from ..errors import ConfigurationError
from ..problem import ProblemSpec
from . import acopf3, convex, estimation, sphere

SCENARIO_NAMES = ("sphere", "acopf3", "estimation", "convex-quadratic")


@dataclass
class Scenario:
    """A ready-to-integrate problem instance."""

    name: str
    problem: ProblemSpec
    x0: NDArray
    fxts: FxtsGains
    convex: Optional[ConvexFlowGains]
    law: Law
    # maps the scenario to a reference optimum: (x_star or None, phi_star or None)
    reference: Callable[[], tuple[Optional[NDArray], Optional[float]]]
    options: dict = field(default_factory=dict)


def _sphere_scenario(options: dict) -> Scenario:
    objective = options.pop("objective", "default-quadratic")
    problem, x0 = sphere.build_sphere(objective=objective)

    def reference():
        x_star, phi_star = sphere.angle_grid_oracle(problem)
        return x_star, phi_star

    return Scenario(
        name="sphere",
        problem=problem,
        x0=x0,
        fxts=sphere.default_gains(),
        convex=None,
        law=sphere.default_law(),
        reference=reference,
    )


def _acopf3_scenario(options: dict) -> Scenario:
    data = acopf3.AcopfData()
    problem, x0 = acopf3.build_acopf3(data)

    def reference():
        x_star, phi_star = acopf3.acopf_feasible_oracle(data)
        return x_star, phi_star

    return Scenario(
        name="acopf3",
        problem=problem,
        x0=x0,
        fxts=acopf3.default_gains(),
        convex=None,
        law=acopf3.default_law(),
        reference=reference,
    )


def _estimation_scenario(options: dict) -> Scenario:
    node_count = int(options.pop("node_count", 5))
    noise_seed = options.pop("noise_seed", None)
    noise_seed = None if noise_seed in (None, "", "none") else int(noise_seed)
    ic_seed = int(options.pop("ic_seed", 7))
    net = estimation.make_network(node_count=node_count, noise_seed=noise_seed)
    problem, x0 = estimation.build_estimation(net, ic_seed=ic_seed)
    fxts, cvx = estimation.default_gains()

    def reference():
        theta = estimation.centralized_ls_oracle(net)
        x_star = np.tile(theta, node_count)
        return x_star, float(problem.objective(x_star))

    return Scenario(
        name="estimation",
        problem=problem,
        x0=x0,
        fxts=fxts,
        convex=cvx,
        law=estimation.default_law(),
        reference=reference,
        options={"node_count": node_count, "noise_seed": noise_seed},
    )


def _convex_scenario(options: dict) -> Scenario:
    mu = float(options.pop("mu", 1.0))
    problem, x_star = convex.build_convex_quadratic(mu=mu)
    fxts, cvx = convex.default_gains(mu=mu)
    rng = np.random.default_rng(int(options.pop("ic_seed", 3)))
    x0 = x_star + rng.standard_normal(problem.n)

    def reference():
        return x_star, float(problem.objective(x_star))

    return Scenario(
        name="convex-quadratic",
        problem=problem,
        x0=x0,
        fxts=fxts,
        convex=cvx,
        law=convex.default_law(),
        reference=reference,
        options={"mu": mu},
    )


_BUILDERS = {
    "sphere": _sphere_scenario,
    "acopf3": _acopf3_scenario,
    "estimation": _estimation_scenario,
    "convex-quadratic": _convex_scenario,
}


def get_scenario(name: str, **options) -> Scenario:
    """Build a scenario by name; unknown names or options are errors."""
    if name not in _BUILDERS:
        raise ConfigurationError(
            f"unknown scenario {name!r}; choose from {', '.join(SCENARIO_NAMES)}"
        )
    opts = dict(options)
    scenario = _BUILDERS[name](opts)
    if opts:
        raise ConfigurationError(f"unknown scenario options for {name!r}: {sorted(opts)}")
    return scenario
