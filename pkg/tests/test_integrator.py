"""Fixed-step integration, event detection, sweeps, and CSV output."""

import numpy as np
import pytest

from fxtsopt import (
    ConfigurationError,
    FxtsGains,
    IntegrationConfig,
    NumericalBlowupError,
    log_radius_sampler,
    simulate,
    simulate_batch,
    sweep_initial_conditions,
)
from fxtsopt.integrator import detect_sustained, step_rk4
from fxtsopt.scenarios import sphere


def gains():
    return sphere.default_gains()


class TestStepRk4:
    def test_fourth_order_on_linear_ode(self):
        # x' = -x from 1: one step of size h has local error O(h^5).
        x = np.array([1.0])
        h = 1e-2
        out = step_rk4(lambda t, x: -x, x, 0.0, h)
        assert abs(out[0] - np.exp(-h)) < 1e-11

    def test_time_dependence_honored(self):
        # x' = t integrates exactly to t^2/2 (RK4 is exact on polynomials <= 3).
        out = step_rk4(lambda t, x: np.array([t]), np.array([0.0]), 0.0, 0.5)
        assert abs(out[0] - 0.125) < 1e-14

    def test_rejects_nonpositive_step(self):
        with pytest.raises(ValueError):
            step_rk4(lambda t, x: -x, np.ones(1), 0.0, 0.0)

    def test_raises_on_nonfinite(self):
        with pytest.raises(NumericalBlowupError):
            step_rk4(lambda t, x: x * np.inf, np.ones(1), 0.0, 1e-3)


class TestDetectSustained:
    def test_requires_full_window(self):
        t = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
        v = np.array([1.0, 0.1, 1.0, 0.1, 0.1])
        # the dip at t=1 recovers; only the tail from t=3 sustains
        assert detect_sustained(t, v, 0.5, 1.0) == 3.0

    def test_none_when_never_sustained(self):
        t = np.linspace(0, 1, 11)
        v = np.ones(11)
        assert detect_sustained(t, v, 0.5, 0.2) is None

    def test_empty_trace(self):
        assert detect_sustained([], [], 0.5, 0.2) is None


class TestSimulate:
    @pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning",
                                "ignore:invalid value:RuntimeWarning")
    def test_blowup_raises_with_context(self):
        problem, _ = sphere.build_sphere(
            objective="user-supplied",
            user_objective=(
                lambda x: np.exp(np.sum(x * x, axis=-1)),
                lambda x: 2.0 * x * np.exp(np.sum(x * x, axis=-1))[..., None],
            ),
        )
        cfg = IntegrationConfig(step=1e-2, t_end=1.0)
        with pytest.raises(NumericalBlowupError) as exc:
            simulate(problem, "nonconvex-fxts", np.array([30.0, 0.0]), gains(), config=cfg)
        assert np.all(np.isfinite(exc.value.x))

    def test_reach_time_detected_and_bounded(self):
        problem, x0 = sphere.build_sphere()
        cfg = IntegrationConfig(step=1e-3, t_end=2.0, reach_tol=1e-3)
        traj = simulate(problem, "nonconvex-fxts", x0, gains(), config=cfg)
        assert traj.reach_time is not None
        assert traj.reach_time <= 1.6

    def test_batch_matches_single(self):
        problem, x0 = sphere.build_sphere()
        cfg = IntegrationConfig(step=1e-3, t_end=0.5)
        X0 = np.stack([x0, np.array([0.1, -3.0])])
        trajs = simulate_batch(problem, "nonconvex-fxts", X0, gains(), config=cfg)
        single = simulate(problem, "nonconvex-fxts", X0[1], gains(), config=cfg)
        assert np.allclose(trajs[1].states, single.states, atol=1e-12)
        assert np.allclose(trajs[1].feasibility, single.feasibility, atol=1e-12)

    def test_inputs_not_mutated(self):
        problem, x0 = sphere.build_sphere()
        snapshot = x0.copy()
        simulate(problem, "nonconvex-fxts", x0, gains(),
                 config=IntegrationConfig(step=1e-2, t_end=0.1))
        assert np.array_equal(x0, snapshot)

    def test_rejects_batched_input(self):
        problem, x0 = sphere.build_sphere()
        with pytest.raises(ConfigurationError):
            simulate(problem, "nonconvex-fxts", np.stack([x0, x0]), gains())


class TestCsv:
    def test_header_and_precision(self, tmp_path):
        problem, x0 = sphere.build_sphere()
        cfg = IntegrationConfig(step=1e-2, t_end=0.1, record_stride=1)
        traj = simulate(problem, "nonconvex-fxts", x0, gains(), config=cfg)
        path = tmp_path / "trace.csv"
        traj.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,x_1,x_2,feas,stat,obj,lam_1"
        cell = lines[1].split(",")[1]
        mantissa = cell.split("e")[0].replace("-", "").replace(".", "")
        assert len(mantissa) >= 12  # 12+ significant digits

    def test_byte_identical_reruns(self, tmp_path):
        problem, x0 = sphere.build_sphere()
        cfg = IntegrationConfig(step=1e-2, t_end=0.3)
        paths = []
        for tag in ("a", "b"):
            traj = simulate(problem, "nonconvex-fxts", x0, gains(), config=cfg)
            p = tmp_path / f"{tag}.csv"
            traj.to_csv(p)
            paths.append(p)
        assert paths[0].read_bytes() == paths[1].read_bytes()


class TestSweep:
    def test_sampler_radii_in_range_and_deterministic(self):
        sampler = log_radius_sampler(3, 1e-2, 1e2, seed=5)
        X = sampler(200)
        radii = np.linalg.norm(X, axis=1)
        assert radii.min() >= 1e-2 and radii.max() <= 1e2
        assert np.array_equal(X, log_radius_sampler(3, 1e-2, 1e2, seed=5)(200))

    def test_sampler_rejects_bad_range(self):
        with pytest.raises(ConfigurationError):
            log_radius_sampler(2, 1.0, 0.5, seed=0)

    def test_sweep_rows_and_csv(self, tmp_path):
        problem, _ = sphere.build_sphere()
        cfg = IntegrationConfig(step=1e-3, t_end=2.0)
        sampler = log_radius_sampler(2, 0.5, 2.0, seed=1)
        result = sweep_initial_conditions(problem, "nonconvex-fxts", sampler, 5,
                                          fxts=gains(), config=cfg)
        assert len(result.rows) == 5
        assert all(r.reach_time is not None for r in result.rows)
        assert result.max_reach_time <= 1.6
        path = tmp_path / "sweep.csv"
        result.to_csv(path)
        assert path.read_text().splitlines()[0].startswith("x0_1,x0_2,reach_time")

    def test_sweep_count_validated(self):
        problem, _ = sphere.build_sphere()
        with pytest.raises(ConfigurationError):
            sweep_initial_conditions(problem, "nonconvex-fxts",
                                     log_radius_sampler(2, 1, 2, seed=0), 0, fxts=gains())


class TestIntegrationConfig:
    def test_validation(self):
        with pytest.raises(ConfigurationError):
            IntegrationConfig(step=0.0)
        with pytest.raises(ConfigurationError):
            IntegrationConfig(step=1e-3, t_end=-1.0)

    def test_sustain_window(self):
        cfg = IntegrationConfig(step=1e-3, sustain_steps=50)
        assert cfg.sustain_window == pytest.approx(0.05)
