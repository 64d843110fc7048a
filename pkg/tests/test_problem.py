"""Geometry and derivative-audit primitives."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fxtsopt import (
    DimensionMismatchError,
    ProblemSpec,
    finite_difference_audit,
    gram,
    kkt_residual,
    multiplier_estimate,
    pinv_gram,
    pinv_psd,
    projector,
)
from fxtsopt.problem import check_state


def quadratic_problem(n=3, m=1):
    A = np.diag(np.arange(1.0, n + 1.0))
    B = np.vander(np.arange(1.0, m + 1.0), n, increasing=True)
    c = np.arange(float(m)) + 1.0
    return ProblemSpec(
        n=n,
        m=m,
        objective=lambda x: 0.5 * x @ A @ x,
        gradient=lambda x: A @ x,
        constraints=lambda x: B @ x - c,
        jacobian=lambda x: B.copy(),
        constant_jacobian=True,
    )


finite_vectors = arrays(
    np.float64, 3, elements=st.floats(-50, 50, allow_nan=False, allow_infinity=False)
)


class TestCheckState:
    def test_accepts_correct_shape(self):
        p = quadratic_problem()
        x = check_state(p, [1.0, 2.0, 3.0])
        assert x.shape == (3,)

    def test_rejects_wrong_length(self):
        p = quadratic_problem()
        with pytest.raises(DimensionMismatchError):
            check_state(p, np.zeros(4))


class TestPinvPsd:
    def test_inverts_full_rank(self):
        G = np.array([[4.0, 1.0], [1.0, 3.0]])
        assert np.allclose(pinv_psd(G) @ G, np.eye(2), atol=1e-12)

    def test_penrose_laws_on_singular_gram(self):
        # Gram of a rank-deficient Jacobian: L^2 for a path graph Laplacian.
        L = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
        G = L @ L
        Gp = pinv_psd(G)
        assert np.allclose(G @ Gp @ G, G, atol=1e-10)
        assert np.allclose(Gp @ G @ Gp, Gp, atol=1e-10)
        assert np.allclose(G @ Gp, (G @ Gp).T, atol=1e-12)
        assert np.allclose(Gp @ G, (Gp @ G).T, atol=1e-12)

    def test_matches_numpy_pinv(self):
        rng = np.random.default_rng(0)
        J = rng.standard_normal((2, 5))
        G = J @ J.T
        assert np.allclose(pinv_psd(G), np.linalg.pinv(G), atol=1e-10)


class TestProjector:
    @settings(max_examples=50, deadline=None)
    @given(finite_vectors)
    def test_idempotent_and_annihilates_jacobian_rows(self, x):
        p = quadratic_problem()
        P = projector(p, x)
        assert np.allclose(P @ P, P, atol=1e-10)
        J = p.jacobian(x)
        assert np.allclose(J @ P, 0.0, atol=1e-10)

    def test_symmetric(self):
        p = quadratic_problem(m=2)
        P = projector(p, np.array([1.0, -2.0, 0.5]))
        assert np.allclose(P, P.T, atol=1e-12)


class TestKkt:
    def test_multiplier_least_squares(self):
        p = quadratic_problem()
        x = np.array([0.3, -0.7, 1.1])
        lam = multiplier_estimate(p, x)
        J = p.jacobian(x)
        g = p.gradient(x)
        # normal equations of min ||g + J^T lam||
        assert np.allclose(J @ (g + J.T @ lam), 0.0, atol=1e-10)

    def test_residual_zero_at_kkt_point(self):
        # min 1/2 x^T A x s.t. b^T x = c has an explicit KKT solution.
        p = quadratic_problem()
        A = np.diag([1.0, 2.0, 3.0])
        b = np.ones(3)
        x_star = np.linalg.solve(A, b)
        x_star *= 1.0 / (b @ x_star)
        res = kkt_residual(p, x_star)
        assert res.feasibility < 1e-12
        assert res.stationarity < 1e-12

    def test_gram_and_pinv_consistent(self):
        p = quadratic_problem(m=2)
        x = np.array([0.1, 0.2, 0.3])
        G = gram(p, x)
        assert np.allclose(G @ pinv_gram(p, x) @ G, G, atol=1e-10)


class TestFiniteDifferenceAudit:
    def test_analytic_derivatives_pass(self):
        p = quadratic_problem(m=2)
        ge, je = finite_difference_audit(p, np.array([0.4, -1.2, 0.8]))
        assert ge < 1e-8
        assert je < 1e-8

    def test_detects_wrong_gradient(self):
        p = quadratic_problem()
        bad = ProblemSpec(
            n=p.n, m=p.m, objective=p.objective,
            gradient=lambda x: p.gradient(x) + 0.1,
            constraints=p.constraints, jacobian=p.jacobian,
        )
        ge, _ = finite_difference_audit(bad, np.ones(3))
        assert ge > 1e-3

    def test_rejects_nonpositive_step(self):
        p = quadratic_problem()
        with pytest.raises(ValueError):
            finite_difference_audit(p, np.zeros(3), step=0.0)
