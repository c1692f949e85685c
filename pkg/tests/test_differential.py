import numpy as np
import pytest

from pdom import registry
from pdom.differential import (
    Channel,
    LureSystem,
    check_diff_dissipativity,
    check_diff_dominance,
    cubic_saturated,
    diff_feedback_compose,
    jacobian,
    scaled,
    tabulated,
    vertex_family,
)
from pdom.dissipativity import supply_passivity
from pdom.errors import DimensionError
from pdom.interconnect import feedback_compose
from pdom.lti import check_dominance, DominanceCertificate


class TestNonlinearities:
    def test_cubic_values(self):
        sigma = cubic_saturated()
        assert sigma(0.0) == 0.0
        assert sigma(1.0) == pytest.approx(2.0 / 3.0)
        assert sigma(np.sqrt(3.0)) == pytest.approx(0.0)  # nontrivial spring zero
        assert sigma(3.0) == pytest.approx(-1.0)  # saturated branch -s/3

    def test_cubic_derivative_branches(self):
        sigma = cubic_saturated()
        assert sigma.derivative(0.0) == 1.0
        assert sigma.derivative(1.0) == 0.0
        assert sigma.derivative(3.0) == pytest.approx(-1.0 / 3.0)
        # left derivatives at the kinks
        assert sigma.derivative(2.0) == -3.0
        assert sigma.derivative(-2.0) == pytest.approx(-1.0 / 3.0)
        assert sigma.kinks == (-2.0, 2.0)

    def test_cubic_slope_range(self):
        lo, hi = cubic_saturated().slope_range((-10.0, 10.0))
        assert lo == pytest.approx(-3.0)  # attained exactly at the kink
        assert hi == pytest.approx(1.0, abs=1e-3)  # sampled near s = 0
        # both bounds are attained by the derivative itself
        assert cubic_saturated().derivative(0.0) == 1.0
        assert cubic_saturated().derivative(2.0) == -3.0

    def test_scaled(self):
        sigma = scaled(2.0, cubic_saturated())
        assert sigma(1.0) == pytest.approx(4.0 / 3.0)
        assert sigma.derivative(0.0) == 2.0

    def test_tabulated_left_slopes(self):
        sigma = tabulated([-1.0, 0.0, 1.0], [2.0, 0.0, -0.5])
        assert sigma(0.5) == pytest.approx(-0.25)
        assert sigma.derivative(-0.5) == -2.0
        assert sigma.derivative(0.5) == -0.5
        assert sigma.derivative(0.0) == -2.0  # left segment decides at the knot
        # extrapolation keeps the end slopes
        assert sigma(2.0) == pytest.approx(-1.0)
        assert sigma.derivative(5.0) == -0.5


class TestLureSystem:
    def test_slope_bound_validation(self):
        with pytest.raises(ValueError):
            LureSystem(
                A=np.zeros((2, 2)),
                channels=(
                    Channel(
                        g=np.array([0.0, 1.0]),
                        h=np.array([1.0, 0.0]),
                        sigma=cubic_saturated(),
                        alpha=-1.0,  # too narrow: true range is [-3, 1]
                        beta=1.0,
                    ),
                ),
                B=np.zeros((2, 1)),
                C=np.zeros((1, 2)),
            )

    def test_round_trip(self):
        sys = registry.nonlinear_msd("mixed", "cubic")
        data = sys.to_dict()
        assert set(data) == {"name", "A", "B", "C", "channels"}
        back = LureSystem.from_dict(data)
        assert np.allclose(back.A, sys.A)
        assert back.channels[0].alpha == sys.channels[0].alpha
        x = np.array([0.7, -0.3])
        assert np.allclose(back.rhs(x), sys.rhs(x))


class TestJacobian:
    def test_at_origin(self):
        sys = registry.nonlinear_msd("velocity", "cubic")
        assert np.allclose(jacobian(sys, [0.0, 0.0]), [[0.0, 1.0], [1.0, -8.0]])

    def test_saturated_branch(self):
        sys = registry.nonlinear_msd("velocity", "cubic")
        assert np.allclose(jacobian(sys, [3.0, 0.0]), [[0.0, 1.0], [-1.0 / 3.0, -8.0]])

    def test_channel_free_system(self):
        sys = LureSystem(A=-np.eye(2), channels=(), B=np.zeros((2, 1)), C=np.zeros((1, 2)))
        for x in ([0.0, 0.0], [3.0, -2.0]):
            assert np.allclose(jacobian(sys, x), -np.eye(2))

    def test_hull_membership(self, rng):
        # every sampled Jacobian has its slope inside the declared interval
        sys = registry.nonlinear_msd("velocity", "cubic")
        fam = vertex_family(sys)
        lo = min(c[0] for c in fam.corners)
        hi = max(c[0] for c in fam.corners)
        for _ in range(1000):
            x = rng.uniform(-6.0, 6.0, size=2)
            J = jacobian(sys, x)
            slope = J[1, 0]  # the only entry the channel touches
            assert lo - 1e-12 <= slope <= hi + 1e-12
            base = J - slope * np.outer(sys.channels[0].g, sys.channels[0].h)
            assert np.allclose(base, sys.A)


class TestVertexFamily:
    def test_cubic_corners(self):
        fam = vertex_family(registry.nonlinear_msd("velocity", "cubic"))
        assert sorted(c[0] for c in fam.corners) == [-3.0, 1.0]
        mats = sorted(fam.matrices, key=lambda M: M[1, 0])
        assert np.allclose(mats[0], [[0.0, 1.0], [-3.0, -8.0]])
        assert np.allclose(mats[1], [[0.0, 1.0], [1.0, -8.0]])

    def test_monotone_corners(self):
        fam = vertex_family(registry.nonlinear_msd("velocity", "monotone"))
        assert sorted(c[0] for c in fam.corners) == [-2.0, -0.5]

    def test_two_channel_count(self):
        ch = registry.nonlinear_msd("velocity", "cubic").channels[0]
        sys = LureSystem(
            A=np.zeros((2, 2)),
            channels=(ch, Channel(g=ch.h, h=ch.g, sigma=ch.sigma, alpha=ch.alpha, beta=ch.beta)),
            B=np.zeros((2, 1)),
            C=np.zeros((1, 2)),
        )
        assert len(vertex_family(sys)) == 4


class TestDiffDominance:
    def test_cubic_uniform_certificate(self):
        sys = registry.nonlinear_msd("velocity", "cubic")
        verdict = check_diff_dominance(sys, registry.DIFF_STORAGE_VELOCITY, 1.0)
        assert verdict.passed and verdict.p == 1
        assert all(v.split_ok for v in verdict.vertices)
        # 2x2 determinant oracle: det R(s) = 28 - (s-1)^2 at each corner
        for v in verdict.vertices:
            s = v.corner[0]
            R = np.array([[-2.0, s - 1.0], [s - 1.0, -14.0]])
            assert 28.0 - (s - 1.0) ** 2 > 0
            assert np.linalg.eigvalsh(R)[-1] < 0

    def test_monotone_claim_splits(self):
        sys = registry.nonlinear_msd("velocity", "monotone")
        verdict = check_diff_dominance(sys, registry.MONOTONE_STORAGE, 0.0)
        outcomes = {v.corner[0]: v.verdict.passed for v in verdict.vertices}
        assert outcomes[-2.0] is True
        assert outcomes[-0.5] is False
        assert not verdict.passed
        assert verdict.failing_corners == ((-0.5,),)
        # frozen residuals: [[s, s-3], [s-3, -15]] at the two corners
        from pdom.lti import residual

        steep = residual(np.array([[0.0, 1.0], [-2.0, -8.0]]), registry.MONOTONE_STORAGE, 0.0)
        assert steep == pytest.approx(np.array([[-2.0, -5.0], [-5.0, -15.0]]))
        assert np.linalg.det(steep) == pytest.approx(5.0)
        shallow = residual(np.array([[0.0, 1.0], [-0.5, -8.0]]), registry.MONOTONE_STORAGE, 0.0)
        assert shallow == pytest.approx(np.array([[-0.5, -3.5], [-3.5, -15.0]]))
        assert np.linalg.det(shallow) == pytest.approx(-4.75)

    def test_contractive_subrange_certifies(self):
        sys = registry.nonlinear_msd("velocity", "contractive")
        assert check_diff_dominance(sys, registry.MONOTONE_STORAGE, 0.0).passed

    def test_vertex_pass_implies_pointwise(self, rng):
        sys = registry.nonlinear_msd("velocity", "cubic")
        assert check_diff_dominance(sys, registry.DIFF_STORAGE_VELOCITY, 1.0).passed
        cert = DominanceCertificate(P=registry.DIFF_STORAGE_VELOCITY, rate=1.0, epsilon=0.0, p=1)
        for _ in range(200):
            x = rng.uniform(-5.0, 5.0, size=2)
            assert check_dominance(jacobian(sys, x), cert).passed


class TestDiffDissipativity:
    def test_mixed_output_passivity(self):
        sys = registry.nonlinear_msd("mixed", "cubic")
        P = registry.DIFF_STORAGE_MIXED
        assert np.allclose(P @ sys.B, sys.C.T)
        verdict = check_diff_dissipativity(sys, P, 1.0, supply_passivity(1))
        assert verdict.passed

    def test_wrong_output_fails(self):
        base = registry.nonlinear_msd("mixed", "cubic")
        sys = LureSystem(A=base.A, channels=base.channels, B=base.B, C=np.array([[0.0, 1.0]]))
        verdict = check_diff_dissipativity(sys, registry.DIFF_STORAGE_MIXED, 1.0, supply_passivity(1))
        assert not verdict.passed

    def test_interior_slope_margin(self):
        # slope s = 1 sits inside the feasible window (roots of s^2 + 5 s - 10)
        sys = registry.nonlinear_msd("mixed", "cubic")
        P = registry.DIFF_STORAGE_MIXED
        roots = np.sort(np.roots([1.0, 5.0, -10.0]))
        assert roots[0] < 1.0 < roots[1]
        verdict = check_diff_dissipativity(sys, P, 1.0, supply_passivity(1))
        top = max(v.verdict.lmax_residual for v in verdict.vertices)
        assert top <= 0.0


class TestComposition:
    def test_channel_free_matches_linear_compose(self, msd_c8):
        lure = LureSystem(A=msd_c8.A, channels=(), B=msd_c8.B, C=msd_c8.C)
        composed = diff_feedback_compose(lure, lure)
        linear = feedback_compose(msd_c8, msd_c8)
        assert np.allclose(composed.A, linear.A)
        assert np.allclose(composed.B, linear.B)
        assert np.allclose(composed.C, linear.C)
        assert composed.channels == ()

    def test_loop_structure(self):
        loop = registry.nonlinear_loop()
        assert loop.n == 4 and len(loop.channels) == 2
        g1, g2 = (ch.g for ch in loop.channels)
        assert np.allclose(g1, [0.0, 1.0, 0.0, 0.0])
        assert np.allclose(g2, [0.0, 0.0, 0.0, 1.0])

    def test_loop_blockdiag_certificate(self):
        loop = registry.nonlinear_loop()
        P = np.zeros((4, 4))
        P[:2, :2] = registry.DIFF_STORAGE_MIXED
        P[2:, 2:] = registry.DIFF_STORAGE_MIXED
        verdict = check_diff_dominance(loop, P, 1.0)
        assert verdict.passed and verdict.p == 2
        assert len(verdict.vertices) == 4

    def test_dimension_mismatch(self):
        sys1 = registry.nonlinear_msd("mixed", "cubic")
        bad = LureSystem(A=-np.eye(2), channels=(), B=np.ones((2, 2)), C=np.ones((1, 2)))
        with pytest.raises(DimensionError):
            diff_feedback_compose(sys1, bad)
