import numpy as np
import pytest

from conftest import random_hyperbolic
from pdom import registry
from pdom.errors import DimensionError, NonHyperbolicError, SplitMismatchError
from pdom.lti import (
    DominanceCertificate,
    LtiSystem,
    check_dominance,
    construct_certificate,
    eigen_split_test,
    modal_split,
    residual,
)
from pdom.matrixcore import expm, inertia_of

RATE = registry.KNOWN_RATE


class TestResidual:
    def test_known_storage_value(self, msd_c4):
        # direct multiplication oracle for the shipped storage at c = 4
        P = registry.KNOWN_STORAGE[4]
        R = residual(msd_c4.A, P, RATE)
        oracle = msd_c4.A.T @ P + P @ msd_c4.A + 2 * RATE * P
        assert np.allclose(R, oracle)
        assert R == pytest.approx(
            np.array([[-2.407, -2.824], [-2.824, -6.528]]), abs=2e-3
        )
        assert np.linalg.eigvalsh(R)[-1] < 0

    def test_stable_identity(self):
        assert np.allclose(residual(-np.eye(2), np.eye(2), 0.0), -2 * np.eye(2))

    def test_infeasible_combination(self):
        assert np.allclose(residual(np.zeros((2, 2)), np.eye(2), 1.0), 2 * np.eye(2))


class TestCheckDominance:
    def test_known_storage_passes(self, msd_c4):
        cert = DominanceCertificate(P=registry.KNOWN_STORAGE[4], rate=RATE, epsilon=0.0, p=1)
        verdict = check_dominance(msd_c4, cert)
        assert verdict.passed and verdict.status == "pass"
        assert inertia_of(registry.KNOWN_STORAGE[4]).as_tuple() == (1, 0, 1)

    def test_strict_margin(self):
        cert = DominanceCertificate(P=np.eye(2), rate=0.0, epsilon=1.0, p=0)
        assert check_dominance(-np.eye(2), cert).passed  # residual -2I <= -I

    def test_wrong_claim_fails_with_witness(self, msd_c4):
        # p = 0 cannot hold: an eigenvalue sits above -rate
        cert = DominanceCertificate(P=np.eye(2), rate=RATE, epsilon=0.0, p=0)
        verdict = check_dominance(msd_c4, cert)
        assert not verdict.passed
        assert verdict.status == "residual_violation"
        assert verdict.witness_eigenvalue > 0
        # the witness eigenvector realizes the violation
        v = verdict.witness_vector
        R = residual(msd_c4.A, np.eye(2), RATE)
        assert v @ R @ v == pytest.approx(verdict.witness_eigenvalue, rel=1e-9)

    def test_inertia_mismatch_distinct(self, msd_c4):
        cert = DominanceCertificate(P=registry.KNOWN_STORAGE[4], rate=RATE, epsilon=0.0, p=0)
        assert check_dominance(msd_c4, cert).status == "inertia_mismatch"


class TestEigenSplit:
    def test_msd_split(self, msd_c4):
        verdict = eigen_split_test(msd_c4, RATE, 1)
        assert verdict.passed
        assert verdict.margin == pytest.approx(1.0, abs=1e-3)

    def test_hurwitz_is_zero_dominant(self, msd_c4):
        assert eigen_split_test(msd_c4, 0.0, 0).passed

    def test_large_rate_flips_everything(self, msd_c4):
        assert eigen_split_test(msd_c4, 5.0, 2).passed

    def test_inconclusive_on_axis(self):
        verdict = eigen_split_test(np.diag([-1.0, -2.0]), 1.0, 1)
        assert verdict.status == "inconclusive"

    def test_zero_dominance_iff_hurwitz(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 7))
            A = rng.standard_normal((n, n))
            re = np.linalg.eigvals(A).real
            if np.min(np.abs(re)) < 1e-3:
                continue
            assert eigen_split_test(A, 0.0, 0).passed == bool(np.all(re < 0))


class TestConstructCertificate:
    def test_diagonal_closed_form(self):
        A = np.diag([-0.2679, -3.7321])
        cert = construct_certificate(A, 1.2679, 1)
        assert cert.P == pytest.approx(np.diag([-0.5, 0.2029]), abs=1e-4)

    def test_stable_identity(self):
        cert = construct_certificate(-np.eye(2), 0.0, 0)
        assert np.allclose(cert.P, 0.5 * np.eye(2))

    def test_msd_certificate_verifies(self, msd_c4):
        cert = construct_certificate(msd_c4, RATE, 1)
        assert cert.epsilon > 0
        assert inertia_of(cert.P).as_tuple() == (1, 0, 1)
        assert check_dominance(msd_c4, cert).passed

    def test_equivalence_with_split_test(self, rng):
        # certificate construction succeeds exactly when the split test passes
        for _ in range(50):
            n = int(rng.integers(2, 9))
            lam = float(np.abs(rng.standard_normal()))
            A, p = random_hyperbolic(rng, n, lam)
            assert eigen_split_test(A, lam, p).passed
            cert = construct_certificate(A, lam, p)
            assert cert.epsilon > 0
            assert check_dominance(A, cert).passed
            wrong = p + 1 if p < n else p - 1
            assert not eigen_split_test(A, lam, wrong).passed
            with pytest.raises((SplitMismatchError, NonHyperbolicError)):
                construct_certificate(A, lam, wrong)


class TestModalSplit:
    def test_diagonal_case(self):
        split = modal_split(np.diag([-0.2679, -3.7321]), 1.2679, 1)
        assert np.allclose(split.projector_dominant, np.diag([1.0, 0.0]))
        assert split.rate_dominant == pytest.approx(0.2679)
        assert split.rate_transient == pytest.approx(3.7321)
        assert split.growth_floor == pytest.approx(1.0)
        assert split.decay_ceiling == pytest.approx(1.0)

    def test_saddle(self):
        split = modal_split(np.diag([1.0, -1.0]), 0.0, 1)
        assert np.allclose(split.projector_dominant, np.diag([1.0, 0.0]))

    def test_msd_projectors(self, msd_c4):
        split = modal_split(msd_c4, RATE, 1)
        Pi = split.projector_dominant
        assert np.linalg.matrix_rank(Pi) == 1
        assert np.linalg.matrix_rank(split.projector_transient) == 1
        assert np.allclose(Pi + split.projector_transient, np.eye(2), atol=1e-12)
        assert np.allclose(Pi @ Pi, Pi, atol=1e-9)
        assert np.allclose(Pi @ msd_c4.A, msd_c4.A @ Pi, atol=1e-9)
        assert split.rate_dominant < RATE < split.rate_transient

    def test_flow_decay_bounds(self, msd_c4, rng):
        # the two displayed bounds hold along exact flows; the absolute slack
        # covers the precision floor of components that decay to ~1e-10
        split = modal_split(msd_c4, RATE, 1)
        for _ in range(20):
            x0 = rng.standard_normal(2)
            xp0 = split.projector_dominant @ x0
            xs0 = split.projector_transient @ x0
            for t in np.linspace(0.0, 6.0, 25):
                flow = expm(msd_c4.A, t)
                xp = np.linalg.norm(flow @ xp0)
                xs = np.linalg.norm(flow @ xs0)
                floor = split.growth_floor * np.exp(-split.rate_dominant * t) * np.linalg.norm(xp0)
                ceiling = split.decay_ceiling * np.exp(-split.rate_transient * t) * np.linalg.norm(xs0)
                assert xp >= floor * (1 - 1e-6) - 1e-12 * np.linalg.norm(xp0)
                assert xs <= ceiling * (1 + 1e-6) + 1e-12 * np.linalg.norm(xs0)


class TestComplexPairs:
    # oscillatory modes produce 2x2 Schur blocks; the split, certificate
    # construction and modal machinery must handle them

    def _spiral_system(self):
        A = np.zeros((4, 4))
        A[:2, :2] = [[0.1, 2.0], [-2.0, 0.1]]  # unstable spiral pair
        A[2:, 2:] = np.diag([-3.0, -4.0])
        mix = np.array(
            [
                [1.0, 0.2, -0.1, 0.3],
                [0.0, 1.0, 0.4, -0.2],
                [0.1, 0.0, 1.0, 0.1],
                [-0.3, 0.2, 0.0, 1.0],
            ]
        )
        return mix @ A @ np.linalg.inv(mix)

    def test_certificate_with_spiral_dominant_pair(self):
        A = self._spiral_system()
        assert eigen_split_test(A, 0.0, 2).passed
        cert = construct_certificate(A, 0.0, 2)
        assert inertia_of(cert.P).as_tuple() == (2, 0, 2)
        assert cert.epsilon > 0
        assert check_dominance(A, cert).passed

    def test_modal_split_with_spiral_pair(self):
        A = self._spiral_system()
        split = modal_split(A, 0.0, 2)
        Pi = split.projector_dominant
        assert np.linalg.matrix_rank(Pi) == 2
        assert np.allclose(Pi @ A, A @ Pi, atol=1e-8)
        assert split.rate_dominant == pytest.approx(-0.1, abs=1e-9)
        assert split.rate_transient == pytest.approx(3.0, abs=1e-9)
        # decay bounds along the exact flow
        rng = np.random.default_rng(11)
        for _ in range(5):
            x0 = rng.standard_normal(4)
            xp0 = Pi @ x0
            xs0 = split.projector_transient @ x0
            for t in np.linspace(0.0, 3.0, 13):
                flow = expm(A, t)
                floor = split.growth_floor * np.exp(-split.rate_dominant * t)
                ceiling = split.decay_ceiling * np.exp(-split.rate_transient * t)
                assert np.linalg.norm(flow @ xp0) >= floor * np.linalg.norm(xp0) * (1 - 1e-6)
                assert np.linalg.norm(flow @ xs0) <= ceiling * np.linalg.norm(xs0) * (1 + 1e-6) + 1e-12

    def test_stable_complex_pair_below_rate(self):
        A = np.zeros((3, 3))
        A[0, 0] = 1.0
        A[1:, 1:] = [[-0.5, 3.0], [-3.0, -0.5]]
        assert eigen_split_test(A, 0.0, 1).passed
        cert = construct_certificate(A, 0.0, 1)
        assert check_dominance(A, cert).passed


class TestSerialization:
    def test_system_round_trip(self, msd_c4):
        data = msd_c4.to_dict()
        back = LtiSystem.from_dict(data)
        assert np.allclose(back.A, msd_c4.A)
        assert back.name == msd_c4.name
        assert set(data) == {"name", "A", "B", "C", "D"}

    def test_certificate_round_trip(self):
        cert = DominanceCertificate(P=registry.KNOWN_STORAGE[4], rate=RATE, epsilon=0.1, p=1)
        data = cert.to_dict()
        assert set(data) == {"P", "lambda", "epsilon", "p"}
        back = DominanceCertificate.from_dict(data)
        assert np.allclose(back.P, cert.P)
        assert back.rate == cert.rate

    def test_dimension_validation(self):
        with pytest.raises(DimensionError):
            LtiSystem(A=np.eye(2), B=np.ones((3, 1)), C=np.ones((1, 2)), D=np.zeros((1, 1)))
