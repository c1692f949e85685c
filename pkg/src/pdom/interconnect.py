"""Negative-feedback interconnection and closed-loop certificate algebra.

Two open systems in the standard loop ``u1 = -y2 + v1``, ``u2 = y1 + v2``
compose into a single system on the stacked state. Supply rates compose into
an explicit closed-loop supply on (y, v); when the pure-output part of that
supply is negative semidefinite (the coupling condition), block-diagonal
storages certify dominance of the loop with degree p1 + p2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matrixcore as mc
from .dissipativity import DissipativityCertificate, SupplyRate, verify_dissipativity
from .errors import (
    CouplingError,
    DimensionError,
    RateMismatchError,
    UnsupportedConfigurationError,
)
from .lti import DominanceCertificate, LtiSystem, check_dominance
from .policy import DEFAULT_POLICY, NumericPolicy

__all__ = [
    "FeedbackLoop",
    "CouplingVerdict",
    "feedback_compose",
    "static_feedback",
    "compose_supply",
    "coupling_condition",
    "closed_loop_certificate",
]


def _check_channels(sys1, sys2) -> None:
    if sys1.m != sys2.r or sys2.m != sys1.r:
        raise DimensionError(
            f"incompatible loop channels: (m1, r1) = ({sys1.m}, {sys1.r}), "
            f"(m2, r2) = ({sys2.m}, {sys2.r})"
        )


def feedback_compose(sys1: LtiSystem, sys2: LtiSystem) -> LtiSystem:
    """Closed loop of two strictly proper systems, state (x1, x2), input (v1, v2)."""
    if not (sys1.is_strictly_proper and sys2.is_strictly_proper):
        raise UnsupportedConfigurationError("feedback composition requires D1 = D2 = 0")
    _check_channels(sys1, sys2)
    n1, n2 = sys1.n, sys2.n
    A = np.block(
        [
            [sys1.A, -sys1.B @ sys2.C],
            [sys2.B @ sys1.C, sys2.A],
        ]
    )
    B = np.block(
        [
            [sys1.B, np.zeros((n1, sys2.m))],
            [np.zeros((n2, sys1.m)), sys2.B],
        ]
    )
    C = np.block(
        [
            [sys1.C, np.zeros((sys1.r, n2))],
            [np.zeros((sys2.r, n1)), sys2.C],
        ]
    )
    D = np.zeros((sys1.r + sys2.r, sys1.m + sys2.m))
    name = f"feedback({sys1.name or 'sys1'}, {sys2.name or 'sys2'})"
    return LtiSystem(A=A, B=B, C=C, D=D, name=name)


def static_feedback(sys: LtiSystem, k: float) -> LtiSystem:
    """Static output feedback u = -k y + v, kept as a dedicated path.

    Modeling the gain as a second system would need an empty state; closing
    the loop directly as ``A - k B C`` avoids those edge cases.
    """
    if not sys.is_strictly_proper:
        raise UnsupportedConfigurationError("static feedback requires D = 0")
    if sys.r != sys.m:
        raise DimensionError("static output feedback needs a square channel")
    return LtiSystem(
        A=sys.A - k * sys.B @ sys.C,
        B=sys.B,
        C=sys.C,
        D=sys.D,
        name=f"{sys.name or 'sys'}<-gain({k:g})",
    )


def compose_supply(s1: SupplyRate, s2: SupplyRate) -> SupplyRate:
    """Closed-loop supply on ((y1, y2), (v1, v2)) induced by the loop equations."""
    if s1.m != s2.r or s2.m != s1.r:
        raise DimensionError("supply channel dimensions are not loop-compatible")
    Q = np.block(
        [
            [s1.Q + s2.R, -s1.L + s2.L.T],
            [-s1.L.T + s2.L, s2.Q + s1.R],
        ]
    )
    L = np.block(
        [
            [s1.L, s2.R],
            [-s1.R, s2.L],
        ]
    )
    R = np.block(
        [
            [s1.R, np.zeros((s1.m, s2.m))],
            [np.zeros((s2.m, s1.m)), s2.R],
        ]
    )
    return SupplyRate(Q=0.5 * (Q + Q.T), L=L, R=R)


@dataclass(frozen=True)
class CouplingVerdict:
    passed: bool
    lmax: float
    matrix: np.ndarray

    def to_dict(self) -> dict:
        return {"passed": self.passed, "lmax": self.lmax}


def coupling_condition(s1: SupplyRate, s2: SupplyRate, policy: NumericPolicy = DEFAULT_POLICY) -> CouplingVerdict:
    """Dominance-coupling test: the pure-output part of the composed supply is <= 0."""
    coupled = compose_supply(s1, s2)
    eigenvalues, _ = mc.sym_eigen(coupled.Q, policy)
    lmax = float(eigenvalues[-1])
    return CouplingVerdict(passed=lmax <= policy.lmi_tol, lmax=lmax, matrix=coupled.Q)


def closed_loop_certificate(
    sys1,
    c1: DissipativityCertificate,
    sys2,
    c2: DissipativityCertificate,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> DominanceCertificate:
    """Block-diagonal dominance certificate for the loop, verified before return.

    Requires a uniform rate and a passing coupling condition; the storage
    blockdiag(P1, P2) has inertia (p1+p2, 0, n1+n2-p1-p2) by construction.
    For Lur'e subsystems the verification runs over the composed vertex
    family instead of a single matrix.
    """
    if abs(c1.rate - c2.rate) > 1e-12:
        raise RateMismatchError(f"rates differ: {c1.rate} vs {c2.rate} (uniform rate required)")
    coupling = coupling_condition(c1.supply, c2.supply, policy)
    if not coupling.passed:
        raise CouplingError(f"coupling condition fails (lmax = {coupling.lmax:.3e})")

    n1, n2 = c1.P.shape[0], c2.P.shape[0]
    P = np.zeros((n1 + n2, n1 + n2))
    P[:n1, :n1] = c1.P
    P[n1:, n1:] = c2.P
    p = c1.p + c2.p
    rate = c1.rate

    from .differential import LureSystem, check_diff_dominance, diff_feedback_compose

    if isinstance(sys1, LureSystem) or isinstance(sys2, LureSystem):
        loop = diff_feedback_compose(sys1, sys2)
        verdict = check_diff_dominance(loop, P, rate, policy)
        if not verdict.passed:
            raise CouplingError("composed vertex family fails the closed-loop dominance LMI")
        epsilon = max(0.0, -verdict.worst_lmax) / 2.0
        return DominanceCertificate(P=P, rate=rate, epsilon=epsilon, p=p)

    open_1 = verify_dissipativity(sys1, c1, policy)
    open_2 = verify_dissipativity(sys2, c2, policy)
    if not (open_1.passed and open_2.passed):
        raise CouplingError("an open-loop certificate failed verification")
    closed = feedback_compose(sys1, sys2)
    cert = DominanceCertificate(P=P, rate=rate, epsilon=0.0, p=p)
    verdict = check_dominance(closed, cert, policy)
    if not verdict.passed:
        raise CouplingError(f"closed-loop dominance check failed: {verdict.status}")
    epsilon = max(0.0, -verdict.lmax_residual) / 2.0
    return DominanceCertificate(P=P, rate=rate, epsilon=epsilon, p=p)


@dataclass(frozen=True)
class FeedbackLoop:
    """Loop description: two subsystems, their supplies and the shared rate."""

    sys1: object
    sys2: object
    supply1: SupplyRate
    supply2: SupplyRate
    rate: float

    def closed(self):
        from .differential import LureSystem, diff_feedback_compose

        if isinstance(self.sys1, LureSystem) or isinstance(self.sys2, LureSystem):
            return diff_feedback_compose(self.sys1, self.sys2)
        return feedback_compose(self.sys1, self.sys2)

    def to_dict(self) -> dict:
        return {
            "sys1": self.sys1.to_dict(),
            "sys2": self.sys2.to_dict(),
            "supply1": self.supply1.to_dict(),
            "supply2": self.supply2.to_dict(),
            "lambda": self.rate,
        }

    @staticmethod
    def from_dict(data: dict) -> "FeedbackLoop":
        from .differential import LureSystem

        def load_system(entry: dict):
            if "channels" in entry:
                return LureSystem.from_dict(entry)
            return LtiSystem.from_dict(entry)

        sys1 = load_system(data["sys1"])
        sys2 = load_system(data["sys2"])
        supply1 = SupplyRate.from_dict(data["supply1"], r=sys1.r, m=sys1.m)
        supply2 = SupplyRate.from_dict(data["supply2"], r=sys2.r, m=sys2.m)
        return FeedbackLoop(
            sys1=sys1,
            sys2=sys2,
            supply1=supply1,
            supply2=supply2,
            rate=float(data["lambda"]),
        )
