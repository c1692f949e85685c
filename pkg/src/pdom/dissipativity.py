"""Quadratic supply rates and open-system dominance (dissipation) tests.

A system is p-dissipative with rate ``lam`` for the supply
``s(y, u) = y^T Q y + 2 y^T L u + u^T R u`` when the composite block matrix
of :func:`dissipativity_block` is negative semidefinite for some storage P
with inertia (p, 0, n-p). Named supplies cover passivity and finite-gain
bounds; :func:`min_gain_bisection` locates the feasibility boundary of the
gain supply for a fixed storage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matrixcore as mc
from .errors import DimensionError, LmiInfeasibleError, UnsupportedConfigurationError
from .lti import DominanceVerdict, LtiSystem, construct_certificate, residual
from .policy import DEFAULT_POLICY, NumericPolicy

__all__ = [
    "SupplyRate",
    "DissipativityCertificate",
    "supply_passivity",
    "supply_gain",
    "small_gain_pair",
    "dissipativity_block",
    "verify_dissipativity",
    "min_gain_bisection",
    "find_passivity_storage",
]


@dataclass(frozen=True)
class SupplyRate:
    """Quadratic form on (y, u): Q on outputs, R on inputs, L cross term."""

    Q: np.ndarray
    L: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        Q = mc.as_symmetric(self.Q)
        R = mc.as_symmetric(self.R)
        L = mc.as_matrix(self.L)
        if L.shape != (Q.shape[0], R.shape[0]):
            raise DimensionError(
                f"cross term must be {Q.shape[0]}x{R.shape[0]}, got {L.shape}"
            )
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "R", R)

    @property
    def r(self) -> int:
        return self.Q.shape[0]

    @property
    def m(self) -> int:
        return self.R.shape[0]

    def evaluate(self, y, u) -> float:
        y = np.asarray(y, dtype=float).ravel()
        u = np.asarray(u, dtype=float).ravel()
        return float(y @ self.Q @ y + 2.0 * y @ self.L @ u + u @ self.R @ u)

    def scaled(self, tau: float) -> "SupplyRate":
        """Positive rescaling; dissipativity is preserved with storage tau*P."""
        if tau <= 0:
            raise ValueError("supply scaling must be positive")
        return SupplyRate(Q=tau * self.Q, L=tau * self.L, R=tau * self.R)

    def to_dict(self) -> dict:
        return {"Q": self.Q.tolist(), "L": self.L.tolist(), "R": self.R.tolist()}

    @staticmethod
    def from_dict(data: dict, r: int | None = None, m: int | None = None) -> "SupplyRate":
        """Decode either explicit {Q, L, R} or the named shorthand forms.

        Shorthands: {"kind": "passivity"} and {"kind": "gain", "gamma": g};
        both need the channel dimensions (r, m) from context.
        """
        if "kind" in data:
            kind = data["kind"]
            if r is None or m is None:
                raise DimensionError("named supply shorthand needs channel dimensions")
            if kind == "passivity":
                return supply_passivity(r)
            if kind == "gain":
                return supply_gain(float(data["gamma"]), r, m)
            raise ValueError(f"unknown supply kind {kind!r}")
        return SupplyRate(
            Q=np.asarray(data["Q"], dtype=float),
            L=np.asarray(data["L"], dtype=float),
            R=np.asarray(data["R"], dtype=float),
        )


@dataclass(frozen=True)
class DissipativityCertificate:
    """Storage, rate and supply claiming p-dissipativity of a system."""

    P: np.ndarray
    rate: float
    epsilon: float
    p: int
    supply: SupplyRate

    def __post_init__(self):
        object.__setattr__(self, "P", mc.as_symmetric(self.P))
        if self.rate < 0 or self.epsilon < 0:
            raise ValueError("rate and epsilon must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "P": self.P.tolist(),
            "lambda": self.rate,
            "epsilon": self.epsilon,
            "p": self.p,
            "supply": self.supply.to_dict(),
        }

    @staticmethod
    def from_dict(data: dict, r: int | None = None, m: int | None = None) -> "DissipativityCertificate":
        return DissipativityCertificate(
            P=np.asarray(data["P"], dtype=float),
            rate=float(data["lambda"]),
            epsilon=float(data.get("epsilon", 0.0)),
            p=int(data["p"]),
            supply=SupplyRate.from_dict(data["supply"], r=r, m=m),
        )


def supply_passivity(r: int) -> SupplyRate:
    """Passivity supply s(y, u) = 2 y^T u on a square channel."""
    if r < 1:
        raise DimensionError("passivity supply needs at least one channel")
    return SupplyRate(Q=np.zeros((r, r)), L=np.eye(r), R=np.zeros((r, r)))


def supply_gain(gamma: float, r: int, m: int) -> SupplyRate:
    """Finite-gain supply s(y, u) = gamma^2 |u|^2 - |y|^2."""
    if gamma < 0:
        raise ValueError("gain bound must be nonnegative")
    return SupplyRate(Q=-np.eye(r), L=np.zeros((r, m)), R=gamma * gamma * np.eye(m))


def small_gain_pair(gamma1: float, gamma2: float, r1: int = 1, r2: int = 1) -> tuple[SupplyRate, SupplyRate]:
    """Gain supplies for a feedback pair, balanced so coupling decides gamma1*gamma2 <= 1.

    Dissipativity is invariant under positive supply scaling (with the storage
    scaled alike), so the second supply is rescaled by gamma1/gamma2. With
    unit scalings the raw coupling test would instead require each gain to be
    at most one on its own.
    """
    if gamma1 <= 0 or gamma2 <= 0:
        raise ValueError("gain bounds must be positive for the balanced pair")
    s1 = supply_gain(gamma1, r1, r2)
    s2 = supply_gain(gamma2, r2, r1).scaled(gamma1 / gamma2)
    return s1, s2


def dissipativity_block(
    sys: LtiSystem,
    P,
    lam: float,
    supply: SupplyRate,
    epsilon: float = 0.0,
) -> np.ndarray:
    """Composite (n+m) block whose negative semidefiniteness is p-dissipativity.

    Top-left: A^T P + P A + 2 lam P - C^T Q C + eps I.
    Off-diagonal: P B - C^T L - C^T Q D.
    Bottom-right: -D^T Q D - L^T D - D^T L - R.
    """
    P = mc.as_symmetric(P)
    if P.shape[0] != sys.n:
        raise DimensionError("storage dimension does not match the system")
    if supply.r != sys.r or supply.m != sys.m:
        raise DimensionError("supply channel dimensions do not match the system")
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    Q, L, R = supply.Q, supply.L, supply.R
    top_left = residual(A, P, lam) - C.T @ Q @ C + epsilon * np.eye(sys.n)
    off_diag = P @ B - C.T @ L - C.T @ Q @ D
    bottom_right = -(D.T @ Q @ D) - L.T @ D - D.T @ L - R
    block = np.block([[top_left, off_diag], [off_diag.T, bottom_right]])
    return 0.5 * (block + block.T)


def verify_dissipativity(
    sys: LtiSystem,
    cert: DissipativityCertificate,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> DominanceVerdict:
    """Check a dissipativity certificate: block definiteness plus storage inertia."""
    inertia = mc.inertia_of(cert.P, policy=policy)
    block = dissipativity_block(sys, cert.P, cert.rate, cert.supply, cert.epsilon)
    eigenvalues, eigenvectors = mc.sym_eigen(block, policy)
    lmax = float(eigenvalues[-1])
    if not inertia.matches(cert.p, sys.n):
        return DominanceVerdict(False, "inertia_mismatch", lmax, inertia)
    if lmax > policy.lmi_tol:
        return DominanceVerdict(
            False,
            "residual_violation",
            lmax,
            inertia,
            witness_eigenvalue=lmax,
            witness_vector=eigenvectors[:, -1],
        )
    return DominanceVerdict(True, "pass", lmax, inertia)


def min_gain_bisection(
    sys: LtiSystem,
    P,
    lam: float,
    bracket: tuple[float, float],
    policy: NumericPolicy = DEFAULT_POLICY,
) -> float:
    """Smallest feasible gain bound for the FIXED storage (P, lam), by bisection.

    Requires the gain supply to fail at the lower bracket and pass at the
    upper one; the result is within ``gain_tol`` of the feasibility boundary.
    """
    P = mc.as_symmetric(P)
    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0 <= lo < hi:
        raise ValueError(f"invalid bracket [{lo}, {hi}]")
    p = mc.inertia_of(P, policy=policy).negative

    def feasible(gamma: float) -> bool:
        cert = DissipativityCertificate(
            P=P, rate=lam, epsilon=0.0, p=p, supply=supply_gain(gamma, sys.r, sys.m)
        )
        return verify_dissipativity(sys, cert, policy).passed

    if feasible(lo):
        raise ValueError(f"bracket lower end gamma={lo} is already feasible")
    if not feasible(hi):
        raise ValueError(f"bracket upper end gamma={hi} is not feasible")
    while hi - lo > policy.gain_tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def find_passivity_storage(
    sys: LtiSystem,
    lam: float,
    p: int,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> DissipativityCertificate:
    """Search for a storage with P B = C^T making the system p-passive at rate lam.

    The equality is enforced exactly by the feasibility engine's
    parameterization; the dominance residual is pushed strictly negative.
    The returned certificate is re-verified before being handed back.
    """
    from . import lmi  # deferred: keep module import costs flat

    if not sys.is_strictly_proper:
        raise UnsupportedConfigurationError("storage search requires D = 0")
    if sys.r != sys.m:
        raise DimensionError("passivity needs a square channel (r = m)")

    eps_search = 1e-6 * max(1.0, float(np.linalg.norm(sys.A, 2)))
    problem = lmi.LmiProblem(
        dim=sys.n,
        blocks=[lambda P: residual(sys.A, P, lam)],
        equalities=[lmi.LinearEquality(lambda P: P @ sys.B, sys.C.T)],
        inertia_target=(p, 0, sys.n - p),
        epsilon=eps_search,
    )
    try:
        seed = construct_certificate(sys, lam, p, policy).P
    except Exception:
        seed = _schur_aligned_seed(sys.A, lam, p)
    P = lmi.solve(problem, seed, policy)
    cert = DissipativityCertificate(
        P=P, rate=lam, epsilon=eps_search / 2.0, p=p, supply=supply_passivity(sys.r)
    )
    verdict = verify_dissipativity(sys, cert, policy)
    if not verdict.passed:
        raise LmiInfeasibleError(
            lmi.LmiReport(
                feasible=False,
                iterations=0,
                violation=verdict.lmax_residual,
                equality_residual=float(np.linalg.norm(P @ sys.B - sys.C.T)),
                inertia=verdict.inertia.as_tuple(),
                message="engine output failed re-verification",
            )
        )
    return cert


def _schur_aligned_seed(A: np.ndarray, lam: float, p: int) -> np.ndarray:
    """blockdiag(-I_p, I_{n-p}) expressed in the ordered Schur basis."""
    n = A.shape[0]
    try:
        form, _ = mc.schur_split(A, lam)
        Q = form.Q
    except Exception:
        Q = np.eye(n)
    core = np.diag(np.concatenate([-np.ones(p), np.ones(n - p)]))
    return Q @ core @ Q.T
