"""LTI system model and the core dominance machinery.

A system is p-dominant with rate ``lam >= 0`` when some symmetric storage P
with inertia (p, 0, n-p) makes ``A^T P + P A + 2 lam P`` negative definite.
This module verifies candidate certificates, runs the equivalent
eigenvalue-splitting test, constructs certificates from an ordered Schur
split, and produces the modal splitting with explicit decay constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matrixcore as mc
from .errors import DimensionError, NumericalError, SplitMismatchError
from .policy import DEFAULT_POLICY, NumericPolicy

__all__ = [
    "LtiSystem",
    "DominanceCertificate",
    "DominanceVerdict",
    "SplitVerdict",
    "ModalSplit",
    "residual",
    "check_dominance",
    "eigen_split_test",
    "construct_certificate",
    "modal_split",
]


@dataclass(frozen=True)
class LtiSystem:
    """State-space data (A, B, C, D) with dimensions (n, m, r)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    name: str = ""

    def __post_init__(self):
        A = mc.as_matrix(self.A)
        n = A.shape[0]
        if A.shape[1] != n:
            raise DimensionError(f"A must be square, got {A.shape}")
        B = mc.as_matrix(self.B)
        if B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {B.shape}")
        C = mc.as_matrix(self.C)
        if C.shape[1] != n:
            raise DimensionError(f"C must have {n} columns, got {C.shape}")
        D = mc.as_matrix(self.D, shape=(C.shape[0], B.shape[1]))
        for attr, value in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, attr, value)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def r(self) -> int:
        return self.C.shape[0]

    @property
    def is_strictly_proper(self) -> bool:
        return not np.any(self.D)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "D": self.D.tolist(),
        }

    @staticmethod
    def from_dict(data: dict) -> "LtiSystem":
        return LtiSystem(
            A=np.asarray(data["A"], dtype=float),
            B=np.asarray(data["B"], dtype=float),
            C=np.asarray(data["C"], dtype=float),
            D=np.asarray(data["D"], dtype=float),
            name=data.get("name", ""),
        )


@dataclass(frozen=True)
class DominanceCertificate:
    """Storage matrix P plus rate and margin witnessing p-dominance."""

    P: np.ndarray
    rate: float
    epsilon: float
    p: int

    def __post_init__(self):
        object.__setattr__(self, "P", mc.as_symmetric(self.P))
        if self.rate < 0:
            raise ValueError("rate must be nonnegative")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if not 0 <= self.p <= self.P.shape[0]:
            raise ValueError("claimed dominant dimension out of range")

    def to_dict(self) -> dict:
        return {
            "P": self.P.tolist(),
            "lambda": self.rate,
            "epsilon": self.epsilon,
            "p": self.p,
        }

    @staticmethod
    def from_dict(data: dict) -> "DominanceCertificate":
        return DominanceCertificate(
            P=np.asarray(data["P"], dtype=float),
            rate=float(data["lambda"]),
            epsilon=float(data.get("epsilon", 0.0)),
            p=int(data["p"]),
        )


@dataclass(frozen=True)
class DominanceVerdict:
    """Outcome of a certificate check, with the violation witness on failure."""

    passed: bool
    status: str  # "pass" | "inertia_mismatch" | "residual_violation"
    lmax_residual: float
    inertia: mc.Inertia
    witness_eigenvalue: float | None = None
    witness_vector: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "status": self.status,
            "lmax_residual": self.lmax_residual,
            "inertia": self.inertia.as_tuple(),
            "witness_eigenvalue": self.witness_eigenvalue,
        }


@dataclass(frozen=True)
class SplitVerdict:
    """Outcome of the eigenvalue-splitting test at a given rate."""

    status: str  # "pass" | "fail" | "inconclusive"
    margin: float
    unstable_count: int
    requested_p: int

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "margin": self.margin,
            "unstable_count": self.unstable_count,
            "requested_p": self.requested_p,
        }


@dataclass(frozen=True)
class ModalSplit:
    """Invariant splitting into dominant and transient eigenspaces.

    ``projector_dominant`` and ``projector_transient`` are the spectral
    projectors; the decay bounds read, for every solution of ``xdot = A x``,

        |x_dom(t)|  >= growth_floor  * exp(-rate_dominant * t)  * |x_dom(0)|
        |x_tran(t)| <= decay_ceiling * exp(-rate_transient * t) * |x_tran(0)|

    with ``rate_dominant < shift < rate_transient``.
    """

    projector_dominant: np.ndarray
    projector_transient: np.ndarray
    rate_dominant: float
    rate_transient: float
    growth_floor: float   # in (0, 1]
    decay_ceiling: float  # in [1, inf)
    shift: float
    p: int
    a_matrix: np.ndarray = field(repr=False, default=None)


def _system_matrix(sys) -> np.ndarray:
    if isinstance(sys, LtiSystem):
        return sys.A
    return mc.as_matrix(sys)


def residual(A, P, lam: float) -> np.ndarray:
    """Dominance LMI residual ``A^T P + P A + 2 lam P`` (symmetric)."""
    A = mc.as_matrix(A)
    P = mc.as_symmetric(P)
    if A.shape != P.shape:
        raise DimensionError("A and P must share dimensions")
    R = A.T @ P + P @ A + 2.0 * lam * P
    return 0.5 * (R + R.T)


def check_dominance(sys, cert: DominanceCertificate, policy: NumericPolicy = DEFAULT_POLICY) -> DominanceVerdict:
    """Verify a dominance certificate: residual definiteness plus inertia.

    Passes when ``lmax(residual) <= -epsilon + lmi_tol`` and P has inertia
    (p, 0, n - p). Inertia mismatches are reported distinctly from residual
    violations, and a residual failure carries the violating eigenpair.
    """
    A = _system_matrix(sys)
    n = A.shape[0]
    if cert.P.shape[0] != n:
        raise DimensionError("certificate dimension does not match the system")
    inertia = mc.inertia_of(cert.P, policy=policy)
    R = residual(A, cert.P, cert.rate)
    eigenvalues, eigenvectors = mc.sym_eigen(R, policy)
    lmax = float(eigenvalues[-1])
    if not inertia.matches(cert.p, n):
        return DominanceVerdict(False, "inertia_mismatch", lmax, inertia)
    if lmax > -cert.epsilon + policy.lmi_tol:
        return DominanceVerdict(
            False,
            "residual_violation",
            lmax,
            inertia,
            witness_eigenvalue=lmax,
            witness_vector=eigenvectors[:, -1],
        )
    return DominanceVerdict(True, "pass", lmax, inertia)


def eigen_split_test(sys, lam: float, p: int, policy: NumericPolicy = DEFAULT_POLICY) -> SplitVerdict:
    """Spectral test: does ``A + lam I`` have exactly p strictly unstable eigenvalues?

    Returns "inconclusive" (distinct from "fail") when any shifted eigenvalue
    sits within ``split_tol`` of the imaginary axis.
    """
    if lam < 0:
        raise ValueError("rate must be nonnegative")
    A = _system_matrix(sys)
    shifted = np.linalg.eigvals(A).real + lam
    margin = float(np.min(np.abs(shifted))) if shifted.size else np.inf
    unstable = int(np.sum(shifted > policy.split_tol))
    stable = int(np.sum(shifted < -policy.split_tol))
    if unstable + stable != shifted.size:
        return SplitVerdict("inconclusive", margin, unstable, p)
    status = "pass" if unstable == p else "fail"
    return SplitVerdict(status, margin, unstable, p)


def _ordered_split(A: np.ndarray, lam: float, p: int, policy: NumericPolicy):
    """Schur split at the requested rate, as (W, T1, T2) block-diagonal data."""
    form, unstable_dim = mc.schur_split(A, lam, policy)
    if unstable_dim != p:
        raise SplitMismatchError(
            f"A + {lam:.6g} I has {unstable_dim} unstable eigenvalues, expected {p}"
        )
    W, T1, T2 = mc.block_diagonalize(form, p)
    return W, T1, T2


def construct_certificate(sys, lam: float, p: int, policy: NumericPolicy = DEFAULT_POLICY) -> DominanceCertificate:
    """Build a dominance certificate from the ordered Schur split.

    The storage is ``W^{-T} blockdiag(-Xu, Xs) W^{-1}`` where W decouples
    ``A + lam I`` into its unstable/stable blocks and Xu, Xs solve the
    per-block Lyapunov equations with identity right-hand sides. The result
    always carries a strictly positive margin.
    """
    A = _system_matrix(sys)
    n = A.shape[0]
    W, T1, T2 = _ordered_split(A, lam, p, policy)
    blocks = []
    if p > 0:
        # (T1 + lam I) is anti-Hurwitz: sign-flipped Lyapunov right-hand side
        Xu = mc.lyapunov_solve(T1 + lam * np.eye(p), -np.eye(p), policy)
        blocks.append(-Xu)
    if p < n:
        Xs = mc.lyapunov_solve(T2 + lam * np.eye(n - p), np.eye(n - p), policy)
        blocks.append(Xs)
    core = _block_diag(blocks, n)
    Winv = np.linalg.solve(W, np.eye(n))
    P = Winv.T @ core @ Winv
    P = 0.5 * (P + P.T)
    R = residual(A, P, lam)
    eigenvalues, _ = mc.sym_eigen(R, policy)
    epsilon = -float(eigenvalues[-1]) / 2.0
    if epsilon <= 0:
        raise NumericalError("constructed storage lost its definiteness margin")
    cert = DominanceCertificate(P=P, rate=lam, epsilon=epsilon, p=p)
    verdict = check_dominance(A, cert, policy)
    if not verdict.passed:
        raise NumericalError(f"constructed certificate failed verification: {verdict.status}")
    return cert


def _block_diag(blocks: list[np.ndarray], n: int) -> np.ndarray:
    out = np.zeros((n, n))
    offset = 0
    for block in blocks:
        k = block.shape[0]
        out[offset : offset + k, offset : offset + k] = block
        offset += k
    return out


def modal_split(sys, lam: float, p: int, policy: NumericPolicy = DEFAULT_POLICY) -> ModalSplit:
    """Spectral projectors and decay constants for the dominant/transient split.

    The constants come from the conditioning of the decoupling basis and of
    each block's eigenvector matrix, which makes the two displayed bounds
    checkable on sampled trajectories.
    """
    A = _system_matrix(sys)
    n = A.shape[0]
    W, T1, T2 = _ordered_split(A, lam, p, policy)
    Winv = np.linalg.solve(W, np.eye(n))
    E = np.zeros((n, n))
    E[:p, :p] = np.eye(p)
    projector_dominant = W @ E @ Winv
    projector_transient = np.eye(n) - projector_dominant

    if p > 0:
        rate_dominant = -float(np.min(np.linalg.eigvals(T1).real))
        growth_floor = min(1.0, _subspace_floor(W[:, :p], T1))
    else:
        rate_dominant = -np.inf
        growth_floor = 1.0
    if p < n:
        rate_transient = -float(np.max(np.linalg.eigvals(T2).real))
        decay_ceiling = max(1.0, _subspace_ceiling(W[:, p:], T2))
    else:
        rate_transient = np.inf
        decay_ceiling = 1.0

    return ModalSplit(
        projector_dominant=projector_dominant,
        projector_transient=projector_transient,
        rate_dominant=rate_dominant,
        rate_transient=rate_transient,
        growth_floor=growth_floor,
        decay_ceiling=decay_ceiling,
        shift=lam,
        p=p,
        a_matrix=A,
    )


def _eigvec_condition(T: np.ndarray) -> float:
    _, vectors = np.linalg.eig(T)
    return float(np.linalg.cond(vectors))


def _subspace_floor(basis: np.ndarray, block: np.ndarray) -> float:
    singular = np.linalg.svd(basis, compute_uv=False)
    return float(singular[-1] / (singular[0] * _eigvec_condition(block)))


def _subspace_ceiling(basis: np.ndarray, block: np.ndarray) -> float:
    singular = np.linalg.svd(basis, compute_uv=False)
    return float(singular[0] * _eigvec_condition(block) / singular[-1])
