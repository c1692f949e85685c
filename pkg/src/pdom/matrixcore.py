"""Dense real matrix kernel used by every verifier in the package.

Symmetric eigendecompositions, ordered real Schur splits, Lyapunov/Sylvester
solves and the matrix exponential, all with explicit residual checks against
the shared :class:`~pdom.policy.NumericPolicy`. Matrices are plain
``numpy.ndarray`` values in double precision; systems of interest are small
(n up to a few tens), so everything is dense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, NonHyperbolicError, NumericalError
from .policy import DEFAULT_POLICY, NumericPolicy

__all__ = [
    "Inertia",
    "SchurForm",
    "as_matrix",
    "as_symmetric",
    "sym_eigen",
    "inertia_of",
    "schur_split",
    "block_diagonalize",
    "lyapunov_solve",
    "expm",
]


def as_matrix(value, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Coerce to a finite float matrix, optionally enforcing a shape."""
    mat = np.atleast_2d(np.asarray(value, dtype=float))
    if mat.ndim != 2:
        raise DimensionError(f"expected a matrix, got array of ndim {mat.ndim}")
    if not np.all(np.isfinite(mat)):
        raise NumericalError("matrix contains non-finite entries")
    if shape is not None and mat.shape != shape:
        raise DimensionError(f"expected shape {shape}, got {mat.shape}")
    return mat


def as_symmetric(value, policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Validate near-symmetry and return the symmetrized matrix.

    The asymmetry allowance is ``sym_tol * max(1, ||S||_F)``; anything worse
    is a hard error rather than something to silently average away.
    """
    mat = as_matrix(value)
    if mat.shape[0] != mat.shape[1]:
        raise DimensionError(f"symmetric matrix must be square, got {mat.shape}")
    skew = np.max(np.abs(mat - mat.T)) if mat.size else 0.0
    if skew > policy.sym_tol * max(1.0, np.linalg.norm(mat, "fro")):
        raise DimensionError(f"matrix is not symmetric (max asymmetry {skew:.3e})")
    return 0.5 * (mat + mat.T)


@dataclass(frozen=True)
class Inertia:
    """Eigenvalue sign counts (negative, zero, positive) of a symmetric matrix."""

    negative: int
    zero: int
    positive: int

    @property
    def dim(self) -> int:
        return self.negative + self.zero + self.positive

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.negative, self.zero, self.positive)

    def matches(self, p: int, n: int) -> bool:
        """True when the counts are exactly (p, 0, n - p)."""
        return self.as_tuple() == (p, 0, n - p)


@dataclass(frozen=True)
class SchurForm:
    """Real Schur factorization A = Q T Q^T with a prescribed eigenvalue order.

    ``eigenvalues`` lists the (complex) eigenvalues in diagonal-block order,
    so the leading ``unstable_dim`` entries are the ones the split promoted.
    """

    Q: np.ndarray
    T: np.ndarray
    eigenvalues: np.ndarray

    def validate(self, A: np.ndarray, policy: NumericPolicy = DEFAULT_POLICY) -> None:
        n = self.Q.shape[0]
        orth = np.linalg.norm(self.Q.T @ self.Q - np.eye(n), "fro")
        if orth > 1e3 * policy.recon_tol:
            raise NumericalError(f"Schur basis lost orthogonality ({orth:.3e})")
        recon = np.linalg.norm(self.Q @ self.T @ self.Q.T - A, "fro")
        if recon > policy.recon_tol * max(1.0, np.linalg.norm(A, "fro")) * 1e3:
            raise NumericalError(f"Schur reconstruction residual too large ({recon:.3e})")


def sym_eigen(S, policy: NumericPolicy = DEFAULT_POLICY) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix."""
    mat = as_symmetric(S, policy)
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"symmetric eigensolve did not converge: {exc}") from exc
    return eigenvalues, eigenvectors


def inertia_of(S, ztol: float | None = None, policy: NumericPolicy = DEFAULT_POLICY) -> Inertia:
    """Count eigenvalues below, inside and above the zero band ``[-ztol, ztol]``.

    When ``ztol`` is omitted it defaults to ``ztol_rel * ||S||_2``.
    """
    eigenvalues, _ = sym_eigen(S, policy)
    if ztol is None:
        scale = np.max(np.abs(eigenvalues)) if eigenvalues.size else 0.0
        ztol = policy.ztol_rel * max(1.0, scale)
    if ztol < 0:
        raise ValueError("ztol must be nonnegative")
    negative = int(np.sum(eigenvalues < -ztol))
    positive = int(np.sum(eigenvalues > ztol))
    zero = eigenvalues.size - negative - positive
    return Inertia(negative, zero, positive)


def schur_split(A, shift: float, policy: NumericPolicy = DEFAULT_POLICY) -> tuple[SchurForm, int]:
    """Ordered real Schur form splitting the spectrum of ``A + shift*I`` at the axis.

    Eigenvalues of ``A + shift*I`` with positive real part lead the diagonal;
    the second return value is their count. A shifted eigenvalue within
    ``split_tol`` of the imaginary axis makes the split non-hyperbolic and
    raises :class:`NonHyperbolicError` (the dominance test is inconclusive
    at this rate, not failed).
    """
    mat = as_matrix(A)
    if mat.shape[0] != mat.shape[1]:
        raise DimensionError("schur_split requires a square matrix")
    spectrum = np.linalg.eigvals(mat)
    distance = np.abs(spectrum.real + shift)
    if np.any(distance <= policy.split_tol):
        worst = spectrum[np.argmin(distance)]
        raise NonHyperbolicError(
            f"eigenvalue {worst:.6g} lies within {policy.split_tol:.1e} of the "
            f"shifted axis Re = {-shift:.6g}"
        )
    try:
        T, Q, sdim = sla.schur(mat, output="real", sort=lambda re, im: re > -shift)
    except sla.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"Schur decomposition failed: {exc}") from exc
    ordered = _block_eigenvalues(T)
    form = SchurForm(Q=Q, T=T, eigenvalues=ordered)
    form.validate(mat, policy)
    return form, int(sdim)


def _block_eigenvalues(T: np.ndarray) -> np.ndarray:
    """Eigenvalues of a quasi-triangular matrix in diagonal-block order."""
    n = T.shape[0]
    values = []
    i = 0
    while i < n:
        if i + 1 < n and abs(T[i + 1, i]) > 0.0:
            block = T[i : i + 2, i : i + 2]
            values.extend(np.linalg.eigvals(block))
            i += 2
        else:
            values.append(complex(T[i, i]))
            i += 1
    return np.array(values)


def block_diagonalize(form: SchurForm, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Decouple the leading k-by-k Schur block from the rest.

    Returns ``(W, T1, T2)`` with ``A = W blockdiag(T1, T2) W^{-1}``, where the
    coupling block is removed by a Sylvester solve. Requires the two diagonal
    blocks to have disjoint spectra, which the ordered split guarantees.
    """
    n = form.T.shape[0]
    if not 0 <= k <= n:
        raise DimensionError(f"block size {k} outside [0, {n}]")
    if k in (0, n):
        return form.Q.copy(), form.T[:k, :k].copy(), form.T[k:, k:].copy()
    T1 = form.T[:k, :k]
    T2 = form.T[k:, k:]
    T12 = form.T[:k, k:]
    try:
        Y = sla.solve_sylvester(T1, -T2, -T12)
    except (sla.LinAlgError, ValueError) as exc:
        raise NumericalError(f"block decoupling Sylvester solve failed: {exc}") from exc
    V = np.eye(n)
    V[:k, k:] = Y
    return form.Q @ V, T1.copy(), T2.copy()


def lyapunov_solve(M, Q, policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Solve the continuous Lyapunov equation M^T X + X M = -Q.

    ``M`` and ``-M^T`` must share no eigenvalue; otherwise the Sylvester
    operator is singular and the solve is rejected.
    """
    mat = as_matrix(M)
    rhs = as_symmetric(Q, policy)
    if mat.shape[0] != mat.shape[1] or mat.shape != rhs.shape:
        raise DimensionError("lyapunov_solve needs square M and Q of equal size")
    spectrum = np.linalg.eigvals(mat)
    sums = spectrum[:, None] + np.conj(spectrum[None, :])
    scale = max(1.0, np.max(np.abs(spectrum)))
    if np.min(np.abs(sums)) <= 1e-12 * scale:
        raise NumericalError("singular Lyapunov operator: M and -M^T share an eigenvalue")
    try:
        X = sla.solve_continuous_lyapunov(mat.T, -rhs)
    except (sla.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Lyapunov solve failed: {exc}") from exc
    X = 0.5 * (X + X.T)
    residual = np.linalg.norm(mat.T @ X + X @ mat + rhs, "fro")
    bound = policy.recon_tol * (
        np.linalg.norm(mat, "fro") * np.linalg.norm(X, "fro") + np.linalg.norm(rhs, "fro")
    )
    if residual > max(bound, policy.recon_tol):
        raise NumericalError(f"Lyapunov residual {residual:.3e} exceeds bound {bound:.3e}")
    return X


# exp(x) overflows near 709; stay clearly below it
_EXP_RANGE_LIMIT = 700.0


def expm(A, t: float = 1.0, policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Matrix exponential exp(A t) via scaling-and-squaring."""
    mat = as_matrix(A)
    if mat.shape[0] != mat.shape[1]:
        raise DimensionError("expm requires a square matrix")
    if not np.isfinite(t):
        raise NumericalError("expm requires finite t")
    if np.linalg.norm(mat * t, 1) > _EXP_RANGE_LIMIT:
        raise NumericalError("exp(A t) out of double-precision range")
    result = sla.expm(mat * t)
    if not np.all(np.isfinite(result)):
        raise NumericalError("exp(A t) overflowed")
    return result
