"""Small-scale LMI feasibility engine for storage search.

Feasibility problems are affine in a symmetric unknown P: a set of residual
blocks that must satisfy ``lmax <= -epsilon``, optional linear equalities
(such as P B = C^T) and an inertia target. Equalities are eliminated exactly
by parameterizing P over the constraint null space; the spectral constraints
are handled by alternating projections between the affine range of the
residual map and the per-block eigenvalue caps, with Dykstra corrections on
the non-affine side. Adequate for the desk-scale dimensions this package
targets; no external solver involved.

Success is verifier-gated: callers re-check every solution with the relevant
module verifier, so the engine can never leak an unverified certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import matrixcore as mc
from .errors import LmiInfeasibleError
from .policy import DEFAULT_POLICY, NumericPolicy

__all__ = [
    "LinearEquality",
    "LmiProblem",
    "LmiReport",
    "solve",
    "project_spectral",
    "svec",
    "smat",
]

_SQRT2 = np.sqrt(2.0)


def svec(S: np.ndarray) -> np.ndarray:
    """Orthonormal half-vectorization: Frobenius inner product becomes a dot product."""
    n = S.shape[0]
    idx = np.triu_indices(n)
    out = S[idx].copy()
    out[idx[0] != idx[1]] *= _SQRT2
    return out


def smat(v: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`svec`."""
    S = np.zeros((n, n))
    idx = np.triu_indices(n)
    vals = v.copy()
    vals[idx[0] != idx[1]] /= _SQRT2
    S[idx] = vals
    S.T[idx] = vals
    return S


def _sym_basis(n: int) -> list[np.ndarray]:
    basis = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            if i == j:
                E[i, i] = 1.0
            else:
                E[i, j] = E[j, i] = 1.0 / _SQRT2
            basis.append(E)
    return basis


@dataclass(frozen=True)
class LinearEquality:
    """Linear constraint map(P) = rhs, with map linear in P."""

    map: Callable[[np.ndarray], np.ndarray]
    rhs: np.ndarray


@dataclass(frozen=True)
class LmiProblem:
    """Feasibility data: residual blocks, equalities, inertia target, margin."""

    dim: int
    blocks: list[Callable[[np.ndarray], np.ndarray]]
    equalities: list[LinearEquality] = field(default_factory=list)
    inertia_target: tuple[int, int, int] | None = None
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("an LMI problem needs at least one residual block")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive for termination detection")


@dataclass(frozen=True)
class LmiReport:
    """Outcome summary; on failure this is a budget report, not an infeasibility proof."""

    feasible: bool
    iterations: int
    violation: float
    equality_residual: float
    inertia: tuple[int, int, int] | None = None
    message: str = ""

    def __str__(self) -> str:
        state = "feasible" if self.feasible else "not found"
        return (
            f"LMI search {state} after {self.iterations} iterations "
            f"(violation {self.violation:.3e}, equality residual "
            f"{self.equality_residual:.3e}{', ' + self.message if self.message else ''})"
        )


def project_spectral(S, cap: float) -> np.ndarray:
    """Nearest (Frobenius) symmetric matrix with all eigenvalues at most ``cap``."""
    eigenvalues, eigenvectors = mc.sym_eigen(S)
    clipped = np.minimum(eigenvalues, cap)
    return (eigenvectors * clipped) @ eigenvectors.T


def solve(problem: LmiProblem, seed, policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Find P satisfying every block with margin epsilon, or raise with a report.

    On success the returned P meets every residual block with
    ``lmax <= -epsilon + lmi_tol``, satisfies all equalities to ``eq_tol``
    and matches the inertia target exactly.
    """
    n = problem.dim
    basis = _sym_basis(n)
    dsym = len(basis)
    seed = mc.as_symmetric(seed) if seed is not None else np.zeros((n, n))

    # eliminate equality constraints: P = P_part + smat(N c)
    if problem.equalities:
        rows = []
        rhs = []
        for eq in problem.equalities:
            rhs.append(np.asarray(eq.rhs, dtype=float).ravel())
            rows.append(np.column_stack([np.asarray(eq.map(E), dtype=float).ravel() for E in basis]))
        G = np.vstack(rows)
        g = np.concatenate(rhs)
        part, *_ = np.linalg.lstsq(G, g, rcond=None)
        eq_residual = float(np.linalg.norm(G @ part - g, np.inf))
        if eq_residual > policy.eq_tol * max(1.0, float(np.linalg.norm(g, np.inf))):
            raise LmiInfeasibleError(
                LmiReport(
                    feasible=False,
                    iterations=0,
                    violation=np.inf,
                    equality_residual=eq_residual,
                    message="equality constraints are unsatisfiable",
                )
            )
        _, sv, Vt = np.linalg.svd(G)
        rank = int(np.sum(sv > max(G.shape) * np.finfo(float).eps * (sv[0] if sv.size else 1.0)))
        N = Vt[rank:].T  # dsym x d
        P_part = smat(part, n)
    else:
        eq_residual = 0.0
        N = np.eye(dsym)
        P_part = np.zeros((n, n))

    d = N.shape[1]
    if d == 0 and problem.equalities:
        # fully determined by equalities; only the block check remains
        return _finalize(problem, P_part, 0, eq_residual, policy)

    # affine residual maps in the reduced coordinates: r_j(c) = b_j + M_j c
    base_blocks = [np.asarray(blk(P_part), dtype=float) for blk in problem.blocks]
    block_dims = [blk.shape[0] for blk in base_blocks]
    M_parts = []
    for blk, base in zip(problem.blocks, base_blocks):
        cols = []
        for k in range(d):
            direction = smat(N[:, k], n)
            cols.append(svec(np.asarray(blk(P_part + direction), dtype=float) - base))
        M_parts.append(np.column_stack(cols) if cols else np.zeros((svec(base).size, 0)))
    M = np.vstack(M_parts)
    b = np.concatenate([svec(base) for base in base_blocks])
    pinv_M = np.linalg.pinv(M)
    slices = []
    offset = 0
    for dim_k in block_dims:
        size = dim_k * (dim_k + 1) // 2
        slices.append(slice(offset, offset + size))
        offset += size

    def to_affine(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        c = pinv_M @ (z - b)
        return c, b + M @ c

    def violation(c: np.ndarray) -> float:
        worst = -np.inf
        for sl, dim_k in zip(slices, block_dims):
            R = smat((b + M @ c)[sl], dim_k)
            lmax = float(mc.sym_eigen(R, policy)[0][-1])
            worst = max(worst, lmax + problem.epsilon)
        return worst

    c0 = N.T @ svec(seed - P_part)
    x = b + M @ c0
    corrections = np.zeros_like(x)
    best = np.inf
    best_c = c0
    stall = 0
    iterations = 0
    cap = -problem.epsilon

    for iterations in range(1, policy.lmi_max_iterations + 1):
        c, x = to_affine(x)
        viol = violation(c)
        if viol < best - policy.lmi_stagnation_delta:
            best, best_c, stall = viol, c, 0
        else:
            stall += 1
        if viol <= policy.lmi_tol:
            best_c = c
            break
        if stall >= policy.lmi_stagnation_window:
            break
        shifted = x + corrections
        projected = np.empty_like(x)
        for sl, dim_k in zip(slices, block_dims):
            projected[sl] = svec(project_spectral(smat(shifted[sl], dim_k), cap))
        corrections = shifted - projected
        x = projected

    P = P_part + smat(N @ best_c, n)
    P = 0.5 * (P + P.T)
    return _finalize(problem, P, iterations, eq_residual, policy)


def _finalize(
    problem: LmiProblem,
    P: np.ndarray,
    iterations: int,
    eq_residual: float,
    policy: NumericPolicy,
) -> np.ndarray:
    worst = -np.inf
    for blk in problem.blocks:
        R = np.asarray(blk(P), dtype=float)
        worst = max(worst, float(mc.sym_eigen(R, policy)[0][-1]) + problem.epsilon)
    actual_eq = _equality_residual(problem, P)
    inertia = mc.inertia_of(P, policy=policy).as_tuple()
    feasible = worst <= policy.lmi_tol and actual_eq <= policy.eq_tol
    if feasible and problem.inertia_target is not None and inertia != tuple(problem.inertia_target):
        raise LmiInfeasibleError(
            LmiReport(
                feasible=False,
                iterations=iterations,
                violation=worst,
                equality_residual=actual_eq,
                inertia=inertia,
                message=f"blocks satisfied but inertia {inertia} != target {tuple(problem.inertia_target)}",
            )
        )
    if not feasible:
        raise LmiInfeasibleError(
            LmiReport(
                feasible=False,
                iterations=iterations,
                violation=worst,
                equality_residual=actual_eq,
                inertia=inertia,
                message="iteration budget or stagnation limit reached",
            )
        )
    return P


def _equality_residual(problem: LmiProblem, P: np.ndarray) -> float:
    worst = 0.0
    for eq in problem.equalities:
        value = np.asarray(eq.map(P), dtype=float)
        worst = max(worst, float(np.max(np.abs(value - np.asarray(eq.rhs, dtype=float)))))
    return worst
