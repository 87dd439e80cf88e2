"""Global optimality certification via the dual of the relaxed QCQP.

The rotation-only problem is quadratic in R, so with the homogeneous
variable x = [vec(R), 1] it becomes

    min x' C x   s.t.  x' A_i x = b_i,  i = 1..7,

where the seven constraints fix the homogeneous coordinate and enforce
R' R = I over O(3) (orthogonal, not special orthogonal: the rotation
constraint set fails the linear independence qualification needed for
unique multipliers, the orthogonal one does not).  A candidate solution
is a KKT point of the semidefinite relaxation iff the least-squares
multipliers of

    sum_i lambda_i A_i x = C x

leave the dual matrix S = C - sum_i lambda_i A_i positive semidefinite.
S >= 0 certifies global optimality over the relaxed constraint set.

Convention note: the homogeneous coordinate is stored LAST in x, so the
objective blocks [[F, g], [g', 0]] are used verbatim; serialized
rotations elsewhere in the package are row-major and unaffected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Precomputed

__all__ = [
    "Certificate",
    "build_constraints",
    "build_objective",
    "certify",
    "transpose_permutation",
    "DEFAULT_PSD_TOL",
]

DEFAULT_PSD_TOL = 1e-4
STATIONARITY_TOL = 1e-6


@dataclass
class Certificate:
    multipliers: np.ndarray        # (7,)
    S: np.ndarray                  # (10, 10) dual matrix C - sum_i lam_i A_i
    min_eig_S: float
    stationarity_residual: float
    verdict: str                   # "certified" | "not-certified" | "stationarity-failed"

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"


def transpose_permutation() -> np.ndarray:
    """9x9 permutation P with vec(R') = P vec(R) (column-major vec)."""
    P = np.zeros((9, 9))
    for r in range(3):
        for c in range(3):
            P[3 * c + r, 3 * r + c] = 1.0
    return P


def build_constraints():
    """Sparse constraint matrices (A_1..A_7, b) for x = [vec(R), 1].

    A_1 pins the homogeneous coordinate, A_2..A_4 make the columns of R
    unit norm, A_5..A_7 make them mutually orthogonal.  Any orthogonal
    matrix satisfies all seven, reflections included.
    """
    mats = []

    A = np.zeros((10, 10))
    A[9, 9] = 1.0
    mats.append(A)

    for col in range(3):  # ||R[:, col]||^2 = 1
        A = np.zeros((10, 10))
        for row in range(3):
            i = 3 * col + row
            A[i, i] = 1.0
        A[9, 9] = -1.0
        mats.append(A)

    for col_a, col_b in ((0, 1), (0, 2), (1, 2)):  # R[:, a] . R[:, b] = 0
        A = np.zeros((10, 10))
        for row in range(3):
            i = 3 * col_a + row
            j = 3 * col_b + row
            A[i, j] = 1.0
            A[j, i] = 1.0
        mats.append(A)

    b = np.zeros(7)
    b[0] = 1.0
    return mats, b


def build_objective(pre: Precomputed) -> np.ndarray:
    """10x10 objective matrix C with x' C x = objective_rot(R) - const_term."""
    k = pre.c2.shape[0]
    # cross_corr already holds sum_i ybar_i (col k of Bbar_i)' laid out so
    # that reshaping gives the K x 9 map from vec(R') to s.
    kmat = pre.cross_corr.reshape(k, 9) @ transpose_permutation()

    C1, Bhat2, c2, lam = pre.C1, pre.Bhat2, pre.c2, pre.problem.lam
    F = kmat.T @ (C1 @ Bhat2 @ C1 - 2.0 * C1 + lam * C1 @ C1) @ kmat
    g = kmat.T @ (C1 @ Bhat2 @ c2 - c2 + lam * C1 @ c2)

    C = np.zeros((10, 10))
    C[:9, :9] = 0.5 * (F + F.T)
    C[:9, 9] = g
    C[9, :9] = g
    return C


def certify(pre: Precomputed, R: np.ndarray, psd_tol: float = DEFAULT_PSD_TOL) -> Certificate:
    """Check KKT optimality of a candidate rotation.

    Solves the 10-equation, 7-unknown multiplier system in least
    squares.  A large stationarity residual means R is not even a
    stationary point; otherwise the verdict is decided by the minimum
    eigenvalue of the dual matrix against -psd_tol * max(1, ||S||).
    Orthogonal R (including reflections) is required, not SO(3).
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or np.max(np.abs(R.T @ R - np.eye(3))) > 1e-8:
        raise ValueError("candidate must be orthogonal to within 1e-8")

    x = np.concatenate([R.flatten(order="F"), [1.0]])
    C = build_objective(pre)
    mats, _ = build_constraints()

    rhs = C @ x
    stacked = np.stack([A @ x for A in mats], axis=1)  # (10, 7)
    multipliers, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
    residual = float(np.linalg.norm(stacked @ multipliers - rhs))

    S = C - np.tensordot(multipliers, np.stack(mats), axes=1)
    evals = np.linalg.eigvalsh(S)
    min_eig = float(evals[0])
    s_norm = max(abs(evals[0]), abs(evals[-1]))

    if residual > STATIONARITY_TOL * max(1.0, np.linalg.norm(rhs)):
        verdict = "stationarity-failed"
    elif min_eig >= -psd_tol * max(1.0, s_norm):
        verdict = "certified"
    else:
        verdict = "not-certified"

    return Certificate(
        multipliers=multipliers,
        S=S,
        min_eig_S=min_eig,
        stationarity_residual=residual,
        verdict=verdict,
    )
