"""Conjugate gradients for the assembled SPD systems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NotSPDError(RuntimeError):
    """CG hit a non-positive curvature direction: the matrix is not SPD.

    On assembled systems this signals an assembly bug, not a solver issue.
    """


@dataclass
class SolveReport:
    """Outcome of a CG solve."""

    x: np.ndarray
    iterations: int
    relative_residual: float
    converged: bool


def cg_solve(matrix, rhs, rel_tol=1e-12, max_iter=None, preconditioner="none"):
    """Preconditioned conjugate gradients from the zero start vector.

    Stops when the true relative residual ``||b - Ax|| / ||b||`` drops below
    ``rel_tol`` (the recurrence residual triggers the check, the true
    residual confirms it) or after ``max_iter`` iterations, whichever comes
    first. ``preconditioner`` is ``"none"`` or ``"jacobi"``.
    """
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.shape[0]
    if matrix.shape != (n, n):
        raise ValueError(f"matrix shape {matrix.shape} does not match rhs length {n}")
    if not (0.0 < rel_tol < 1.0):
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    if preconditioner not in ("none", "jacobi"):
        raise ValueError(f"unknown preconditioner {preconditioner!r}")
    if max_iter is None:
        max_iter = 20 * n

    if preconditioner == "jacobi":
        diag = (
            matrix.diagonal() if hasattr(matrix, "diagonal") else np.diag(matrix)
        ).astype(float)
        if np.any(diag <= 0.0):
            raise NotSPDError("non-positive diagonal entry")

        def precondition(r):
            return r / diag

    else:

        def precondition(r):
            return r

    norm_b = np.linalg.norm(rhs)
    if norm_b == 0.0:
        return SolveReport(
            x=np.zeros(n), iterations=0, relative_residual=0.0, converged=True
        )

    x = np.zeros(n)
    r = rhs.copy()
    z = precondition(r)
    p = z.copy()
    rz = float(r @ z)
    iterations = 0
    converged = False
    while iterations < max_iter:
        Ap = matrix @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise NotSPDError(f"p'Ap = {pAp} at iteration {iterations}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        iterations += 1
        if np.linalg.norm(r) <= rel_tol * norm_b:
            r = rhs - matrix @ x  # confirm with the true residual
            if np.linalg.norm(r) <= rel_tol * norm_b:
                converged = True
                break
            z = precondition(r)  # restart from the true residual
            p = z.copy()
            rz = float(r @ z)
            continue
        z = precondition(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new

    final = float(np.linalg.norm(rhs - matrix @ x) / norm_b)
    return SolveReport(
        x=x, iterations=iterations, relative_residual=final, converged=converged
    )
