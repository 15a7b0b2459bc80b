"""Sparse direct solves with Dirichlet elimination.

Factorizations are kept so that state and adjoint systems sharing a matrix
reuse a single LU decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError


@dataclass
class DirichletSystem:
    """Symmetric system with prescribed values on a subset of dofs."""

    A: sp.csr_matrix
    free: np.ndarray  # boolean mask over dofs
    lu: spla.SuperLU

    @classmethod
    def factorize(cls, A: sp.spmatrix, fixed_dofs: np.ndarray, label: str = "system") -> "DirichletSystem":
        A = sp.csr_matrix(A)
        n = A.shape[0]
        free = np.ones(n, dtype=bool)
        free[fixed_dofs] = False
        if not free.any():
            raise SolverError(f"{label}: no free dofs remain after elimination")
        try:
            lu = spla.splu(sp.csc_matrix(A[free][:, free]))
        except RuntimeError as exc:
            raise SolverError(f"{label}: factorization failed ({exc})") from exc
        return cls(A=A, free=free, lu=lu)

    def solve_state(self, rhs: np.ndarray, prescribed: np.ndarray, rtol: float, label: str = "system") -> np.ndarray:
        """Solves A x = rhs with x = prescribed on fixed dofs.

        Raises SolverError if the free-dof residual exceeds rtol relative to
        the right-hand side (including the Dirichlet coupling term).
        """
        x = np.array(prescribed, dtype=float)
        x[self.free] = 0.0
        b = rhs[self.free] - (self.A @ x)[self.free]
        xf = self.lu.solve(b)
        if not np.all(np.isfinite(xf)):
            raise SolverError(f"{label}: non-finite solution")
        x[self.free] = xf
        res = np.linalg.norm(self.A[self.free] @ x - rhs[self.free])
        scale = max(np.linalg.norm(b), np.linalg.norm(rhs[self.free]), 1e-300)
        if res > rtol * scale:
            raise SolverError(
                f"{label}: residual {res:.3e} exceeds {rtol:.1e} x {scale:.3e}"
            )
        return x

    def solve_adjoint(self, rhs: np.ndarray) -> np.ndarray:
        """Solves A mu = rhs on free dofs, mu = 0 on fixed dofs."""
        mu = np.zeros_like(rhs, dtype=float)
        mu[self.free] = self.lu.solve(rhs[self.free])
        return mu
