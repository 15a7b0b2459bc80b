"""Plane-stress linear elastostatics on the structured quad mesh: element
stiffness, global assembly/solve with the output spring, and the volume and
strain-energy constraint functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, StateError
from .linsolve import DirichletSystem
from .mesh import DomainModel
from .pressure import _GP, shape_grads


def element_stiffness(e: float, nu: float, elem_size: float) -> np.ndarray:
    """8x8 bilinear-quad plane-stress stiffness (unit thickness), 2x2 Gauss.

    Symmetric positive semidefinite with exactly the three rigid-body zero
    modes; scales linearly with the modulus e.
    """
    if not 0.0 <= nu < 0.5:
        raise ConfigurationError("Poisson ratio must lie in [0, 0.5)")
    c = e / (1.0 - nu * nu) * np.array(
        [[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, (1.0 - nu) / 2.0]]
    )
    ke = np.zeros((8, 8))
    detw = (elem_size / 2.0) ** 2
    for xi, eta in _GP:
        g = shape_grads(xi, eta, elem_size)
        b = np.zeros((3, 8))
        b[0, 0::2] = g[:, 0]
        b[1, 1::2] = g[:, 1]
        b[2, 0::2] = g[:, 1]
        b[2, 1::2] = g[:, 0]
        ke += detw * (b.T @ c @ b)
    return ke


@dataclass
class ElasticState:
    """Solved structural state; keeps the factorization for adjoint reuse."""

    system: DirichletSystem
    u: np.ndarray
    u_out: float  # signed output displacement l @ u
    se: float  # strain energy 0.5 u K u (spring included)
    e_field: np.ndarray


def assemble_stiffness(domain: DomainModel, e_field: np.ndarray, nu: float) -> sp.csr_matrix:
    """Global stiffness including the output spring on the output dof."""
    ke_unit = element_stiffness(1.0, nu, domain.elem_size)
    data = e_field[:, None, None] * ke_unit
    rows = np.repeat(domain.edofs, 8, axis=1)
    cols = np.tile(domain.edofs, (1, 8))
    k = sp.coo_matrix(
        (data.reshape(-1), (rows.reshape(-1), cols.reshape(-1))),
        shape=(domain.ndof, domain.ndof),
    ).tocsr()
    if domain.ks:
        k += sp.coo_matrix(
            ([domain.ks], ([domain.out_dof], [domain.out_dof])),
            shape=(domain.ndof, domain.ndof),
        ).tocsr()
    return k


def assemble_and_solve(domain: DomainModel, e_field: np.ndarray, f: np.ndarray, nu: float) -> ElasticState:
    """Solves K u = f with homogeneous Dirichlet data on the fixed dof set."""
    if np.any(e_field <= 0):
        raise ConfigurationError("element moduli must be positive")
    k = assemble_stiffness(domain, e_field, nu)
    system = DirichletSystem.factorize(k, domain.fixed_dofs, label="stiffness")
    u = system.solve_state(f, np.zeros(domain.ndof), rtol=1e-9, label="stiffness")
    u_out = domain.out_sign * u[domain.out_dof]
    se = 0.5 * float(u @ (k @ u))
    return ElasticState(system=system, u=u, u_out=u_out, se=se, e_field=e_field)


def volume_constraint(rho_bar_b: np.ndarray, volumes: np.ndarray, v_star: float):
    """g1 = (sum v rho_bar / sum v) / v_star and its rho_bar gradient."""
    if not 0.0 < v_star <= 1.0:
        raise ConfigurationError("volume fraction limit must lie in (0, 1]")
    vtot = volumes.sum()
    g1 = float(volumes @ rho_bar_b) / (vtot * v_star)
    dg1 = volumes / (vtot * v_star)
    return g1, dg1


def strain_energy_constraint(se_e: float, se_star: float | None) -> float:
    """g2 = se_e / se_star against the frozen first-iteration reference."""
    if se_star is None or se_star <= 0:
        raise StateError("strain energy reference se* has not been initialized")
    return se_e / se_star
