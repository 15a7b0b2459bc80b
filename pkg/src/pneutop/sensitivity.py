"""Adjoint sensitivities of the output displacement and the strain-energy
constraint, including the design-dependent load term, plus a central
finite-difference oracle over the full evaluation pipeline.

With w = K^-1 l and mu = A^-1 T^T w the objective gradient per element is

    df/drho_bar_i = -w_e (dK_e/drho_bar_i) u_e + mu_e (dA_e/drho_bar_i) p_e,

where the second (pneumatic load) term exists only because the load follows
the design; `include_load_term=False` ablates it for diagnostics.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp

from .linsolve import DirichletSystem
from .mesh import DomainModel


def _bilinear(a: np.ndarray, m: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-element a_e^T M b_e for stacked element vectors."""
    return np.einsum("ei,ij,ej->e", a, m, b)


def adjoint_objective(
    domain: DomainModel,
    elastic_system: DirichletSystem,
    flow_system: DirichletSystem,
    t: sp.spmatrix,
    l: np.ndarray,
    u: np.ndarray,
    p: np.ndarray,
    de: np.ndarray,
    dk: np.ndarray,
    dd: np.ndarray,
    ke_unit: np.ndarray,
    ce: np.ndarray,
    me: np.ndarray,
    include_load_term: bool = True,
) -> np.ndarray:
    """Gradient of f = l @ u w.r.t. rho_bar, one entry per element."""
    w = elastic_system.solve_adjoint(l)
    w_e = w[domain.edofs]
    u_e = u[domain.edofs]
    grad = -de * _bilinear(w_e, ke_unit, u_e)
    if include_load_term:
        mu = flow_system.solve_adjoint(t.T @ w)
        mu_e = mu[domain.enodes]
        p_e = p[domain.enodes]
        grad += dk * _bilinear(mu_e, ce, p_e) + dd * _bilinear(mu_e, me, p_e)
    return grad


def adjoint_strain_energy(
    domain: DomainModel,
    flow_system: DirichletSystem,
    t: sp.spmatrix,
    u: np.ndarray,
    p: np.ndarray,
    de: np.ndarray,
    dk: np.ndarray,
    dd: np.ndarray,
    ke_unit: np.ndarray,
    ce: np.ndarray,
    me: np.ndarray,
    se_star: float,
    include_load_term: bool = True,
) -> np.ndarray:
    """Gradient of g2 = (0.5 u K u) / se* w.r.t. rho_bar.

    The elastic part is self-adjoint (the multiplier is u itself); the load
    part needs one extra solve with the already-factorized flow matrix.
    """
    u_e = u[domain.edofs]
    grad = -0.5 * de * _bilinear(u_e, ke_unit, u_e)
    if include_load_term:
        nu = flow_system.solve_adjoint(t.T @ u)
        nu_e = nu[domain.enodes]
        p_e = p[domain.enodes]
        grad += dk * _bilinear(nu_e, ce, p_e) + dd * _bilinear(nu_e, me, p_e)
    return grad / se_star


def fd_oracle(
    evaluator,
    rho: np.ndarray,
    beta: float,
    se_star: float,
    elements: np.ndarray | None = None,
    h: float = 1e-6,
) -> dict[str, np.ndarray]:
    """Central finite differences of f_b, f_e, g1, g2 through the whole
    pipeline (filter -> project -> flow solve -> elastic solve).

    `elements` indexes into the free design-variable vector; defaults to all.
    Warns when the differenced signal sits at the solver noise floor.
    """
    design_idx = np.flatnonzero(evaluator.domain.design_mask())
    if elements is None:
        elements = np.arange(design_idx.size)
    out = {key: np.zeros(len(elements)) for key in ("f_b", "f_e", "g1", "g2")}
    max_signal = 0.0
    for row, j in enumerate(elements):
        i = design_idx[j]
        for sign in (+1.0, -1.0):
            rho_p = rho.copy()
            rho_p[i] += sign * h
            ev = evaluator.evaluate(
                rho_p, beta, se_star=se_star, with_gradients=False
            )
            for key in out:
                out[key][row] += sign * getattr(ev, key)
    for key in out:
        max_signal = max(max_signal, np.abs(out[key]).max(initial=0.0))
        out[key] /= 2.0 * h
    if max_signal < 1e-11:
        warnings.warn(
            f"finite-difference signal {max_signal:.2e} is at the solver "
            f"noise floor; increase h",
            RuntimeWarning,
            stacklevel=2,
        )
    return out
