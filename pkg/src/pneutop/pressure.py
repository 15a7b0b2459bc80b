"""Design-dependent pneumatic load via Darcy flow with a volumetric drainage
term, and the conversion of the solved pressure field to structural nodal
forces.

The flow coefficient interpolates between the void value K_v and the solid
value K_s = epsilon * K_v through a smoothed Heaviside of the physical
density.  Drainage makes pressure decay to ambient inside solid material over
a penetration depth delta_s, calibrated so that p(delta_s) / p_in = r for a
solid column (see FlowParams.drainage_exponent).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, SolverError
from .fields import project
from .linsolve import DirichletSystem
from .mesh import DomainModel

_GAUSS = 1.0 / np.sqrt(3.0)
_GP = [(-_GAUSS, -_GAUSS), (_GAUSS, -_GAUSS), (_GAUSS, _GAUSS), (-_GAUSS, _GAUSS)]
# corner order must match mesh connectivity: CCW from lower-left
_SIGNS = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]


@dataclass
class FlowParams:
    kv: float = 1.0  # void flow coefficient
    epsilon: float = 1e-7  # flow contrast K_s / K_v
    eta_f: float = 0.1  # shared flow/drainage projection threshold
    beta_f: float = 10.0  # shared flow/drainage projection steepness
    r: float = 0.1  # remainder pressure ratio p(delta_s) / p_in
    delta_s: float = 2.0  # penetration depth (length units)
    p_in: float = 1.0
    p_0: float = 0.0  # ambient drainage pressure
    # The printed drainage coefficient D_s = (ln r / delta_s) K_s only matches
    # the meaning of r (remainder ratio at depth delta_s, decay
    # exp(-sqrt(D_s/K_s) x)) when squared; exponent 2 is the consistent
    # default, 1 reproduces the printed form.
    drainage_exponent: int = 2

    def __post_init__(self):
        if self.kv <= 0:
            raise ConfigurationError("void flow coefficient must be positive")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigurationError("flow contrast must lie in (0, 1)")
        if not 0.001 <= self.r <= 0.1:
            raise ConfigurationError("remainder ratio r must lie in [0.001, 0.1]")
        if self.delta_s <= 0:
            raise ConfigurationError("penetration depth must be positive")
        if self.drainage_exponent not in (1, 2):
            raise ConfigurationError("drainage_exponent must be 1 or 2")

    @property
    def ks_flow(self) -> float:
        return self.epsilon * self.kv

    @property
    def drain_solid(self) -> float:
        """Drainage coefficient of fully solid material."""
        return (np.log(1.0 / self.r) / self.delta_s) ** self.drainage_exponent * self.ks_flow


def shape_funcs(xi: float, eta: float) -> np.ndarray:
    return np.array([0.25 * (1 + sx * xi) * (1 + sy * eta) for sx, sy in _SIGNS])


def shape_grads(xi: float, eta: float, h: float) -> np.ndarray:
    """Physical gradients (4, 2) on a square element of edge h."""
    g = np.array(
        [
            [0.25 * sx * (1 + sy * eta), 0.25 * sy * (1 + sx * xi)]
            for sx, sy in _SIGNS
        ]
    )
    return g * (2.0 / h)


def element_conduction(h: float) -> np.ndarray:
    """4x4 matrix of grad(N)^T grad(N) for unit flow coefficient; row sums 0."""
    ce = np.zeros((4, 4))
    detw = (h / 2.0) ** 2
    for xi, eta in _GP:
        g = shape_grads(xi, eta, h)
        ce += detw * (g @ g.T)
    return ce


def element_mass(h: float) -> np.ndarray:
    """4x4 matrix of N^T N for unit drainage coefficient."""
    me = np.zeros((4, 4))
    detw = (h / 2.0) ** 2
    for xi, eta in _GP:
        n = shape_funcs(xi, eta)
        me += detw * np.outer(n, n)
    return me


def element_coupling(h: float) -> np.ndarray:
    """8x4 pressure-to-force block: te[2i+d, j] = int N_i dN_j/dx_d dOmega."""
    te = np.zeros((8, 4))
    detw = (h / 2.0) ** 2
    for xi, eta in _GP:
        n = shape_funcs(xi, eta)
        g = shape_grads(xi, eta, h)
        for d in range(2):
            te[d::2, :] += detw * np.outer(n, g[:, d])
    return te


def flow_coefficient(rho_bar: np.ndarray, params: FlowParams):
    """Per-element flow coefficient and its derivative w.r.t. rho_bar."""
    hfield, dh = project(rho_bar, params.eta_f, params.beta_f)
    k = params.kv * (1.0 - (1.0 - params.epsilon) * hfield)
    dk = -params.kv * (1.0 - params.epsilon) * dh
    return k, dk


def drainage_coefficient(rho_bar: np.ndarray, params: FlowParams):
    """Per-element drainage coefficient and its derivative w.r.t. rho_bar."""
    hfield, dh = project(rho_bar, params.eta_f, params.beta_f)
    ds = params.drain_solid
    return ds * hfield, ds * dh


def assemble_flow(domain: DomainModel, k: np.ndarray, d: np.ndarray) -> sp.csr_matrix:
    """Global flow matrix: conduction weighted by k plus drainage weighted by d."""
    ce = element_conduction(domain.elem_size)
    me = element_mass(domain.elem_size)
    data = k[:, None, None] * ce + d[:, None, None] * me
    rows = np.repeat(domain.enodes, 4, axis=1)
    cols = np.tile(domain.enodes, (1, 4))
    a = sp.coo_matrix(
        (data.reshape(-1), (rows.reshape(-1), cols.reshape(-1))),
        shape=(domain.nnode, domain.nnode),
    )
    return a.tocsr()


def build_coupling(domain: DomainModel) -> sp.csr_matrix:
    """Global operator T with structural forces F = -T p.

    Design-independent by construction, so dT/drho_bar = 0.
    """
    te = element_coupling(domain.elem_size)
    data = np.broadcast_to(te, (domain.nel, 8, 4))
    rows = np.repeat(domain.edofs, 4, axis=1)
    cols = np.tile(domain.enodes, (1, 8)).reshape(domain.nel, 8, 4)
    t = sp.coo_matrix(
        (data.reshape(-1), (rows.reshape(-1), cols.reshape(-1))),
        shape=(domain.ndof, domain.nnode),
    )
    return t.tocsr()


def solve_pressure(
    a: sp.spmatrix, domain: DomainModel, params: FlowParams
) -> tuple[np.ndarray, DirichletSystem]:
    """Solves A p = 0 under inlet/ambient Dirichlet data.

    Returns the nodal pressure and the factorized system for adjoint reuse.
    Enforces the discrete pressure bounds [-tol, p_in + tol], tol = 1e-8 p_in.
    """
    fixed = np.concatenate([domain.inlet_nodes, domain.ambient_nodes])
    system = DirichletSystem.factorize(a, fixed, label="flow")
    prescribed = np.zeros(domain.nnode)
    prescribed[domain.inlet_nodes] = params.p_in
    p = system.solve_state(
        np.zeros(domain.nnode), prescribed, rtol=1e-10, label="flow"
    )
    tol = 1e-8 * abs(params.p_in)
    lo, hi = sorted((0.0, params.p_in))
    if p.min() < lo - tol or p.max() > hi + tol:
        raise SolverError(
            f"pressure bounds violated: [{p.min():.3e}, {p.max():.3e}] "
            f"outside [{lo}, {hi}] + {tol:.1e}"
        )
    return p, system
