import numpy as np
import pytest

from pneutop.elasticity import (
    assemble_and_solve,
    assemble_stiffness,
    element_stiffness,
    strain_energy_constraint,
    volume_constraint,
)
from pneutop.errors import ConfigurationError, StateError
from pneutop.mesh import DomainConfig, EdgeSegment, build_domain


def small_domain(nelx=4, nely=4, **kw):
    base = dict(
        nelx=nelx,
        nely=nely,
        inlet=[EdgeSegment("left")],
        ambient=[EdgeSegment("right")],
        fixed=[EdgeSegment("bottom")],
        output_node=(nelx, nely),
    )
    base.update(kw)
    return build_domain(DomainConfig(**base))


def test_element_stiffness_rank():
    ke = element_stiffness(1.0, 0.3, 1.0)
    assert np.allclose(ke, ke.T)
    assert np.linalg.matrix_rank(ke, tol=1e-10) == 5  # three rigid-body modes


def test_element_stiffness_linear_in_modulus():
    assert np.allclose(element_stiffness(2.0, 0.3, 1.0), 2 * element_stiffness(1.0, 0.3, 1.0))


def test_invalid_poisson_rejected():
    with pytest.raises(ConfigurationError):
        element_stiffness(1.0, 0.5, 1.0)


def test_uniaxial_patch():
    # ux = strain * x, uy = 0 -> sigma_x = E strain / (1 - nu^2); the nodal
    # reactions on the loaded edge must integrate that traction exactly
    e, nu, h, strain = 2.3, 0.27, 1.0, 1e-3
    ke = element_stiffness(e, nu, h)
    u = np.zeros(8)
    # corners CCW from lower-left: x = 0, h, h, 0
    u[2] = strain * h  # lower-right ux
    u[4] = strain * h  # upper-right ux
    f = ke @ u
    right_fx = f[2] + f[4]
    assert right_fx == pytest.approx(e / (1 - nu**2) * strain * h, rel=1e-12)


def test_zero_load_zero_solution():
    dom = small_domain()
    state = assemble_and_solve(dom, np.ones(dom.nel), np.zeros(dom.ndof), 0.3)
    assert np.allclose(state.u, 0.0)
    assert state.u_out == 0.0
    assert state.se == 0.0


def test_output_spring_on_diagonal():
    dom = small_domain(ks=2.5)
    k_with = assemble_stiffness(dom, np.ones(dom.nel), 0.3)
    dom0 = small_domain(ks=0.0)
    k_without = assemble_stiffness(dom0, np.ones(dom0.nel), 0.3)
    diff = (k_with - k_without).toarray()
    assert diff[dom.out_dof, dom.out_dof] == pytest.approx(2.5)
    diff[dom.out_dof, dom.out_dof] = 0.0
    assert np.allclose(diff, 0.0)


def test_reciprocity(rng):
    dom = small_domain(8, 8)
    e_field = 0.1 + rng.random(dom.nel)
    f = rng.standard_normal(dom.ndof)
    l = rng.standard_normal(dom.ndof)
    free = np.ones(dom.ndof, bool)
    free[dom.fixed_dofs] = False
    f[~free] = 0.0
    l[~free] = 0.0
    u_f = assemble_and_solve(dom, e_field, f, 0.3).u
    u_l = assemble_and_solve(dom, e_field, l, 0.3).u
    assert l @ u_f == pytest.approx(f @ u_l, rel=1e-10)


def test_volume_constraint_values():
    vols = np.ones(10)
    g1, dg1 = volume_constraint(np.full(10, 0.2), vols, 0.2)
    assert g1 == pytest.approx(1.0)
    g1, _ = volume_constraint(np.ones(10), vols, 0.2)
    assert g1 == pytest.approx(5.0)
    assert np.allclose(dg1, 1.0 / (0.2 * 10))


def test_volume_constraint_invalid_fraction():
    with pytest.raises(ConfigurationError):
        volume_constraint(np.ones(4), np.ones(4), 1.5)


def test_strain_energy_constraint():
    assert strain_energy_constraint(9.0, 10.0) == pytest.approx(0.9)
    assert strain_energy_constraint(10.0, 10.0) == pytest.approx(1.0)
    assert strain_energy_constraint(0.0, 10.0) == pytest.approx(0.0)
    with pytest.raises(StateError):
        strain_energy_constraint(1.0, None)
