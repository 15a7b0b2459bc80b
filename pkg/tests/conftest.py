import numpy as np
import pytest

from pneutop.config import OptConfig
from pneutop.mesh import DomainConfig, EdgeSegment
from pneutop.pressure import FlowParams


def simple_cfg(nelx, nely, rmin=1.5, delta_s=2.0, **kw):
    """Minimal test problem: inlet on the left, drain on the right, clamped
    bottom, output spring at the top-right corner, no non-design regions."""
    domain = DomainConfig(
        nelx=nelx,
        nely=nely,
        inlet=[EdgeSegment("left")],
        ambient=[EdgeSegment("right")],
        fixed=[EdgeSegment("bottom")],
        output_node=(nelx, nely),
        output_dof="y",
        output_sign=-1.0,
    )
    defaults = dict(
        domain=domain,
        rmin=rmin,
        flow=FlowParams(delta_s=delta_s),
        v_star=0.4,
    )
    defaults.update(kw)
    return OptConfig(**defaults).validate()


@pytest.fixture
def rng():
    return np.random.default_rng(42)
