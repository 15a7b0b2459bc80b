"""Three-field design parameterization: density filter, smoothed Heaviside
projection (blueprint/eroded), modified SIMP interpolation and the chain rule
pieces back to raw design variables.

All operations are pure functions of their inputs; beta-continuation state
lives in the optimization driver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .errors import ConfigurationError
from .mesh import DomainModel


@dataclass
class FilterOperator:
    """Row-normalized linearly-decaying distance weights.

    ``weights`` is row-stochastic: each row holds convex-combination weights
    v_j * w(x_i, x_j) / sum_k v_k * w(x_i, x_k) over the neighbors of i.
    """

    weights: sp.csr_matrix
    rmin: float

    @classmethod
    def from_points(cls, centers: np.ndarray, volumes: np.ndarray, rmin: float) -> "FilterOperator":
        if rmin <= 0:
            raise ConfigurationError("filter radius must be positive")
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        n = centers.shape[0]
        tree = cKDTree(centers)
        dist = tree.sparse_distance_matrix(tree, rmin, output_type="coo_matrix")
        # sparse_distance_matrix drops explicit self-pairs on some paths; add
        # the diagonal so every element is always its own neighbor.
        w = sp.coo_matrix(
            (1.0 - dist.data / rmin, (dist.row, dist.col)), shape=(n, n)
        ) + sp.eye(n, format="coo")
        w = sp.csr_matrix(w)
        w.data = np.minimum(w.data, 1.0)  # clip the doubled self-weight
        w.data *= np.asarray(volumes, dtype=float)[w.indices]
        rowsum = np.asarray(w.sum(axis=1)).ravel()
        w = sp.diags(1.0 / rowsum) @ w
        return cls(weights=w.tocsr(), rmin=float(rmin))

    @property
    def size(self) -> int:
        return self.weights.shape[0]


def build_filter(domain: DomainModel, rmin: float) -> FilterOperator:
    """Neighborhoods are all element centroids within rmin (physical units).

    A radius below the centroid spacing degenerates to the identity, which is
    legal.
    """
    return FilterOperator.from_points(domain.centers, domain.volumes, rmin)


def apply_filter(op: FilterOperator, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (op.size,):
        raise ValueError(f"field has shape {rho.shape}, expected ({op.size},)")
    return op.weights @ rho


def filter_backward(op: FilterOperator, dL_drho_tilde: np.ndarray) -> np.ndarray:
    """Transpose of the normalized weight matrix (chain rule through the filter)."""
    g = np.asarray(dL_drho_tilde, dtype=float)
    if g.shape != (op.size,):
        raise ValueError(f"field has shape {g.shape}, expected ({op.size},)")
    return op.weights.T @ g


def project(rho_tilde: np.ndarray, eta: float, beta: float):
    """Smoothed Heaviside projection and its derivative w.r.t. rho_tilde.

    Maps 0 -> 0 and 1 -> 1 exactly and is strictly increasing for beta >= 1.
    """
    if beta < 1:
        raise ConfigurationError("projection steepness beta must be >= 1")
    if not 0.0 < eta < 1.0:
        raise ConfigurationError("projection threshold eta must lie in (0, 1)")
    rho_tilde = np.asarray(rho_tilde, dtype=float)
    denom = np.tanh(beta * eta) + np.tanh(beta * (1.0 - eta))
    t = np.tanh(beta * (rho_tilde - eta))
    rho_bar = (np.tanh(beta * eta) + t) / denom
    drho_bar = beta * (1.0 - t * t) / denom
    return rho_bar, drho_bar


def simp_modulus(rho_bar: np.ndarray, e0: float, e1: float, penalty: float):
    """Modified SIMP interpolation E = E0 + rho_bar^p (E1 - E0), with derivative."""
    if e0 >= e1:
        raise ConfigurationError("void modulus E0 must be smaller than solid E1")
    if penalty < 1:
        raise ConfigurationError("SIMP penalty must be >= 1")
    rho_bar = np.asarray(rho_bar, dtype=float)
    e = e0 + rho_bar**penalty * (e1 - e0)
    de = penalty * rho_bar ** (penalty - 1.0) * (e1 - e0)
    return e, de


def grayness(rho_bar: np.ndarray) -> float:
    """Non-discreteness measure: mean of 4 rho_bar (1 - rho_bar).

    0 for fully binary fields, 1 for an all-0.5 field.
    """
    rho_bar = np.asarray(rho_bar, dtype=float)
    return float(np.mean(4.0 * rho_bar * (1.0 - rho_bar)))


def enforce_regions(rho_bar: np.ndarray, drho_bar: np.ndarray, domain: DomainModel):
    """Overwrites non-design elements after projection: NDS -> 1, NDV -> 0.

    The projection derivative of overwritten elements is zeroed so the chain
    rule never routes gradient through them.
    """
    from .mesh import NDS, NDV

    rho_bar = rho_bar.copy()
    drho_bar = drho_bar.copy()
    nds = domain.tags == NDS
    ndv = domain.tags == NDV
    rho_bar[nds] = 1.0
    rho_bar[ndv] = 0.0
    drho_bar[nds | ndv] = 0.0
    return rho_bar, drho_bar
