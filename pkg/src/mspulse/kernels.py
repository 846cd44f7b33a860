"""Quadratic forms over the hat basis and the loop-closure constraints.

Both kernels are assembled on normalized time ``u = t / tau`` and rescaled
to physical units afterwards:

* area:    ``A = omega^T Ahat omega``, ``Ahat = tau**2 * Ahat_norm``
* energy:  ``E = omega^T Ehat omega``, ``Ehat = tau * (M_norm + c * S_norm)``

With this convention ``c`` is dimensionless and the optimal shape for a
fixed number of loops does not depend on ``tau``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg as sla

from .grid import TimeGrid, shifted_moments, segment_trig_moments

__all__ = [
    "KernelKind",
    "QuadraticKernel",
    "ConstraintSet",
    "build_area_kernel",
    "build_energy_kernel",
    "build_mass_matrix",
    "build_stiffness_matrix",
    "build_constraints",
    "constraint_gram",
    "project_kernel",
    "DEFAULT_QUAD_ORDER",
]

DEFAULT_QUAD_ORDER = 6
_GRAM_COND_LIMIT = 1e12


class KernelKind(Enum):
    AREA = "area"
    ENERGY = "energy"


@dataclass(frozen=True, eq=False)
class QuadraticKernel:
    matrix: np.ndarray
    kind: KernelKind
    grid: TimeGrid
    delta: float | None = None
    c: float | None = None

    def form(self, omega) -> float:
        omega = np.asarray(omega, dtype=float)
        return float(omega @ self.matrix @ omega)


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """Discretized constraint functionals and the projector that removes them.

    ``vectors[:, i]`` holds ``int phi_i chi_k dt`` for the four functions
    ``cos(delta t), sin(delta t), t sin(delta t), t cos(delta t)``.  ``gram`` is
    the continuous Gram matrix of those functions on ``[0, tau]``.
    """

    vectors: np.ndarray
    gram: np.ndarray
    projector: np.ndarray
    grid: TimeGrid
    delta: float

    def residuals(self, omega) -> np.ndarray:
        """``<phi_i, Omega>`` for a coefficient vector."""
        return self.vectors.T @ np.asarray(omega, dtype=float)


def _gauss_legendre_unit(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _area_matrix_normalized(u_nodes: np.ndarray, w: float, order: int) -> np.ndarray:
    """Symmetrized ``int int_{v<u} chi_i(u) cos(w u) chi_j(v) sin(w v)`` on [0, 1]."""
    x, wt = _gauss_legendre_unit(order)
    a = u_nodes[:-1]
    h = np.diff(u_nodes)
    n_el = a.size
    n_all = u_nodes.size
    el = np.arange(n_el)

    # element-local hats: left node carries (1 - x), right node carries x
    u = a[:, None] + h[:, None] * x[None, :]
    cos_u = np.cos(w * u)
    sin_u = np.sin(w * u)
    local = (1.0 - x, x)

    cg = np.zeros((n_el, n_all))
    sg = np.zeros((n_el, n_all))
    for off, shape in enumerate(local):
        cg[el, el + off] = h * (wt * shape * cos_u).sum(axis=1)
        sg[el, el + off] = h * (wt * shape * sin_u).sum(axis=1)

    # off-diagonal element pairs: outer element strictly after inner element
    s_before = np.zeros_like(sg)
    s_before[1:] = np.cumsum(sg, axis=0)[:-1]
    b = cg.T @ s_before

    # diagonal element pairs: the triangle v < u, collapsed to the unit square
    xo = x[:, None]
    yi = x[None, :] * xo
    jac = wt[:, None] * wt[None, :] * xo
    uu = a[:, None, None] + h[:, None, None] * xo[None]
    vv = a[:, None, None] + h[:, None, None] * yi[None]
    cu = np.cos(w * uu)
    sv = np.sin(w * vv)
    for li, fu in enumerate((1.0 - xo, xo)):
        for mi, fv in enumerate((1.0 - yi, yi)):
            vals = (h**2)[:, None, None] * jac * fu * cu * fv * sv
            np.add.at(b, (el + li, el + mi), vals.sum(axis=(1, 2)))

    full = 0.5 * (b + b.T)
    return full[1:-1, 1:-1]


def build_area_kernel(
    grid: TimeGrid, delta: float, quad_order: int = DEFAULT_QUAD_ORDER
) -> QuadraticKernel:
    """Matrix of the enclosed phase-space area in the hat basis.

    ``omega @ A @ omega`` equals ``int_0^tau cos(delta t) Omega(t) p(t) dt``
    with ``p(t) = int_0^t sin(delta s) Omega(s) ds``.  The kernel has a kink
    on the diagonal ``t = s``, so diagonal element pairs are split into two
    triangles before Gauss-Legendre quadrature of order ``quad_order``.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    tau = grid.tau
    mat = tau**2 * _area_matrix_normalized(grid.normalized(), delta * tau, quad_order)
    mat = 0.5 * (mat + mat.T)
    return QuadraticKernel(mat, KernelKind.AREA, grid, delta=float(delta))


def _tridiagonal(diag, off):
    n = diag.size
    m = np.diag(diag)
    idx = np.arange(n - 1)
    m[idx, idx + 1] = off
    m[idx + 1, idx] = off
    return m


def build_mass_matrix(grid: TimeGrid) -> np.ndarray:
    """``<chi_i, chi_j>`` in physical time."""
    h = grid.spacing
    return _tridiagonal((h[:-1] + h[1:]) / 3.0, h[1:-1] / 6.0)


def build_stiffness_matrix(grid: TimeGrid) -> np.ndarray:
    """``<chi_i', chi_j'>`` in normalized time (dimensionless)."""
    h = grid.spacing / grid.tau
    return _tridiagonal(1.0 / h[:-1] + 1.0 / h[1:], -1.0 / h[1:-1])


def build_energy_kernel(grid: TimeGrid, c: float = 1.0) -> QuadraticKernel:
    """Mass matrix plus ``c`` times the derivative (stiffness) form.

    The derivative term is measured in normalized time, i.e. the functional is
    ``int Omega^2 dt + c * tau**2 * int Omega'^2 dt``.
    """
    if not c >= 0:
        raise ValueError(f"c must be non-negative, got {c}")
    mat = build_mass_matrix(grid) + (c * grid.tau) * build_stiffness_matrix(grid)
    return QuadraticKernel(mat, KernelKind.ENERGY, grid, c=float(c))


def _constraint_vectors(grid: TimeGrid, delta: float) -> np.ndarray:
    nodes = grid.nodes
    a = nodes[:-1]
    h = np.diff(nodes)
    # int_a^b (s/h)^j-type products: I_k = int_0^h s^k e^{i delta (a+s)} ds
    moments = shifted_moments(a, h, delta, 2)
    i0, i1, i2 = moments

    # left-node hat on an element is (h - s)/h, right-node hat is s/h
    # phi1 + i phi2 = e^{i delta t}; phi4 + i phi3 = t e^{i delta t}, t = a + s
    right_plain = i1 / h
    left_plain = i0 - right_plain
    right_t = (a * i1 + i2) / h
    left_t = a * i0 + i1 - right_t

    def scatter(left, right):
        out = np.zeros(nodes.size, dtype=complex)
        np.add.at(out, np.arange(a.size), left)
        np.add.at(out, np.arange(a.size) + 1, right)
        return out[1:-1]

    plain = scatter(left_plain, right_plain)
    weighted = scatter(left_t, right_t)
    return np.column_stack([plain.real, plain.imag, weighted.imag, weighted.real])


def constraint_gram(tau: float, delta: float) -> np.ndarray:
    """Closed-form ``<phi_i, phi_j>`` on ``[0, tau]``."""

    def poly(m):
        return tau ** (m + 1) / (m + 1)

    def trig(m):
        s, c = segment_trig_moments(0.0, tau, 2.0 * delta, m)
        return s, c

    s0, c0 = trig(0)
    s1, c1 = trig(1)
    s2, c2 = trig(2)
    g = np.empty((4, 4))
    # order: cos, sin, t sin, t cos
    g[0, 0] = 0.5 * (poly(0) + c0)
    g[1, 1] = 0.5 * (poly(0) - c0)
    g[0, 1] = 0.5 * s0
    g[0, 2] = 0.5 * s1
    g[0, 3] = 0.5 * (poly(1) + c1)
    g[1, 2] = 0.5 * (poly(1) - c1)
    g[1, 3] = 0.5 * s1
    g[2, 2] = 0.5 * (poly(2) - c2)
    g[3, 3] = 0.5 * (poly(2) + c2)
    g[2, 3] = 0.5 * s2
    iu = np.triu_indices(4, 1)
    g[(iu[1], iu[0])] = g[iu]
    return g


def build_constraints(grid: TimeGrid, delta: float) -> ConstraintSet:
    """Constraint vectors, their Gram matrix and the complement projector.

    The projector is ``1 - sum_ij |b_i> (B^T B)^-1_ij <b_j|`` in coefficient
    space, so ``p @ b_i == 0`` and every vector in its range gives a pulse
    with ``<phi_i, Omega> = 0``.
    """
    tau = grid.tau
    loops = delta * tau / (2.0 * math.pi)
    if abs(loops - round(loops)) > 1e-9 * max(1.0, abs(loops)) or round(loops) < 1:
        warnings.warn(
            f"delta * tau = 2 pi * {loops:.6g} is not a positive integer number of loops",
            stacklevel=2,
        )
    gram = constraint_gram(tau, delta)
    scale = np.sqrt(np.abs(np.diag(gram)))
    if np.any(scale == 0) or np.linalg.cond(gram / np.outer(scale, scale)) > _GRAM_COND_LIMIT:
        raise ValueError(f"constraint functions are linearly dependent for delta={delta}")

    b = _constraint_vectors(grid, delta)
    norms = np.linalg.norm(b, axis=0)
    bn = b / norms
    gram_b = bn.T @ bn
    try:
        factor = sla.cho_factor(gram_b)
    except np.linalg.LinAlgError as exc:
        raise ValueError("discretized constraints are linearly dependent") from exc
    proj = np.eye(grid.n) - bn @ sla.cho_solve(factor, bn.T)
    proj = 0.5 * (proj + proj.T)
    return ConstraintSet(b, gram, proj, grid, float(delta))


def project_kernel(kernel: QuadraticKernel, constraints: ConstraintSet) -> QuadraticKernel:
    """``p^T K p`` restricted to the admissible subspace (singular, nullity >= 4)."""
    if not kernel.grid.same_as(constraints.grid):
        raise ValueError("kernel and constraints live on different grids")
    p = constraints.projector
    mat = p.T @ kernel.matrix @ p
    mat = 0.5 * (mat + mat.T)
    return QuadraticKernel(mat, kernel.kind, kernel.grid, kernel.delta, kernel.c)
