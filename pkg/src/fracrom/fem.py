"""P1 finite elements on structured triangular grids.

Each grid cell is split along its lower-left to upper-right diagonal. Nodes
are numbered lexicographically with x running fastest. All element
integrals are exact for piecewise-linear functions.
"""
import enum
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .linalg import sparse_add_scaled

logger = logging.getLogger(__name__)

__all__ = [
    "BC",
    "StructuredMesh",
    "AffineProblem",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_load",
    "materialize",
]


class BC(str, enum.Enum):
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class StructuredMesh:
    """Uniform triangulation of the rectangle ``[ax, bx] x [ay, by]``."""

    nx: int
    ny: int
    ax: float = 0.0
    bx: float = 1.0
    ay: float = 0.0
    by: float = 1.0

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"need at least 2 nodes per side, got {self.nx}x{self.ny}")
        if not (self.bx > self.ax and self.by > self.ay):
            raise ValueError("empty domain")

    @property
    def hx(self):
        return (self.bx - self.ax) / (self.nx - 1)

    @property
    def hy(self):
        return (self.by - self.ay) / (self.ny - 1)

    @property
    def h(self):
        """Mesh parameter fed to the sinc rule (x-direction spacing)."""
        return self.hx

    @property
    def n_nodes(self):
        return self.nx * self.ny

    @property
    def area(self):
        return (self.bx - self.ax) * (self.by - self.ay)

    @cached_property
    def nodes(self):
        x = np.linspace(self.ax, self.bx, self.nx)
        y = np.linspace(self.ay, self.by, self.ny)
        X, Y = np.meshgrid(x, y)  # row index = y, so ravel() is x-fastest
        return np.column_stack([X.ravel(), Y.ravel()])

    @cached_property
    def triangles(self):
        i, j = np.meshgrid(np.arange(self.nx - 1), np.arange(self.ny - 1))
        n00 = (j * self.nx + i).ravel()
        n10 = n00 + 1
        n01 = n00 + self.nx
        n11 = n01 + 1
        lower = np.column_stack([n00, n10, n11])
        upper = np.column_stack([n00, n11, n01])
        # interleave so both triangles of a cell are adjacent
        return np.stack([lower, upper], axis=1).reshape(-1, 3)

    @property
    def n_triangles(self):
        return 2 * (self.nx - 1) * (self.ny - 1)

    @cached_property
    def centroids(self):
        return self.nodes[self.triangles].mean(axis=1)

    @cached_property
    def boundary_mask(self):
        mask = np.zeros((self.ny, self.nx), dtype=bool)
        mask[0, :] = mask[-1, :] = True
        mask[:, 0] = mask[:, -1] = True
        return mask.ravel()

    @cached_property
    def interior(self):
        return np.flatnonzero(~self.boundary_mask)

    def dofs(self, bc):
        """Node indices carrying unknowns under boundary condition ``bc``."""
        if BC(bc) is BC.DIRICHLET:
            return self.interior
        return np.arange(self.n_nodes)

    def n_dofs(self, bc):
        if BC(bc) is BC.DIRICHLET:
            return (self.nx - 2) * (self.ny - 2)
        return self.n_nodes

    def extend(self, u, bc):
        """Map a dof vector to a full nodal vector (zero on Dirichlet nodes)."""
        if BC(bc) is BC.NEUMANN:
            return np.asarray(u)
        full = np.zeros(self.n_nodes)
        full[self.interior] = u
        return full

    @cached_property
    def _geometry(self):
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        area = 0.5 * det
        # gradients of barycentric coordinates, shape (ntri, 3, 2)
        g1 = np.column_stack([e2[:, 1], -e2[:, 0]]) / det[:, None]
        g2 = np.column_stack([-e1[:, 1], e1[:, 0]]) / det[:, None]
        grads = np.stack([-(g1 + g2), g1, g2], axis=1)
        return area, grads

    @property
    def element_areas(self):
        return self._geometry[0]


_LOCAL_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def _assemble(mesh, local, bc):
    """Scatter per-element 3x3 blocks into a global CSR matrix restricted to dofs."""
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    A = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes))
    A.sum_duplicates()
    if BC(bc) is BC.DIRICHLET:
        idx = mesh.interior
        A = A[idx][:, idx]
        A.sort_indices()
    return A


def assemble_mass(mesh, bc=BC.NEUMANN):
    """Consistent P1 mass matrix ``M_ij = int phi_i phi_j``."""
    area = mesh.element_areas
    local = area[:, None, None] * _LOCAL_MASS[None]
    return _assemble(mesh, local, bc)


def _tensor_field(mesh, tensor):
    T = np.asarray(tensor, dtype=np.float64)
    nt = mesh.n_triangles
    if T.shape == (2, 2):
        T = np.broadcast_to(T, (nt, 2, 2))
    elif T.shape == (nt,):
        T = T[:, None, None] * np.eye(2)[None]
    elif T.shape != (nt, 2, 2):
        raise ValueError(f"tensor must be (2,2), ({nt},) or ({nt},2,2); got {T.shape}")
    if not np.allclose(T[:, 0, 1], T[:, 1, 0], rtol=0.0, atol=1e-14 * max(np.abs(T).max(), 1.0)):
        raise ValueError("diffusion tensor is not symmetric")
    return T


def assemble_stiffness(mesh, bc=BC.NEUMANN, tensor=None):
    """Stiffness matrix ``A_ij = int (T grad phi_j) . grad phi_i``.

    ``tensor`` is a constant symmetric 2x2 matrix, a per-element array of
    2x2 matrices, or a per-element scalar (meaning ``scalar * I``). The
    default is the identity.
    """
    T = _tensor_field(mesh, np.eye(2) if tensor is None else tensor)
    area, grads = mesh._geometry
    TG = np.einsum("eij,ebj->ebi", T, grads)
    local = area[:, None, None] * np.einsum("eai,ebi->eab", grads, TG)
    return _assemble(mesh, local, bc)


def assemble_load(mesh, bc=BC.NEUMANN, source=1.0):
    """Load vector ``g_i = int b phi_i``.

    ``source`` is either a constant or an array of nodal values of a P1
    function (in which case ``g = M b`` exactly, no lumping).
    """
    src = np.asarray(source, dtype=np.float64)
    if src.ndim == 0:
        area = mesh.element_areas
        g = np.zeros(mesh.n_nodes)
        np.add.at(g, mesh.triangles.ravel(), np.repeat(float(src) * area / 3.0, 3))
    else:
        if src.shape != (mesh.n_nodes,):
            raise ValueError(f"nodal source must have length {mesh.n_nodes}")
        g = assemble_mass(mesh, BC.NEUMANN) @ src
    if BC(bc) is BC.DIRICHLET:
        g = g[mesh.interior]
    return g


@dataclass
class AffineProblem:
    """Affine operator family ``K(mu) = sum_t a_coeffs(mu)[t] A_t``.

    ``a_coeffs``/``g_coeffs`` map a parameter vector to the coefficient
    arrays of the stiffness and load terms. The mass matrix ``M`` is kept
    separately since it carries the quadrature shift ``e^z``.
    """

    name: str
    mesh: StructuredMesh
    bc: BC
    A: list
    a_coeffs: Callable
    M: sp.csr_matrix
    g: list
    g_coeffs: Callable
    param_box: np.ndarray
    a_names: Sequence[str] = ()
    options: dict = field(default_factory=dict)

    @property
    def n_a(self):
        return len(self.A)

    @property
    def n_g(self):
        return len(self.g)

    @property
    def n_dofs(self):
        return self.M.shape[0]

    @property
    def n_params(self):
        return self.param_box.shape[0]

    def in_box(self, mu):
        mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
        lo, hi = self.param_box[:, 0], self.param_box[:, 1]
        return bool(np.all(mu >= lo) and np.all(mu <= hi))


def materialize(problem, mu):
    """Return ``(K, f)`` for parameter ``mu``.

    Parameters outside the declared box are allowed (extrapolation); a
    warning is logged.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    if mu.shape != (problem.n_params,):
        raise ValueError(f"{problem.name}: expected {problem.n_params} parameters, got {mu.shape}")
    if not problem.in_box(mu):
        logger.warning("%s: mu=%s outside parameter box %s", problem.name, mu.tolist(),
                       problem.param_box.tolist())
    ca = np.asarray(problem.a_coeffs(mu), dtype=np.float64)
    cg = np.asarray(problem.g_coeffs(mu), dtype=np.float64)
    K = problem.A[0] * 0.0
    for c, At in zip(ca, problem.A):
        K = sparse_add_scaled(K, At, 1.0, c)
    f = np.zeros(problem.n_dofs)
    for c, gt in zip(cg, problem.g):
        f = f + c * gt
    return K, f
