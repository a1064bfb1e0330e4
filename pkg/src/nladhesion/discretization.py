"""Structured P1 discretization of the body and its contact edge.

The body is the rectangle ``(0, lx) x (0, ly)`` with

* Gamma_D: the left edge ``x = 0`` (clamped),
* Gamma_C: the bottom edge ``y = 0`` (adhesive contact, outward normal ``(0, -1)``),
* Gamma_N: the top and right edges.

Displacement dofs are interleaved, ``(u_x, u_y)`` of node ``n`` at
``2n, 2n+1``.  Nodes are numbered row by row, ``n = j * (nx + 1) + i``, so the
contact nodes are ``0..nx`` and their arclength is the ``x`` coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "Mesh",
    "MaterialTensors",
    "build_mesh",
    "element_stiffness",
    "assemble_elastic",
    "assemble_viscous",
    "assemble_surface_laplacian",
    "assemble_surface_mass",
    "assemble_load",
    "assemble_h1_gram",
    "trace",
    "normal_trace",
    "restrict",
    "smallest_eigenvalue",
]

NORMAL = np.array([0.0, -1.0])


@dataclass(frozen=True, eq=False)
class Mesh:
    nx: int
    ny: int
    lx: float
    ly: float
    coords: np.ndarray        # (n_nodes, 2)
    triangles: np.ndarray     # (n_tri, 3), counterclockwise
    tags: np.ndarray          # (n_nodes,) in {"", "D", "N", "C"}
    contact_nodes: np.ndarray
    contact_s: np.ndarray     # arclength along Gamma_C
    contact_weights: np.ndarray
    dirichlet_nodes: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.coords)

    @property
    def n_dofs(self) -> int:
        return 2 * len(self.coords)

    @property
    def n_contact(self) -> int:
        return len(self.contact_nodes)

    @property
    def dirichlet_dofs(self) -> np.ndarray:
        d = self.dirichlet_nodes
        return np.sort(np.concatenate([2 * d, 2 * d + 1]))

    @property
    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.dirichlet_dofs] = False
        return np.flatnonzero(mask)

    @property
    def contact_length(self) -> float:
        return self.lx

    def neumann_edges(self, edges=("top", "right")) -> np.ndarray:
        """Boundary segments ``(n_a, n_b)`` on the requested Neumann edges."""
        nx, ny = self.nx, self.ny
        segs = []
        for edge in edges:
            if edge == "top":
                row = ny * (nx + 1) + np.arange(nx + 1)
                segs.append(np.column_stack([row[:-1], row[1:]]))
            elif edge == "right":
                col = np.arange(ny + 1) * (nx + 1) + nx
                segs.append(np.column_stack([col[:-1], col[1:]]))
            else:
                raise ValueError(f"unknown Neumann edge {edge!r}")
        return np.concatenate(segs) if segs else np.zeros((0, 2), dtype=int)


@dataclass(frozen=True)
class MaterialTensors:
    """Isotropic elastic pair ``(lam, mu)`` and viscous pair ``(lam_v, mu_v)``."""

    lam: float = 1.0
    mu: float = 1.0
    lam_v: float = 0.5
    mu_v: float = 0.5

    def __post_init__(self):
        if not (self.mu > 0.0 and self.mu_v > 0.0):
            raise ValueError("shear moduli mu and mu_v must be positive")
        if not (self.lam >= 0.0 and self.lam_v >= 0.0):
            raise ValueError("Lame parameters lam and lam_v must be nonnegative")

    @property
    def elastic_ellipticity(self) -> float:
        return 2.0 * self.mu

    @property
    def viscous_ellipticity(self) -> float:
        return 2.0 * self.mu_v


def build_mesh(nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> Mesh:
    if nx < 2 or ny < 2:
        raise ValueError(f"need nx, ny >= 2, got ({nx}, {ny})")
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    coords = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    n00 = (j * (nx + 1) + i).ravel()
    n10, n01 = n00 + 1, n00 + nx + 1
    n11 = n01 + 1
    triangles = np.concatenate([np.column_stack([n00, n10, n11]),
                                np.column_stack([n00, n11, n01])])

    ii = np.tile(np.arange(nx + 1), ny + 1)
    jj = np.repeat(np.arange(ny + 1), nx + 1)
    tags = np.full(len(coords), "", dtype="<U1")
    tags[(jj == ny) | (ii == nx)] = "N"
    tags[jj == 0] = "C"
    tags[ii == 0] = "D"

    contact = np.arange(nx + 1)
    h = lx / nx
    weights = np.full(nx + 1, h)
    weights[[0, -1]] = 0.5 * h
    return Mesh(nx, ny, float(lx), float(ly), coords, triangles, tags,
                contact, xs.copy(), weights, np.flatnonzero(ii == 0))


def _p1_gradients(coords, triangles):
    X = coords[triangles]                      # (ne, 3, 2)
    x, y = X[..., 0], X[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], 1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], 1)
    twice_area = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) \
        - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    area = 0.5 * twice_area
    return b / twice_area[:, None], c / twice_area[:, None], area


def element_stiffness(coords, lam: float, mu: float):
    """Isotropic P1 element matrices for ``int lam div u div v + 2 mu e(u):e(v)``.

    ``coords`` is ``(3, 2)`` for one triangle or ``(ne, 3, 2)``.
    Returns ``(6, 6)`` or ``(ne, 6, 6)`` with interleaved local dofs.
    """
    coords = np.asarray(coords, dtype=float)
    single = coords.ndim == 2
    X = coords[None] if single else coords
    ne = X.shape[0]
    dNx, dNy, area = _p1_gradients(X.reshape(-1, 2),
                                   np.arange(3 * ne).reshape(ne, 3))
    Bm = np.zeros((ne, 3, 6))
    Bm[:, 0, 0::2] = dNx
    Bm[:, 1, 1::2] = dNy
    Bm[:, 2, 0::2] = dNy
    Bm[:, 2, 1::2] = dNx
    D = np.array([[lam + 2 * mu, lam, 0.0],
                  [lam, lam + 2 * mu, 0.0],
                  [0.0, 0.0, mu]])
    Ke = np.einsum("eki,kl,elj->eij", Bm, D, Bm) * np.abs(area)[:, None, None]
    return Ke[0] if single else Ke


def _assemble_vector_form(mesh: Mesh, Ke) -> sp.csr_matrix:
    dofs = np.empty((len(mesh.triangles), 6), dtype=np.int64)
    dofs[:, 0::2] = 2 * mesh.triangles
    dofs[:, 1::2] = 2 * mesh.triangles + 1
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    A = sp.coo_matrix((Ke.ravel(), (rows, cols)),
                      shape=(mesh.n_dofs, mesh.n_dofs)).tocsr()
    A.sum_duplicates()
    return A


def assemble_elastic(mesh: Mesh, tensors: MaterialTensors) -> sp.csr_matrix:
    Ke = element_stiffness(mesh.coords[mesh.triangles], tensors.lam, tensors.mu)
    return _assemble_vector_form(mesh, Ke)


def assemble_viscous(mesh: Mesh, tensors: MaterialTensors) -> sp.csr_matrix:
    Ke = element_stiffness(mesh.coords[mesh.triangles], tensors.lam_v, tensors.mu_v)
    return _assemble_vector_form(mesh, Ke)


def assemble_surface_laplacian(mesh: Mesh) -> sp.csr_matrix:
    """P1 stiffness of ``-d^2/ds^2`` on Gamma_C with natural (Neumann) ends."""
    n = mesh.n_contact
    # uniform spacing keeps the row sums exactly zero in floating point
    h = np.full(n - 1, mesh.lx / mesh.nx)
    main = np.zeros(n)
    main[:-1] += 1.0 / h
    main[1:] += 1.0 / h
    off = -1.0 / h
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def assemble_surface_mass(mesh: Mesh, weight=None) -> sp.csr_matrix:
    """Lumped ``int_{Gamma_C} chi u . v`` as a diagonal on all displacement dofs."""
    chi = np.ones(mesh.n_contact) if weight is None else np.asarray(weight, float)
    if chi.shape != (mesh.n_contact,):
        raise ValueError(f"weight of shape {chi.shape} does not match "
                         f"{mesh.n_contact} contact nodes")
    diag = np.zeros(mesh.n_dofs)
    wc = mesh.contact_weights * chi
    diag[2 * mesh.contact_nodes] = wc
    diag[2 * mesh.contact_nodes + 1] = wc
    return sp.diags(diag, format="csr")


def _at_time(load, t):
    value = load(t) if callable(load) else load
    return np.asarray(value, dtype=float).reshape(2)


def assemble_load(mesh: Mesh, f=(0.0, 0.0), h=(0.0, 0.0), t: float = 0.0,
                  traction_edges=("top", "right")) -> np.ndarray:
    """Load vector of ``int_Omega f.v + int_{Gamma_N} h.v``.

    ``f`` and ``h`` are spatially constant 2-vectors or callables of ``t``
    returning one.  Dirichlet entries are zeroed.
    """
    fv, hv = _at_time(f, t), _at_time(h, t)
    F = np.zeros((mesh.n_nodes, 2))
    _, _, area = _p1_gradients(mesh.coords, mesh.triangles)
    nodal_area = np.zeros(mesh.n_nodes)
    np.add.at(nodal_area, mesh.triangles.ravel(), np.repeat(np.abs(area) / 3.0, 3))
    F += nodal_area[:, None] * fv
    segs = mesh.neumann_edges(traction_edges)
    if len(segs):
        length = np.linalg.norm(mesh.coords[segs[:, 1]] - mesh.coords[segs[:, 0]],
                                axis=1)
        nodal_len = np.zeros(mesh.n_nodes)
        np.add.at(nodal_len, segs.ravel(), np.repeat(0.5 * length, 2))
        F += nodal_len[:, None] * hv
    F = F.ravel()
    F[mesh.dirichlet_dofs] = 0.0
    return F


def assemble_h1_gram(mesh: Mesh) -> sp.csr_matrix:
    """Consistent-mass plus gradient Gram matrix of the vector H^1 inner product."""
    dNx, dNy, area = _p1_gradients(mesh.coords, mesh.triangles)
    area = np.abs(area)
    stiff = (np.einsum("ei,ej->eij", dNx, dNx)
             + np.einsum("ei,ej->eij", dNy, dNy)) * area[:, None, None]
    mass = (np.ones((3, 3)) + np.eye(3))[None] * (area / 12.0)[:, None, None]
    Se = stiff + mass
    Ke = np.zeros((len(area), 6, 6))
    Ke[:, 0::2, 0::2] = Se
    Ke[:, 1::2, 1::2] = Se
    return _assemble_vector_form(mesh, Ke)


def trace(mesh: Mesh, u) -> np.ndarray:
    """Contact-node displacement vectors, shape ``(n_contact, 2)``."""
    u = np.asarray(u, dtype=float).reshape(-1, 2)
    return u[mesh.contact_nodes].copy()


def normal_trace(mesh: Mesh, u) -> np.ndarray:
    """``u . n`` on the contact nodes; positive means penetration."""
    return trace(mesh, u) @ NORMAL


def restrict(M, dofs):
    """Principal submatrix on ``dofs`` (Dirichlet elimination)."""
    M = sp.csr_matrix(M)
    return M[dofs][:, dofs]


def smallest_eigenvalue(M, tol: float = 1e-12, maxiter: int = 2000,
                        seed: int = 0) -> float:
    """Smallest eigenvalue of a sparse SPD matrix by inverse iteration."""
    lu = spla.splu(sp.csc_matrix(M))
    x = np.random.default_rng(seed).standard_normal(M.shape[0])
    x /= np.linalg.norm(x)
    lam = np.inf
    for _ in range(maxiter):
        y = lu.solve(x)
        nrm = np.linalg.norm(y)
        x = y / nrm
        lam_new = float(x @ (M @ x))
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new
        lam = lam_new
    return lam
