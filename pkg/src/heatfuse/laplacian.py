"""Discrete Laplace-Beltrami pairs (W, A) on textured meshes.

Two assemblies are provided:

* the fused Gaussian scheme, with weights
  ``w_ij = S_j * exp(-||xi_i - xi_j||^2 / (4 rho))`` over the joint
  embedding (photometric columns carry eta already, so one exponent
  covers both the geometric and the color term), symmetrized and
  truncated for sparsity, with constant mass ``a_i = 4 pi rho^2``;
* the classical cotangent scheme with barycentric vertex masses.

Both produce ``W = diag(row sums) - (w_ij)`` so constants are in the
kernel, and the operator acts as ``A^{-1} W``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .embedding import JointEmbedding
from .mesh import TexturedMesh, VertexAreas, _frozen

SCHEME_COTANGENT = "cotangent"
SCHEME_FUSED = "fused_gaussian"


@dataclass(frozen=True)
class LaplacianPair:
    """Sparse symmetric stiffness-like W plus diagonal mass A = diag(mass)."""

    W: sparse.csr_matrix
    mass: np.ndarray
    scheme: str
    rho: float | None = None
    eta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mass", _frozen(self.mass, np.float64))
        if (self.mass <= 0).any():
            raise ValueError("mass entries must be strictly positive")

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def A(self) -> sparse.dia_matrix:
        return sparse.diags(self.mass)


def _pairs_to_pair(i, j, w, mass, n, scheme, rho=None, eta=None) -> LaplacianPair:
    """Build W = diag(rowsum) - offdiag from symmetric pair weights (i < j)."""
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    vals = np.concatenate([w, w])
    off = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    off.sum_duplicates()
    deg = np.asarray(off.sum(axis=1)).ravel()
    W = sparse.diags(deg) - off
    return LaplacianPair(W.tocsr(), mass, scheme, rho=rho, eta=eta)


def assemble_fused(
    emb: JointEmbedding,
    areas: VertexAreas,
    rho: float,
    truncation_eps: float = 1e-7,
    dense: bool = False,
) -> LaplacianPair:
    """Fused Gaussian Laplacian over the joint embedding.

    Pairs whose Gaussian factor falls below ``truncation_eps`` are
    dropped to keep W sparse; ``dense=True`` keeps every pair (oracle
    mode for small meshes). Weights are symmetrized as
    ``(w_ij + w_ji)/2 = exp(...) * (S_i + S_j)/2``. The mass is the
    constant ``4 pi rho^2`` so eigenvalues approximate Laplace-Beltrami
    eigenvalues on analytic surfaces.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if truncation_eps <= 0:
        raise ValueError("truncation_eps must be positive")
    n = emb.n_vertices
    if len(areas.s) != n:
        raise ValueError("embedding and areas disagree on vertex count")

    coords = emb.coords
    if dense or truncation_eps >= 1.0:
        iu, ju = np.triu_indices(n, k=1)
    else:
        radius = np.sqrt(-4.0 * rho * np.log(truncation_eps))
        pairs = cKDTree(coords).query_pairs(radius, output_type="ndarray")
        iu, ju = (pairs[:, 0], pairs[:, 1]) if len(pairs) else (np.empty(0, np.int64),) * 2

    d2 = np.sum((coords[iu] - coords[ju]) ** 2, axis=1)
    factor = np.exp(-d2 / (4.0 * rho))
    if not dense:
        keep = factor >= truncation_eps
        iu, ju, factor = iu[keep], ju[keep], factor[keep]
    w = 0.5 * (areas.s[iu] + areas.s[ju]) * factor

    mass = np.full(n, 4.0 * np.pi * rho**2)
    pair = _pairs_to_pair(iu, ju, w, mass, n, SCHEME_FUSED, rho=rho, eta=emb.eta)

    adj = sparse.coo_matrix((np.ones(len(iu)), (iu, ju)), shape=(n, n))
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp > 1:
        warnings.warn(
            f"Gaussian truncation at {truncation_eps:g} leaves the weight graph "
            f"with {ncomp} connected components; the spectrum will have "
            f"{ncomp} (near-)zero eigenvalues",
            stacklevel=2,
        )
    return pair


def assemble_cotangent(mesh: TexturedMesh, areas: VertexAreas) -> LaplacianPair:
    """Cotangent-scheme pair: w_ij = (cot a + cot b)/2, barycentric mass.

    Requires an edge-manifold mesh (every edge in at most two triangles).
    Obtuse triangulations can make off-diagonal weights positive; they
    are kept as-is, not clamped.
    """
    v, t = mesh.vertices, mesh.triangles
    n = mesh.n_vertices

    # Edge (i,j) of each face gets cot(angle at the opposite vertex k) / 2.
    # cot = dot / |cross| on the two edge vectors leaving k.
    i_idx, j_idx, cots = [], [], []
    for k in range(3):
        a, b, c = t[:, k], t[:, (k + 1) % 3], t[:, (k + 2) % 3]
        u = v[b] - v[a]
        w_ = v[c] - v[a]
        cross = np.linalg.norm(np.cross(u, w_), axis=1)
        cot = np.einsum("ij,ij->i", u, w_) / cross
        i_idx.append(b)
        j_idx.append(c)
        cots.append(0.5 * cot)
    i_idx = np.concatenate(i_idx)
    j_idx = np.concatenate(j_idx)
    cots = np.concatenate(cots)

    lo, hi = np.minimum(i_idx, j_idx), np.maximum(i_idx, j_idx)
    edge_ids = lo * n + hi
    _, counts = np.unique(edge_ids, return_counts=True)
    if counts.max(initial=0) > 2:
        raise ValueError(
            f"mesh is not edge-manifold: an edge is shared by {counts.max()} triangles"
        )

    off = sparse.coo_matrix((cots, (lo, hi)), shape=(n, n)).tocsr()
    off.sum_duplicates()
    off = off + off.T
    deg = np.asarray(off.sum(axis=1)).ravel()
    W = (sparse.diags(deg) - off).tocsr()
    return LaplacianPair(W, areas.s, SCHEME_COTANGENT)


def apply_operator(pair: LaplacianPair, f: np.ndarray) -> np.ndarray:
    """Evaluate the discrete Laplacian A^{-1} W f."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] != pair.n:
        raise ValueError(f"vector length {f.shape[0]} does not match N={pair.n}")
    return (pair.W @ f) / pair.mass


def save_matrix_market(pair: LaplacianPair, basepath) -> tuple[str, str]:
    """Dump (W, A) as Matrix Market coordinate files for external checks."""
    w_path = f"{basepath}_W.mtx"
    a_path = f"{basepath}_A.mtx"
    scipy.io.mmwrite(w_path, pair.W.tocoo(), symmetry="symmetric")
    scipy.io.mmwrite(a_path, sparse.diags(pair.mass).tocoo(), symmetry="symmetric")
    return w_path, a_path
