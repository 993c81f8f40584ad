"""Textured triangle mesh data model, per-vertex areas, and subsampling.

The mesh is the discrete sampling of the shape: vertex positions, a
triangulation, and (optionally) one color per vertex in a declared
colorspace. All arrays are frozen after construction so meshes can be
shared freely across threads.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshValidationError

COLORSPACE_SRGB = "srgb"
COLORSPACE_LAB = "lab"
_COLORSPACES = (COLORSPACE_SRGB, COLORSPACE_LAB)


def _frozen(a, dtype):
    out = np.ascontiguousarray(a, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class TexturedMesh:
    """Vertices, triangles, and optional per-vertex colors.

    Parameters
    ----------
    vertices : (N, 3) float array
        Vertex positions in model units.
    triangles : (M, 3) int array
        Index triples into ``vertices``.
    colors : (N, 3) float array or None
        Per-vertex color triples; None for geometry-only shapes.
    colorspace : str
        ``"srgb"`` (components in [0, 1]) or ``"lab"`` (L in [0, 100]).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    colors: np.ndarray | None = None
    colorspace: str = COLORSPACE_SRGB

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices, np.float64))
        object.__setattr__(self, "triangles", _frozen(self.triangles, np.int64))
        if self.colors is not None:
            object.__setattr__(self, "colors", _frozen(self.colors, np.float64))
        self._validate()

    def _validate(self):
        v, t = self.vertices, self.triangles
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshValidationError(f"vertices must be (N, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshValidationError(f"triangles must be (M, 3), got {t.shape}")
        if not np.all(np.isfinite(v)):
            raise MeshValidationError("vertex positions must be finite")
        n = len(v)
        if t.size and (t.min() < 0 or t.max() >= n):
            raise MeshValidationError(
                f"triangle index out of range [0, {n}) (min {t.min()}, max {t.max()})"
            )
        degenerate = (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
        if degenerate.any():
            raise MeshValidationError(
                f"triangle {int(np.flatnonzero(degenerate)[0])} repeats a vertex index"
            )
        if t.size:
            areas = triangle_areas(v, t)
            if not (areas > 0.0).all():
                bad = int(np.flatnonzero(areas <= 0.0)[0])
                raise MeshValidationError(f"triangle {bad} has zero area")
        if self.colors is not None:
            c = self.colors
            if c.shape != (n, 3):
                raise MeshValidationError(
                    f"colors shape {c.shape} does not match vertex count {n}"
                )
            if not np.all(np.isfinite(c)):
                raise MeshValidationError("colors must be finite")
        if self.colorspace not in _COLORSPACES:
            raise MeshValidationError(f"unknown colorspace {self.colorspace!r}")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def has_colors(self) -> bool:
        return self.colors is not None

    def with_vertices(self, vertices) -> "TexturedMesh":
        return TexturedMesh(vertices, self.triangles, self.colors, self.colorspace)

    def with_colors(self, colors, colorspace=None) -> "TexturedMesh":
        return TexturedMesh(
            self.vertices,
            self.triangles,
            colors,
            self.colorspace if colorspace is None else colorspace,
        )

    def without_colors(self) -> "TexturedMesh":
        return TexturedMesh(self.vertices, self.triangles, None, COLORSPACE_SRGB)


@dataclass(frozen=True)
class VertexAreas:
    """Per-vertex area weights: one third of the incident triangle area."""

    s: np.ndarray = field()

    def __post_init__(self):
        object.__setattr__(self, "s", _frozen(self.s, np.float64))
        if (self.s < 0).any():
            raise MeshValidationError("vertex areas must be nonnegative")

    @property
    def total(self) -> float:
        return float(self.s.sum())


def triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Euclidean area of every triangle."""
    p0 = vertices[triangles[:, 0]]
    e1 = vertices[triangles[:, 1]] - p0
    e2 = vertices[triangles[:, 2]] - p0
    return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)


def surface_area(mesh: TexturedMesh) -> float:
    return float(triangle_areas(mesh.vertices, mesh.triangles).sum())


def vertex_areas(mesh: TexturedMesh) -> VertexAreas:
    """Barycentric vertex areas: s_j = (1/3) sum of areas of triangles at j.

    The sum over vertices equals the total mesh surface area.
    """
    tri_a = triangle_areas(mesh.vertices, mesh.triangles)
    s = np.zeros(mesh.n_vertices)
    np.add.at(s, mesh.triangles.ravel(), np.repeat(tri_a / 3.0, 3))
    return VertexAreas(s)


def mean_edge_length(mesh: TexturedMesh) -> float:
    """Mean length over unique undirected edges."""
    t = mesh.triangles
    e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e = np.unique(np.sort(e, axis=1), axis=0)
    d = mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]]
    return float(np.linalg.norm(d, axis=1).mean())


def farthest_point_sample(mesh: TexturedMesh, count: int, seed_vertex: int = 0) -> np.ndarray:
    """Greedy max-min subsampling of vertex indices under Euclidean distance.

    The first element is ``seed_vertex``; each following pick maximizes the
    distance to the already-chosen set. Deterministic; ties resolve to the
    lowest index (numpy argmax).
    """
    n = mesh.n_vertices
    if not 1 <= count <= n:
        raise ValueError(f"count must be in [1, {n}], got {count}")
    if not 0 <= seed_vertex < n:
        raise ValueError(f"seed_vertex out of range [0, {n})")
    v = mesh.vertices
    chosen = np.empty(count, dtype=np.int64)
    chosen[0] = seed_vertex
    dist = np.linalg.norm(v - v[seed_vertex], axis=1)
    for i in range(1, count):
        nxt = int(np.argmax(dist))
        chosen[i] = nxt
        np.minimum(dist, np.linalg.norm(v - v[nxt], axis=1), out=dist)
    return chosen


def content_hash(mesh: TexturedMesh) -> str:
    """sha256 over a canonical serialization of the mesh arrays."""
    h = hashlib.sha256()
    h.update(b"HFMESH1")
    for arr in (mesh.vertices, mesh.triangles):
        h.update(np.asarray(arr.shape, dtype=np.int64).tobytes())
        h.update(arr.tobytes())
    if mesh.colors is None:
        h.update(b"nocolor")
    else:
        h.update(mesh.colorspace.encode())
        h.update(mesh.colors.tobytes())
    return h.hexdigest()
