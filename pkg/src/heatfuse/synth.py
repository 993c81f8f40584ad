"""Synthetic benchmark generation: analytic primitives, procedural textures,
photometric/geometric perturbations, and manifest assembly.

The generator stands in for non-distributable scan datasets: watertight
primitives carry deterministic per-vertex textures, queries are derived
from nulls by seeded transformations, and everything is reproducible
from the manifest seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import meshio
from .embedding import lab_to_srgb, srgb_to_lab
from .errors import MeshValidationError
from .mesh import COLORSPACE_LAB, COLORSPACE_SRGB, TexturedMesh, mean_edge_length
from .retrieval import BenchmarkManifest, NullShape, Query, save_manifest

# ------------------------------------------------------------------ textures

# Lab tone pairs for banded textures. The warm/cool pairs share the same
# L/b structure and differ by a uniform a offset, so diffusion sees them
# only through their spatial layout while a color histogram separates
# (and, under hue shifts, confuses) them. Tones sit inside the sRGB gamut
# even after a strength-5 hue shift.
_TONES_COOL = ((60.0, -20.0, 30.0), (35.0, -20.0, -30.0))
_TONES_WARM = ((60.0, 20.0, 30.0), (35.0, 20.0, -30.0))


def _normalized_coords(points: np.ndarray) -> np.ndarray:
    lo = points.min(axis=0)
    span = points.max(axis=0) - lo
    span[span == 0] = 1.0
    return (points - lo) / span


def _bands(points, axis, freq, tones):
    u = _normalized_coords(points)[:, axis]
    idx = np.minimum((u * freq).astype(np.int64), freq - 1) % 2
    return np.asarray(tones)[idx]


def _checker(points, freq, tones):
    u = _normalized_coords(points)
    cells = np.minimum((u * freq).astype(np.int64), freq - 1)
    idx = cells.sum(axis=1) % 2
    return np.asarray(tones)[idx]


def _rainbow(points):
    u = _normalized_coords(points)[:, 2]
    ang = 2.0 * np.pi * u
    return np.column_stack(
        [np.full_like(u, 60.0), 40.0 * np.cos(ang), 40.0 * np.sin(ang)]
    )


TEXTURES = {
    "stripes_cool": lambda p: _bands(p, axis=2, freq=6, tones=_TONES_COOL),
    "stripes_warm": lambda p: _bands(p, axis=0, freq=10, tones=_TONES_WARM),
    "checker": lambda p: _checker(p, freq=4, tones=((80.0, 10.0, 0.0), (30.0, 10.0, 0.0))),
    "rainbow": _rainbow,
    "gray": lambda p: np.tile([60.0, 0.0, 0.0], (len(p), 1)),
}


def _texture_colors(points: np.ndarray, texture: str) -> np.ndarray:
    try:
        lab = TEXTURES[texture](points)
    except KeyError:
        raise ValueError(f"unknown texture {texture!r}; have {sorted(TEXTURES)}") from None
    return lab_to_srgb(lab)


# ---------------------------------------------------------------- primitives


def _icosahedron():
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def _icosphere_geometry(subdivisions: int, radius: float):
    v, f = _icosahedron()
    verts = [tuple(p) for p in v]
    cache = {}

    def midpoint(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in cache:
            p = np.asarray(verts[a]) + np.asarray(verts[b])
            p /= np.linalg.norm(p)
            cache[key] = len(verts)
            verts.append(tuple(p))
        return cache[key]

    faces = [tuple(t) for t in f]
    for _ in range(subdivisions):
        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return radius * np.asarray(verts), np.asarray(faces, dtype=np.int64)


def _torus_geometry(resolution: int, scale: float):
    nu, nv = 6 * 2**resolution, 4 * 2**resolution
    big_r, small_r = scale, 0.4 * scale
    uu = 2.0 * np.pi * np.arange(nu) / nu
    vv = 2.0 * np.pi * np.arange(nv) / nv
    u, v = np.meshgrid(uu, vv, indexing="ij")
    ring = big_r + small_r * np.cos(v)
    verts = np.column_stack(
        [(ring * np.cos(u)).ravel(), (ring * np.sin(u)).ravel(), (small_r * np.sin(v)).ravel()]
    )
    faces = []
    for i in range(nu):
        for j in range(nv):
            a = i * nv + j
            b = ((i + 1) % nu) * nv + j
            c = ((i + 1) % nu) * nv + (j + 1) % nv
            d = i * nv + (j + 1) % nv
            faces += [(a, b, c), (a, c, d)]
    return verts, np.asarray(faces, dtype=np.int64)


def _capsule_geometry(resolution: int, scale: float):
    # cylinder of radius scale/2 and length scale with hemispherical caps
    around = 8 * 2**resolution
    cap_rings = 2 * 2**resolution
    body_rings = 2 * 2**resolution
    radius, half_len = 0.5 * scale, 0.5 * scale

    rows = []  # each row: (z, ring radius)
    for i in range(cap_rings):  # bottom cap (excluding pole)
        ang = 0.5 * np.pi * (i + 1) / cap_rings
        rows.append((-half_len - radius * np.cos(ang), radius * np.sin(ang)))
    for i in range(1, body_rings):
        rows.append((-half_len + (i / body_rings) * 2 * half_len, radius))
    for i in range(cap_rings):  # top cap
        ang = 0.5 * np.pi * (1.0 - i / cap_rings)
        rows.append((half_len + radius * np.cos(ang), radius * np.sin(ang)))

    theta = 2.0 * np.pi * np.arange(around) / around
    verts = [(0.0, 0.0, -half_len - radius)]
    for z, r in rows:
        for th in theta:
            verts.append((r * np.cos(th), r * np.sin(th), z))
    verts.append((0.0, 0.0, half_len + radius))
    verts = np.asarray(verts)

    faces = []
    for j in range(around):  # bottom fan
        faces.append((0, 1 + (j + 1) % around, 1 + j))
    n_rows = len(rows)
    for i in range(n_rows - 1):
        base0, base1 = 1 + i * around, 1 + (i + 1) * around
        for j in range(around):
            a, b = base0 + j, base0 + (j + 1) % around
            c, d = base1 + (j + 1) % around, base1 + j
            faces += [(a, b, c), (a, c, d)]
    top = 1 + n_rows * around
    base = 1 + (n_rows - 1) * around
    for j in range(around):  # top fan
        faces.append((top, base + j, base + (j + 1) % around))
    return verts, np.asarray(faces, dtype=np.int64)


PRIMITIVES = ("icosphere", "torus", "cylinder_capsule")


def make_primitive(
    kind: str, resolution: int, texture: str | None = None, scale: float = 1.0
) -> TexturedMesh:
    """Build a watertight analytic mesh with optional procedural coloring.

    ``resolution`` is the subdivision depth for the icosphere and a grid
    doubling exponent for the torus and capsule. Deterministic: the same
    arguments always produce a bit-identical mesh.
    """
    if kind == "icosphere":
        verts, faces = _icosphere_geometry(resolution, scale)
    elif kind == "torus":
        verts, faces = _torus_geometry(resolution, scale)
    elif kind == "cylinder_capsule":
        verts, faces = _capsule_geometry(resolution, scale)
    else:
        raise ValueError(f"unknown primitive {kind!r}; have {PRIMITIVES}")
    colors = _texture_colors(verts, texture) if texture is not None else None
    return TexturedMesh(verts, faces, colors)


# ------------------------------------------------------------- photometrics

PHOTOMETRIC_KINDS = ("contrast", "brightness", "hue", "saturation", "color_noise")

# strength-indexed parameter tables (index = strength - 1); magnitudes span
# mild to severe and can be overridden per transform
DEFAULT_STRENGTH_TABLES = {
    "contrast": (0.9, 0.8, 0.65, 0.5, 0.35),
    "brightness": (5.0, 10.0, 20.0, 30.0, 40.0),
    "hue": (5.0, 10.0, 20.0, 30.0, 40.0),
    "saturation": (0.85, 0.7, 0.55, 0.4, 0.25),
    "color_noise": (2.0, 4.0, 8.0, 12.0, 16.0),
}


@dataclass(frozen=True)
class PhotometricTransform:
    kind: str
    strength: int
    seed: int = 0
    tables: dict = field(default_factory=lambda: DEFAULT_STRENGTH_TABLES)

    def __post_init__(self):
        if self.kind not in PHOTOMETRIC_KINDS:
            raise ValueError(f"unknown photometric kind {self.kind!r}")
        if not 1 <= int(self.strength) <= 5:
            raise ValueError("strength must be in 1..5")

    @property
    def parameter(self) -> float:
        return float(self.tables[self.kind][self.strength - 1])


def apply_photometric(mesh: TexturedMesh, t: PhotometricTransform) -> TexturedMesh:
    """Remap vertex colors in Lab; geometry passes through bit-identical."""
    if not mesh.has_colors:
        raise MeshValidationError(f"photometric transform {t.kind!r} needs a colored mesh")
    was_srgb = mesh.colorspace == COLORSPACE_SRGB
    lab = srgb_to_lab(mesh.colors) if was_srgb else mesh.colors.copy()
    lab = np.array(lab, dtype=np.float64)
    p = t.parameter
    if t.kind == "contrast":
        lab[:, 0] = np.clip(50.0 + p * (lab[:, 0] - 50.0), 0.0, 100.0)
    elif t.kind == "brightness":
        lab[:, 0] = np.clip(lab[:, 0] + p, 0.0, 100.0)
    elif t.kind == "hue":
        lab[:, 1] = lab[:, 1] + p
    elif t.kind == "saturation":
        lab[:, 1:] = p * lab[:, 1:]
    elif t.kind == "color_noise":
        rng = np.random.default_rng(t.seed)
        lab = lab + rng.normal(0.0, p, size=lab.shape)
        lab[:, 0] = np.clip(lab[:, 0], 0.0, 100.0)
    if was_srgb:
        return mesh.with_colors(lab_to_srgb(lab), COLORSPACE_SRGB)
    return mesh.with_colors(lab, COLORSPACE_LAB)


# --------------------------------------------------------------- geometrics

GEOMETRIC_KINDS = ("rigid", "vertex_jitter", "hole_cut")

JITTER_EDGE_FRACTION = (0.02, 0.05, 0.1, 0.15, 0.25)
HOLE_EDGE_RADII = (1.5, 2.5, 3.5, 5.0, 7.0)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def apply_geometric(
    mesh: TexturedMesh, kind: str, strength: int, seed: int = 0
) -> TexturedMesh:
    """Geometric stand-ins for the benchmark's deformation classes.

    ``rigid`` applies a seeded rotation+translation (strength ignored),
    ``vertex_jitter`` adds Gaussian noise of strength-scaled fraction of
    the mean edge length (strength 0 is the identity), and ``hole_cut``
    removes all triangles whose centroid lies within a strength-scaled
    radius of a seeded vertex, then compacts the mesh.
    """
    if kind not in GEOMETRIC_KINDS:
        raise ValueError(f"unknown geometric kind {kind!r}")
    rng = np.random.default_rng(seed)
    if kind == "rigid":
        rot = random_rotation(rng)
        extent = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
        shift = rng.uniform(-1.0, 1.0, size=3) * 0.25 * np.linalg.norm(extent)
        return mesh.with_vertices(mesh.vertices @ rot.T + shift)
    if kind == "vertex_jitter":
        if strength == 0:
            return mesh
        if not 1 <= strength <= 5:
            raise ValueError("jitter strength must be in 0..5")
        sigma = JITTER_EDGE_FRACTION[strength - 1] * mean_edge_length(mesh)
        return mesh.with_vertices(
            mesh.vertices + rng.normal(0.0, sigma, size=mesh.vertices.shape)
        )
    # hole_cut
    if not 1 <= strength <= 5:
        raise ValueError("hole_cut strength must be in 1..5")
    center = mesh.vertices[rng.integers(mesh.n_vertices)]
    radius = HOLE_EDGE_RADII[strength - 1] * mean_edge_length(mesh)
    centroids = mesh.vertices[mesh.triangles].mean(axis=1)
    keep = np.linalg.norm(centroids - center, axis=1) > radius
    tris = mesh.triangles[keep]
    if len(tris) == 0:
        raise MeshValidationError("hole_cut removed every triangle")

    used = np.unique(tris)
    remap = -np.ones(mesh.n_vertices, dtype=np.int64)
    remap[used] = np.arange(len(used))
    out = TexturedMesh(
        mesh.vertices[used],
        remap[tris],
        None if mesh.colors is None else mesh.colors[used],
        mesh.colorspace,
    )
    edges = np.vstack([out.triangles[:, [0, 1]], out.triangles[:, [1, 2]], out.triangles[:, [2, 0]]])
    adj = coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(out.n_vertices,) * 2
    )
    ncomp, labels = connected_components(adj, directed=False)
    if ncomp > 1:
        sizes = np.bincount(labels)
        raise MeshValidationError(
            f"hole_cut disconnected the mesh into {ncomp} components "
            f"of sizes {sizes.tolist()}"
        )
    return out


# ------------------------------------------------------------ benchmark build


@dataclass(frozen=True)
class NullSpec:
    shape_id: str
    kind: str
    resolution: int
    texture: str
    scale: float = 1.0


@dataclass(frozen=True)
class GeneratorSpec:
    """Declarative description of a synthetic benchmark.

    ``cases`` lists (transform_class, strength) pairs generated for every
    null. ``texture_swaps`` adds one geometry-preserving recoloring per
    null whose ground truth is the null it now equals (labeled ``mixed``).
    """

    nulls: tuple
    cases: tuple = ()
    texture_swaps: bool = False
    seed: int = 0
    mesh_format: str = "ply"

    def __post_init__(self):
        object.__setattr__(self, "nulls", tuple(self.nulls))
        object.__setattr__(self, "cases", tuple((str(c), int(s)) for c, s in self.cases))
        ids = [n.shape_id for n in self.nulls]
        if len(set(ids)) != len(ids):
            raise ValueError("null shape_ids must be unique")


def _case_seed(root: int, *key) -> int:
    # independent, schedule-free stream per (null, case); stable across runs
    import hashlib

    digest = hashlib.sha256("\x1f".join(str(k) for k in key).encode()).digest()
    ss = np.random.SeedSequence([root, int.from_bytes(digest[:4], "little")])
    return int(ss.generate_state(1)[0])


def _query_mesh(null_mesh, cls, strength, seed):
    if cls == "isometry_topology":
        return apply_geometric(null_mesh, "rigid", strength, seed)
    if cls == "partiality":
        return apply_geometric(null_mesh, "hole_cut", strength, seed)
    if cls == "noise":
        return apply_photometric(
            null_mesh, PhotometricTransform("color_noise", strength, seed)
        )
    if cls in ("contrast", "brightness", "hue", "saturation"):
        return apply_photometric(null_mesh, PhotometricTransform(cls, strength, seed))
    if cls == "mixed":
        rng = np.random.default_rng(seed)
        out = apply_geometric(null_mesh, "rigid", strength, seed)
        picks = rng.choice(len(PHOTOMETRIC_KINDS), size=2, replace=False)
        for n, pick in enumerate(picks):
            out = apply_photometric(
                out, PhotometricTransform(PHOTOMETRIC_KINDS[pick], strength, seed + 1 + n)
            )
        return out
    raise ValueError(f"cannot generate queries for class {cls!r}")


def build_benchmark(spec: GeneratorSpec, out_dir) -> BenchmarkManifest:
    """Write null meshes, transformed queries, and the manifest JSON.

    Fully seeded: rebuilding with the same spec yields byte-identical
    files and manifest.
    """
    out_dir = Path(out_dir)
    (out_dir / "nulls").mkdir(parents=True, exist_ok=True)
    (out_dir / "queries").mkdir(parents=True, exist_ok=True)
    ext = "." + spec.mesh_format

    null_meshes = {}
    nulls = []
    for ns in spec.nulls:
        mesh = make_primitive(ns.kind, ns.resolution, ns.texture, ns.scale)
        path = out_dir / "nulls" / f"{ns.shape_id}{ext}"
        meshio.save_mesh(mesh, path)
        null_meshes[ns.shape_id] = mesh
        nulls.append(NullShape(ns.shape_id, str(path)))

    queries = []
    for ns in spec.nulls:
        for cls, strength in spec.cases:
            seed = _case_seed(spec.seed, ns.shape_id, cls, strength)
            qmesh = _query_mesh(null_meshes[ns.shape_id], cls, strength, seed)
            qpath = out_dir / "queries" / f"{ns.shape_id}.{cls}.{strength}{ext}"
            meshio.save_mesh(qmesh, qpath)
            queries.append(Query(ns.shape_id, str(qpath), cls, strength))

    if spec.texture_swaps:
        geo_groups = {}
        for ns in spec.nulls:
            geo_groups.setdefault((ns.kind, ns.resolution, ns.scale), []).append(ns)
        for group in geo_groups.values():
            for src in group:
                siblings = [o for o in group if o.texture != src.texture]
                if not siblings:
                    continue
                truth = siblings[0]
                qmesh = make_primitive(src.kind, src.resolution, truth.texture, src.scale)
                qpath = out_dir / "queries" / f"{src.shape_id}.texture_swap.1{ext}"
                meshio.save_mesh(qmesh, qpath)
                queries.append(Query(truth.shape_id, str(qpath), "mixed", 1))

    manifest = BenchmarkManifest(tuple(nulls), tuple(queries))
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest


# ------------------------------------------------------------------- presets


def fusion_benchmark_spec(seed: int = 0, mesh_format: str = "ply") -> GeneratorSpec:
    """Six nulls (three geometries x two band textures) probing data fusion.

    Queries: a rigid motion per null, a strength-5 hue shift per null,
    and a geometry-preserving texture swap per null. Shape scales put
    the default diffusion times in the informative range.
    """
    nulls = (
        NullSpec("capsule_cool", "cylinder_capsule", 2, "stripes_cool", scale=55.0),
        NullSpec("capsule_warm", "cylinder_capsule", 2, "stripes_warm", scale=55.0),
        NullSpec("sphere_cool", "icosphere", 3, "stripes_cool", scale=40.0),
        NullSpec("sphere_warm", "icosphere", 3, "stripes_warm", scale=40.0),
        NullSpec("torus_cool", "torus", 2, "stripes_cool", scale=30.0),
        NullSpec("torus_warm", "torus", 2, "stripes_warm", scale=30.0),
    )
    cases = (("isometry_topology", 1), ("hue", 5))
    return GeneratorSpec(
        nulls=nulls, cases=cases, texture_swaps=True, seed=seed, mesh_format=mesh_format
    )


def demo_spec(seed: int = 0, mesh_format: str = "ply") -> GeneratorSpec:
    """Tiny two-shape benchmark for smoke tests and CLI walkthroughs."""
    nulls = (
        NullSpec("ball", "icosphere", 2, "rainbow", scale=20.0),
        NullSpec("donut", "torus", 2, "checker", scale=30.0),
    )
    cases = (("hue", 1), ("brightness", 2), ("isometry_topology", 1))
    return GeneratorSpec(nulls=nulls, cases=cases, seed=seed, mesh_format=mesh_format)


def full_spec(seed: int = 0, mesh_format: str = "ply") -> GeneratorSpec:
    """All eight transformation classes at five strengths, paper-style."""
    nulls = (
        NullSpec("capsule_cool", "cylinder_capsule", 2, "stripes_cool", scale=55.0),
        NullSpec("sphere_rainbow", "icosphere", 3, "rainbow", scale=40.0),
        NullSpec("sphere_warm", "icosphere", 3, "stripes_warm", scale=40.0),
        NullSpec("torus_checker", "torus", 2, "checker", scale=30.0),
    )
    cases = tuple(
        (cls, s)
        for cls in (
            "isometry_topology",
            "partiality",
            "contrast",
            "brightness",
            "hue",
            "saturation",
            "noise",
            "mixed",
        )
        for s in (1, 2, 3, 4, 5)
    )
    return GeneratorSpec(nulls=nulls, cases=cases, seed=seed, mesh_format=mesh_format)


PRESETS = {
    "fusion": fusion_benchmark_spec,
    "demo": demo_spec,
    "full": full_spec,
}


def preset_spec(name: str, seed: int = 0, mesh_format: str = "ply") -> GeneratorSpec:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; have {sorted(PRESETS)}") from None
    return factory(seed=seed, mesh_format=mesh_format)
