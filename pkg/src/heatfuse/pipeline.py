"""End-to-end orchestration: mesh -> basis -> descriptor, with caching.

Spectral bases are the expensive intermediate, so they are cached on
disk keyed by a hash of every input that affects the solve (mesh
content, scheme, rho, eta, color scale, truncation, k, solver seed and
tolerance). At eta = 0 colors do not enter the operator, so the cache
key deliberately ignores them: a colored mesh and its geometry-only
twin share a cache entry.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import descriptors as desc
from . import diffusion, laplacian, spectrum
from .config import RunConfig
from .embedding import build_embedding
from .errors import DescriptorError
from .mesh import TexturedMesh, content_hash, farthest_point_sample, vertex_areas


def effective_mesh_hash(mesh: TexturedMesh, eta: float) -> str:
    """Content hash of the inputs the operator actually consumes."""
    return content_hash(mesh.without_colors() if eta == 0 else mesh)


def basis_cache_key(mesh: TexturedMesh, eta: float, cfg: RunConfig) -> str:
    payload = {
        "mesh": effective_mesh_hash(mesh, eta),
        "scheme": cfg.scheme,
        "rho": cfg.rho,
        "eta": eta,
        "color_scale": cfg.color_scale,
        "use_srgb_coords": cfg.use_srgb_coords,
        "truncation_eps": cfg.truncation_eps,
        "dense": cfg.dense_laplacian,
        "k": cfg.k,
        "tol": cfg.solver_tol,
        "seed": cfg.solver_seed,
    }
    blob = json.dumps(payload, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def build_pair(mesh: TexturedMesh, eta: float, cfg: RunConfig) -> laplacian.LaplacianPair:
    areas = vertex_areas(mesh)
    if cfg.scheme == "cotangent":
        return laplacian.assemble_cotangent(mesh, areas)
    emb = build_embedding(mesh, eta, cfg.color_scale, use_srgb_coords=cfg.use_srgb_coords)
    return laplacian.assemble_fused(
        emb, areas, cfg.rho, cfg.truncation_eps, dense=cfg.dense_laplacian
    )


def solve_basis(mesh: TexturedMesh, eta: float, cfg: RunConfig) -> spectrum.SpectralBasis:
    pair = build_pair(mesh, eta, cfg)
    return spectrum.solve(
        pair,
        cfg.k,  # solve() clamps to N-1 with a warning on tiny meshes
        tol=cfg.solver_tol,
        seed=cfg.solver_seed,
        mesh_hash=effective_mesh_hash(mesh, eta),
    )


def get_basis(
    mesh: TexturedMesh, eta: float, cfg: RunConfig, cache_dir=None
) -> spectrum.SpectralBasis:
    """Solve or reload the spectral basis for one photometric weight."""
    if cache_dir is None:
        return solve_basis(mesh, eta, cfg)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"basis_{basis_cache_key(mesh, eta, cfg)}.hfb"
    if path.exists():
        return spectrum.load_basis(path)
    basis = solve_basis(mesh, eta, cfg)
    spectrum.save_basis(basis, path, extra={"config": cfg.to_dict()})
    return basis


# ----------------------------------------------------------------- vocabulary


def descriptor_etas(cfg: RunConfig) -> tuple:
    """Photometric weights the configured descriptor requires."""
    if cfg.descriptor == "hks_bof":
        return (0.0,)
    if cfg.descriptor == "chks_bof_multiscale":
        return cfg.etas
    if cfg.descriptor == "dist_distribution_geometric":
        return (0.0,)
    if cfg.descriptor == "dist_distribution_joint":
        return cfg.dist_etas
    return ()


def build_vocabulary_set(
    meshes: list[TexturedMesh], cfg: RunConfig, etas=None, cache_dir=None
) -> dict:
    """One vocabulary per eta, clustered from the pooled HKS fields of ``meshes``."""
    etas = tuple(cfg.etas if etas is None else etas)
    out = {}
    for eta in etas:
        fields = [
            diffusion.hks_field(get_basis(m, eta, cfg, cache_dir), cfg.times)
            for m in meshes
        ]
        out[eta] = desc.build_vocabulary(fields, cfg.vocab_size, cfg.vocab_seed)
    return out


# ----------------------------------------------------------------- descriptors


def _fps_sample(mesh: TexturedMesh, cfg: RunConfig) -> np.ndarray:
    count = min(cfg.fps_count, mesh.n_vertices)
    return farthest_point_sample(mesh, count, seed_vertex=0)


def _dist_descriptor(mesh, cfg, etas, cache_dir):
    sample = _fps_sample(mesh, cfg)
    areas = vertex_areas(mesh)
    bases = {e: get_basis(mesh, e, cfg, cache_dir) for e in etas}
    per_t = []
    for t in cfg.dist_times:
        prod = None
        for e in etas:
            d = diffusion.pairwise_diffusion_distances(bases[e], t, sample)
            prod = d if prod is None else prod * d
        per_t.append(prod)
    condensed = np.mean(per_t, axis=0)
    return desc.distance_distribution_from_condensed(condensed, sample, areas, cfg.dist_bins)


def compute_descriptor(
    mesh: TexturedMesh, cfg: RunConfig, vocabs: dict | None = None, cache_dir=None
):
    """Descriptor of the configured kind for one shape.

    BoF kinds require ``vocabs`` (eta -> Vocabulary). Returns a
    BagOfFeatures, a dict eta -> BagOfFeatures, a ColorHistogram, or a
    DistanceDistribution.
    """
    kind = cfg.descriptor
    if kind == "color_hist":
        return desc.color_histogram(mesh, vertex_areas(mesh), cfg.color_bins)
    if kind in ("hks_bof", "chks_bof_multiscale"):
        if vocabs is None:
            raise DescriptorError(f"descriptor {kind!r} needs a vocabulary set")
        areas = vertex_areas(mesh)
        etas = descriptor_etas(cfg)
        missing = [e for e in etas if e not in vocabs]
        if missing:
            raise DescriptorError(f"vocabulary set lacks eta values {missing}")
        bofs = {}
        for eta in etas:
            basis = get_basis(mesh, eta, cfg, cache_dir)
            field = diffusion.hks_field(basis, cfg.times)
            bofs[eta] = desc.bag_of_features(
                vocabs[eta], field, areas, area_weighted=cfg.area_weighted_bof
            )
        return bofs[0.0] if kind == "hks_bof" else bofs
    if kind in ("dist_distribution_geometric", "dist_distribution_joint"):
        return _dist_descriptor(mesh, cfg, descriptor_etas(cfg), cache_dir)
    raise DescriptorError(f"unknown descriptor kind {kind!r}")


def descriptor_distance(cfg: RunConfig, d1, d2) -> float:
    """Distance between two descriptors of the configured kind."""
    kind = cfg.descriptor
    if kind == "hks_bof":
        return desc.bof_distance_single(d1, d2)
    if kind == "chks_bof_multiscale":
        return desc.bof_distance_multiscale(d1, d2, cfg.etas)
    if kind == "color_hist":
        return desc.color_histogram_distance(d1, d2)
    if kind in ("dist_distribution_geometric", "dist_distribution_joint"):
        return desc.distribution_distance(d1, d2)
    raise DescriptorError(f"unknown descriptor kind {kind!r}")


def descriptor_meta(mesh: TexturedMesh, cfg: RunConfig, vocabs=None) -> dict:
    meta = {
        "descriptor": cfg.descriptor,
        "config": cfg.to_dict(),
        "mesh_hash": content_hash(mesh),
    }
    if vocabs:
        meta["vocabulary_hashes"] = {
            repr(e): desc.vocabulary_hash(v) for e, v in sorted(vocabs.items())
        }
    return meta
