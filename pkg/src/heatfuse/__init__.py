"""Diffusion-geometry fusion of mesh geometry and per-vertex color.

Fused Laplace-Beltrami operators over a joint geometric-photometric
embedding, heat kernel signatures (HKS/cHKS), diffusion-distance
distributions, bag-of-features shape descriptors, and a retrieval
benchmark harness.
"""

from .config import RunConfig
from .descriptors import (
    BagOfFeatures,
    ColorHistogram,
    DistanceDistribution,
    Vocabulary,
    bag_of_features,
    bof_distance_multiscale,
    bof_distance_single,
    build_vocabulary,
    color_histogram,
    distance_distribution,
    distribution_distance,
    soft_quantize,
)
from .diffusion import (
    HksDescriptorField,
    averaged_distance,
    diffusion_distance,
    heat_kernel,
    hks_field,
    joint_multiscale_distance,
)
from .embedding import JointEmbedding, build_embedding, lab_to_srgb, srgb_to_lab
from .laplacian import (
    LaplacianPair,
    apply_operator,
    assemble_cotangent,
    assemble_fused,
)
from .mesh import (
    TexturedMesh,
    VertexAreas,
    content_hash,
    farthest_point_sample,
    surface_area,
    vertex_areas,
)
from .meshio import load_mesh, save_mesh
from .retrieval import (
    BenchmarkManifest,
    EvalReport,
    average_precision,
    evaluate,
    load_manifest,
    rank_queries,
)
from .spectrum import SpectralBasis, load_basis, save_basis, solve
from .synth import (
    GeneratorSpec,
    NullSpec,
    PhotometricTransform,
    apply_geometric,
    apply_photometric,
    build_benchmark,
    make_primitive,
)

__version__ = "0.1.0"

__all__ = [
    "BagOfFeatures",
    "BenchmarkManifest",
    "ColorHistogram",
    "DistanceDistribution",
    "EvalReport",
    "GeneratorSpec",
    "HksDescriptorField",
    "JointEmbedding",
    "LaplacianPair",
    "NullSpec",
    "PhotometricTransform",
    "RunConfig",
    "SpectralBasis",
    "TexturedMesh",
    "VertexAreas",
    "Vocabulary",
    "apply_geometric",
    "apply_operator",
    "apply_photometric",
    "average_precision",
    "averaged_distance",
    "bag_of_features",
    "bof_distance_multiscale",
    "bof_distance_single",
    "build_benchmark",
    "build_embedding",
    "build_vocabulary",
    "color_histogram",
    "content_hash",
    "diffusion_distance",
    "distance_distribution",
    "distribution_distance",
    "evaluate",
    "farthest_point_sample",
    "heat_kernel",
    "hks_field",
    "joint_multiscale_distance",
    "lab_to_srgb",
    "load_basis",
    "load_manifest",
    "load_mesh",
    "make_primitive",
    "rank_queries",
    "save_basis",
    "save_mesh",
    "soft_quantize",
    "solve",
    "srgb_to_lab",
    "surface_area",
    "vertex_areas",
]
