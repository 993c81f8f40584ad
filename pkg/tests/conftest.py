import numpy as np
import pytest

import heatfuse as hf
from heatfuse import pipeline
from heatfuse.config import RunConfig


@pytest.fixture(scope="session")
def tri_mesh():
    """Unit right triangle in the xy plane."""
    return hf.TexturedMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])


@pytest.fixture(scope="session")
def tetra_mesh():
    """Closed regular tetrahedron with unit edges."""
    s3, s6 = np.sqrt(3.0), np.sqrt(6.0)
    v = [[0, 0, 0], [1, 0, 0], [0.5, s3 / 2, 0], [0.5, s3 / 6, s6 / 3]]
    t = [[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]]
    return hf.TexturedMesh(v, t)


@pytest.fixture(scope="session")
def blob_mesh():
    """Jittered colored icosphere: no exact symmetries, simple spectrum."""
    base = hf.make_primitive("icosphere", 2, "rainbow", scale=10.0)
    return hf.apply_geometric(base, "vertex_jitter", 2, seed=11)


@pytest.fixture(scope="session")
def blob_cfg():
    # times sized to the blob's spectral scale (lambda_1 ~ 0.02)
    return RunConfig(k=24, color_scale=10.0, times=(20.0, 50.0, 125.0, 320.0))


@pytest.fixture(scope="session")
def blob_basis_geo(blob_mesh, blob_cfg):
    return pipeline.solve_basis(blob_mesh, 0.0, blob_cfg)


@pytest.fixture(scope="session")
def blob_basis_fused(blob_mesh, blob_cfg):
    return pipeline.solve_basis(blob_mesh, 0.1, blob_cfg)
