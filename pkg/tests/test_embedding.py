import numpy as np
import pytest

import heatfuse as hf
from heatfuse.errors import ColorRangeError, MeshValidationError

# Reference CIE constants written out independently of the library so the
# inverse below stays a genuine oracle.
_M_FWD = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE = _M_FWD @ np.ones(3)


def _oracle_lab_to_srgb(lab):
    """Independent CIELAB -> sRGB for round-trip checks."""
    L, a, b = lab[:, 0], lab[:, 1], lab[:, 2]
    fy = (L + 16.0) / 116.0
    fx = fy + a / 500.0
    fz = fy - b / 200.0

    def finv(f):
        d = 6.0 / 29.0
        return np.where(f > d, f**3, 3 * d * d * (f - 4.0 / 29.0))

    xyz = np.column_stack([finv(fx), finv(fy), finv(fz)]) * _WHITE
    lin = np.linalg.solve(_M_FWD, xyz.T).T
    return np.where(lin <= 0.0031308, 12.92 * lin, 1.055 * np.clip(lin, 0, None) ** (1 / 2.4) - 0.055)


def _oracle_srgb_to_lab_red():
    """Direct evaluation of the CIE formulas for pure red."""
    lin = ((np.array([1.0, 0.0, 0.0]) + 0.055) / 1.055) ** 2.4
    lin[1:] = 0.0
    xyz = _M_FWD @ lin

    def f(t):
        d = 6.0 / 29.0
        return np.where(t > d**3, np.cbrt(t), t / (3 * d * d) + 4.0 / 29.0)

    fx, fy, fz = f(xyz / _WHITE)
    return np.array([116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)])


class TestSrgbToLab:
    def test_white(self):
        assert np.allclose(hf.srgb_to_lab([1.0, 1.0, 1.0]), [100.0, 0.0, 0.0], atol=1e-9)

    def test_black(self):
        assert np.allclose(hf.srgb_to_lab([0.0, 0.0, 0.0]), [0.0, 0.0, 0.0], atol=1e-12)

    def test_red_reference(self):
        lab = hf.srgb_to_lab([1.0, 0.0, 0.0])
        assert np.abs(lab - [53.24, 80.09, 67.20]).max() < 0.1
        assert np.abs(lab - _oracle_srgb_to_lab_red()).max() < 1e-9

    def test_out_of_range_rejected(self):
        with pytest.raises(ColorRangeError):
            hf.srgb_to_lab([1.2, 0.0, 0.0])

    def test_grid_invertible(self):
        g = np.linspace(0.0, 1.0, 10)
        grid = np.stack(np.meshgrid(g, g, g), axis=-1).reshape(-1, 3)
        back = _oracle_lab_to_srgb(hf.srgb_to_lab(grid))
        assert np.abs(back - grid).max() < 1e-6

    def test_library_inverse_matches_oracle(self):
        rng = np.random.default_rng(1)
        lab = hf.srgb_to_lab(rng.uniform(0.05, 0.95, size=(200, 3)))
        assert np.abs(hf.lab_to_srgb(lab) - _oracle_lab_to_srgb(lab)).max() < 1e-9


class TestBuildEmbedding:
    def _colored_pair(self):
        # two coincident vertices with Lab colors (0,0,0) and (100,0,0)
        return hf.TexturedMesh(
            np.zeros((2, 3)),
            np.empty((0, 3), dtype=np.int64),
            colors=[[0.0, 0.0, 0.0], [100.0, 0.0, 0.0]],
            colorspace="lab",
        )

    def test_eta_zero_degenerate(self, blob_mesh):
        emb = hf.build_embedding(blob_mesh, 0.0)
        assert np.array_equal(emb.photometric, np.zeros((blob_mesh.n_vertices, 3)))
        d_joint = np.linalg.norm(emb.coords[0] - emb.coords[1])
        d_geo = np.linalg.norm(blob_mesh.vertices[0] - blob_mesh.vertices[1])
        assert d_joint == d_geo

    def test_geometric_columns_bit_identical(self, blob_mesh):
        emb = hf.build_embedding(blob_mesh, 0.1, color_scale=10.0)
        assert np.array_equal(emb.geometric, blob_mesh.vertices)

    def test_lab_unit_distance(self):
        emb = hf.build_embedding(self._colored_pair(), eta=1.0, color_scale=1.0)
        d2 = np.sum((emb.coords[0] - emb.coords[1]) ** 2)
        assert abs(d2 - 10000.0) < 1e-9

    def test_eta_linearity(self):
        mesh = self._colored_pair()
        e1 = hf.build_embedding(mesh, 1.0, color_scale=1.0)
        e2 = hf.build_embedding(mesh, 2.0, color_scale=1.0)
        assert np.array_equal(e2.photometric, 2.0 * e1.photometric)

    def test_missing_colors_rejected(self, tetra_mesh):
        with pytest.raises(MeshValidationError):
            hf.build_embedding(tetra_mesh, eta=0.5)

    def test_distance_decomposition(self, blob_mesh):
        eta, cs = 0.3, 10.0
        emb = hf.build_embedding(blob_mesh, eta, color_scale=cs)
        lab = hf.srgb_to_lab(blob_mesh.colors)
        rng = np.random.default_rng(2)
        for _ in range(50):
            i, j = rng.integers(blob_mesh.n_vertices, size=2)
            d2 = np.sum((emb.coords[i] - emb.coords[j]) ** 2)
            geo = np.sum((blob_mesh.vertices[i] - blob_mesh.vertices[j]) ** 2)
            photo = eta**2 * np.sum(((lab[i] - lab[j]) / cs) ** 2)
            assert abs(d2 - (geo + photo)) < 1e-12 * max(1.0, d2)

    def test_srgb_ablation_flag(self, blob_mesh):
        emb = hf.build_embedding(blob_mesh, 1.0, color_scale=1.0, use_srgb_coords=True)
        assert np.array_equal(emb.photometric, blob_mesh.colors)
