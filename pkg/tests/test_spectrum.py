import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sparse

import heatfuse as hf
from heatfuse import pipeline
from heatfuse.errors import CacheError
from heatfuse.laplacian import LaplacianPair
from heatfuse.spectrum import read_header, residuals


def _k4_pair():
    # complete graph on 4 vertices, unit weights, identity mass
    W = 4.0 * np.eye(4) - np.ones((4, 4))
    return LaplacianPair(sparse.csr_matrix(W), np.ones(4), "fused_gaussian")


class TestSolve:
    def test_kernel_mode(self, blob_basis_fused):
        lam, phi0 = blob_basis_fused.lambdas, blob_basis_fused.phis[:, 0]
        assert lam[0] <= 1e-6 * lam.max()
        assert np.std(phi0) / abs(np.mean(phi0)) < 1e-6
        assert (np.diff(lam) >= 0).all()

    def test_k4_graph_spectrum(self):
        basis = hf.solve(_k4_pair(), 3)
        oracle = scipy.linalg.eigh(
            4.0 * np.eye(4) - np.ones((4, 4)), np.eye(4), eigvals_only=True
        )
        assert np.allclose(basis.lambdas, oracle, atol=1e-12)
        assert np.allclose(basis.lambdas, [0.0, 4.0, 4.0, 4.0], atol=1e-12)

    def test_icosphere_first_cluster(self):
        mesh = hf.make_primitive("icosphere", 3)
        pair = hf.assemble_cotangent(mesh, hf.vertex_areas(mesh))
        basis = hf.solve(pair, 8)
        assert np.abs(basis.lambdas[1:4] - 2.0).max() < 0.05 * 2.0
        assert np.abs(basis.lambdas[4:9] - 6.0).max() < 0.05 * 6.0

    def test_matches_dense_oracle(self, blob_mesh, blob_cfg):
        pair = pipeline.build_pair(blob_mesh, 0.1, blob_cfg)
        assert 16 <= pair.n <= 300
        basis = hf.solve(pair, 24)  # ARPACK path for this size
        dense = scipy.linalg.eigh(
            pair.W.toarray(), np.diag(pair.mass), eigvals_only=True
        )[:25]
        scale = max(abs(dense[-1]), 1e-30)
        assert np.abs(basis.lambdas - dense).max() / scale < 1e-8

    def test_permutation_invariance(self, blob_mesh, blob_cfg):
        pair = pipeline.build_pair(blob_mesh, 0.0, blob_cfg)
        rng = np.random.default_rng(9)
        perm = rng.permutation(pair.n)
        P = sparse.csr_matrix((np.ones(pair.n), (np.arange(pair.n), perm)))
        pair_p = LaplacianPair((P @ pair.W @ P.T).tocsr(), P @ pair.mass, pair.scheme)
        tol = 1e-10
        b1 = hf.solve(pair, 15, tol=tol)
        b2 = hf.solve(pair_p, 15, tol=tol)
        scale = max(b1.lambdas.max(), 1e-30)
        assert np.abs(b1.lambdas - b2.lambdas).max() / scale < max(10 * tol, 1e-9)

    def test_orthonormality(self, blob_basis_fused):
        gram = blob_basis_fused.phis.T @ (
            blob_basis_fused.mass[:, None] * blob_basis_fused.phis
        )
        assert np.abs(gram - np.eye(gram.shape[0])).max() < 1e-8

    def test_residuals(self, blob_mesh, blob_cfg):
        pair = pipeline.build_pair(blob_mesh, 0.1, blob_cfg)
        basis = hf.solve(pair, 24, tol=1e-10)
        norm_w = np.abs(pair.W.data).max()
        assert residuals(pair, basis).max() <= 1e-8 * norm_w

    def test_sign_convention(self, blob_basis_geo):
        phis = blob_basis_geo.phis
        peaks = phis[np.argmax(np.abs(phis), axis=0), np.arange(phis.shape[1])]
        assert (peaks > 0).all()

    def test_k_clamped_with_warning(self, tetra_mesh):
        pair = hf.assemble_cotangent(tetra_mesh, hf.vertex_areas(tetra_mesh))
        with pytest.warns(UserWarning, match="clamping"):
            basis = hf.solve(pair, 10)
        assert basis.n_pairs == 4

    def test_deterministic(self, blob_mesh, blob_cfg):
        pair = pipeline.build_pair(blob_mesh, 0.1, blob_cfg)
        b1 = hf.solve(pair, 12, seed=3)
        b2 = hf.solve(pair, 12, seed=3)
        assert np.array_equal(b1.lambdas, b2.lambdas)
        assert np.array_equal(b1.phis, b2.phis)


class TestCache:
    def test_roundtrip_exact(self, tmp_path, blob_basis_fused):
        path = tmp_path / "basis.hfb"
        hf.save_basis(blob_basis_fused, path, extra={"solver_seed": 0})
        loaded = hf.load_basis(path)
        assert np.array_equal(loaded.lambdas, blob_basis_fused.lambdas)
        assert np.array_equal(loaded.phis, blob_basis_fused.phis)
        assert np.array_equal(loaded.mass, blob_basis_fused.mass)
        assert loaded.eta == blob_basis_fused.eta
        assert loaded.scheme == blob_basis_fused.scheme
        header = read_header(path)
        assert header["solver_seed"] == 0
        assert header["n"] == blob_basis_fused.n_vertices

    def test_deterministic_bytes(self, tmp_path, blob_basis_geo):
        p1, p2 = tmp_path / "a.hfb", tmp_path / "b.hfb"
        hf.save_basis(blob_basis_geo, p1)
        hf.save_basis(blob_basis_geo, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_corrupt_rejected(self, tmp_path):
        path = tmp_path / "bad.hfb"
        path.write_bytes(b"not a cache at all")
        with pytest.raises(CacheError):
            hf.load_basis(path)

    def test_truncated_payload_rejected(self, tmp_path, blob_basis_geo):
        path = tmp_path / "trunc.hfb"
        hf.save_basis(blob_basis_geo, path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-16])
        with pytest.raises(CacheError, match="payload"):
            hf.load_basis(path)
