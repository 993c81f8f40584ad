import numpy as np
import pytest

import heatfuse as hf
from heatfuse import pipeline
from heatfuse.diffusion import pairwise_diffusion_distances
from heatfuse.spectrum import SpectralBasis
from heatfuse.synth import random_rotation


def _sliced(basis, k):
    return SpectralBasis(
        basis.lambdas[:k],
        basis.phis[:, :k],
        basis.mass,
        scheme=basis.scheme,
        rho=basis.rho,
        eta=basis.eta,
    )


class TestHeatKernel:
    @pytest.mark.parametrize("t", [1.0, 1e2, 1e4])
    def test_mass_weighted_conservation(self, blob_basis_fused, t):
        rng = np.random.default_rng(17)
        for src in rng.integers(blob_basis_fused.n_vertices, size=20):
            v = hf.heat_kernel(blob_basis_fused, t, int(src))
            assert abs(float(v @ blob_basis_fused.mass) - 1.0) < 1e-6

    def test_long_time_limit_on_unit_sphere(self):
        mesh = hf.make_primitive("icosphere", 3)
        pair = hf.assemble_cotangent(mesh, hf.vertex_areas(mesh))
        basis = hf.solve(pair, 12)
        t = 1e6 / basis.lambdas[1]
        v = hf.heat_kernel(basis, t, source=7)
        limit = 1.0 / (4.0 * np.pi)
        assert np.abs(v - limit).max() < 0.03 * limit

    def test_single_eigenpair_constant(self, blob_basis_fused):
        v = hf.heat_kernel(_sliced(blob_basis_fused, 1), 5.0, source=3)
        assert np.abs(v - v[0]).max() < 1e-12 * abs(v[0])

    def test_small_t_locality_on_sphere(self):
        mesh = hf.make_primitive("icosphere", 3)
        pair = hf.assemble_cotangent(mesh, hf.vertex_areas(mesh))
        basis = hf.solve(pair, 100)
        for src in (0, 12, 401):
            v = hf.heat_kernel(basis, 0.01, src)
            assert int(np.argmax(v)) == src

    def test_bad_time(self, blob_basis_fused):
        with pytest.raises(ValueError):
            hf.heat_kernel(blob_basis_fused, 0.0, 0)


class TestHksField:
    def test_positive_and_monotone_in_t(self, blob_basis_fused):
        field = hf.hks_field(blob_basis_fused, [10.0, 40.0, 160.0, 640.0])
        assert (field.values > 0).all()
        assert (np.diff(field.values, axis=1) <= 0).all()

    def test_eta_zero_equals_geometry_only(self, blob_mesh, blob_cfg):
        b_col = pipeline.solve_basis(blob_mesh, 0.0, blob_cfg)
        b_geo = pipeline.solve_basis(blob_mesh.without_colors(), 0.0, blob_cfg)
        f_col = hf.hks_field(b_col, [10.0, 100.0])
        f_geo = hf.hks_field(b_geo, [10.0, 100.0])
        assert np.abs(f_col.values - f_geo.values).max() <= 1e-12

    def test_recoloring_invariance_at_eta_zero(self, blob_mesh, blob_cfg):
        recolored = blob_mesh.with_colors(blob_mesh.colors[::-1])
        b1 = pipeline.solve_basis(blob_mesh, 0.0, blob_cfg)
        b2 = pipeline.solve_basis(recolored, 0.0, blob_cfg)
        assert np.abs(
            hf.hks_field(b1, [50.0]).values - hf.hks_field(b2, [50.0]).values
        ).max() <= 1e-12

    def test_rigid_invariance_fused(self, blob_mesh, blob_cfg, blob_basis_fused):
        rot = random_rotation(np.random.default_rng(23))
        moved = blob_mesh.with_vertices(blob_mesh.vertices @ rot.T + [1.0, -4.0, 2.5])
        b2 = pipeline.solve_basis(moved, 0.1, blob_cfg)
        times = [20.0, 80.0, 320.0]
        f1 = hf.hks_field(blob_basis_fused, times)
        f2 = hf.hks_field(b2, times)
        assert np.abs(f1.values - f2.values).max() < 1e-9

    def test_truncation_monotone(self, blob_basis_fused):
        t = [30.0]
        full = hf.hks_field(blob_basis_fused, t).values
        partial = hf.hks_field(_sliced(blob_basis_fused, 10), t).values
        assert (partial <= full + 1e-15).all()

    def test_time_eigenvalue_duality(self, blob_basis_fused):
        c = 7.3
        scaled = SpectralBasis(
            blob_basis_fused.lambdas * c,
            blob_basis_fused.phis,
            blob_basis_fused.mass,
        )
        f1 = hf.hks_field(blob_basis_fused, [50.0]).values
        f2 = hf.hks_field(scaled, [50.0 / c]).values
        assert np.abs(f1 - f2).max() <= 1e-12 * f1.max()

    def test_times_must_increase(self, blob_basis_fused):
        with pytest.raises(ValueError):
            hf.hks_field(blob_basis_fused, [10.0, 5.0])


class TestDiffusionDistance:
    def test_self_distance_zero(self, blob_basis_fused):
        assert hf.diffusion_distance(blob_basis_fused, 10.0, 5, 5) == 0.0

    def test_symmetry(self, blob_basis_fused):
        d1 = hf.diffusion_distance(blob_basis_fused, 10.0, 3, 40)
        d2 = hf.diffusion_distance(blob_basis_fused, 10.0, 40, 3)
        assert d1 == d2

    def test_spectral_form_oracle(self, blob_basis_fused):
        lam, phi = blob_basis_fused.lambdas, blob_basis_fused.phis
        t, i, j = 25.0, 4, 77
        expected = np.sqrt(
            np.sum(np.exp(-lam[1:] * t) * (phi[i, 1:] - phi[j, 1:]) ** 2)
        )
        got = hf.diffusion_distance(blob_basis_fused, t, i, j)
        assert abs(got - expected) < 1e-12

    def test_heat_kernel_diagonal_form(self, blob_basis_fused):
        t, i, j = 25.0, 4, 77
        hii = hf.heat_kernel(blob_basis_fused, t, i)[i]
        hjj = hf.heat_kernel(blob_basis_fused, t, j)[j]
        hij = hf.heat_kernel(blob_basis_fused, t, i)[j]
        d2 = hf.diffusion_distance(blob_basis_fused, t, i, j) ** 2
        assert abs(d2 - (hii + hjj - 2 * hij)) < 1e-12

    def test_integrated_kernel_difference_form(self, blob_basis_fused):
        # integral of (h_{t/2}(i,.) - h_{t/2}(j,.))^2 over the mesh
        t, i, j = 25.0, 4, 77
        vi = hf.heat_kernel(blob_basis_fused, t / 2.0, i)
        vj = hf.heat_kernel(blob_basis_fused, t / 2.0, j)
        integral = float(((vi - vj) ** 2) @ blob_basis_fused.mass)
        d2 = hf.diffusion_distance(blob_basis_fused, t, i, j) ** 2
        assert abs(d2 - integral) < 1e-9 * max(d2, 1e-12)

    def test_triangle_inequality(self):
        mesh = hf.make_primitive("icosphere", 1, "checker", scale=10.0)
        cfg = pipeline.RunConfig(k=20, color_scale=10.0)
        basis = pipeline.solve_basis(mesh, 0.1, cfg)
        n = mesh.n_vertices
        from scipy.spatial.distance import squareform

        dmat = squareform(pairwise_diffusion_distances(basis, 30.0, np.arange(n)))
        for a in range(n):
            for b in range(a + 1, n):
                assert (dmat[a, :] + dmat[b, :] - dmat[a, b] >= -1e-9).all()

    def test_pairwise_matches_scalar(self, blob_basis_fused):
        idx = np.array([3, 11, 59, 101])
        condensed = pairwise_diffusion_distances(blob_basis_fused, 40.0, idx)
        k = 0
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                expected = hf.diffusion_distance(
                    blob_basis_fused, 40.0, int(idx[a]), int(idx[b])
                )
                assert abs(condensed[k] - expected) < 1e-12
                k += 1


class TestAveragedAndJoint:
    def test_singleton_time_set(self, blob_basis_fused):
        d1 = hf.averaged_distance(blob_basis_fused, [30.0], 2, 9)
        assert d1 == hf.diffusion_distance(blob_basis_fused, 30.0, 2, 9)

    def test_self_zero(self, blob_basis_fused):
        assert hf.averaged_distance(blob_basis_fused, [1024.0, 4096.0], 8, 8) == 0.0

    def test_mean_oracle(self, blob_basis_fused):
        T = [1024.0, 4096.0]
        vals = [hf.diffusion_distance(blob_basis_fused, t, 2, 9) for t in T]
        got = hf.averaged_distance(blob_basis_fused, T, 2, 9)
        assert abs(got - np.mean(vals)) < 1e-12

    def test_joint_reduces_to_averaged(self, blob_basis_geo):
        bases = {0.0: blob_basis_geo}
        T = [20.0, 90.0]
        got = hf.joint_multiscale_distance(bases, T, [0.0], 4, 31)
        assert abs(got - hf.averaged_distance(blob_basis_geo, T, 4, 31)) < 1e-15

    def test_joint_self_zero(self, blob_basis_geo, blob_basis_fused):
        bases = {0.0: blob_basis_geo, 0.1: blob_basis_fused}
        assert hf.joint_multiscale_distance(bases, [20.0], [0.0, 0.1], 6, 6) == 0.0

    def test_joint_factor_oracle(self, blob_basis_geo, blob_basis_fused):
        bases = {0.0: blob_basis_geo, 0.1: blob_basis_fused}
        T, i, j = [20.0, 90.0], 6, 47
        expected = np.mean(
            [
                hf.diffusion_distance(bases[0.0], t, i, j)
                * hf.diffusion_distance(bases[0.1], t, i, j)
                for t in T
            ]
        )
        got = hf.joint_multiscale_distance(bases, T, [0.0, 0.1], i, j)
        assert abs(got - expected) < 1e-12 * max(expected, 1e-12)

    def test_missing_basis(self, blob_basis_geo):
        with pytest.raises(KeyError):
            hf.joint_multiscale_distance({0.0: blob_basis_geo}, [10.0], [0.0, 0.2], 0, 1)
