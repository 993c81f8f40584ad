"""Heat kernels, heat kernel signatures, and diffusion distances.

Everything here is a pure read of a truncated SpectralBasis:

* ``h_t(x, x') = sum_i exp(-lambda_i t) phi_i(x) phi_i(x')``
* HKS is the diagonal ``h_t(x, x)`` at several times; the color variant
  (cHKS) is the same expansion over a fused basis with eta > 0.
* diffusion distance ``d_t(x, x')^2 = sum_{i>0} exp(-lambda_i t)
  (phi_i(x) - phi_i(x'))^2`` (the kernel mode i = 0 drops out).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import _frozen
from .spectrum import SpectralBasis


@dataclass(frozen=True)
class HksDescriptorField:
    """Per-vertex HKS values: values[i, m] = h_{times[m]}(x_i, x_i)."""

    times: np.ndarray
    values: np.ndarray
    eta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "times", _frozen(self.times, np.float64))
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        if self.values.ndim != 2 or self.values.shape[1] != len(self.times):
            raise ValueError(
                f"values shape {self.values.shape} inconsistent with {len(self.times)} times"
            )

    @property
    def n_vertices(self) -> int:
        return self.values.shape[0]


def heat_kernel(basis: SpectralBasis, t: float, source: int) -> np.ndarray:
    """Heat kernel row h_t(source, .) from the truncated expansion."""
    if t <= 0:
        raise ValueError("t must be positive")
    coeff = np.exp(-basis.lambdas * t) * basis.phis[source]
    return basis.phis @ coeff


def hks_field(basis: SpectralBasis, times) -> HksDescriptorField:
    """Diagonal heat kernel values at each vertex and time."""
    times = np.asarray(times, dtype=np.float64)
    if times.size == 0:
        raise ValueError("times must be nonempty")
    if (times <= 0).any():
        raise ValueError("times must be positive")
    if times.size > 1 and not (np.diff(times) > 0).all():
        raise ValueError("times must be strictly increasing")
    decay = np.exp(-np.outer(basis.lambdas, times))  # (K+1, n_times)
    values = basis.phis**2 @ decay
    return HksDescriptorField(times, values, eta=basis.eta)


def _spectral_coords(basis: SpectralBasis, t: float, idx) -> np.ndarray:
    # rows of exp(-lambda t / 2)-weighted eigenvector entries, kernel mode excluded
    return basis.phis[idx, 1:] * np.exp(-0.5 * basis.lambdas[1:] * t)


def diffusion_distance(basis: SpectralBasis, t: float, i: int, j: int) -> float:
    """Diffusion distance between vertices i and j at scale t."""
    if t <= 0:
        raise ValueError("t must be positive")
    if i == j:
        return 0.0
    diff = _spectral_coords(basis, t, i) - _spectral_coords(basis, t, j)
    return float(np.linalg.norm(diff))


def averaged_distance(basis: SpectralBasis, times, i: int, j: int) -> float:
    """Arithmetic mean of diffusion distances over the time set."""
    times = np.asarray(times, dtype=np.float64)
    if times.size == 0:
        raise ValueError("times must be nonempty")
    return float(np.mean([diffusion_distance(basis, t, i, j) for t in times]))


def joint_multiscale_distance(
    bases: dict[float, SpectralBasis], times, etas, i: int, j: int
) -> float:
    """Multiscale joint distance: mean over t of the product over eta.

    ``bases`` must hold a SpectralBasis for every eta in ``etas``, all
    built on the same mesh so vertex indices agree.
    """
    times = np.asarray(times, dtype=np.float64)
    if times.size == 0:
        raise ValueError("times must be nonempty")
    missing = [e for e in etas if e not in bases]
    if missing:
        raise KeyError(f"no spectral basis for eta values {missing}")
    total = 0.0
    for t in times:
        prod = 1.0
        for e in etas:
            prod *= diffusion_distance(bases[e], t, i, j)
        total += prod
    return total / len(times)


def pairwise_diffusion_distances(
    basis: SpectralBasis, t: float, idx: np.ndarray
) -> np.ndarray:
    """Condensed (scipy.spatial.distance style) distances among sampled vertices."""
    from scipy.spatial.distance import pdist

    coords = _spectral_coords(basis, t, np.asarray(idx, dtype=np.int64))
    return pdist(coords)
