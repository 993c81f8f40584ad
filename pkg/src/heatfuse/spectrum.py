"""Truncated spectral basis of a Laplacian pair.

Solves the generalized symmetric eigenproblem ``W phi = lambda A phi``
for the smallest eigenpairs. Since A is diagonal positive the problem is
converted to standard form ``D^{-1/2} W D^{-1/2}`` and handed to ARPACK
in shift-invert mode (dense LAPACK for tiny meshes or full-spectrum
requests). Eigenvectors come back A-orthonormal.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .errors import CacheError, SolverError
from .laplacian import LaplacianPair
from .mesh import _frozen

# eigenvalues below ZERO_SNAP * lambda_max are kernel modes up to solver
# noise (row sums of W vanish by construction); snapping them to exact 0
# keeps long-time heat kernels conservative
ZERO_SNAP = 1e-9

_CACHE_MAGIC = b"HFBASIS1\n"


@dataclass(frozen=True)
class SpectralBasis:
    """Eigenvalues (ascending) and A-orthonormal eigenvectors of a pair."""

    lambdas: np.ndarray
    phis: np.ndarray
    mass: np.ndarray
    scheme: str = "unknown"
    rho: float | None = None
    eta: float = 0.0
    mesh_hash: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "lambdas", _frozen(self.lambdas, np.float64))
        object.__setattr__(self, "phis", _frozen(self.phis, np.float64))
        object.__setattr__(self, "mass", _frozen(self.mass, np.float64))
        if self.phis.shape != (len(self.mass), len(self.lambdas)):
            raise ValueError(
                f"phis shape {self.phis.shape} inconsistent with "
                f"N={len(self.mass)}, K+1={len(self.lambdas)}"
            )

    @property
    def n_vertices(self) -> int:
        return self.phis.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.phis.shape[1]


def solve(
    pair: LaplacianPair,
    k: int,
    tol: float = 1e-10,
    seed: int = 0,
    force_dense: bool = False,
    mesh_hash: str | None = None,
) -> SpectralBasis:
    """Compute the k+1 smallest eigenpairs of ``W phi = lambda A phi``.

    ``k`` is clamped to N-1 with a warning when callers ask for more
    eigenpairs than the mesh supports. The starting vector of the
    iterative solver is drawn from ``seed`` so repeated solves are
    bit-identical. Eigenvector signs are fixed by making the entry of
    largest magnitude positive.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    n = pair.n
    if k > n - 1:
        warnings.warn(f"k={k} exceeds N-1={n - 1}; clamping", stacklevel=2)
        k = n - 1
    nev = k + 1

    d = 1.0 / np.sqrt(pair.mass)
    B = sparse.diags(d) @ pair.W @ sparse.diags(d)
    B = ((B + B.T) * 0.5).tocsc()

    use_dense = force_dense or nev >= n - 1 or n < 16
    if use_dense:
        vals, vecs = scipy.linalg.eigh(B.toarray(), subset_by_index=[0, k])
    else:
        # pad the request so a degenerate cluster straddling the cutoff
        # cannot swallow one of the wanted eigenvalues
        nev_solve = min(nev + max(4, nev // 8), n - 2)
        ncv = min(n, max(2 * nev_solve + 1, 32))
        scale = float(np.abs(B.diagonal()).mean())
        sigma = -max(1e-4 * scale, 1e-12)
        v0 = np.random.default_rng(seed).standard_normal(n)
        try:
            vals, vecs = spla.eigsh(
                B,
                k=nev_solve,
                sigma=sigma,
                which="LM",
                v0=v0,
                ncv=ncv,
                tol=tol,
                maxiter=100 * n,
            )
        except spla.ArpackNoConvergence as exc:
            got = len(exc.eigenvalues)
            raise SolverError(
                f"eigensolver converged only {got}/{nev_solve} pairs after iteration "
                f"cap; residual eigenvalues so far: {exc.eigenvalues!r}"
            ) from exc

    order = np.argsort(vals)[:nev]
    vals = vals[order]
    phis = vecs[:, order] * d[:, None]

    vals = np.maximum(vals, 0.0)
    if vals[-1] > 0:
        vals[vals < ZERO_SNAP * vals[-1]] = 0.0

    # reproducible sign: entry of largest magnitude is positive
    flat = np.argmax(np.abs(phis), axis=0)
    signs = np.sign(phis[flat, np.arange(phis.shape[1])])
    signs[signs == 0] = 1.0
    phis = phis * signs

    return SpectralBasis(
        vals,
        phis,
        pair.mass,
        scheme=pair.scheme,
        rho=pair.rho,
        eta=float(pair.eta) if pair.eta is not None else 0.0,
        mesh_hash=mesh_hash,
    )


def residuals(pair: LaplacianPair, basis: SpectralBasis) -> np.ndarray:
    """Columnwise residual norms ||W phi - lambda A phi||."""
    R = pair.W @ basis.phis - pair.mass[:, None] * basis.phis * basis.lambdas
    return np.linalg.norm(R, axis=0)


# ------------------------------------------------------------------- caching


def save_basis(basis: SpectralBasis, path, extra: dict | None = None) -> None:
    """Write a versioned binary container; bytes are run-independent.

    ``extra`` lands in the JSON header (seeds, solver settings, ...) so a
    cache file records everything that produced it.
    """
    header = {
        "version": 1,
        "scheme": basis.scheme,
        "rho": basis.rho,
        "eta": basis.eta,
        "k": basis.n_pairs - 1,
        "n": basis.n_vertices,
        "mesh_hash": basis.mesh_hash,
        "dtype": "<f8",
    }
    if extra:
        header.update(extra)
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(len(blob).to_bytes(8, "little"))
        fh.write(blob)
        fh.write(np.ascontiguousarray(basis.lambdas, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(basis.phis, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(basis.mass, dtype="<f8").tobytes())


def read_header(path) -> dict:
    """Header JSON of a spectral cache file, without loading the arrays."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_CACHE_MAGIC))
        if magic != _CACHE_MAGIC:
            raise CacheError(f"{path}: not a spectral cache file")
        hlen = int.from_bytes(fh.read(8), "little")
        try:
            return json.loads(fh.read(hlen).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CacheError(f"{path}: corrupt header") from exc


def load_basis(path) -> SpectralBasis:
    raw = Path(path).read_bytes()
    if not raw.startswith(_CACHE_MAGIC):
        raise CacheError(f"{path}: not a spectral cache file")
    off = len(_CACHE_MAGIC)
    hlen = int.from_bytes(raw[off : off + 8], "little")
    off += 8
    try:
        header = json.loads(raw[off : off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CacheError(f"{path}: corrupt header") from exc
    off += hlen
    n, kk = header["n"], header["k"] + 1
    need = (kk + n * kk + n) * 8
    if len(raw) - off != need:
        raise CacheError(f"{path}: payload is {len(raw) - off} bytes, expected {need}")
    lams = np.frombuffer(raw, dtype="<f8", count=kk, offset=off)
    off += kk * 8
    phis = np.frombuffer(raw, dtype="<f8", count=n * kk, offset=off).reshape(n, kk)
    off += n * kk * 8
    mass = np.frombuffer(raw, dtype="<f8", count=n, offset=off)
    return SpectralBasis(
        lams,
        phis,
        mass,
        scheme=header["scheme"],
        rho=header["rho"],
        eta=header["eta"],
        mesh_hash=header["mesh_hash"],
    )
