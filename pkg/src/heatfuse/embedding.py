"""Joint geometric-photometric embedding and colorspace conversion.

A colored shape is embedded in R^3 x C by concatenating vertex positions
with scaled color coordinates: columns 1-3 are the positions, columns 4-6
are eta * (Lab / color_scale). With eta = 0 the photometric columns vanish
and every downstream operator reduces to its geometry-only form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ColorRangeError, MeshValidationError
from .mesh import COLORSPACE_LAB, COLORSPACE_SRGB, TexturedMesh, _frozen

# Linear sRGB -> CIEXYZ under D65 (IEC 61966-2-1 primaries). The white
# point is taken as the matrix row sums so that (1,1,1) maps to exactly
# L=100, a=b=0.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_WHITE = _RGB_TO_XYZ.sum(axis=1)
_DELTA = 6.0 / 29.0


def srgb_to_lab(colors: np.ndarray) -> np.ndarray:
    """Convert sRGB in [0,1] to CIELAB (D65). Accepts a triple or an (N,3) array."""
    c = np.asarray(colors, dtype=np.float64)
    single = c.ndim == 1
    c = np.atleast_2d(c)
    if c.shape[-1] != 3:
        raise ValueError(f"expected RGB triples, got shape {c.shape}")
    if c.min() < 0.0 or c.max() > 1.0:
        raise ColorRangeError(
            f"sRGB components must lie in [0,1], got range [{c.min():g}, {c.max():g}]"
        )
    linear = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _RGB_TO_XYZ.T
    f = _lab_f(xyz / _WHITE)
    lab = np.empty_like(xyz)
    lab[:, 0] = 116.0 * f[:, 1] - 16.0
    lab[:, 1] = 500.0 * (f[:, 0] - f[:, 1])
    lab[:, 2] = 200.0 * (f[:, 1] - f[:, 2])
    return lab[0] if single else lab


def lab_to_srgb(lab: np.ndarray) -> np.ndarray:
    """Inverse of srgb_to_lab; out-of-gamut results are clamped to [0,1]."""
    v = np.asarray(lab, dtype=np.float64)
    single = v.ndim == 1
    v = np.atleast_2d(v)
    fy = (v[:, 0] + 16.0) / 116.0
    fx = fy + v[:, 1] / 500.0
    fz = fy - v[:, 2] / 200.0
    xyz = np.column_stack([_lab_f_inv(fx), _lab_f_inv(fy), _lab_f_inv(fz)]) * _WHITE
    linear = xyz @ _XYZ_TO_RGB.T
    linear = np.clip(linear, 0.0, None)
    srgb = np.where(
        linear <= 0.0031308, 12.92 * linear, 1.055 * linear ** (1.0 / 2.4) - 0.055
    )
    srgb = np.clip(srgb, 0.0, 1.0)
    return srgb[0] if single else srgb


def _lab_f(t):
    return np.where(t > _DELTA**3, np.cbrt(t), t / (3.0 * _DELTA**2) + 4.0 / 29.0)


def _lab_f_inv(f):
    return np.where(f > _DELTA, f**3, 3.0 * _DELTA**2 * (f - 4.0 / 29.0))


@dataclass(frozen=True)
class JointEmbedding:
    """N x 6 embedding coordinates: positions, then scaled photometric columns."""

    coords: np.ndarray
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen(self.coords, np.float64))
        if self.coords.ndim != 2 or self.coords.shape[1] != 6:
            raise ValueError(f"embedding coords must be (N, 6), got {self.coords.shape}")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    @property
    def geometric(self) -> np.ndarray:
        return self.coords[:, :3]

    @property
    def photometric(self) -> np.ndarray:
        return self.coords[:, 3:]


def build_embedding(
    mesh: TexturedMesh,
    eta: float,
    color_scale: float = 100.0,
    use_srgb_coords: bool = False,
) -> JointEmbedding:
    """Embed a mesh into the 6D geometry-color space.

    Colors are converted to Lab (unless ``use_srgb_coords`` asks for raw
    sRGB, an ablation mode), divided by ``color_scale``, and multiplied
    by ``eta``. With ``eta == 0`` no colors are required and the
    photometric columns are exactly zero.
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if color_scale <= 0:
        raise ValueError("color_scale must be positive")
    n = mesh.n_vertices
    coords = np.zeros((n, 6))
    coords[:, :3] = mesh.vertices
    if eta > 0:
        if not mesh.has_colors:
            raise MeshValidationError("eta > 0 requires a mesh with per-vertex colors")
        if use_srgb_coords:
            photo = (
                mesh.colors
                if mesh.colorspace == COLORSPACE_SRGB
                else lab_to_srgb(mesh.colors)
            )
        elif mesh.colorspace == COLORSPACE_LAB:
            photo = mesh.colors
        else:
            photo = srgb_to_lab(mesh.colors)
        coords[:, 3:] = (eta / color_scale) * photo
    return JointEmbedding(coords, float(eta))
