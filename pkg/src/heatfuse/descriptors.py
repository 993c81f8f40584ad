"""Global shape descriptors: BoF over (c)HKS, distance distributions, color histograms.

The bag-of-features path mirrors the ShapeGoogle pipeline: a vocabulary
is clustered offline from pooled HKS descriptors, each vertex descriptor
is soft-quantized against it, and the per-vertex assignments are pooled
into an area-weighted, L1-normalized histogram. Descriptors computed at
several photometric weights combine through a squared-L1 multiscale
distance (weight 1 for eta = 0, eta otherwise).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .diffusion import HksDescriptorField
from .embedding import srgb_to_lab
from .errors import CacheError, DescriptorError
from .mesh import COLORSPACE_SRGB, TexturedMesh, VertexAreas, _frozen

LAB_RANGES = ((0.0, 100.0), (-128.0, 128.0), (-128.0, 128.0))


@dataclass(frozen=True)
class Vocabulary:
    """Cluster centers in HKS descriptor space plus the soft-assignment variance."""

    centers: np.ndarray
    soft_sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "centers", _frozen(self.centers, np.float64))
        if self.centers.ndim != 2 or len(self.centers) < 1:
            raise ValueError("centers must be a (V, n) array with V >= 1")
        if self.soft_sigma2 <= 0:
            raise ValueError("soft_sigma2 must be positive")

    @property
    def size(self) -> int:
        return len(self.centers)


@dataclass(frozen=True)
class BagOfFeatures:
    """L1-normalized word-frequency vector at a given photometric weight."""

    weights: np.ndarray
    eta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights, np.float64))
        w = self.weights
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("BoF weights must be nonnegative and sum to 1")


@dataclass(frozen=True)
class DistanceDistribution:
    """Binned, area-weighted CDF of pairwise distances.

    ``cdf[b]`` is the weight fraction of pairs with distance <= bin_edges[b+1];
    as a step function the CDF is right-continuous and jumps at right bin edges.
    """

    bin_edges: np.ndarray
    cdf: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bin_edges", _frozen(self.bin_edges, np.float64))
        object.__setattr__(self, "cdf", _frozen(self.cdf, np.float64))
        e, c = self.bin_edges, self.cdf
        if len(e) != len(c) + 1 or not (np.diff(e) > 0).all():
            raise ValueError("bin_edges must be increasing with one more entry than cdf")
        if (np.diff(c) < -1e-12).any() or abs(c[-1] - 1.0) > 1e-9:
            raise ValueError("cdf must be nondecreasing with final value 1")

    def value_at(self, x) -> np.ndarray:
        """CDF evaluated at x (scalar or array)."""
        x = np.asarray(x, dtype=np.float64)
        idx = np.searchsorted(self.bin_edges[1:], x, side="right") - 1
        padded = np.concatenate([[0.0], self.cdf])
        return padded[np.clip(idx, -1, len(self.cdf) - 1) + 1]


@dataclass(frozen=True)
class ColorHistogram:
    """Area-weighted, L1-normalized histogram on a fixed 3D Lab grid."""

    bins: tuple
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights, np.float64))
        object.__setattr__(self, "bins", tuple(int(b) for b in self.bins))
        if self.weights.size != np.prod(self.bins):
            raise ValueError("weights length must equal the product of bin counts")
        if (self.weights < 0).any() or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError("histogram weights must be nonnegative and sum to 1")


# ---------------------------------------------------------------- vocabulary


def _kmeans_pp(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = np.empty((k, data.shape[1]))
    centers[0] = data[rng.integers(len(data))]
    d2 = np.sum((data - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:  # fewer distinct points than centers; caller prevalidates
            centers[c] = data[rng.integers(len(data))]
            continue
        centers[c] = data[rng.choice(len(data), p=d2 / total)]
        np.minimum(d2, np.sum((data - centers[c]) ** 2, axis=1), out=d2)
    return centers


def _lloyd(data: np.ndarray, centers: np.ndarray, max_iter: int = 200) -> np.ndarray:
    for _ in range(max_iter):
        d2 = cdist(data, centers, "sqeuclidean")
        labels = np.argmin(d2, axis=1)
        new = np.empty_like(centers)
        for c in range(len(centers)):
            members = labels == c
            if members.any():
                new[c] = data[members].mean(axis=0)
            else:  # reseed an empty cluster at the worst-served point
                new[c] = data[np.argmax(d2[np.arange(len(data)), labels])]
        if np.allclose(new, centers, rtol=0.0, atol=1e-12):
            return new
        centers = new
    return centers


def build_vocabulary(fields: list[HksDescriptorField], v: int, seed: int) -> Vocabulary:
    """Cluster pooled HKS descriptors into v words (seeded k-means++).

    The soft-assignment variance is twice the median of the pairwise
    distances between cluster centers.
    """
    if v < 1:
        raise ValueError("vocabulary size must be >= 1")
    pooled = np.vstack([f.values for f in fields])
    if len(pooled) < v:
        raise DescriptorError(f"only {len(pooled)} descriptors pooled, need >= {v}")
    if len(np.unique(pooled, axis=0)) < v:
        raise DescriptorError(f"fewer than {v} distinct descriptors to cluster")
    rng = np.random.default_rng(seed)
    centers = _lloyd(pooled, _kmeans_pp(pooled, v, rng))
    order = np.lexsort(centers.T[::-1])  # canonical order for reproducible files
    centers = centers[order]
    if v > 1:
        sigma2 = 2.0 * float(np.median(pdist(centers)))
    else:
        sigma2 = 1.0  # single word: assignment is trivially [1]
    return Vocabulary(centers, sigma2)


def soft_assignments(vocab: Vocabulary, descriptors: np.ndarray) -> np.ndarray:
    """Row-stochastic soft quantization of (N, n) descriptors."""
    d2 = cdist(np.atleast_2d(descriptors), vocab.centers, "sqeuclidean")
    logits = -d2 / (2.0 * vocab.soft_sigma2)
    logits -= logits.max(axis=1, keepdims=True)
    theta = np.exp(logits)
    return theta / theta.sum(axis=1, keepdims=True)


def soft_quantize(vocab: Vocabulary, descriptor: np.ndarray) -> np.ndarray:
    """Soft assignment of a single descriptor: theta_k ~ exp(-d_k^2 / (2 sigma^2))."""
    descriptor = np.asarray(descriptor, dtype=np.float64)
    if descriptor.ndim != 1 or descriptor.shape[0] != vocab.centers.shape[1]:
        raise DescriptorError(
            f"descriptor has shape {descriptor.shape}, vocabulary expects "
            f"({vocab.centers.shape[1]},)"
        )
    return soft_assignments(vocab, descriptor[None, :])[0]


def bag_of_features(
    vocab: Vocabulary,
    field: HksDescriptorField,
    areas: VertexAreas,
    area_weighted: bool = True,
) -> BagOfFeatures:
    """Pool per-vertex soft assignments into one histogram.

    Area weighting makes the descriptor invariant to resampling density;
    ``area_weighted=False`` falls back to plain counting.
    """
    if field.n_vertices != len(areas.s):
        raise DescriptorError("field and areas disagree on vertex count")
    theta = soft_assignments(vocab, field.values)
    w = areas.s if area_weighted else np.ones(field.n_vertices)
    pooled = w @ theta
    return BagOfFeatures(pooled / pooled.sum(), eta=field.eta)


def bof_distance_single(b1: BagOfFeatures, b2: BagOfFeatures) -> float:
    """L1 distance between two bags of features."""
    if b1.weights.shape != b2.weights.shape:
        raise DescriptorError("BoF vectors have different vocabulary sizes")
    return float(np.abs(b1.weights - b2.weights).sum())


def bof_distance_multiscale(
    bofs_x: dict[float, BagOfFeatures],
    bofs_y: dict[float, BagOfFeatures],
    etas,
) -> float:
    """Squared-L1 combination over eta: weight 1 at eta=0, eta otherwise."""
    total = 0.0
    for e in etas:
        if e not in bofs_x or e not in bofs_y:
            raise DescriptorError(f"missing BoF for eta={e}")
        gap = bof_distance_single(bofs_x[e], bofs_y[e])
        total += (1.0 if e == 0 else float(e)) * gap**2
    return total


# ------------------------------------------------------ distance distributions


def distance_distribution_from_condensed(
    dists: np.ndarray, sample, areas: VertexAreas, bins: int
) -> DistanceDistribution:
    """Area-weighted CDF from precomputed condensed pair distances.

    ``dists`` follows scipy's condensed order over the unordered pairs of
    ``sample``; the weight of pair (i, j) is s_i * s_j.
    """
    sample = np.asarray(sample, dtype=np.int64)
    m = len(sample)
    if m < 2:
        raise ValueError("need at least two sampled vertices")
    if len(dists) != m * (m - 1) // 2:
        raise ValueError("condensed distance length does not match sample size")
    iu, ju = np.triu_indices(m, k=1)
    weights = areas.s[sample[iu]] * areas.s[sample[ju]]

    dmax = float(dists.max(initial=0.0))
    if dmax <= 0.0:  # degenerate: every sampled pair coincides
        return DistanceDistribution(np.array([0.0, 1.0]), np.array([1.0]))
    edges = np.linspace(0.0, dmax, bins + 1)
    hist, _ = np.histogram(dists, bins=edges, weights=weights)
    cdf = np.cumsum(hist)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    return DistanceDistribution(edges, cdf)


def distance_distribution(
    dist_fn, sample, areas: VertexAreas, bins: int = 64
) -> DistanceDistribution:
    """CDF of ``dist_fn(i, j)`` over all unordered pairs of the sample."""
    sample = np.asarray(sample, dtype=np.int64)
    m = len(sample)
    if m < 2:
        raise ValueError("need at least two sampled vertices")
    dists = np.array(
        [dist_fn(int(sample[a]), int(sample[b])) for a in range(m) for b in range(a + 1, m)]
    )
    return distance_distribution_from_condensed(dists, sample, areas, bins)


def distribution_distance(f1: DistanceDistribution, f2: DistanceDistribution) -> float:
    """Normalized L1 distance between two CDFs on their union grid."""
    grid = np.union1d(f1.bin_edges, f2.bin_edges)
    span = grid[-1] - grid[0]
    if span <= 0:
        return 0.0
    lengths = np.diff(grid)
    v1 = f1.value_at(grid[:-1])
    v2 = f2.value_at(grid[:-1])
    return float(np.sum(np.abs(v1 - v2) * lengths) / span)


# -------------------------------------------------------------- color histogram


def color_histogram(
    mesh: TexturedMesh, areas: VertexAreas, bins_per_axis: int = 8
) -> ColorHistogram:
    """Area-weighted histogram of vertex colors on a fixed Lab grid."""
    if not mesh.has_colors:
        raise DescriptorError("color histogram requires a colored mesh")
    lab = srgb_to_lab(mesh.colors) if mesh.colorspace == COLORSPACE_SRGB else mesh.colors
    b = int(bins_per_axis)
    if b < 1:
        raise ValueError("bins_per_axis must be >= 1")
    flat_idx = np.zeros(mesh.n_vertices, dtype=np.int64)
    for axis, (lo, hi) in enumerate(LAB_RANGES):
        width = (hi - lo) / b
        idx = np.clip(((lab[:, axis] - lo) / width).astype(np.int64), 0, b - 1)
        flat_idx = flat_idx * b + idx
    weights = np.zeros(b**3)
    np.add.at(weights, flat_idx, areas.s)
    return ColorHistogram((b, b, b), weights / weights.sum())


def color_histogram_distance(h1: ColorHistogram, h2: ColorHistogram) -> float:
    if h1.bins != h2.bins:
        raise DescriptorError("histograms use different grids")
    return float(np.abs(h1.weights - h2.weights).sum())


# ------------------------------------------------------------------- caching


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def vocabulary_to_dict(vocab: Vocabulary) -> dict:
    return {
        "type": "vocabulary",
        "centers": [[float(x) for x in row] for row in vocab.centers],
        "soft_sigma2": float(vocab.soft_sigma2),
    }


def vocabulary_hash(vocab: Vocabulary) -> str:
    return hashlib.sha256(_canonical_json(vocabulary_to_dict(vocab)).encode()).hexdigest()


def save_vocabulary(vocab: Vocabulary, path, params: dict | None = None) -> None:
    doc = vocabulary_to_dict(vocab)
    doc["params"] = params or {}
    Path(path).write_text(_canonical_json(doc) + "\n", encoding="utf-8")


def load_vocabulary(path) -> Vocabulary:
    path = Path(path)
    if not path.exists():
        raise CacheError(f"vocabulary file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        return Vocabulary(np.asarray(doc["centers"]), float(doc["soft_sigma2"]))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CacheError(f"{path}: corrupt vocabulary file") from exc


def save_vocabulary_set(vocabs: dict, path, params: dict | None = None) -> None:
    """Persist eta -> Vocabulary as one JSON file."""
    doc = {
        "type": "vocabulary_set",
        "entries": [
            {"eta": float(e), "vocabulary": vocabulary_to_dict(v)}
            for e, v in sorted(vocabs.items())
        ],
        "params": params or {},
    }
    Path(path).write_text(_canonical_json(doc) + "\n", encoding="utf-8")


def load_vocabulary_set(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise CacheError(f"vocabulary file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        if doc.get("type") == "vocabulary":  # single-vocab file doubles as eta=0 set
            return {0.0: Vocabulary(np.asarray(doc["centers"]), float(doc["soft_sigma2"]))}
        return {
            float(e["eta"]): Vocabulary(
                np.asarray(e["vocabulary"]["centers"]),
                float(e["vocabulary"]["soft_sigma2"]),
            )
            for e in doc["entries"]
        }
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CacheError(f"{path}: corrupt vocabulary file") from exc


def descriptor_to_dict(desc) -> dict:
    """JSON-serializable payload for any supported descriptor."""
    if isinstance(desc, BagOfFeatures):
        return {"type": "bof", "eta": desc.eta, "weights": desc.weights.tolist()}
    if isinstance(desc, dict):  # eta -> BagOfFeatures
        return {
            "type": "bof_multiscale",
            "entries": [
                {"eta": float(e), "weights": b.weights.tolist()}
                for e, b in sorted(desc.items())
            ],
        }
    if isinstance(desc, ColorHistogram):
        return {"type": "color_hist", "bins": list(desc.bins), "weights": desc.weights.tolist()}
    if isinstance(desc, DistanceDistribution):
        return {
            "type": "dist_distribution",
            "bin_edges": desc.bin_edges.tolist(),
            "cdf": desc.cdf.tolist(),
        }
    raise DescriptorError(f"cannot serialize descriptor of type {type(desc).__name__}")


def descriptor_from_dict(doc: dict):
    kind = doc.get("type")
    if kind == "bof":
        return BagOfFeatures(np.asarray(doc["weights"]), eta=float(doc["eta"]))
    if kind == "bof_multiscale":
        return {
            float(e["eta"]): BagOfFeatures(np.asarray(e["weights"]), eta=float(e["eta"]))
            for e in doc["entries"]
        }
    if kind == "color_hist":
        return ColorHistogram(tuple(doc["bins"]), np.asarray(doc["weights"]))
    if kind == "dist_distribution":
        return DistanceDistribution(np.asarray(doc["bin_edges"]), np.asarray(doc["cdf"]))
    raise CacheError(f"unknown descriptor type {kind!r}")


def save_descriptor(desc, path, meta: dict | None = None) -> None:
    doc = descriptor_to_dict(desc)
    doc["meta"] = meta or {}
    Path(path).write_text(_canonical_json(doc) + "\n", encoding="utf-8")


def load_descriptor(path, with_meta: bool = False):
    path = Path(path)
    if not path.exists():
        raise CacheError(f"descriptor file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        desc = descriptor_from_dict(doc)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CacheError(f"{path}: corrupt descriptor file") from exc
    return (desc, doc.get("meta", {})) if with_meta else desc
