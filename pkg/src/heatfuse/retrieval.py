"""Retrieval benchmark harness: manifests, ranking, mAP/precision-recall reports.

A benchmark manifest lists null shapes and transformed queries, each
query annotated with its ground-truth null, a transformation class, and
a strength level 1-5. Evaluation mirrors the usual robust-retrieval
layout: one mAP cell per (class, cumulative strength <= s) plus
precision/recall curves per class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import meshio
from .errors import RetrievalError

TRANSFORM_CLASSES = (
    "isometry_topology",
    "partiality",
    "contrast",
    "brightness",
    "hue",
    "saturation",
    "noise",
    "mixed",
)

# report row order follows the geometric / photometric / mixed grouping
_REPORT_ORDER = {name: i for i, name in enumerate(TRANSFORM_CLASSES)}
STRENGTHS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class NullShape:
    shape_id: str
    path: str


@dataclass(frozen=True)
class Query:
    shape_id: str  # ground-truth null id
    path: str
    transform_class: str
    strength: int


@dataclass(frozen=True)
class BenchmarkManifest:
    nulls: tuple
    queries: tuple

    def __post_init__(self):
        object.__setattr__(self, "nulls", tuple(self.nulls))
        object.__setattr__(self, "queries", tuple(self.queries))
        ids = [n.shape_id for n in self.nulls]
        if len(set(ids)) != len(ids):
            raise RetrievalError("duplicate null shape_id in manifest")
        known = set(ids)
        for q in self.queries:
            if q.shape_id not in known:
                raise RetrievalError(
                    f"query ground truth {q.shape_id!r} is not a null shape"
                )
            if q.transform_class not in TRANSFORM_CLASSES:
                raise RetrievalError(f"unknown transform class {q.transform_class!r}")
            if not 1 <= int(q.strength) <= 5:
                raise RetrievalError(f"strength must be in 1..5, got {q.strength}")

    @property
    def classes_present(self) -> tuple:
        seen = {q.transform_class for q in self.queries}
        return tuple(sorted(seen, key=_REPORT_ORDER.get))


def load_manifest(path) -> BenchmarkManifest:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent

    def resolve(p):
        p = Path(p)
        return str(p if p.is_absolute() else base / p)

    nulls = [NullShape(e["shape_id"], resolve(e["path"])) for e in doc["nulls"]]
    queries = [
        Query(e["shape_id"], resolve(e["path"]), e["transform_class"], int(e["strength"]))
        for e in doc["queries"]
    ]
    return BenchmarkManifest(tuple(nulls), tuple(queries))


def save_manifest(manifest: BenchmarkManifest, path) -> None:
    path = Path(path)
    base = path.parent.resolve()

    def relativize(p):
        p = Path(p).resolve()
        try:
            return p.relative_to(base).as_posix()
        except ValueError:
            return str(p)

    doc = {
        "nulls": [{"shape_id": n.shape_id, "path": relativize(n.path)} for n in manifest.nulls],
        "queries": [
            {
                "shape_id": q.shape_id,
                "path": relativize(q.path),
                "transform_class": q.transform_class,
                "strength": q.strength,
            }
            for q in manifest.queries
        ],
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ------------------------------------------------------------------- ranking


def rank_queries(manifest: BenchmarkManifest, descriptor_fn, distance_fn) -> list[list[str]]:
    """Rank the null set against every query by ascending descriptor distance.

    ``descriptor_fn`` maps a loaded TexturedMesh to a descriptor and
    ``distance_fn`` compares two descriptors. Ties break on shape_id so
    rankings are deterministic. Any failure aborts naming the shape.
    """

    def describe(shape_id, path):
        try:
            return descriptor_fn(meshio.load_mesh(path))
        except Exception as exc:
            raise RetrievalError(f"descriptor failed for shape {shape_id!r} ({path}): {exc}") from exc

    null_desc = [(n.shape_id, describe(n.shape_id, n.path)) for n in manifest.nulls]

    rankings = []
    for q in manifest.queries:
        qd = describe(f"query:{q.path}", q.path)
        scored = sorted(
            ((float(distance_fn(qd, nd)), sid) for sid, nd in null_desc),
            key=lambda pair: (pair[0], pair[1]),
        )
        rankings.append([sid for _, sid in scored])
    return rankings


def average_precision(relevance) -> float:
    """AP = (1/R) * sum of precision at each relevant rank."""
    rel = np.asarray(relevance, dtype=bool)
    r_total = int(rel.sum())
    if r_total == 0:
        raise RetrievalError("ranking contains no relevant item; AP undefined")
    ranks = np.flatnonzero(rel) + 1
    hits = np.arange(1, r_total + 1)
    return float(np.mean(hits / ranks))


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class EvalReport:
    """mAP (%) per (class, strength cutoff) plus per-class precision/recall."""

    classes: tuple
    cells: dict  # class -> {s: float | None}
    overall_map: float
    pr_curves: dict = field(default_factory=dict)  # class -> {"precision": [...], "recall": [...]}
    n_queries: int = 0
    n_nulls: int = 0


def evaluate(manifest: BenchmarkManifest, rankings: list[list[str]]) -> EvalReport:
    """Score rankings against the manifest ground truth.

    Each query has exactly one relevant null, so AP reduces to the
    reciprocal rank (checked internally). Cells without queries are
    reported as None, never zero.
    """
    if len(rankings) != len(manifest.queries):
        raise RetrievalError(
            f"{len(rankings)} rankings for {len(manifest.queries)} queries"
        )
    aps = np.empty(len(rankings))
    raw_ranks = np.empty(len(rankings), dtype=np.int64)
    for qi, (q, ranked) in enumerate(zip(manifest.queries, rankings)):
        if q.shape_id not in ranked:
            raise RetrievalError(f"ranking for query {q.path} omits its null {q.shape_id!r}")
        rank = ranked.index(q.shape_id) + 1
        ap = average_precision([sid == q.shape_id for sid in ranked])
        assert abs(ap - 1.0 / rank) < 1e-12, "single-relevant AP must equal reciprocal rank"
        aps[qi] = ap
        raw_ranks[qi] = rank

    classes = manifest.classes_present
    strengths = np.array([q.strength for q in manifest.queries])
    labels = np.array([q.transform_class for q in manifest.queries])

    cells = {}
    for cls in classes:
        row = {}
        for s in STRENGTHS:
            mask = (labels == cls) & (strengths <= s)
            row[s] = float(100.0 * aps[mask].mean()) if mask.any() else None
        cells[cls] = row

    n_nulls = len(manifest.nulls)
    pr_curves = {}
    for cls in classes:
        mask = labels == cls
        ranks_c = raw_ranks[mask]
        rr = np.arange(1, n_nulls + 1)
        # single relevant item: recall@r is the hit rate, precision@r = hit rate / r
        hits_at = (ranks_c[None, :] <= rr[:, None]).mean(axis=1)
        pr_curves[cls] = {
            "rank": rr.tolist(),
            "recall": hits_at.tolist(),
            "precision": (hits_at / rr).tolist(),
        }

    return EvalReport(
        classes=classes,
        cells=cells,
        overall_map=float(100.0 * aps.mean()) if len(aps) else float("nan"),
        pr_curves=pr_curves,
        n_queries=len(manifest.queries),
        n_nulls=n_nulls,
    )


# ----------------------------------------------------------------- reporting


def report_to_csv(report: EvalReport) -> str:
    """Tables-style CSV: one row per class, cumulative-strength columns."""
    lines = ["transform,1,<=2,<=3,<=4,<=5"]
    for cls in report.classes:
        vals = [
            f"{report.cells[cls][s]:.2f}" if report.cells[cls][s] is not None else ""
            for s in STRENGTHS
        ]
        lines.append(",".join([cls] + vals))
    return "\n".join(lines) + "\n"


def report_to_dict(report: EvalReport) -> dict:
    return {
        "overall_map": report.overall_map,
        "n_queries": report.n_queries,
        "n_nulls": report.n_nulls,
        "cells": {
            cls: {str(s): report.cells[cls][s] for s in STRENGTHS}
            for cls in report.classes
        },
        "pr_curves": report.pr_curves,
    }


def write_report(report: EvalReport, out_dir) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "report.csv"
    json_path = out_dir / "report.json"
    csv_path.write_text(report_to_csv(report), encoding="utf-8")
    json_path.write_text(
        json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return csv_path, json_path
