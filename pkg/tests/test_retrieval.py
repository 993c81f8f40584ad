import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import heatfuse as hf
from heatfuse import retrieval as rt
from heatfuse.errors import RetrievalError


def _write_point_mesh(path, n):
    """Tiny valid mesh whose vertex count doubles as a label."""
    verts = [[float(i), 0.0, 0.0] for i in range(n)] + [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    mesh = hf.TexturedMesh(verts, [[len(verts) - 2, len(verts) - 1, 0]])
    hf.save_mesh(mesh, path)
    return str(path)


@pytest.fixture
def toy_manifest(tmp_path):
    nulls = tuple(
        rt.NullShape(f"null{i}", _write_point_mesh(tmp_path / f"n{i}.ply", i + 1))
        for i in range(3)
    )
    queries = (
        rt.Query("null1", _write_point_mesh(tmp_path / "q0.ply", 8), "hue", 3),
        rt.Query("null0", _write_point_mesh(tmp_path / "q1.ply", 9), "noise", 1),
    )
    return rt.BenchmarkManifest(nulls, queries)


class TestManifest:
    def test_unknown_class_rejected(self):
        nulls = (rt.NullShape("a", "a.ply"),)
        with pytest.raises(RetrievalError, match="transform class"):
            rt.BenchmarkManifest(nulls, (rt.Query("a", "q.ply", "sepia", 1),))

    def test_strength_range(self):
        nulls = (rt.NullShape("a", "a.ply"),)
        with pytest.raises(RetrievalError, match="strength"):
            rt.BenchmarkManifest(nulls, (rt.Query("a", "q.ply", "hue", 6),))

    def test_orphan_query(self):
        nulls = (rt.NullShape("a", "a.ply"),)
        with pytest.raises(RetrievalError, match="not a null"):
            rt.BenchmarkManifest(nulls, (rt.Query("b", "q.ply", "hue", 1),))

    def test_duplicate_null(self):
        nulls = (rt.NullShape("a", "a.ply"), rt.NullShape("a", "b.ply"))
        with pytest.raises(RetrievalError, match="duplicate"):
            rt.BenchmarkManifest(nulls, ())

    def test_save_load_roundtrip(self, tmp_path, toy_manifest):
        path = tmp_path / "manifest.json"
        rt.save_manifest(toy_manifest, path)
        loaded = rt.load_manifest(path)
        assert [n.shape_id for n in loaded.nulls] == ["null0", "null1", "null2"]
        assert loaded.queries[0].transform_class == "hue"
        assert all((tmp_path / f"n{i}.ply").exists() for i in range(3))
        # relative paths in the file, absolute after load
        doc = json.loads(path.read_text())
        assert doc["nulls"][0]["path"] == "n0.ply"
        assert loaded.nulls[0].path.startswith(str(tmp_path))


class TestRankQueries:
    def test_single_null(self, tmp_path):
        path = _write_point_mesh(tmp_path / "n.ply", 1)
        manifest = rt.BenchmarkManifest(
            (rt.NullShape("only", path),), (rt.Query("only", path, "hue", 1),)
        )
        ranks = rt.rank_queries(manifest, lambda m: 0.0, lambda a, b: abs(a - b))
        assert ranks == [["only"]]

    def test_identical_query_ranks_first(self, toy_manifest):
        # descriptor = vertex count; query q0 has 10 vertices, null1 has... none equal,
        # so instead give the exact-match metric on shape content hashes
        ranks = rt.rank_queries(
            toy_manifest,
            lambda m: m.n_vertices,
            lambda a, b: abs(a - b),
        )
        # q0 (10 verts) is nearest null2 (5 verts); q1 (11) also nearest null2
        assert ranks[0][0] == "null2"

    def test_hand_set_distances(self, toy_manifest):
        # null descriptors are vertex counts 3, 4, 5; hand-pick their distances
        table = {3: 0.2, 4: 0.1, 5: 0.3}

        def dist(qd, nd):
            return table[nd]

        ranks = rt.rank_queries(toy_manifest, lambda m: m.n_vertices, dist)
        # distance keyed by the null only: every query ranks (null1, null0, null2)
        for r in ranks:
            assert r == ["null1", "null0", "null2"]

    def test_tie_break_by_shape_id(self, toy_manifest):
        ranks = rt.rank_queries(toy_manifest, lambda m: 0.0, lambda a, b: 0.0)
        for r in ranks:
            assert r == ["null0", "null1", "null2"]

    def test_descriptor_failure_names_shape(self, toy_manifest):
        def bad_descriptor(mesh):
            raise RuntimeError("boom")

        with pytest.raises(RetrievalError, match="null0"):
            rt.rank_queries(toy_manifest, bad_descriptor, lambda a, b: 0.0)

    def test_monotone_transform_invariance(self, toy_manifest):
        def base(a, b):
            return abs(a - b)

        r1 = rt.rank_queries(toy_manifest, lambda m: m.n_vertices, base)
        r2 = rt.rank_queries(
            toy_manifest, lambda m: m.n_vertices, lambda a, b: np.expm1(base(a, b))
        )
        assert r1 == r2


class TestAveragePrecision:
    def test_relevant_first(self):
        assert rt.average_precision([1, 0, 0]) == 1.0

    def test_relevant_second(self):
        assert rt.average_precision([0, 1, 0]) == 0.5

    def test_two_relevant_reference(self):
        got = rt.average_precision([1, 0, 1, 0])
        assert abs(got - (1.0 + 2.0 / 3.0) / 2.0) < 1e-12

    def test_no_relevant(self):
        with pytest.raises(RetrievalError):
            rt.average_precision([0, 0])


def _manifest_with_ranks(tmp_path, specs):
    """specs: list of (class, strength, rank of the true null)."""
    n_nulls = 3
    nulls = tuple(
        rt.NullShape(f"null{i}", _write_point_mesh(tmp_path / f"nn{i}.ply", i + 1))
        for i in range(n_nulls)
    )
    queries, rankings = [], []
    for qi, (cls, s, rank) in enumerate(specs):
        truth = "null0"
        queries.append(
            rt.Query(truth, _write_point_mesh(tmp_path / f"qq{qi}.ply", qi + 1), cls, s)
        )
        others = [f"null{i}" for i in range(1, n_nulls)]
        ranked = others[: rank - 1] + [truth] + others[rank - 1 :]
        rankings.append(ranked)
    return rt.BenchmarkManifest(nulls, tuple(queries)), rankings


class TestEvaluate:
    def test_perfect_retrieval(self, tmp_path):
        manifest, rankings = _manifest_with_ranks(
            tmp_path, [("hue", s, 1) for s in range(1, 6)]
        )
        report = rt.evaluate(manifest, rankings)
        for s in rt.STRENGTHS:
            assert report.cells["hue"][s] == 100.0
        assert report.overall_map == 100.0

    def test_cumulative_strength_reference(self, tmp_path):
        # reciprocal ranks (1, 1, 1/2, 1, 1/3) by strength
        manifest, rankings = _manifest_with_ranks(
            tmp_path,
            [("hue", 1, 1), ("hue", 2, 1), ("hue", 3, 2), ("hue", 4, 1), ("hue", 5, 3)],
        )
        report = rt.evaluate(manifest, rankings)
        row = report.cells["hue"]
        expected = {1: 100.0, 2: 100.0, 3: 250.0 / 3.0, 4: 87.5, 5: 230.0 / 3.0}
        for s, val in expected.items():
            assert abs(row[s] - val) < 1e-9
        csv = rt.report_to_csv(report)
        assert "hue,100.00,100.00,83.33,87.50,76.67" in csv

    def test_classes_partitioned(self, tmp_path):
        manifest, rankings = _manifest_with_ranks(
            tmp_path, [("hue", 1, 1), ("noise", 1, 2)]
        )
        report = rt.evaluate(manifest, rankings)
        assert report.cells["hue"][1] == 100.0
        assert report.cells["noise"][1] == 50.0

    def test_empty_cells_absent(self, tmp_path):
        manifest, rankings = _manifest_with_ranks(tmp_path, [("hue", 3, 1)])
        report = rt.evaluate(manifest, rankings)
        assert report.cells["hue"][1] is None
        assert report.cells["hue"][3] == 100.0
        csv = rt.report_to_csv(report)
        assert csv.splitlines()[1].startswith("hue,,,100.00")

    def test_map_equals_mean_reciprocal_rank(self, tmp_path):
        rng = np.random.default_rng(8)
        specs = [("mixed", int(rng.integers(1, 6)), int(rng.integers(1, 4))) for _ in range(20)]
        manifest, rankings = _manifest_with_ranks(tmp_path, specs)
        report = rt.evaluate(manifest, rankings)
        mrr = np.mean([1.0 / r for _, _, r in specs])
        assert abs(report.overall_map - 100.0 * mrr) < 1e-12

    def test_deterministic(self, tmp_path):
        manifest, rankings = _manifest_with_ranks(tmp_path, [("hue", 1, 2)])
        r1 = rt.evaluate(manifest, rankings)
        r2 = rt.evaluate(manifest, rankings)
        assert rt.report_to_csv(r1) == rt.report_to_csv(r2)
        assert json.dumps(rt.report_to_dict(r1), sort_keys=True) == json.dumps(
            rt.report_to_dict(r2), sort_keys=True
        )

    def test_pr_curves_shape(self, tmp_path):
        manifest, rankings = _manifest_with_ranks(tmp_path, [("hue", 1, 2), ("hue", 2, 1)])
        report = rt.evaluate(manifest, rankings)
        curve = report.pr_curves["hue"]
        assert curve["recall"][-1] == 1.0
        assert curve["precision"][0] == 0.5  # one of two queries hits at rank 1

    def test_write_report(self, tmp_path):
        manifest, rankings = _manifest_with_ranks(tmp_path, [("hue", 1, 1)])
        report = rt.evaluate(manifest, rankings)
        csv_path, json_path = rt.write_report(report, tmp_path / "out")
        assert csv_path.read_text().startswith("transform,1,<=2,<=3,<=4,<=5")
        doc = json.loads(json_path.read_text())
        assert doc["overall_map"] == 100.0


@settings(deadline=None, max_examples=40)
@given(st.lists(st.integers(1, 5), min_size=1, max_size=12))
def test_single_relevant_ap_is_reciprocal_rank(ranks):
    for rank in ranks:
        flags = [0] * (rank - 1) + [1] + [0] * 2
        assert abs(rt.average_precision(flags) - 1.0 / rank) < 1e-12
