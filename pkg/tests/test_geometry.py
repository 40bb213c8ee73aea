import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import near_degenerate, sampling_oracle_intersects
from residentid.errors import DataError, DisconnectedGraphWarning
from residentid.geometry import (
    AccessibilityGraph,
    LayoutMap,
    Point,
    Segment,
    build_graph,
    complete_graph_prune,
    euclidean,
    load_layout,
    manual_edge,
    on_segment,
    save_layout,
    segments_intersect,
)


def seg(x1, y1, x2, y2):
    return Segment(Point((x1, y1)), Point((x2, y2)))


class TestSegmentsIntersect:
    def test_crossing_diagonals(self):
        assert segments_intersect(seg(0, 0, 2, 2), seg(0, 2, 2, 0))

    def test_collinear_disjoint(self):
        assert not segments_intersect(seg(0, 0, 1, 1), seg(2, 2, 3, 3))

    def test_collinear_overlap(self):
        assert segments_intersect(seg(0, 0, 4, 0), seg(2, 0, 6, 0))

    def test_endpoint_touching_interior(self):
        assert segments_intersect(seg(0, 0, 2, 0), seg(1, 0, 1, 5))

    def test_parallel_disjoint(self):
        assert not segments_intersect(seg(0, 0, 1, 0), seg(0, 1, 1, 1))

    def test_shared_endpoint_counts(self):
        assert segments_intersect(seg(0, 0, 1, 1), seg(1, 1, 2, 0))

    def test_dimension_mismatch(self):
        three_d = Segment(Point((0, 0, 0)), Point((1, 1, 1)))
        with pytest.raises(DataError):
            segments_intersect(seg(0, 0, 1, 1), three_d)

    @given(
        st.lists(st.integers(min_value=-50, max_value=50), min_size=8, max_size=8)
    )
    def test_symmetry(self, coords):
        x1, y1, x2, y2, x3, y3, x4, y4 = coords
        if (x1, y1) == (x2, y2) or (x3, y3) == (x4, y4):
            return
        a = seg(x1, y1, x2, y2)
        b = seg(x3, y3, x4, y4)
        expected = segments_intersect(a, b)
        assert segments_intersect(b, a) == expected
        assert segments_intersect(seg(x2, y2, x1, y1), b) == expected
        assert segments_intersect(a, seg(x4, y4, x3, y3)) == expected

    def test_agrees_with_sampling_oracle(self):
        rng = np.random.default_rng(1234)
        checked = 0
        for _ in range(2000):
            if rng.random() < 0.5:
                pts = rng.uniform(0, 10, size=8)
            else:
                # force a likely crossing through a shared interior point
                center = rng.uniform(2, 8, size=2)
                d1 = rng.uniform(-2, 2, size=2)
                d2 = rng.uniform(-2, 2, size=2)
                pts = np.concatenate(
                    [center - d1, center + d1 * rng.uniform(0.5, 1.5),
                     center - d2, center + d2 * rng.uniform(0.5, 1.5)]
                )
            try:
                l1 = seg(pts[0], pts[1], pts[2], pts[3])
                l2 = seg(pts[4], pts[5], pts[6], pts[7])
            except DataError:
                continue
            ours = segments_intersect(l1, l2)
            oracle = sampling_oracle_intersects(l1, l2)
            if ours != oracle:
                assert near_degenerate(l1, l2), (
                    f"disagreement on non-degenerate pair: {l1} vs {l2} "
                    f"(ours={ours}, oracle={oracle})"
                )
            checked += 1
        assert checked > 1500


class TestOnSegment:
    def test_interior_point(self):
        assert on_segment(seg(0, 0, 4, 4), Point((2, 2)))

    def test_outside_bounding_box(self):
        assert not on_segment(seg(0, 0, 4, 4), Point((5, 5)))

    def test_endpoint_counts(self):
        assert on_segment(seg(0, 0, 4, 4), Point((0, 0)))

    def test_multidimensional_check(self):
        l = Segment(Point((0, 0, 0)), Point((4, 4, 4)))
        assert on_segment(l, Point((2, 2, 2)))
        assert not on_segment(l, Point((2, 2, 9)))


class TestCompleteGraphPrune:
    def test_square_prunes_both_diagonals(self, square_layout):
        graph = complete_graph_prune(square_layout)
        kept = {frozenset(e[:2]) for e in graph.edges()}
        assert kept == {
            frozenset({"M1", "M2"}),
            frozenset({"M2", "M3"}),
            frozenset({"M3", "M4"}),
            frozenset({"M4", "M1"}),
        }
        assert not graph.has_edge("M1", "M3")
        assert not graph.has_edge("M2", "M4")

    def test_far_obstacle_keeps_complete_graph(self):
        layout = LayoutMap(
            pois=[("A", Point((0, 0))), ("B", Point((1, 0))), ("C", Point((0, 1)))],
            obstacles=[seg(100, 100, 101, 101)],
        )
        graph = complete_graph_prune(layout)
        assert len(graph.edges()) == 3

    def test_bisected_pair_warns_disconnected(self):
        layout = LayoutMap(
            pois=[("A", Point((0, 0))), ("B", Point((10, 0)))],
            obstacles=[seg(5, -1, 5, 1)],
        )
        with pytest.warns(DisconnectedGraphWarning):
            graph = complete_graph_prune(layout)
        assert len(graph.edges()) == 0
        assert len(graph.components()) == 2

    def test_edge_weights_are_euclidean(self, square_layout):
        graph = complete_graph_prune(square_layout)
        assert graph.dist[graph.index("M1"), graph.index("M2")] == pytest.approx(10.0)

    def test_single_poi_rejected(self):
        layout = LayoutMap(pois=[("A", Point((0, 0)))])
        with pytest.raises(DataError):
            complete_graph_prune(layout)

    def test_dist_matrix_symmetric_zero_diagonal(self, square_layout):
        graph = complete_graph_prune(square_layout)
        assert np.array_equal(graph.dist, graph.dist.T)
        assert np.all(np.diag(graph.dist) == 0)

    def test_obstacle_union_monotonicity(self):
        # removing an obstacle never removes extra edges: pruning with all
        # obstacles equals intersecting the single-obstacle prunes
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(3, 7))
            pts = rng.integers(0, 20, size=(n, 2)).astype(float)
            if len({tuple(p) for p in pts}) != n:
                continue
            pois = [(f"P{i}", Point(tuple(pts[i]))) for i in range(n)]
            obstacles = []
            for _ in range(int(rng.integers(1, 4))):
                a = rng.integers(0, 20, size=2).astype(float)
                b = rng.integers(0, 20, size=2).astype(float)
                if tuple(a) != tuple(b):
                    obstacles.append(Segment(Point(tuple(a)), Point(tuple(b))))
            if not obstacles:
                continue

            def edge_set(obs):
                layout = LayoutMap(pois=pois, obstacles=obs)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", DisconnectedGraphWarning)
                    graph = complete_graph_prune(layout)
                return {frozenset(e[:2]) for e in graph.edges()}

            combined = edge_set(obstacles)
            expected = edge_set([])
            for obs in obstacles:
                expected &= edge_set([obs])
            assert combined == expected


class TestManualEdge:
    def test_add_diagonal(self, square_layout):
        graph = complete_graph_prune(square_layout)
        patched = manual_edge(graph, "M1", "M3")
        assert patched.dist[patched.index("M1"), patched.index("M3")] == pytest.approx(
            np.sqrt(200), abs=1e-9
        )
        # original untouched
        assert not graph.has_edge("M1", "M3")

    def test_idempotent(self, square_layout):
        graph = complete_graph_prune(square_layout)
        once = manual_edge(graph, "M1", "M3")
        twice = manual_edge(once, "M1", "M3")
        assert np.array_equal(once.dist, twice.dist)

    def test_self_edge_rejected(self, square_layout):
        graph = complete_graph_prune(square_layout)
        with pytest.raises(DataError):
            manual_edge(graph, "M1", "M1")

    def test_unknown_id_rejected(self, square_layout):
        graph = complete_graph_prune(square_layout)
        with pytest.raises(DataError):
            manual_edge(graph, "M1", "M9")

    def test_joins_components(self):
        layout = LayoutMap(
            pois=[("A", Point((0, 0))), ("B", Point((10, 0)))],
            obstacles=[seg(5, -1, 5, 1)],
            manual_edges=[("A", "B")],
        )
        with pytest.warns(DisconnectedGraphWarning):
            graph = build_graph(layout)
        assert graph.has_edge("A", "B")
        assert len(graph.components()) == 1


class TestLayoutIO:
    def test_yaml_round_trip(self, tmp_path, square_layout):
        path = tmp_path / "layout.yaml"
        save_layout(square_layout, path)
        loaded = load_layout(path)
        assert loaded.poi_ids() == square_layout.poi_ids()
        assert loaded.point("M3").coords == (10.0, 10.0)
        assert len(loaded.obstacles) == 1

    def test_poi_entry_styles(self, tmp_path):
        path = tmp_path / "layout.yaml"
        path.write_text(
            "pois:\n"
            "  - {id: A, x: 0, y: 0}\n"
            "  - [B, 3, 4]\n"
            "  - {id: C, coords: [6, 0]}\n"
            "obstacles:\n"
            "  - [1, -1, 1, 1]\n"
        )
        layout = load_layout(path)
        assert layout.poi_ids() == ["A", "B", "C"]
        assert euclidean(layout.point("A"), layout.point("B")) == pytest.approx(5.0)

    def test_duplicate_coordinates_rejected(self):
        with pytest.raises(DataError):
            LayoutMap(pois=[("A", Point((1, 1))), ("B", Point((1, 1)))])

    def test_duplicate_ids_rejected(self):
        with pytest.raises(DataError):
            LayoutMap(pois=[("A", Point((0, 0))), ("A", Point((1, 1)))])

    def test_unknown_manual_edge_rejected(self, tmp_path):
        path = tmp_path / "layout.yaml"
        path.write_text(
            "pois:\n  - [A, 0, 0]\n  - [B, 1, 0]\nmanual_edges:\n  - [A, Z]\n"
        )
        with pytest.raises(DataError):
            load_layout(path)

    def test_graph_json_round_trip(self, tmp_path, square_layout):
        from residentid.geometry import load_graph_json, save_graph_json

        graph = complete_graph_prune(square_layout)
        path = tmp_path / "graph.json"
        save_graph_json(graph, path)
        loaded = load_graph_json(path)
        assert loaded.node_ids == graph.node_ids
        assert np.allclose(loaded.dist, graph.dist)
        assert loaded.points is not None


class TestPointAndSegment:
    def test_point_needs_two_coords(self):
        with pytest.raises(DataError):
            Point((1.0,))

    def test_point_rejects_nan(self):
        with pytest.raises(DataError):
            Point((float("nan"), 0.0))

    def test_zero_length_segment_rejected(self):
        with pytest.raises(DataError):
            Segment(Point((1, 2)), Point((1, 2)))
