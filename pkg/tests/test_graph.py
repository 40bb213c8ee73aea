import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from residentid.errors import IsolatedNodeError, IsolatedNodeWarning
from residentid.geometry import AccessibilityGraph
from residentid.graph import (
    AccessProbabilityGraph,
    apg_from_ag,
    load_apg_json,
    save_apg_json,
    transition_row,
)

EXPECTED_4DP = np.array(
    [
        [0.5, 0.5, 0.0, 0.0],
        [0.2308, 0.5, 0.1538, 0.1154],
        [0.0, 0.2, 0.5, 0.3],
        [0.0, 0.1667, 0.3333, 0.5],
    ]
)


class TestApgFromAg:
    def test_worked_example_half_weight(self, paper_ag):
        apg = apg_from_ag(paper_ag, 0.5)
        assert np.allclose(apg.trans, EXPECTED_4DP, atol=5e-5)
        # the printed 2-dp rounding
        assert np.allclose(np.round(apg.trans, 2)[1], [0.23, 0.5, 0.15, 0.12])

    def test_intermediate_row_after_first_normalization(self, paper_ag):
        apg = apg_from_ag(paper_ag, 0.0)
        assert np.allclose(np.round(apg.trans[1], 2), [0.46, 0.0, 0.31, 0.23])

    def test_zero_weight_skips_self_loops(self, paper_ag):
        apg = apg_from_ag(paper_ag, 0.0)
        assert np.all(np.diag(apg.trans) == 0)
        assert np.allclose(apg.trans.sum(axis=1), 1.0)

    def test_two_node_graph_any_distance(self):
        for d in (0.5, 1.0, 42.0):
            ag = AccessibilityGraph(["a", "b"], np.array([[0, d], [d, 0]], dtype=float))
            apg = apg_from_ag(ag, 0.5)
            assert np.allclose(apg.trans, [[0.5, 0.5], [0.5, 0.5]])

    def test_weight_out_of_range(self, paper_ag):
        with pytest.raises(ValueError):
            apg_from_ag(paper_ag, 1.0)
        with pytest.raises(ValueError):
            apg_from_ag(paper_ag, -0.1)

    def test_isolated_node_with_weight_gets_self_loop(self):
        dist = np.zeros((3, 3))
        dist[0, 1] = dist[1, 0] = 2.0
        ag = AccessibilityGraph(["a", "b", "c"], dist)
        with pytest.warns(IsolatedNodeWarning):
            apg = apg_from_ag(ag, 0.5)
        assert apg.trans[2, 2] == pytest.approx(1.0)
        assert np.allclose(apg.trans.sum(axis=1), 1.0)

    def test_isolated_node_with_zero_weight_is_error(self):
        dist = np.zeros((3, 3))
        dist[0, 1] = dist[1, 0] = 2.0
        ag = AccessibilityGraph(["a", "b", "c"], dist)
        with pytest.raises(IsolatedNodeError):
            apg_from_ag(ag, 0.0)

    def test_diagonal_equals_weight(self, paper_ag):
        for w in (0.1, 0.25, 0.5, 0.9):
            apg = apg_from_ag(paper_ag, w)
            assert np.allclose(np.diag(apg.trans), w)

    @given(
        n=st.integers(min_value=2, max_value=6),
        w=st.floats(min_value=0.0, max_value=0.95),
        seed=st.integers(min_value=0, max_value=10 ** 6),
    )
    @settings(max_examples=60, deadline=None)
    def test_row_stochastic_and_sparsity(self, n, w, seed):
        rng = np.random.default_rng(seed)
        dist = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.7:
                    dist[i, j] = dist[j, i] = rng.uniform(0.1, 20.0)
        if not all(dist[i].sum() > 0 for i in range(n)):
            return
        ag = AccessibilityGraph([f"n{i}" for i in range(n)], dist)
        apg = apg_from_ag(ag, w)
        assert np.all(np.abs(apg.trans.sum(axis=1) - 1.0) < 1e-9)
        off = ~np.eye(n, dtype=bool)
        assert np.all((apg.trans[off] > 0) == (dist[off] > 0))

    def test_shorter_edge_gets_larger_probability(self):
        dist = np.array(
            [
                [0, 1, 5, 9],
                [1, 0, 0, 0],
                [5, 0, 0, 0],
                [9, 0, 0, 0],
            ],
            dtype=float,
        )
        ag = AccessibilityGraph(list("abcd"), dist)
        apg = apg_from_ag(ag, 0.5)
        row = apg.trans[0]
        assert row[1] > row[2] > row[3]

    def test_distance_scaling_preserves_rank_order(self):
        rng = np.random.default_rng(3)
        dist = np.zeros((5, 5))
        for i in range(5):
            for j in range(i + 1, 5):
                dist[i, j] = dist[j, i] = rng.uniform(0.5, 10)
        ag1 = AccessibilityGraph([f"n{i}" for i in range(5)], dist)
        ag2 = AccessibilityGraph([f"n{i}" for i in range(5)], dist * 7.5)
        t1 = apg_from_ag(ag1, 0.5).trans
        t2 = apg_from_ag(ag2, 0.5).trans
        off = ~np.eye(5, dtype=bool)
        for i in range(5):
            order1 = np.argsort(-t1[i][off[i]])
            order2 = np.argsort(-t2[i][off[i]])
            assert np.array_equal(order1, order2)


class TestTransitionRow:
    def test_paper_first_row(self, paper_ag):
        apg = apg_from_ag(paper_ag, 0.5)
        assert np.allclose(transition_row(apg, "1"), [0.5, 0.5, 0.0, 0.0])

    def test_row_length_and_sum(self, paper_ag):
        apg = apg_from_ag(paper_ag, 0.5)
        for nid in apg.node_ids:
            row = transition_row(apg, nid)
            assert row.shape == (4,)
            assert row.sum() == pytest.approx(1.0, abs=1e-9)

    def test_unknown_node(self, paper_ag):
        apg = apg_from_ag(paper_ag, 0.5)
        with pytest.raises(KeyError):
            transition_row(apg, "nope")

    def test_isolated_node_row_is_self_loop(self):
        dist = np.zeros((3, 3))
        dist[0, 1] = dist[1, 0] = 1.0
        ag = AccessibilityGraph(["a", "b", "c"], dist)
        with pytest.warns(IsolatedNodeWarning):
            apg = apg_from_ag(ag, 0.5)
        assert np.allclose(transition_row(apg, "c"), [0.0, 0.0, 1.0])

    def test_returns_copy(self, paper_ag):
        apg = apg_from_ag(paper_ag, 0.5)
        row = transition_row(apg, "1")
        row[0] = 99.0
        assert apg.trans[0, 0] == pytest.approx(0.5)


class TestApgIO:
    def test_json_round_trip(self, tmp_path, paper_ag):
        apg = apg_from_ag(paper_ag, 0.5)
        path = tmp_path / "apg.json"
        save_apg_json(apg, path)
        loaded = load_apg_json(path)
        assert loaded.node_ids == apg.node_ids
        assert loaded.self_weight == apg.self_weight
        assert np.array_equal(loaded.trans, apg.trans)

    def test_invalid_rows_rejected(self):
        with pytest.raises(ValueError):
            AccessProbabilityGraph(["a", "b"], np.array([[0.5, 0.4], [0.5, 0.5]]), 0.5)
