import numpy as np
import pytest

from heurevo_worker.rollouts import RolloutError, rollout_obp, rollout_tsp

from .conftest import obp_doc, parse, tsp_doc


def best_fit(item_size, remaining_capacities):
    return item_size - remaining_capacities


def first_fit(item_size, remaining_capacities):
    return -np.arange(len(remaining_capacities), dtype=float)


def nearest(current_node, destination_node, unvisited_nodes, distance_matrix):
    return min(unvisited_nodes, key=lambda node: distance_matrix[current_node][node])


class TestObp:
    def test_no_pair_fits(self):
        assert rollout_obp(best_fit, parse(obp_doc([60, 60, 60]))) == 3.0

    def test_two_halves_share(self):
        assert rollout_obp(best_fit, parse(obp_doc([50, 50]))) == 1.0

    def test_empty_instance(self):
        assert rollout_obp(best_fit, parse(obp_doc([]))) == 0.0

    def test_tightest_bin_wins(self):
        # after 60 and 70 arrive, bins hold 40 and 30; a 30-item goes to the 30 bin
        bins = rollout_obp(best_fit, parse(obp_doc([60, 70, 30, 40])))
        assert bins == 2.0

    def test_tie_breaks_to_lowest_index(self):
        def constant(item_size, remaining_capacities):
            return np.zeros(len(remaining_capacities))

        # bins hold 40 and 30 when the tied 30-item arrives; taking the
        # lower-indexed bin (40) leaves no room for the final 40-item in
        # either bin, so a third bin opens
        assert rollout_obp(constant, parse(obp_doc([60, 70, 30, 40]))) == 3.0

    def test_first_fit_semantics(self):
        assert rollout_obp(first_fit, parse(obp_doc([60, 30, 35, 30]))) == 2.0

    def test_non_finite_feasible_score_raises(self):
        def bad(item_size, remaining_capacities):
            return np.full(len(remaining_capacities), np.inf)

        with pytest.raises(RolloutError):
            rollout_obp(bad, parse(obp_doc([10, 10])))

    def test_wrong_shape_raises(self):
        def bad(item_size, remaining_capacities):
            return np.zeros(1)

        with pytest.raises(RolloutError):
            rollout_obp(bad, parse(obp_doc([60, 60, 10])))


class TestTsp:
    def test_line_of_three(self):
        inst = parse(tsp_doc([(0, 0), (1, 0), (2, 0)]))
        assert rollout_tsp(nearest, inst) == pytest.approx(4.0)

    def test_two_nodes_forced(self):
        inst = parse(tsp_doc([(0, 0), (0, 3)]))
        assert rollout_tsp(nearest, inst) == pytest.approx(6.0)

    def test_visited_node_rejected(self):
        def stubborn(current, destination, unvisited, distances):
            return 0

        with pytest.raises(RolloutError):
            rollout_tsp(stubborn, parse(tsp_doc([(0, 0), (1, 0), (2, 0)])))

    def test_out_of_range_rejected(self):
        def wild(current, destination, unvisited, distances):
            return 99

        with pytest.raises(RolloutError):
            rollout_tsp(wild, parse(tsp_doc([(0, 0), (1, 0)])))
