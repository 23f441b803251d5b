"""Always travel to the closest not-yet-visited node."""

import numpy as np


def select_next_node(current_node: int, destination_node: int, unvisited_nodes: set, distance_matrix: np.ndarray) -> int:
    return min(unvisited_nodes, key=lambda node: distance_matrix[current_node][node])
