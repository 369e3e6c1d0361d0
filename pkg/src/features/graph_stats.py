# src/features/graph_stats.py

"""
Subgraph and degree statistics of generated or observed graphs.

2-stars and triangles are the simplest subgraphs whose frequency moves with
the sign of the latent correlations; the degree deviation is the quantity the
concentration thresholds bound.
"""

import numpy as np
from scipy import sparse

from src.simulation.generate_network import NodeParams, expected_degrees
from src.utils.errors import InvalidInputError

DIRECT_TRIANGLE_LIMIT = 500


class GraphStatsCalculator:
    """
    Calculate structure features of one undirected graph.
    """

    def __init__(self, graph):
        """
        Parameters:
        -----------
        graph : Graph
        """
        self.graph = graph
        self.degrees = np.asarray(graph.degrees, dtype=np.int64)
        self.n = graph.n

    def calculate_all_features(self):
        """
        Returns:
        --------
        dict : n, edges, density, degree range/mean, two_stars, triangles, transitivity
        """
        features = {}
        features.update(self._degree_features())
        features.update(self._subgraph_features())
        return features

    def _degree_features(self):
        pairs = self.n * (self.n - 1) // 2
        edges = int(self.degrees.sum() // 2)
        return {
            'n': self.n,
            'edges': edges,
            'density': edges / pairs,
            'min_degree': int(self.degrees.min()),
            'max_degree': int(self.degrees.max()),
            'mean_degree': float(self.degrees.mean()),
        }

    def _subgraph_features(self):
        two_stars = self._two_stars()
        triangles = self._triangles()
        return {
            'two_stars': two_stars,
            'triangles': triangles,
            'transitivity': 3 * triangles / two_stars if two_stars > 0 else 0.0,
        }

    def _two_stars(self):
        """sum_i C(d_i, 2)"""
        d = self.degrees
        return int(np.sum(d * (d - 1) // 2))

    def _triangles(self):
        if self.n <= DIRECT_TRIANGLE_LIMIT:
            return self._triangles_by_edges()
        return self._triangles_by_intersection()

    def _triangles_by_edges(self):
        """For each edge i < j, count third nodes k > j joined to both."""
        A = self.graph.adjacency_matrix().astype(bool)
        total = 0
        for i, j in self.graph.edges():
            total += int(np.count_nonzero(A[i, j + 1:] & A[j, j + 1:]))
        return total

    def _triangles_by_intersection(self):
        """sum over edges of common neighbours, via sparse products (each triangle counted 6 times)."""
        A = sparse.csr_matrix(self.graph.adjacency_matrix())
        return int((A @ A).multiply(A).sum() // 6)


# ==================== CONVENIENCE FUNCTIONS ====================

def count_two_stars(graph):
    """Number of 2-stars, sum_i C(d_i, 2)."""
    return GraphStatsCalculator(graph)._two_stars()


def count_triangles(graph):
    """Number of node triples with all three edges present."""
    return GraphStatsCalculator(graph)._triangles()


def degree_deviation(graph, params):
    """
    max_i |d_i - sum_{j != i} Phi(alpha_i + alpha_j)|.

    Parameters:
    -----------
    graph : Graph
    params : NodeParams or array_like
    """
    if not isinstance(params, NodeParams):
        params = NodeParams(np.asarray(params, dtype=float))
    if params.n != graph.n:
        raise InvalidInputError(f"graph has {graph.n} nodes, parameters have {params.n}")
    return float(np.max(np.abs(graph.degrees - expected_degrees(params))))


def degree_summary(graph):
    """All features of one graph as a dict."""
    return GraphStatsCalculator(graph).calculate_all_features()
