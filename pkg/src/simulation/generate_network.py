# src/simulation/generate_network.py

"""
Graph generation from the probit network model.

An edge (i, j) is present when its index alpha_i + alpha_j (plus an optional
covariate term) is at least the latent variable u_(ij). One latent vector is
drawn per graph, so the dependence encoded in the covariance is kept.
"""

import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.spatial.distance import pdist

from src.distributions.normal import std_normal_cdf
from src.simulation.covariance import ValidatedCovariance, sample_latent
from src.simulation.pair_index import (
    directed_pair_arrays,
    num_pairs,
    pair_arrays,
    pair_to_index,
)
from src.utils.errors import InvalidInputError, MustValidateError, SelfLoopError

logger = logging.getLogger(__name__)


def _frozen(array, dtype):
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Graph:
    """
    Undirected simple graph on n labeled nodes.

    Attributes:
    -----------
    n : int
        Number of nodes
    adjacency : np.ndarray of bool, length N
        Edge indicators in pair-index order
    degrees : np.ndarray of int, length n
    """
    n: int
    adjacency: np.ndarray
    degrees: np.ndarray

    @classmethod
    def from_adjacency(cls, n, adjacency):
        """Build from pair-ordered edge indicators; degrees are computed."""
        n = int(n)
        adjacency = np.asarray(adjacency, dtype=bool)
        if adjacency.shape != (num_pairs(n),):
            raise InvalidInputError(f"adjacency needs {num_pairs(n)} entries, got {adjacency.shape}")
        rows, cols = pair_arrays(n)
        degrees = np.bincount(rows[adjacency], minlength=n) + np.bincount(cols[adjacency], minlength=n)
        return cls(n=n, adjacency=_frozen(adjacency, bool), degrees=_frozen(degrees, np.int64))

    @classmethod
    def from_edges(cls, n, edges):
        """Build from an iterable of (i, j) pairs with i != j."""
        adjacency = np.zeros(num_pairs(n), dtype=bool)
        for i, j in edges:
            i, j = sorted((int(i), int(j)))
            adjacency[pair_to_index(i, j, n)] = True
        return cls.from_adjacency(n, adjacency)

    @property
    def num_edges(self):
        return int(self.adjacency.sum())

    def edges(self):
        """Edges as (i, j), i < j, in lexicographic order."""
        rows, cols = pair_arrays(self.n)
        return [(int(i), int(j)) for i, j in zip(rows[self.adjacency], cols[self.adjacency])]

    def adjacency_matrix(self):
        """Dense symmetric 0/1 matrix with zero diagonal."""
        matrix = np.zeros((self.n, self.n), dtype=np.int64)
        rows, cols = pair_arrays(self.n)
        matrix[rows[self.adjacency], cols[self.adjacency]] = 1
        return matrix + matrix.T

    def to_networkx(self):
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges())
        return graph


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """
    Directed graph without self-loops; adjacency follows the row-major
    ordered-pair enumeration (i, j), i != j.
    """
    n: int
    adjacency: np.ndarray
    out_degrees: np.ndarray
    in_degrees: np.ndarray

    @property
    def num_edges(self):
        return int(self.adjacency.sum())

    def adjacency_matrix(self):
        matrix = np.zeros((self.n, self.n), dtype=np.int64)
        rows, cols = directed_pair_arrays(self.n)
        matrix[rows[self.adjacency], cols[self.adjacency]] = 1
        return matrix


@dataclass(frozen=True, eq=False)
class NodeParams:
    """
    Node parameters alpha (and beta, the in-parameters, for directed graphs).
    """
    alpha: np.ndarray
    beta: np.ndarray = None

    def __post_init__(self):
        alpha = _frozen(self.alpha, float).ravel()
        if alpha.size < 2 or not np.all(np.isfinite(alpha)):
            raise InvalidInputError("alpha needs at least 2 finite entries")
        object.__setattr__(self, 'alpha', alpha)
        if self.beta is not None:
            beta = _frozen(self.beta, float).ravel()
            if beta.shape != alpha.shape or not np.all(np.isfinite(beta)):
                raise InvalidInputError("beta must be finite and match alpha in length")
            object.__setattr__(self, 'beta', beta)

    @property
    def n(self):
        return self.alpha.size

    @property
    def q_hat(self):
        """max over pairs of |alpha_i + alpha_j| (|alpha_i + beta_j| when directed)."""
        if self.beta is None:
            rows, cols = pair_arrays(self.n)
            return float(np.max(np.abs(self.alpha[rows] + self.alpha[cols])))
        rows, cols = directed_pair_arrays(self.n)
        return float(np.max(np.abs(self.alpha[rows] + self.beta[cols])))


@dataclass(frozen=True, eq=False)
class CovariateData:
    """
    Pair covariates Z (N x p, pair-index rows) and coefficients gamma (p,).
    """
    gamma: np.ndarray
    Z: np.ndarray

    def __post_init__(self):
        gamma = _frozen(self.gamma, float).ravel()
        Z = np.array(self.Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        if Z.ndim != 2 or Z.shape[1] != gamma.size:
            raise InvalidInputError(f"Z has shape {Z.shape}, expected (N, {gamma.size})")
        Z.setflags(write=False)
        object.__setattr__(self, 'gamma', gamma)
        object.__setattr__(self, 'Z', Z)

    def linear_term(self):
        """Z_(ij)^T gamma for every pair."""
        return self.Z @ self.gamma


def _as_params(params):
    if isinstance(params, NodeParams):
        return params
    return NodeParams(np.asarray(params, dtype=float))


def _check_validated(cov, n, directed):
    if not isinstance(cov, ValidatedCovariance):
        raise MustValidateError("covariance spec must be validated before generating graphs")
    if cov.n != n:
        raise InvalidInputError(f"covariance validated for n={cov.n}, parameters have n={n}")
    if cov.directed != directed:
        raise InvalidInputError("covariance was validated for the other edge orientation")


def edge_probability(params, i, j):
    """
    Marginal edge probability Phi(alpha_i + alpha_j).

    Parameters:
    -----------
    params : NodeParams or array_like
    i, j : int
        Distinct nodes

    Returns:
    --------
    float
    """
    params = _as_params(params)
    if int(i) == int(j):
        raise SelfLoopError(f"no self-loops: i = j = {i}")
    return std_normal_cdf(params.alpha[int(i)] + params.alpha[int(j)])


def expected_degrees(params):
    """E d_i = sum_{j != i} Phi(alpha_i + alpha_j)."""
    alpha = _as_params(params).alpha
    prob = std_normal_cdf(alpha[:, None] + alpha[None, :])
    np.fill_diagonal(prob, 0.0)
    return prob.sum(axis=1)


def generate_graph(params, cov, rng):
    """
    Draw one graph with the link surplus rule a_ij = 1(alpha_i + alpha_j >= u_ij).

    Parameters:
    -----------
    params : NodeParams or array_like
        Node parameters alpha
    cov : ValidatedCovariance
        Latent covariance validated for n = len(alpha)
    rng : numpy.random.Generator

    Returns:
    --------
    Graph
    """
    params = _as_params(params)
    _check_validated(cov, params.n, directed=False)
    rows, cols = pair_arrays(params.n)
    u = sample_latent(cov, params.n, rng)
    graph = Graph.from_adjacency(params.n, params.alpha[rows] + params.alpha[cols] >= u)
    logger.debug("generated n=%d graph with %d edges (%s latent)", params.n, graph.num_edges, cov.kind)
    return graph


def generate_directed(alpha, beta, cov, rng):
    """
    Draw one directed graph with a_ij = 1(alpha_i + beta_j >= u_ij), i != j.

    Parameters:
    -----------
    alpha, beta : array_like
        Out- and in-parameters, both of length n
    cov : ValidatedCovariance
        Validated with directed=True (dimension n(n-1))
    rng : numpy.random.Generator

    Returns:
    --------
    DirectedGraph
    """
    params = NodeParams(alpha, beta)
    _check_validated(cov, params.n, directed=True)
    n = params.n
    rows, cols = directed_pair_arrays(n)
    u = sample_latent(cov, n, rng)
    adjacency = params.alpha[rows] + params.beta[cols] >= u
    return DirectedGraph(
        n=n,
        adjacency=_frozen(adjacency, bool),
        out_degrees=_frozen(np.bincount(rows[adjacency], minlength=n), np.int64),
        in_degrees=_frozen(np.bincount(cols[adjacency], minlength=n), np.int64),
    )


def generate_with_covariates(params, covariates, cov, rng):
    """
    Draw one graph with a_ij = 1(Z_ij^T gamma + alpha_i + alpha_j >= u_ij).

    With gamma = 0 this consumes the stream exactly like ``generate_graph``.
    """
    params = _as_params(params)
    _check_validated(cov, params.n, directed=False)
    if covariates.Z.shape[0] != num_pairs(params.n):
        raise InvalidInputError(
            f"Z has {covariates.Z.shape[0]} rows, expected {num_pairs(params.n)} pairs"
        )
    rows, cols = pair_arrays(params.n)
    u = sample_latent(cov, params.n, rng)
    threshold = covariates.linear_term() + params.alpha[rows] + params.alpha[cols]
    return Graph.from_adjacency(params.n, threshold >= u)


def distance_covariates(X, gamma):
    """
    Homophily covariates from node attributes.

    Parameters:
    -----------
    X : array_like, shape (n, q)
        Node attributes (e.g. location coordinates)
    gamma : float
        Coefficient on the distance

    Returns:
    --------
    CovariateData with Z_(ij) = ||X_i - X_j||_2 in pair-index order
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    # pdist's condensed order is the lexicographic pair order
    return CovariateData(gamma=np.atleast_1d(gamma), Z=pdist(X)[:, None])
