# src/models/correlation_fit.py

"""
Stage-2 moment estimation of the latent correlation parameters.

Stage-1 estimates alpha_hat are plugged into the expected products
E(a_t a_s) = Phi2(alpha_i + alpha_j, alpha_k + alpha_l; corr(t, s)) and the
correlation parameters are chosen so that observed and expected product sums
agree.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from src.distributions.normal import bivariate_cdf
from src.simulation.generate_network import NodeParams, expected_degrees
from src.simulation.pair_index import index_to_pair, num_pairs, pair_arrays
from src.utils.errors import (
    BoundaryEstimateError,
    InvalidInputError,
    InvalidPairError,
    NoConvergenceError,
)

logger = logging.getLogger(__name__)

# alpha_hat counts as the stage-1 fit of a graph when it matches every degree this closely
DEGREE_MATCH_TOL = 1e-6
ADDITIVE_MAX_HALVINGS = 40

DEGREE_DETERMINED_ADDITIVE = (
    "degree-determined: C(d_i, 2) is a function of d_i, which alpha_hat reproduces exactly, "
    "so (sigma0, sigma) is fixed by the degree sequence and does not track the latent correlation"
)
DEGREE_DETERMINED_FULL_PAIRS = (
    "degree-determined: E(E - 1)/2 is a function of the edge count, which alpha_hat reproduces "
    "exactly, so the full-pair estimate is fixed by alpha_hat; use adjacent_only=True on data"
)


@dataclass
class SigmaOptions:
    """
    Settings for the stage-2 estimators.

    Attributes:
    -----------
    adjacent_only : bool
        Common-parameter equation over adjacent latent pairs (t, t+1) only;
        False sums all pairs with correlation sigma0 ** |t - s| (small n)
    bracket_margin : float
        Bisection bracket is [-1 + margin, 1 - margin]
    tol_per_pair : float
        |g| tolerance per summed pair for the common parameter
    full_pair_cap : int
        Largest n accepted in full-pair mode
    additive_cap : int
        Largest n accepted by the additive estimator
    additive_tol_scale : float
        Additive residual tolerance per summed pair
    additive_max_iters : int
    fd_step : float
        Forward-difference step for the additive Jacobian
    clamp_margin : float
        Correlations are clamped into (-1 + margin, 1 - margin)
    """
    adjacent_only: bool = True
    bracket_margin: float = 1e-6
    tol_per_pair: float = 1e-8
    full_pair_cap: int = 15
    additive_cap: int = 30
    additive_tol_scale: float = 1e-6
    additive_max_iters: int = 100
    fd_step: float = 1e-6
    clamp_margin: float = 1e-6


@dataclass
class AdditiveEstimate:
    """sigma0 and node effects sigma (summing to zero) of the additive structure."""
    sigma0: float
    sigma: np.ndarray
    iterations: int
    max_residual: float
    residual_trace: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return {
            'sigma0': float(self.sigma0),
            'sigma': [float(s) for s in self.sigma],
            'iterations': int(self.iterations),
            'max_residual': float(self.max_residual),
            'warnings': list(self.warnings),
        }


def pair_moment(alpha, t, s, rho):
    """
    E(a_t a_s) = P(both edges present) for latent correlation rho.

    Parameters:
    -----------
    alpha : array_like, length n
    t, s : int
        Distinct pair indices
    rho : float
        Correlation between u_t and u_s, |rho| < 1

    Returns:
    --------
    float
    """
    alpha = np.asarray(alpha, dtype=float)
    n = alpha.size
    t, s = int(t), int(s)
    if t == s:
        raise InvalidPairError("pair moment needs two distinct latent indices", t=t)
    i, j = index_to_pair(t, n)
    k, l = index_to_pair(s, n)
    return bivariate_cdf(alpha[i] + alpha[j], alpha[k] + alpha[l], rho)


def _pair_index_sums(alpha):
    rows, cols = pair_arrays(alpha.size)
    return alpha[rows] + alpha[cols]


def _check_alpha(graph, alpha_hat):
    alpha = np.asarray(alpha_hat, dtype=float).ravel()
    if alpha.size != graph.n:
        raise InvalidInputError(f"graph has {graph.n} nodes, alpha_hat has {alpha.size}")
    if not np.all(np.isfinite(alpha)):
        raise InvalidInputError("alpha_hat must be finite")
    return alpha


def reproduces_degrees(graph, alpha_hat, tol=DEGREE_MATCH_TOL):
    """
    True when alpha_hat matches every degree of graph, as a converged stage-1 fit does.

    The degree-based statistics (per-node 2-paths, the all-pair product sum)
    carry no information beyond the degrees in that case.
    """
    alpha = _check_alpha(graph, alpha_hat)
    gap = np.abs(graph.degrees - expected_degrees(NodeParams(alpha)))
    return bool(np.max(gap) <= tol)


class _CommonEquation:
    """g(sigma0) = observed - sum of expected products over the chosen pair set."""

    def __init__(self, alpha, observed, adjacent_only):
        sums = _pair_index_sums(alpha)
        N = sums.size
        if adjacent_only:
            self.left = sums[:-1]
            self.right = sums[1:]
            self.lags = np.ones(N - 1, dtype=np.int64)
        else:
            t, s = np.triu_indices(N, k=1)
            self.left = sums[t]
            self.right = sums[s]
            self.lags = s - t
        self.observed = float(observed)
        self.count = self.left.size

    def __call__(self, sigma0):
        corr = float(sigma0) ** self.lags
        return self.observed - float(np.sum(bivariate_cdf(self.left, self.right, corr)))


def observed_adjacent_products(graph):
    """sum_t a_t a_{t+1} over lexicographically adjacent latent indices."""
    a = np.asarray(graph.adjacency, dtype=bool)
    return int(np.count_nonzero(a[:-1] & a[1:]))


def observed_all_products(graph):
    """sum_{t < s} a_t a_s = E(E - 1)/2 for E edges."""
    edges = graph.num_edges
    return edges * (edges - 1) // 2


def solve_sigma_common(alpha_hat, observed, opts=None):
    """
    Root of g(sigma0) = observed - sum E(a_t a_s; sigma0) by bisection.

    Parameters:
    -----------
    alpha_hat : array_like
        Stage-1 estimates
    observed : float
        Observed product sum over the pair set chosen by opts.adjacent_only
    opts : SigmaOptions, optional

    Returns:
    --------
    float
    """
    opts = opts or SigmaOptions()
    alpha = np.asarray(alpha_hat, dtype=float).ravel()
    if num_pairs(alpha.size) < 2:
        raise InvalidInputError("the common-parameter equation needs at least two latent pairs")
    g = _CommonEquation(alpha, observed, opts.adjacent_only)
    tol = opts.tol_per_pair * g.count

    low, high = -1.0 + opts.bracket_margin, 1.0 - opts.bracket_margin
    g_low, g_high = g(low), g(high)
    if abs(g_low) <= tol:
        return low
    if abs(g_high) <= tol:
        return high
    if np.sign(g_low) == np.sign(g_high):
        raise BoundaryEstimateError(
            f"g has no sign change on [{low}, {high}]: g(low)={g_low:.6g}, g(high)={g_high:.6g}",
            g_low=g_low,
            g_high=g_high,
        )

    mid = 0.5 * (low + high)
    for _ in range(200):
        mid = 0.5 * (low + high)
        g_mid = g(mid)
        if abs(g_mid) <= tol or high - low <= 1e-15:
            break
        if np.sign(g_mid) == np.sign(g_low):
            low, g_low = mid, g_mid
        else:
            high = mid
    logger.debug("sigma0 bisection: %.10f (g=%.3e, tol=%.1e)", mid, g_mid, tol)
    return float(mid)


def estimate_sigma_common(graph, alpha_hat, opts=None):
    """
    Moment estimate of the common power-decay parameter sigma0.

    Parameters:
    -----------
    graph : Graph
    alpha_hat : array_like
        Stage-1 estimates for the same graph
    opts : SigmaOptions, optional
        adjacent_only=False switches to the full O(N^2) pair set (n <= full_pair_cap)

    Returns:
    --------
    float
    """
    opts = opts or SigmaOptions()
    alpha = _check_alpha(graph, alpha_hat)
    if opts.adjacent_only:
        observed = observed_adjacent_products(graph)
    else:
        if graph.n > opts.full_pair_cap:
            raise InvalidInputError(
                f"full-pair mode is limited to n <= {opts.full_pair_cap}, got n={graph.n}"
            )
        observed = observed_all_products(graph)
        if reproduces_degrees(graph, alpha):
            logger.warning(DEGREE_DETERMINED_FULL_PAIRS)
    return solve_sigma_common(alpha, observed, opts)


# ==================== ADDITIVE NODE STRUCTURE ====================

class _AdditiveEquations:
    """
    G_i = observed_i - sum_{j<l; j,l != i} Phi2(s_ij, s_il; sigma0 + 2 sigma_i + sigma_j + sigma_l)
    with free parameters (sigma0, sigma_0..sigma_{n-2}); the last node effect
    is minus the sum of the others.
    """

    def __init__(self, alpha, observed, margin):
        n = alpha.size
        centers, lefts, rights = [], [], []
        for i in range(n):
            others = np.delete(np.arange(n), i)
            j, l = np.triu_indices(n - 1, k=1)
            centers.append(np.full(j.size, i))
            lefts.append(others[j])
            rights.append(others[l])
        self.center = np.concatenate(centers)
        self.left = np.concatenate(lefts)
        self.right = np.concatenate(rights)
        self.h = alpha[self.center] + alpha[self.left]
        self.k = alpha[self.center] + alpha[self.right]
        self.n = n
        self.per_node = (n - 1) * (n - 2) // 2
        self.observed = np.asarray(observed, dtype=float)
        self.margin = margin

    def unpack(self, theta):
        sigma = np.append(theta[1:], -np.sum(theta[1:]))
        return float(theta[0]), sigma

    def correlations(self, theta):
        sigma0, sigma = self.unpack(theta)
        return sigma0 + 2.0 * sigma[self.center] + sigma[self.left] + sigma[self.right]

    def clamp(self, corr):
        bound = 1.0 - self.margin
        return np.clip(corr, -bound, bound)

    def __call__(self, theta):
        corr = self.clamp(self.correlations(theta))
        expected = bivariate_cdf(self.h, self.k, corr)
        return self.observed - np.bincount(self.center, weights=expected, minlength=self.n)

    def jacobian(self, theta, base, step):
        columns = []
        for p in range(theta.size):
            shifted = theta.copy()
            shifted[p] += step
            columns.append((self(shifted) - base) / step)
        return np.column_stack(columns)


def observed_two_paths(graph):
    """Per-node sum_{j<l} a_ij a_il = C(d_i, 2)."""
    d = np.asarray(graph.degrees, dtype=np.int64)
    return d * (d - 1) // 2


def solve_sigma_additive(alpha_hat, observed, opts=None, theta0=None):
    """
    Solve the n per-node product equations for (sigma0, sigma).

    Parameters:
    -----------
    alpha_hat : array_like, length n
    observed : array_like, length n
        Observed sum_{j<l} a_ij a_il per node
    opts : SigmaOptions, optional
    theta0 : array_like, optional
        Start (sigma0, sigma_0..sigma_{n-2}); zeros by default

    Returns:
    --------
    AdditiveEstimate
    """
    opts = opts or SigmaOptions()
    alpha = np.asarray(alpha_hat, dtype=float).ravel()
    n = alpha.size
    if n < 3:
        raise InvalidInputError("the additive structure needs at least 3 nodes")
    if n > opts.additive_cap:
        raise InvalidInputError(f"additive estimation is limited to n <= {opts.additive_cap}, got n={n}")
    observed = np.asarray(observed, dtype=float).ravel()
    if observed.size != n:
        raise InvalidInputError(f"expected {n} observed statistics, got {observed.size}")

    equations = _AdditiveEquations(alpha, observed, opts.clamp_margin)
    tol = opts.additive_tol_scale * equations.per_node
    theta = np.zeros(n) if theta0 is None else np.asarray(theta0, dtype=float).copy()

    G = equations(theta)
    norm = float(np.max(np.abs(G)))
    trace = [norm]
    iterations = 0
    while norm > tol and iterations < opts.additive_max_iters:
        J = equations.jacobian(theta, G, opts.fd_step)
        try:
            direction = linalg.solve(J, -G)
        except (linalg.LinAlgError, ValueError):
            direction = linalg.lstsq(J, -G)[0]
        lam = 1.0
        accepted = False
        for _ in range(ADDITIVE_MAX_HALVINGS):
            trial = theta + lam * direction
            trial_G = equations(trial)
            trial_norm = float(np.max(np.abs(trial_G)))
            if trial_norm <= norm:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            logger.debug("additive line search stalled at iteration %d", iterations)
            break
        theta, G, norm = trial, trial_G, trial_norm
        iterations += 1
        trace.append(norm)
        logger.debug("additive iter %d: max residual %.3e (step %.3g)", iterations, norm, lam)

    if norm > tol:
        raise NoConvergenceError(
            f"additive estimator did not reach residual {tol:.3g} in {iterations} iterations",
            best=theta,
            residual_trace=trace,
        )

    sigma0, sigma = equations.unpack(theta)
    sigma = sigma - sigma.mean()
    warnings = []
    raw = equations.correlations(theta)
    if np.any(np.abs(raw) >= 1.0 - opts.clamp_margin):
        message = 'boundary-estimate: correlation clamp active at the solution'
        logger.warning(message)
        warnings.append(message)
    return AdditiveEstimate(
        sigma0=sigma0,
        sigma=sigma,
        iterations=iterations,
        max_residual=norm,
        residual_trace=trace,
        warnings=warnings,
    )


def estimate_sigma_additive(graph, alpha_hat, opts=None):
    """
    Moment estimate of the additive node-effect correlation structure.

    Parameters:
    -----------
    graph : Graph
    alpha_hat : array_like
        Stage-1 estimates for the same graph
    opts : SigmaOptions, optional

    Returns:
    --------
    AdditiveEstimate
    """
    alpha = _check_alpha(graph, alpha_hat)
    estimate = solve_sigma_additive(alpha, observed_two_paths(graph), opts)
    if reproduces_degrees(graph, alpha):
        logger.warning(DEGREE_DETERMINED_ADDITIVE)
        estimate.warnings.append(DEGREE_DETERMINED_ADDITIVE)
    return estimate
