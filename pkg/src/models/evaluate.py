# src/models/evaluate.py

"""
Numerical audits of the theory behind the moment estimator.

Covers the diagonally balanced matrix class L_n(m, M), the diagonal
approximation of its inverse and the max-norm bound on that approximation,
the Lipschitz constant of the Jacobian, concentration thresholds for
max_i |d_i - E d_i|, and which association regime a covariance spec falls in.
All logarithms are natural logarithms.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import linalg

from src.utils.errors import InvalidInputError, InvalidSizeError, SingularMatrixError

logger = logging.getLogger(__name__)

INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
LIPSCHITZ_FACTOR = np.sqrt(2.0 / (np.e * np.pi))


@dataclass(frozen=True)
class MatrixClassParams:
    """Entry bounds m <= v_ij <= M of the class L_n(m, M)."""
    m: float
    M: float

    def __post_init__(self):
        if not (self.m > 0 and self.M >= self.m):
            raise InvalidInputError(f"class bounds need 0 < m <= M, got m={self.m}, M={self.M}")


def jacobian_class_params(q):
    """
    Class bounds for Jacobians with max |alpha_i + alpha_j| <= q.

    m = (2 pi)^{-1/2} exp(-q^2/2), M = (2 pi)^{-1/2}.
    """
    return MatrixClassParams(m=INV_SQRT_2PI * np.exp(-0.5 * q * q), M=INV_SQRT_2PI)


def matrix_class_check(V, params, rtol=1e-10):
    """
    Membership of V in L_n(m, M).

    Parameters:
    -----------
    V : array_like, shape (n, n)
    params : MatrixClassParams
    rtol : float
        Relative tolerance for the diagonal balance v_ii = sum_{j != i} v_ij

    Returns:
    --------
    bool
    """
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        return False
    off_mask = ~np.eye(V.shape[0], dtype=bool)
    off = V[off_mask]
    row_sums = np.where(off_mask, V, 0.0).sum(axis=1)
    diag = np.diag(V)
    balanced = np.all(np.abs(diag - row_sums) <= rtol * np.maximum(np.abs(row_sums), 1e-300))
    # tiny slack so bounds computed in floating point still admit boundary entries
    slack = 1e-12
    bounded = np.all(off >= params.m * (1 - slack)) and np.all(off <= params.M * (1 + slack))
    return bool(balanced and bounded)


def inverse_approx_error_bound(n, m, M):
    """
    Max-norm bound on V^{-1} - diag(1/v_ii) for V in L_n(m, M), n >= 3.

    M(nM + (n-2)m) / (2 m^3 (n-2)(n-1)^2) + 1/(2 m (n-1)^2) + 1/(m n (n-1))
    """
    n = int(n)
    if n < 3:
        raise InvalidSizeError(f"the inverse approximation bound needs n >= 3, got {n}", n=n)
    MatrixClassParams(m, M)
    first = M * (n * M + (n - 2) * m) / (2.0 * m ** 3 * (n - 2) * (n - 1) ** 2)
    second = 1.0 / (2.0 * m * (n - 1) ** 2)
    third = 1.0 / (m * n * (n - 1))
    return first + second + third


def diag_inverse_approx(V):
    """
    S = diag(1/v_11, ..., 1/v_nn).

    Returns:
    --------
    np.ndarray, shape (n, n)
    """
    diag = np.diag(np.asarray(V, dtype=float))
    if np.any(diag == 0):
        raise SingularMatrixError("diagonal approximation needs a nonzero diagonal")
    return np.diag(1.0 / diag)


def lipschitz_bound(n):
    """(n - 1) sqrt(2 / (e pi)), the Lipschitz constant of the Jacobian."""
    return (int(n) - 1) * LIPSCHITZ_FACTOR


def concentration_threshold(n):
    """sqrt(n log n): NA-branch threshold for max_i |d_i - E d_i|."""
    return float(np.sqrt(n * np.log(n)))


def pa_correlation_threshold(n, r):
    """exp(-(8/3) sqrt(r log n)): PA-branch ceiling on correlations sharing a node."""
    return float(np.exp(-(8.0 / 3.0) * np.sqrt(r * np.log(n))))


def pa_concentration_threshold(n, r):
    """3 sqrt(n log n) sqrt(n / r): PA-branch threshold for max_i |d_i - E d_i|."""
    return float(3.0 * np.sqrt(n * np.log(n)) * np.sqrt(n / r))


def na_tail_bound(n, t):
    """Hoeffding bound 2 exp(-2 t^2 / (n - 1)) for one node's degree under NA."""
    return float(2.0 * np.exp(-2.0 * t * t / (n - 1)))


def na_exceedance_bound(n):
    """Union bound n * na_tail_bound(n, sqrt(n log n)) (of order 2/n)."""
    return float(n * na_tail_bound(n, concentration_threshold(n)))


def consistency_rate(n, q):
    """Predicted order n^{-1/2} e^{3 q^2} of ||alpha_hat - alpha*||_inf."""
    return float(np.exp(3.0 * q * q) / np.sqrt(n))


def _offdiagonal_range(spec, n):
    from src.simulation import covariance as cv
    from src.simulation.pair_index import num_pairs

    N = num_pairs(n)
    if N < 2 or isinstance(spec, cv.Independent):
        return 0.0, 0.0
    if isinstance(spec, cv.PowerDecay):
        s = float(spec.sigma0)
        if s >= 0:
            return s ** (N - 1), s
        return s, s * s
    if isinstance(spec, cv.Equicorrelated):
        return float(spec.rho), float(spec.rho)
    matrix = cv.materialize(spec, n)
    off = matrix[~np.eye(N, dtype=bool)]
    return float(off.min()), float(off.max())


def dependence_regime(spec, n):
    """
    Association regime of the latent Gaussian vector.

    Gaussian coordinates are positively (negatively) associated exactly when
    all correlations are >= 0 (<= 0).

    Returns:
    --------
    str : 'independent', 'PA', 'NA' or 'mixed'
    """
    from src.simulation.covariance import ValidatedCovariance

    if isinstance(spec, ValidatedCovariance):
        spec = spec.spec
    low, high = _offdiagonal_range(spec, n)
    if low == 0.0 and high == 0.0:
        return 'independent'
    if low >= 0.0:
        return 'PA'
    if high <= 0.0:
        return 'NA'
    return 'mixed'


def max_shared_node_correlation(spec, n):
    """
    max sigma_(ij)(ik) over distinct pairs sharing a node.
    """
    from src.simulation import covariance as cv
    from src.simulation.pair_index import pair_arrays

    if isinstance(spec, cv.ValidatedCovariance):
        spec = spec.spec
    n = int(n)
    if n < 3 or isinstance(spec, cv.Independent):
        return 0.0
    if isinstance(spec, cv.PowerDecay):
        # (i, j) and (i, j+1) are adjacent in pair order
        return max(float(spec.sigma0), float(spec.sigma0) ** 2)
    if isinstance(spec, cv.Equicorrelated):
        return float(spec.rho)
    matrix = cv.materialize(spec, n)
    rows, cols = pair_arrays(n)
    shares = (
        (rows[:, None] == rows[None, :]) | (rows[:, None] == cols[None, :])
        | (cols[:, None] == rows[None, :]) | (cols[:, None] == cols[None, :])
    )
    np.fill_diagonal(shares, False)
    return float(matrix[shares].max())


def pa_condition_holds(spec, n, r):
    """True when the spec is PA (or independent) and below the PA correlation ceiling."""
    regime = dependence_regime(spec, n)
    if regime == 'independent':
        return True
    if regime != 'PA':
        return False
    return max_shared_node_correlation(spec, n) <= pa_correlation_threshold(n, r)


def random_class_matrix(n, m, M, rng):
    """
    Symmetric member of L_n(m, M): off-diagonals uniform on [m, M], diagonal balanced.
    """
    upper = np.triu(rng.uniform(m, M, size=(n, n)), k=1)
    V = upper + upper.T
    np.fill_diagonal(V, V.sum(axis=1))
    return V


def audit_inverse_approximation(n, m, M, reps, rng):
    """
    Compare ||V^{-1} - S||_max with the bound over random class members.

    Returns:
    --------
    pd.DataFrame with columns n, m, M, error, bound, holds
    """
    bound = inverse_approx_error_bound(n, m, M)
    rows = []
    for _ in range(int(reps)):
        V = random_class_matrix(n, m, M, rng)
        error = float(np.max(np.abs(linalg.inv(V) - diag_inverse_approx(V))))
        rows.append({'n': n, 'm': m, 'M': M, 'error': error, 'bound': bound, 'holds': error <= bound})
    cases = pd.DataFrame(rows)
    logger.debug("inverse approximation audit n=%d: %d/%d within bound %.4g", n, sum(r['holds'] for r in rows), len(rows), bound)
    return cases


def audit_lipschitz(n, reps, rng, q=1.0):
    """
    Check ||(F'(x) - F'(y)) v||_inf <= lambda ||x - y||_inf ||v||_inf on random
    x, y in Theta(q) and v with unit sup-norm.

    Returns:
    --------
    pd.DataFrame with columns n, lhs, rhs, holds
    """
    from src.models.moment_fit import jacobian

    lam = lipschitz_bound(n)
    rows = []
    for _ in range(int(reps)):
        # |alpha_i| <= q/2 keeps every pair sum inside [-q, q]
        x = rng.uniform(-q / 2, q / 2, size=n)
        y = rng.uniform(-q / 2, q / 2, size=n)
        v = rng.uniform(-1.0, 1.0, size=n)
        v /= np.max(np.abs(v))
        lhs = float(np.max(np.abs((jacobian(x) - jacobian(y)) @ v)))
        rhs = lam * float(np.max(np.abs(x - y)))
        rows.append({'n': n, 'lhs': lhs, 'rhs': rhs, 'holds': lhs <= rhs})
    cases = pd.DataFrame(rows)
    logger.debug("Lipschitz audit n=%d: %d/%d within lambda=%.4g", n, sum(r['holds'] for r in rows), len(rows), lam)
    return cases
