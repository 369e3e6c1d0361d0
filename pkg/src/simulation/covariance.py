# src/simulation/covariance.py

"""
Latent covariance structures over the N = n(n-1)/2 edge variables.

A spec is a small immutable description. ``validate`` checks it against a
network size and returns a ``ValidatedCovariance`` that the samplers accept;
structured kinds (independent, power decay, equicorrelated) never build the
N x N matrix, the others are materialized and factored once.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import signal
from scipy.linalg import lapack

from src.simulation.pair_index import index_to_pair, num_pairs, pair_arrays
from src.utils.errors import (
    DiagonalQueryError,
    InvalidIndexError,
    InvalidInputError,
    InvalidSpecError,
    MustValidateError,
    NotPositiveSemidefiniteError,
)

logger = logging.getLogger(__name__)

DEFAULT_DENSE_CAP = 60
PSD_JITTER = 1e-10
SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Independent:
    kind = 'independent'


@dataclass(frozen=True)
class PowerDecay:
    """Correlation sigma0 ** |t - s| between latent indices t and s."""
    sigma0: float
    kind = 'power_decay'


@dataclass(frozen=True)
class Equicorrelated:
    """Every off-diagonal equal to rho."""
    rho: float
    kind = 'equicorrelated'


@dataclass(frozen=True)
class AdditiveNode:
    """Correlation sigma0 + sigma_i + sigma_j + sigma_k + sigma_l for pairs (i,j), (k,l)."""
    sigma0: float
    sigma: tuple
    kind = 'additive_node'

    def __post_init__(self):
        object.__setattr__(self, 'sigma', tuple(float(s) for s in self.sigma))


@dataclass(frozen=True, eq=False)
class DenseExplicit:
    matrix: np.ndarray
    kind = 'dense_explicit'

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)


SPEC_TYPES = (Independent, PowerDecay, Equicorrelated, AdditiveNode, DenseExplicit)


@dataclass(frozen=True, eq=False)
class ValidatedCovariance:
    """
    A spec checked against a network size.

    Attributes:
    -----------
    spec : one of the spec dataclasses
    n : int
        Number of nodes
    dim : int
        Length of the latent vector (N, or n(n-1) when directed)
    directed : bool
    factor : np.ndarray or None
        Lower Cholesky factor for materialized kinds
    """
    spec: object
    n: int
    dim: int
    directed: bool = False
    factor: np.ndarray = field(default=None, repr=False)

    @property
    def kind(self):
        return self.spec.kind


def latent_dimension(n, directed=False):
    """Length of the latent vector for n nodes."""
    N = num_pairs(n)
    return 2 * N if directed else N


def _cholesky_check(matrix):
    # jitter clamps tiny negative pivots of semidefinite matrices
    a = matrix + PSD_JITTER * np.eye(matrix.shape[0])
    factor, info = lapack.dpotrf(a, lower=1, clean=1)
    if info > 0:
        pivot = int(info) - 1
        raise NotPositiveSemidefiniteError(
            f"covariance is not positive semidefinite (Cholesky fails at pivot {pivot})",
            pivot=pivot,
        )
    if info < 0:
        raise InvalidSpecError(f"Cholesky received an invalid argument (info={info})")
    return factor


def _check_offdiagonal_range(matrix):
    off = matrix[~np.eye(matrix.shape[0], dtype=bool)]
    if off.size and (np.any(~np.isfinite(off)) or np.max(np.abs(off)) >= 1.0):
        raise InvalidSpecError("off-diagonal correlations must lie in (-1, 1)")


def _additive_matrix(spec, n):
    sigma = np.asarray(spec.sigma, dtype=float)
    rows, cols = pair_arrays(n)
    node_sum = sigma[rows] + sigma[cols]
    matrix = spec.sigma0 + node_sum[:, None] + node_sum[None, :]
    np.fill_diagonal(matrix, 1.0)
    return matrix


def materialize(spec, n, directed=False):
    """
    Dense latent covariance matrix.

    Parameters:
    -----------
    spec : covariance spec
    n : int
        Number of nodes
    directed : bool
        Build over the n(n-1) ordered-pair enumeration

    Returns:
    --------
    np.ndarray of shape (dim, dim)
    """
    dim = latent_dimension(n, directed)
    if isinstance(spec, Independent):
        return np.eye(dim)
    if isinstance(spec, PowerDecay):
        idx = np.arange(dim)
        return float(spec.sigma0) ** np.abs(idx[:, None] - idx[None, :]).astype(float)
    if isinstance(spec, Equicorrelated):
        matrix = np.full((dim, dim), float(spec.rho))
        np.fill_diagonal(matrix, 1.0)
        return matrix
    if isinstance(spec, AdditiveNode):
        if directed:
            raise InvalidSpecError("additive node covariance is defined for undirected pairs only")
        return _additive_matrix(spec, n)
    if isinstance(spec, DenseExplicit):
        return np.array(spec.matrix)
    raise InvalidSpecError(f"unknown covariance spec {spec!r}")


def validate(spec, n, directed=False, dense_cap=DEFAULT_DENSE_CAP):
    """
    Check a covariance spec for an n-node network.

    Parameters:
    -----------
    spec : covariance spec
    n : int
        Number of nodes, at least 2
    directed : bool
        Validate over the n(n-1) ordered-pair latent vector
    dense_cap : int
        Largest n for which a dense matrix is materialized

    Returns:
    --------
    ValidatedCovariance
    """
    dim = latent_dimension(n, directed)
    if isinstance(spec, ValidatedCovariance):
        spec = spec.spec
    if not isinstance(spec, SPEC_TYPES):
        raise InvalidSpecError(f"unknown covariance spec {spec!r}")

    factor = None
    if isinstance(spec, PowerDecay):
        if not np.isfinite(spec.sigma0) or abs(spec.sigma0) >= 1.0:
            raise InvalidSpecError("power decay needs |sigma0| < 1", sigma0=spec.sigma0)

    elif isinstance(spec, Equicorrelated):
        if not np.isfinite(spec.rho) or abs(spec.rho) >= 1.0:
            raise InvalidSpecError("equicorrelation needs |rho| < 1", rho=spec.rho)
        # spectrum of (1-rho) I + rho 11^T is {1-rho, 1+(dim-1) rho}
        smallest = 1.0 + (dim - 1) * spec.rho
        if smallest < -PSD_JITTER:
            raise NotPositiveSemidefiniteError(
                f"equicorrelation rho={spec.rho} is below -1/(N-1) for N={dim} "
                f"(eigenvalue {smallest:.6g})",
                pivot=dim - 1,
                eigenvalue=smallest,
            )

    elif isinstance(spec, AdditiveNode):
        if directed:
            raise InvalidSpecError("additive node covariance is defined for undirected pairs only")
        if len(spec.sigma) != n:
            raise InvalidSpecError(f"additive node spec needs {n} node effects, got {len(spec.sigma)}")
        total = float(np.sum(spec.sigma))
        if abs(total) > SUM_TOLERANCE:
            raise InvalidSpecError(f"node effects must sum to 0, got {total:.3g}", total=total)
        if n > dense_cap:
            raise InvalidSpecError(f"n={n} exceeds the dense materialization cap {dense_cap}")
        matrix = _additive_matrix(spec, n)
        _check_offdiagonal_range(matrix)
        factor = _cholesky_check(matrix)

    elif isinstance(spec, DenseExplicit):
        matrix = spec.matrix
        if matrix.shape != (dim, dim):
            raise InvalidSpecError(f"dense covariance must be {dim}x{dim}, got {matrix.shape}")
        if dim > latent_dimension(dense_cap, directed):
            raise InvalidSpecError(f"dense covariance of size {dim} exceeds the materialization cap")
        if not np.allclose(np.diag(matrix), 1.0, rtol=0, atol=1e-12):
            raise InvalidSpecError("dense covariance must have a unit diagonal")
        if not np.allclose(matrix, matrix.T, rtol=0, atol=1e-12):
            raise InvalidSpecError("dense covariance must be symmetric")
        _check_offdiagonal_range(matrix)
        factor = _cholesky_check(matrix)

    logger.debug("validated %s covariance for n=%d (latent dimension %d)", spec.kind, n, dim)
    return ValidatedCovariance(spec=spec, n=int(n), dim=dim, directed=directed, factor=factor)


def correlation_of(spec, t, s, n):
    """
    Latent correlation between pair indices t and s (t != s).

    Parameters:
    -----------
    spec : covariance spec or ValidatedCovariance
    t, s : int
        Pair indices
    n : int
        Number of nodes

    Returns:
    --------
    float
    """
    if isinstance(spec, ValidatedCovariance):
        spec = spec.spec
    t, s = int(t), int(s)
    total = num_pairs(n)
    for idx in (t, s):
        if idx < 0 or idx >= total:
            raise InvalidIndexError(f"pair index {idx} out of range [0, {total})", t=idx)
    if t == s:
        raise DiagonalQueryError("the diagonal of the latent covariance is fixed at 1", t=t)

    if isinstance(spec, Independent):
        return 0.0
    if isinstance(spec, PowerDecay):
        return float(spec.sigma0) ** abs(t - s)
    if isinstance(spec, Equicorrelated):
        return float(spec.rho)
    if isinstance(spec, AdditiveNode):
        i, j = index_to_pair(t, n)
        k, l = index_to_pair(s, n)
        sigma = spec.sigma
        return spec.sigma0 + sigma[i] + sigma[j] + sigma[k] + sigma[l]
    if isinstance(spec, DenseExplicit):
        return float(spec.matrix[t, s])
    raise InvalidSpecError(f"unknown covariance spec {spec!r}")


def sample_latent(cov, n, rng, size=None):
    """
    Draw the latent vector u ~ N(0, Sigma).

    Parameters:
    -----------
    cov : ValidatedCovariance
        Output of ``validate``
    n : int
        Number of nodes (must match the validated size)
    rng : numpy.random.Generator
        Exclusive stream; exactly ``dim`` normals are consumed per draw
    size : int, optional
        Number of independent draws; returns shape (size, dim) when given

    Returns:
    --------
    np.ndarray of shape (dim,) or (size, dim)
    """
    if not isinstance(cov, ValidatedCovariance):
        raise MustValidateError("covariance spec must be validated before sampling")
    if int(n) != cov.n:
        raise InvalidInputError(f"covariance validated for n={cov.n}, sampling asked for n={n}")

    shape = (cov.dim,) if size is None else (int(size), cov.dim)
    eps = rng.standard_normal(shape)
    spec = cov.spec

    if isinstance(spec, Independent):
        return eps

    if isinstance(spec, PowerDecay):
        sigma0 = float(spec.sigma0)
        if sigma0 == 0.0:
            return eps
        # u_0 = e_0, u_t = sigma0 u_{t-1} + sqrt(1 - sigma0^2) e_t
        drive = np.sqrt(1.0 - sigma0 * sigma0) * eps
        drive[..., 0] = eps[..., 0]
        return signal.lfilter([1.0], [1.0, -sigma0], drive, axis=-1)

    if isinstance(spec, Equicorrelated):
        rho = float(spec.rho)
        top = max(1.0 + (cov.dim - 1) * rho, 0.0)
        mean = eps.mean(axis=-1, keepdims=True)
        return np.sqrt(1.0 - rho) * (eps - mean) + np.sqrt(top) * mean

    if cov.factor is None:
        raise MustValidateError("materialized covariance has no Cholesky factor")
    return eps @ cov.factor.T


def load_dense_csv(path):
    """
    Read a dense covariance from a headerless UTF-8 CSV (row t = latent index t).
    """
    frame = pd.read_csv(path, header=None, encoding='utf-8')
    return DenseExplicit(frame.to_numpy(dtype=float))


def spec_from_config(desc, n=None):
    """
    Build a covariance spec from its config dictionary.

    Parameters:
    -----------
    desc : dict
        {'kind': ..., plus kind-specific fields}; equicorrelated accepts
        'rho_scale' meaning rho = rho_scale / (N - 1)
    n : int, optional
        Network size, required for 'rho_scale'

    Returns:
    --------
    covariance spec
    """
    if isinstance(desc, SPEC_TYPES):
        return desc
    if not isinstance(desc, dict) or 'kind' not in desc:
        raise InvalidSpecError(f"covariance description needs a 'kind': {desc!r}")
    kind = desc['kind']
    try:
        if kind == 'independent':
            return Independent()
        if kind == 'power_decay':
            return PowerDecay(float(desc['sigma0']))
        if kind == 'equicorrelated':
            if 'rho_scale' in desc:
                if n is None:
                    raise InvalidSpecError("'rho_scale' needs the network size")
                return Equicorrelated(float(desc['rho_scale']) / (num_pairs(n) - 1))
            return Equicorrelated(float(desc['rho']))
        if kind == 'additive_node':
            return AdditiveNode(float(desc['sigma0']), tuple(desc['sigma']))
        if kind == 'dense_explicit':
            if 'matrix' in desc:
                return DenseExplicit(np.asarray(desc['matrix'], dtype=float))
            return load_dense_csv(desc['path'])
    except KeyError as e:
        raise InvalidSpecError(f"covariance '{kind}' is missing field {e}") from e
    raise InvalidSpecError(f"unknown covariance kind '{kind}'")


def spec_to_config(spec):
    """Config dictionary of a spec (dense matrices are written as nested lists)."""
    if isinstance(spec, ValidatedCovariance):
        spec = spec.spec
    if isinstance(spec, Independent):
        return {'kind': spec.kind}
    if isinstance(spec, PowerDecay):
        return {'kind': spec.kind, 'sigma0': float(spec.sigma0)}
    if isinstance(spec, Equicorrelated):
        return {'kind': spec.kind, 'rho': float(spec.rho)}
    if isinstance(spec, AdditiveNode):
        return {'kind': spec.kind, 'sigma0': float(spec.sigma0), 'sigma': list(spec.sigma)}
    if isinstance(spec, DenseExplicit):
        return {'kind': spec.kind, 'matrix': spec.matrix.tolist()}
    raise InvalidSpecError(f"unknown covariance spec {spec!r}")
