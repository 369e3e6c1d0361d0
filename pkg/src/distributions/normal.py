# src/distributions/normal.py

"""
Univariate and bivariate standard normal functions.

The univariate CDF and quantile come from ``scipy.special`` (``ndtr`` is
accurate to double precision on the whole line). The bivariate CDF uses

    Phi2(h, k; rho) = Phi(h) Phi(k) + int_0^rho phi2(h, k, r) dr

with r = sin(theta), which turns the integrand into the smooth function
exp((2hk sin(theta) - h^2 - k^2) / (2 cos^2(theta))) / (2 pi). The theta
integral is evaluated by composite 20-point Gauss-Legendre, doubling panels
until two successive estimates agree.
"""

import numpy as np
from scipy import special

from src.utils.errors import DomainError

INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
INV_2PI = 1.0 / (2.0 * np.pi)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_PANEL_TOL = 1e-14
_MAX_PANELS = 512


def _as_float_array(x):
    return np.asarray(x, dtype=float)


def _scalar_or_array(values, like):
    if np.ndim(like) == 0:
        return float(values)
    return values


def _check_corr(rho):
    rho = _as_float_array(rho)
    if np.any(np.isnan(rho)) or np.any(np.abs(rho) >= 1.0):
        raise DomainError("correlation must satisfy |rho| < 1", rho=np.asarray(rho).tolist())
    return rho


def std_normal_pdf(x):
    """
    Standard normal density (2 pi)^(-1/2) exp(-x^2/2).

    Parameters:
    -----------
    x : float or array_like
        Finite evaluation point(s)

    Returns:
    --------
    float or np.ndarray
    """
    arr = _as_float_array(x)
    if not np.all(np.isfinite(arr)):
        raise DomainError("normal density needs finite input")
    return _scalar_or_array(INV_SQRT_2PI * np.exp(-0.5 * arr * arr), x)


def std_normal_cdf(x):
    """
    Standard normal CDF; +/-inf map to 1/0, NaN is rejected.
    """
    arr = _as_float_array(x)
    if np.any(np.isnan(arr)):
        raise DomainError("normal CDF is undefined at NaN")
    return _scalar_or_array(special.ndtr(arr), x)


def std_normal_quantile(p):
    """
    Inverse of the standard normal CDF.

    Parameters:
    -----------
    p : float or array_like
        Probabilities strictly inside (0, 1)
    """
    arr = _as_float_array(p)
    if np.any(np.isnan(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError("normal quantile needs 0 < p < 1")
    return _scalar_or_array(special.ndtri(arr), p)


def bivariate_density(t1, t2, rho):
    """
    Standardized bivariate normal density with correlation rho.

    Parameters:
    -----------
    t1, t2 : float or array_like
        Evaluation point
    rho : float or array_like
        Correlation, |rho| < 1

    Returns:
    --------
    float or np.ndarray
    """
    r = _check_corr(rho)
    a = _as_float_array(t1)
    b = _as_float_array(t2)
    one_minus = 1.0 - r * r
    quad = (a * a + b * b - 2.0 * r * a * b) / (2.0 * one_minus)
    values = INV_2PI / np.sqrt(one_minus) * np.exp(-quad)
    if np.ndim(t1) == 0 and np.ndim(t2) == 0 and np.ndim(rho) == 0:
        return float(values)
    return values


def _theta_integrand(theta, h, k):
    s = np.sin(theta)
    c2 = np.cos(theta) ** 2
    return np.exp((2.0 * h * k * s - h * h - k * k) / (2.0 * c2))


def _composite_gauss_legendre(h, k, upper, panels):
    # integrate over [0, upper] per element with equal-width panels
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    unit = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    theta = upper[:, None] * unit[None, :]
    values = _theta_integrand(theta, h[:, None], k[:, None])
    return upper * (values @ weights)


def _plackett_integral(h, k, upper):
    """Adaptive panel doubling, vectorized over elements."""
    result = np.zeros_like(upper)
    active = np.nonzero(upper != 0.0)[0]
    panels = 1
    coarse = _composite_gauss_legendre(h[active], k[active], upper[active], panels)
    while active.size:
        panels *= 2
        fine = _composite_gauss_legendre(h[active], k[active], upper[active], panels)
        done = np.abs(fine - coarse) <= _PANEL_TOL * np.maximum(1.0, np.abs(fine))
        if panels >= _MAX_PANELS:
            done[:] = True
        result[active[done]] = fine[done]
        active = active[~done]
        coarse = fine[~done]
    return result * INV_2PI


def bivariate_cdf(h, k, rho):
    """
    P(T1 <= h, T2 <= k) for a standard bivariate normal with correlation rho.

    Parameters:
    -----------
    h, k : float or array_like
        Upper limits, finite or +/-inf
    rho : float or array_like
        Correlation, |rho| < 1

    Returns:
    --------
    float or np.ndarray in [0, 1]
    """
    r = _check_corr(rho)
    hh = _as_float_array(h)
    kk = _as_float_array(k)
    if np.any(np.isnan(hh)) or np.any(np.isnan(kk)):
        raise DomainError("bivariate CDF is undefined at NaN")
    hh, kk, r = np.broadcast_arrays(hh, kk, r)
    hh, kk, r = hh.ravel(), kk.ravel(), r.ravel()

    ph = special.ndtr(hh)
    pk = special.ndtr(kk)
    out = ph * pk

    # infinite limits reduce to the marginals
    inf_h = np.isinf(hh)
    inf_k = np.isinf(kk)
    out = np.where(hh == np.inf, pk, out)
    out = np.where(kk == np.inf, ph, out)
    out = np.where((hh == -np.inf) | (kk == -np.inf), 0.0, out)

    finite = ~(inf_h | inf_k) & (r != 0.0)
    if np.any(finite):
        upper = np.arcsin(r[finite])
        out[finite] += _plackett_integral(hh[finite], kk[finite], upper)
        # Frechet bounds absorb last-ulp quadrature noise
        lower_bound = np.maximum(0.0, ph[finite] + pk[finite] - 1.0)
        upper_bound = np.minimum(ph[finite], pk[finite])
        out[finite] = np.clip(out[finite], lower_bound, upper_bound)

    shape = np.broadcast(np.asarray(h), np.asarray(k), np.asarray(rho)).shape
    if shape == ():
        return float(out[0])
    return out.reshape(shape)
