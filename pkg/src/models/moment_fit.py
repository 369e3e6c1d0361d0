# src/models/moment_fit.py

"""
Stage-1 moment estimation of the node parameters.

Solves the degree equations d_i = sum_{j != i} Phi(alpha_i + alpha_j) with
Newton's method. The Jacobian used throughout is J = -F'(alpha), which is
diagonally balanced with positive entries, so the Newton update reads
alpha <- alpha + J^{-1} F(alpha).
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg, special

from src.models.evaluate import lipschitz_bound
from src.utils.errors import (
    BoundaryDegreeError,
    InvalidInputError,
    NoConvergenceError,
    SingularMatrixError,
)

logger = logging.getLogger(__name__)

SOLVER_ALIASES = {
    'exact': 'exact',
    'exact-jacobian': 'exact',
    'diag': 'diag',
    'diagonal-approx': 'diag',
}


@dataclass
class FitOptions:
    """
    Newton solver settings.

    Attributes:
    -----------
    solver : str
        'exact' (solve with J) or 'diag' (apply S = diag(1/J_ii))
    tol_residual : float
        Convergence threshold on max_i |F_i|
    tol_step : float
        Stall threshold on the accepted step length
    max_iters : int
    damping : float
        Initial step fraction in (0, 1]; halved while the residual increases
    diag_relaxation : float
        Extra factor on the diagonal step (S J has eigenvalue 2 along the ones vector)
    boundary_epsilon : float
        Clamp for d_i/(n-1) before the quantile at initialization
    max_halvings : int
        Line-search budget per iteration
    """
    solver: str = 'exact'
    tol_residual: float = 1e-8
    tol_step: float = 1e-10
    max_iters: int = 100
    damping: float = 1.0
    diag_relaxation: float = 2.0 / 3.0
    boundary_epsilon: float = 1e-9
    max_halvings: int = 40

    def __post_init__(self):
        if self.solver not in SOLVER_ALIASES:
            raise InvalidInputError(f"unknown solver '{self.solver}'")
        self.solver = SOLVER_ALIASES[self.solver]
        if self.tol_residual <= 0 or self.tol_step <= 0:
            raise InvalidInputError("tolerances must be positive")
        if int(self.max_iters) < 1:
            raise InvalidInputError("max_iters must be at least 1")
        self.max_iters = int(self.max_iters)
        if not 0 < self.damping <= 1:
            raise InvalidInputError("damping must lie in (0, 1]")
        if not 0 < self.diag_relaxation <= 1:
            raise InvalidInputError("diag_relaxation must lie in (0, 1]")
        if not 0 < self.boundary_epsilon < 0.5:
            raise InvalidInputError("boundary_epsilon must lie in (0, 0.5)")
        if int(self.max_halvings) < 1:
            raise InvalidInputError("max_halvings must be at least 1")
        self.max_halvings = int(self.max_halvings)


@dataclass
class KantorovichReport:
    """Newton-Kantorovich quantities at a starting point."""
    aleph: float
    delta: float
    rho: float
    t_star: float
    lam: float
    certified: bool

    def to_dict(self):
        out = asdict(self)
        out['lambda'] = out.pop('lam')
        return out


@dataclass
class FitReport:
    """
    Result of fit_alpha.

    q_hat is max_{i<j} |alpha_hat_i + alpha_hat_j|, the smallest Q with
    alpha_hat in Theta(Q).
    """
    alpha_hat: np.ndarray
    converged: bool
    iterations: int
    max_residual: float
    q_hat: float
    solver: str = 'exact'
    kantorovich: KantorovichReport = None
    residual_trace: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return {
            'alpha_hat': [float(a) for a in self.alpha_hat],
            'converged': bool(self.converged),
            'iterations': int(self.iterations),
            'max_residual': float(self.max_residual),
            'q_hat': float(self.q_hat),
            'solver': self.solver,
            'kantorovich': self.kantorovich.to_dict() if self.kantorovich else None,
            'residual_trace': [float(r) for r in self.residual_trace],
            'warnings': list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data):
        kantorovich = data.get('kantorovich')
        if kantorovich is not None:
            kantorovich = dict(kantorovich)
            kantorovich['lam'] = kantorovich.pop('lambda')
            # JSON null stands for a NaN radius
            if kantorovich.get('t_star') is None:
                kantorovich['t_star'] = float('nan')
            kantorovich = KantorovichReport(**kantorovich)
        return cls(
            alpha_hat=np.asarray(data['alpha_hat'], dtype=float),
            converged=bool(data['converged']),
            iterations=int(data['iterations']),
            max_residual=float(data['max_residual']),
            q_hat=float(data['q_hat']),
            solver=data.get('solver', 'exact'),
            kantorovich=kantorovich,
            residual_trace=list(data.get('residual_trace', [])),
            warnings=list(data.get('warnings', [])),
        )


def _as_vector(values, name):
    vector = np.asarray(values, dtype=float).ravel()
    if vector.size < 2:
        raise InvalidInputError(f"{name} needs at least 2 entries")
    if not np.all(np.isfinite(vector)):
        raise InvalidInputError(f"{name} must be finite")
    return vector


def pair_sums(alpha):
    """Matrix of alpha_i + alpha_j."""
    alpha = np.asarray(alpha, dtype=float)
    return alpha[:, None] + alpha[None, :]


def q_hat(alpha):
    """max_{i<j} |alpha_i + alpha_j|."""
    sums = np.abs(pair_sums(alpha))
    return float(sums[np.triu_indices(len(alpha), k=1)].max())


def moment_residual(alpha, target_degrees):
    """
    F_i(alpha) = d_i - sum_{j != i} Phi(alpha_i + alpha_j).

    Parameters:
    -----------
    alpha : array_like, length n
    target_degrees : array_like, length n
        Observed (or synthetic, possibly fractional) degrees

    Returns:
    --------
    np.ndarray of length n
    """
    alpha = _as_vector(alpha, 'alpha')
    degrees = _as_vector(target_degrees, 'target_degrees')
    if alpha.shape != degrees.shape:
        raise InvalidInputError(f"alpha has length {alpha.size}, degrees have length {degrees.size}")
    prob = special.ndtr(pair_sums(alpha))
    np.fill_diagonal(prob, 0.0)
    return degrees - prob.sum(axis=1)


def jacobian(alpha):
    """
    J = -F'(alpha): J_ij = phi(alpha_i + alpha_j), J_ii = sum_{j != i} J_ij.

    Returns:
    --------
    np.ndarray of shape (n, n)
    """
    alpha = _as_vector(alpha, 'alpha')
    sums = pair_sums(alpha)
    matrix = np.exp(-0.5 * sums * sums) / np.sqrt(2.0 * np.pi)
    np.fill_diagonal(matrix, 0.0)
    np.fill_diagonal(matrix, matrix.sum(axis=1))
    return matrix


def initial_alpha(degrees, boundary_epsilon=1e-9):
    """alpha_i = Phi^{-1}(d_i/(n-1)) / 2 with the ratio clamped away from 0 and 1."""
    degrees = _as_vector(degrees, 'degrees')
    ratio = np.clip(degrees / (degrees.size - 1), boundary_epsilon, 1.0 - boundary_epsilon)
    return 0.5 * special.ndtri(ratio)


def check_interior(degrees):
    """
    Reject degree sequences with a node at 0 or n-1 (no finite solution).
    """
    degrees = _as_vector(degrees, 'degrees')
    top = degrees.size - 1
    outside = np.nonzero((degrees < 0) | (degrees > top))[0]
    if outside.size:
        node = int(outside[0])
        raise InvalidInputError(f"degree of node {node} is {degrees[node]}, outside [0, {top}]", node=node)
    boundary = np.nonzero((degrees == 0) | (degrees == top))[0]
    if boundary.size:
        node = int(boundary[0])
        raise BoundaryDegreeError(
            f"node {node} has boundary degree {degrees[node]:g} (0 or n-1 = {top})",
            node=node,
        )
    return degrees


def _newton_direction(alpha, residual, solver):
    J = jacobian(alpha)
    if solver == 'diag':
        return residual / np.diag(J)
    try:
        return linalg.solve(J, residual, assume_a='sym')
    except (linalg.LinAlgError, ValueError) as e:
        raise SingularMatrixError(f"Jacobian is singular: {e}") from e


def fit_alpha(degrees, opts=None, alpha0=None, with_kantorovich=True):
    """
    Solve the degree moment equations.

    Parameters:
    -----------
    degrees : array_like
        Target degrees, 0 < d_i < n-1 (fractional values allowed)
    opts : FitOptions, optional
    alpha0 : array_like, optional
        Starting point; defaults to initial_alpha(degrees)
    with_kantorovich : bool
        Attach the Newton-Kantorovich quantities at the starting point

    Returns:
    --------
    FitReport
    """
    opts = opts or FitOptions()
    degrees = check_interior(degrees)
    alpha = initial_alpha(degrees, opts.boundary_epsilon) if alpha0 is None else _as_vector(alpha0, 'alpha0')
    start = alpha.copy()

    residual = moment_residual(alpha, degrees)
    norm = float(np.max(np.abs(residual)))
    trace = [norm]
    best_alpha, best_norm = alpha, norm
    iterations = 0
    step_factor = opts.damping * (opts.diag_relaxation if opts.solver == 'diag' else 1.0)

    while norm > opts.tol_residual and iterations < opts.max_iters:
        direction = _newton_direction(alpha, residual, opts.solver)
        lam = step_factor
        accepted = False
        for _ in range(opts.max_halvings):
            trial = alpha + lam * direction
            trial_residual = moment_residual(trial, degrees)
            trial_norm = float(np.max(np.abs(trial_residual)))
            if trial_norm <= norm:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            logger.debug("line search found no decrease after %d halvings; keeping iterate %d",
                         opts.max_halvings, iterations)
            break
        step = lam * float(np.max(np.abs(direction)))
        alpha, residual, norm = trial, trial_residual, trial_norm
        iterations += 1
        trace.append(norm)
        logger.debug("newton iter %d: max residual %.3e, step %.3e", iterations, norm, step)
        if norm < best_norm:
            best_alpha, best_norm = alpha, norm
        if step <= opts.tol_step and norm > opts.tol_residual:
            logger.debug("newton stalled at iteration %d", iterations)
            break

    converged = norm <= opts.tol_residual
    kantorovich = None
    if with_kantorovich:
        try:
            kantorovich = kantorovich_report(start, degrees)
        except SingularMatrixError:
            logger.warning("Jacobian at the starting point is singular; no Kantorovich block")

    if not converged:
        best = FitReport(
            alpha_hat=best_alpha,
            converged=False,
            iterations=iterations,
            max_residual=best_norm,
            q_hat=q_hat(best_alpha),
            solver=opts.solver,
            kantorovich=kantorovich,
            residual_trace=trace,
        )
        raise NoConvergenceError(
            f"Newton did not reach max residual {opts.tol_residual:g} in {iterations} iterations "
            f"(best {best_norm:.3e})",
            best=best,
        )

    logger.debug("fit converged in %d iterations (max residual %.3e)", iterations, norm)
    return FitReport(
        alpha_hat=alpha,
        converged=True,
        iterations=iterations,
        max_residual=norm,
        q_hat=q_hat(alpha),
        solver=opts.solver,
        kantorovich=kantorovich,
        residual_trace=trace,
    )


def kantorovich_report(alpha0, degrees):
    """
    Newton-Kantorovich quantities at alpha0.

    aleph = ||F'(x0)^{-1}||_inf, delta = ||F'(x0)^{-1} F(x0)||_inf,
    rho = 2 aleph lambda delta with lambda = (n-1) sqrt(2/(e pi)), and the
    radius t* = 2 delta / (1 + sqrt(1 - rho)) when rho <= 1.

    When rho > 1 the Kantorovich condition fails, no radius exists and t_star
    is NaN; the report is still returned so the other quantities can be read.

    Returns:
    --------
    KantorovichReport
    """
    alpha0 = _as_vector(alpha0, 'alpha0')
    residual = moment_residual(alpha0, degrees)
    J = jacobian(alpha0)
    try:
        inverse = linalg.inv(J)
    except (linalg.LinAlgError, ValueError) as e:
        raise SingularMatrixError(f"Jacobian is singular: {e}") from e
    if not np.all(np.isfinite(inverse)):
        raise SingularMatrixError("Jacobian inverse is not finite")

    aleph = float(np.max(np.abs(inverse).sum(axis=1)))
    delta = float(np.max(np.abs(inverse @ residual)))
    lam = lipschitz_bound(alpha0.size)
    rho = 2.0 * aleph * lam * delta
    certified = rho <= 1.0
    t_star = 2.0 * delta / (1.0 + np.sqrt(1.0 - rho)) if certified else float('nan')
    return KantorovichReport(
        aleph=aleph, delta=delta, rho=rho, t_star=float(t_star), lam=lam, certified=bool(certified)
    )
