# src/pipeline/experiment.py

"""
Command-level workflows: generate a graph, fit it, run a Monte Carlo
consistency study, and write a diagnostic report for a fitted graph.
"""

import hashlib
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import linalg
from sklearn.linear_model import LinearRegression

from src.features.graph_stats import degree_deviation, degree_summary
from src.models.correlation_fit import estimate_sigma_common
from src.models.evaluate import (
    concentration_threshold,
    consistency_rate,
    dependence_regime,
    diag_inverse_approx,
    inverse_approx_error_bound,
    jacobian_class_params,
    lipschitz_bound,
    matrix_class_check,
)
from src.models.moment_fit import (
    FitOptions,
    FitReport,
    fit_alpha,
    initial_alpha,
    jacobian,
    kantorovich_report,
    q_hat,
)
from src.pipeline.edge_list import read_edge_list, save_edge_list
from src.simulation.covariance import spec_from_config, spec_to_config, validate
from src.simulation.generate_network import NodeParams, generate_graph
from src.utils.config_loader import ExperimentConfig
from src.utils.errors import (
    ConfigError,
    InvalidInputError,
    NoConvergenceError,
    ProbitNetworkError,
    SingularMatrixError,
)
from src.utils.random_streams import replication_seed, replication_stream
from src.utils.utils import banner, read_json, write_json

logger = logging.getLogger(__name__)

RESULT_COLUMNS = [
    'n', 'rep', 'seed', 'max_abs_error', 'mean_abs_error', 'iterations',
    'converged', 'sigma_hat', 'q_true', 'runtime_ms', 'error',
]
NONDETERMINISTIC_COLUMNS = ['runtime_ms']
DIGEST_PREFIX = '# digest sha256 '


# ==================== ALPHA GENERATION ====================

def draw_alpha(alpha_gen, n, rng):
    """
    True node parameters for one replication.

    Parameters:
    -----------
    alpha_gen : dict
        {'kind': 'constant', 'value'} | {'kind': 'uniform', 'low', 'high'} |
        {'kind': 'explicit', 'values'}
    n : int
    rng : numpy.random.Generator
        Only the uniform generator draws from it

    Returns:
    --------
    np.ndarray of length n
    """
    kind = alpha_gen.get('kind')
    if kind == 'constant':
        return np.full(n, float(alpha_gen['value']))
    if kind == 'uniform':
        return rng.uniform(float(alpha_gen['low']), float(alpha_gen['high']), size=n)
    if kind == 'explicit':
        values = np.asarray(alpha_gen['values'], dtype=float)
        if values.shape != (n,):
            raise ConfigError(f"explicit alpha has {values.size} values, n={n}")
        return values
    raise ConfigError(f"unknown alpha generator '{kind}'")


def _validated_covariance(config, n):
    spec = spec_from_config(config.covariance, n)
    return validate(spec, n, dense_cap=config.dense_cap)


# ==================== GENERATE / FIT ====================

def sidecar_path(out):
    """Path of the JSON record written next to a generated edge list."""
    return Path(f"{out}.json")


def run_generate(config, out, seed=None):
    """
    Draw one graph and write it as an edge list with a JSON sidecar.

    The stream is the one replication 0 of an experiment with the same
    master seed and n uses, so a generated graph can be re-fitted by hand.

    Parameters:
    -----------
    config : ExperimentConfig
        The first entry of n_list is the network size
    out : str or Path
        Edge-list destination; the sidecar goes to '<out>.json'
    seed : int, optional
        Overrides config.master_seed

    Returns:
    --------
    (Graph, dict sidecar)
    """
    n = config.n_list[0]
    seed = config.master_seed if seed is None else int(seed)
    cov = _validated_covariance(config, n)
    rng = replication_stream(seed, n, 0)
    alpha = draw_alpha(config.alpha_gen, n, rng)
    graph = generate_graph(NodeParams(alpha), cov, rng)

    save_edge_list(graph, out)
    sidecar = {
        'n': n,
        'seed': seed,
        'alpha': alpha,
        'covariance': spec_to_config(cov.spec),
        'regime': dependence_regime(cov.spec, n),
        'edges': graph.num_edges,
    }
    write_json(sidecar, sidecar_path(out))
    logger.info("generated n=%d graph with %d edges -> %s", n, graph.num_edges, out)
    return graph, sidecar


def run_fit(edges_path, out, opts=None):
    """
    Fit stage-1 node parameters to an edge-list file.

    Parameters:
    -----------
    edges_path : str or Path
    out : str or Path
        JSON destination for the FitReport (plus n and degrees)
    opts : FitOptions, optional

    Returns:
    --------
    FitReport
    """
    graph = read_edge_list(edges_path)
    report = fit_alpha(graph.degrees, opts or FitOptions())
    data = report.to_dict()
    data['n'] = graph.n
    data['degrees'] = graph.degrees
    write_json(data, out)
    logger.info(
        "fit n=%d in %d iterations (max residual %.3e, q_hat %.4f) -> %s",
        graph.n, report.iterations, report.max_residual, report.q_hat, out,
    )
    return report


# ==================== EXPERIMENT ====================

def _empty_row(n, rep, seed):
    return {
        'n': n,
        'rep': rep,
        'seed': seed,
        'max_abs_error': np.nan,
        'mean_abs_error': np.nan,
        'iterations': 0,
        'converged': False,
        'sigma_hat': np.nan,
        'q_true': np.nan,
        'runtime_ms': np.nan,
        'error': '',
    }


def run_replication(config, n, rep, cov=None):
    """
    One replication: draw alpha*, generate, fit, score.

    Failures are recorded in the row ('converged' False, 'error' = error
    code) instead of raised.

    Returns:
    --------
    dict with the RESULT_COLUMNS keys
    """
    seed = replication_seed(config.master_seed, n, rep)
    row = _empty_row(n, rep, seed)
    start = time.perf_counter()
    try:
        if cov is None:
            cov = _validated_covariance(config, n)
        rng = replication_stream(config.master_seed, n, rep)
        alpha_true = draw_alpha(config.alpha_gen, n, rng)
        row['q_true'] = q_hat(alpha_true)
        graph = generate_graph(NodeParams(alpha_true), cov, rng)

        report = fit_alpha(graph.degrees, config.fit, with_kantorovich=False)
        errors = np.abs(report.alpha_hat - alpha_true)
        row['max_abs_error'] = float(errors.max())
        row['mean_abs_error'] = float(errors.mean())
        row['iterations'] = report.iterations
        row['converged'] = True

        if config.estimate_sigma:
            row['sigma_hat'] = estimate_sigma_common(graph, report.alpha_hat, config.sigma)
    except NoConvergenceError as e:
        if e.best is not None:
            row['iterations'] = e.best.iterations
        row['error'] = e.code
        logger.warning("n=%d rep=%d: %s", n, rep, e.message)
    except ProbitNetworkError as e:
        row['error'] = e.code
        logger.warning("n=%d rep=%d: %s", n, rep, e.message)
    row['runtime_ms'] = 1000.0 * (time.perf_counter() - start)
    return row


def _run_replication_task(args):
    return run_replication(*args)


def results_digest(results):
    """SHA-256 of the CSV body with the runtime column removed."""
    stable = results.drop(columns=NONDETERMINISTIC_COLUMNS)
    body = stable.to_csv(index=False, lineterminator='\n')
    return hashlib.sha256(body.encode('utf-8')).hexdigest()


def log_log_slope(n_values, errors):
    """
    Least-squares slope of log(error) on log(n); NaN with fewer than two usable points.
    """
    n_values = np.asarray(n_values, dtype=float)
    errors = np.asarray(errors, dtype=float)
    usable = np.isfinite(errors) & (errors > 0)
    if usable.sum() < 2:
        return float('nan')
    model = LinearRegression()
    model.fit(np.log(n_values[usable]).reshape(-1, 1), np.log(errors[usable]))
    return float(model.coef_[0])


def summarize_results(results):
    """
    Per-n medians and the log-log slope of the median sup-norm error.

    Returns:
    --------
    dict with 'per_n' (list of dicts), 'slope', 'replications', 'failures'
    """
    per_n = []
    for n, group in results.groupby('n', sort=True):
        converged = group[group['converged'].astype(bool)]
        median_q = float(group['q_true'].median())
        per_n.append({
            'n': int(n),
            'replications': int(len(group)),
            'converged': int(len(converged)),
            'median_max_abs_error': float(converged['max_abs_error'].median()) if len(converged) else np.nan,
            'median_mean_abs_error': float(converged['mean_abs_error'].median()) if len(converged) else np.nan,
            'mean_iterations': float(converged['iterations'].mean()) if len(converged) else np.nan,
            'median_q_true': median_q,
            'predicted_rate': consistency_rate(int(n), median_q) if np.isfinite(median_q) else np.nan,
            'median_sigma_hat': float(converged['sigma_hat'].median()) if len(converged) else np.nan,
        })
    frame = pd.DataFrame(per_n)
    slope = log_log_slope(frame['n'], frame['median_max_abs_error']) if len(frame) else float('nan')
    return {
        'per_n': per_n,
        'slope': slope,
        'replications': int(len(results)),
        'failures': int((~results['converged'].astype(bool)).sum()),
    }


def write_results(results, out_csv):
    """
    Write the results table followed by a '# digest sha256 <hex>' footer line.

    Returns:
    --------
    str digest
    """
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    digest = results_digest(results)
    body = results.to_csv(index=False, lineterminator='\n')
    out_csv.write_bytes((body + f"{DIGEST_PREFIX}{digest}\n").encode('utf-8'))
    return digest


def read_results(path):
    """Read a results CSV written by write_results (the footer is skipped)."""
    return pd.read_csv(path, comment='#', keep_default_na=True)


def run_experiment(config, out_csv=None, workers=None):
    """
    Monte Carlo study of ||alpha_hat - alpha*||_inf across network sizes.

    Each replication (n, rep) uses its own stream split from
    (master_seed, n, rep), so rows do not depend on the number of workers.

    Parameters:
    -----------
    config : ExperimentConfig
    out_csv : str or Path, optional
        Results CSV; the summary goes to the same stem with '.summary.json'
    workers : int, optional
        Overrides config.workers

    Returns:
    --------
    (pd.DataFrame results ordered by (n, rep), dict summary)
    """
    if not isinstance(config, ExperimentConfig):
        raise ConfigError("run_experiment needs an ExperimentConfig")
    workers = config.workers if workers is None else int(workers)
    if workers < 1:
        raise ConfigError("workers must be at least 1")

    covariances = {n: _validated_covariance(config, n) for n in config.n_list}
    tasks = [(config, n, rep, covariances[n]) for n in config.n_list for rep in range(config.replications)]
    logger.info(
        "running %d replications over n=%s with %d worker(s)",
        len(tasks), config.n_list, workers,
    )

    if workers == 1:
        rows = [_run_replication_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_replication_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))

    results = pd.DataFrame(rows, columns=RESULT_COLUMNS)
    results = results.sort_values(['n', 'rep'], kind='mergesort').reset_index(drop=True)
    summary = summarize_results(results)
    summary['digest'] = results_digest(results)

    logger.info(banner("Experiment summary"))
    for entry in summary['per_n']:
        logger.info(
            "n=%5d  converged %d/%d  median ||error||_inf %.5f  (rate n^-1/2 e^{3q^2} = %.5f)",
            entry['n'], entry['converged'], entry['replications'],
            entry['median_max_abs_error'], entry['predicted_rate'],
        )
    logger.info("log-log slope of median error: %.4f", summary['slope'])

    if out_csv is not None:
        write_results(results, out_csv)
        out_csv = Path(out_csv)
        summary_path = out_csv.with_name(f"{out_csv.stem}.summary.json")
        write_json(summary, summary_path)
        logger.info("results saved to %s (summary %s)", out_csv, summary_path)
    return results, summary


# ==================== DIAGNOSE ====================

def _kantorovich_block(alpha, degrees):
    try:
        return kantorovich_report(alpha, degrees).to_dict()
    except SingularMatrixError as e:
        return e.to_dict()


def run_diagnose(edges_path, fit_path, out):
    """
    Theory diagnostics for a fitted graph.

    Parameters:
    -----------
    edges_path : str or Path
        Edge list that was fitted
    fit_path : str or Path
        JSON written by run_fit
    out : str or Path
        JSON destination

    Returns:
    --------
    dict
    """
    graph = read_edge_list(edges_path)
    report = FitReport.from_dict(read_json(fit_path))
    alpha = report.alpha_hat
    if alpha.size != graph.n:
        raise InvalidInputError(f"fit has {alpha.size} parameters, graph has n={graph.n}")
    n = graph.n
    degrees = graph.degrees.astype(float)

    J = jacobian(alpha)
    params = jacobian_class_params(report.q_hat)
    try:
        observed_gap = float(np.max(np.abs(linalg.inv(J) - diag_inverse_approx(J))))
    except (linalg.LinAlgError, ValueError):
        observed_gap = float('nan')

    diagnostics = {
        'degree_summary': degree_summary(graph),
        'q_hat': report.q_hat,
        'class_params': {'m': params.m, 'M': params.M},
        'jacobian_in_class': matrix_class_check(J, params),
        'inverse_approximation': {
            'bound': inverse_approx_error_bound(n, params.m, params.M) if n >= 3 else None,
            'observed': observed_gap,
        },
        'lipschitz_bound': lipschitz_bound(n),
        'kantorovich_at_estimate': _kantorovich_block(alpha, degrees),
        'kantorovich_at_start': _kantorovich_block(initial_alpha(degrees), degrees),
        'concentration_threshold': concentration_threshold(n),
        'degree_deviation': degree_deviation(graph, alpha),
        'consistency_rate': consistency_rate(n, report.q_hat),
    }
    write_json(diagnostics, out)
    logger.info("diagnostics for n=%d written to %s", n, out)
    return diagnostics
