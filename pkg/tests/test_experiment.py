import numpy as np
import pandas as pd
import pytest

from src.models.moment_fit import FitReport
from src.pipeline.edge_list import read_edge_list, save_edge_list
from src.pipeline.experiment import (
    DIGEST_PREFIX,
    RESULT_COLUMNS,
    draw_alpha,
    log_log_slope,
    read_results,
    results_digest,
    run_diagnose,
    run_experiment,
    run_fit,
    run_generate,
    run_replication,
    sidecar_path,
    summarize_results,
)
from src.simulation.generate_network import Graph
from src.utils.config_loader import experiment_config_from_dict
from src.utils.errors import BoundaryDegreeError, ConfigError, InvalidInputError
from src.utils.random_streams import make_stream, replication_seed
from src.utils.utils import read_json

C6_ALPHA = -0.12667355156789985


def make_config(**values):
    data = {
        'n_list': [10],
        'replications': 1,
        'master_seed': 7,
        'alpha_gen': {'kind': 'constant', 'value': 0.0},
        'covariance': {'kind': 'independent'},
    }
    data.update(values)
    return experiment_config_from_dict(data, defaults={})


def cycle(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


# ==================== ALPHA GENERATION ====================

def test_draw_alpha_kinds():
    rng = make_stream(0)
    np.testing.assert_array_equal(draw_alpha({'kind': 'constant', 'value': 0.3}, 4, rng), [0.3] * 4)
    uniform = draw_alpha({'kind': 'uniform', 'low': -0.5, 'high': 0.5}, 50, rng)
    assert uniform.shape == (50,)
    assert np.all((uniform >= -0.5) & (uniform <= 0.5))
    np.testing.assert_array_equal(draw_alpha({'kind': 'explicit', 'values': [1, 2, 3]}, 3, rng), [1, 2, 3])


def test_draw_alpha_explicit_length_mismatch():
    with pytest.raises(ConfigError):
        draw_alpha({'kind': 'explicit', 'values': [1, 2]}, 3, make_stream(0))


# ==================== GENERATE ====================

def test_generate_is_deterministic(tmp_path):
    config = make_config(alpha_gen={'kind': 'uniform', 'low': -0.5, 'high': 0.5}, n_list=[30])
    graph_a, sidecar_a = run_generate(config, tmp_path / 'a.txt', seed=42)
    graph_b, sidecar_b = run_generate(config, tmp_path / 'b.txt', seed=42)
    assert (tmp_path / 'a.txt').read_bytes() == (tmp_path / 'b.txt').read_bytes()
    np.testing.assert_array_equal(graph_a.adjacency, graph_b.adjacency)
    assert sidecar_a['edges'] == sidecar_b['edges']
    assert read_json(sidecar_path(tmp_path / 'a.txt'))['seed'] == 42


def test_generate_seed_changes_graph(tmp_path):
    config = make_config(n_list=[40])
    graph_a, _ = run_generate(config, tmp_path / 'a.txt', seed=1)
    graph_b, _ = run_generate(config, tmp_path / 'b.txt', seed=2)
    assert not np.array_equal(graph_a.adjacency, graph_b.adjacency)


def test_generate_saturated_extremes(tmp_path):
    full, _ = run_generate(make_config(alpha_gen={'kind': 'constant', 'value': 10.0}), tmp_path / 'full.txt')
    assert full.num_edges == 45
    empty, _ = run_generate(make_config(alpha_gen={'kind': 'constant', 'value': -10.0}), tmp_path / 'empty.txt')
    assert empty.num_edges == 0
    assert (tmp_path / 'empty.txt').read_text() == "n 10\n"


def test_generate_sidecar_contents(tmp_path):
    config = make_config(covariance={'kind': 'power_decay', 'sigma0': 0.3})
    _, sidecar = run_generate(config, tmp_path / 'g.txt')
    stored = read_json(sidecar_path(tmp_path / 'g.txt'))
    assert stored['n'] == 10
    assert stored['covariance'] == {'kind': 'power_decay', 'sigma0': 0.3}
    assert len(stored['alpha']) == 10
    assert stored['edges'] == read_edge_list(tmp_path / 'g.txt').num_edges


# ==================== FIT ====================

def test_fit_regular_graph_gives_zero(tmp_path):
    # circulant graph on 9 nodes with offsets 1 and 2: every degree is 4 = (n-1)/2
    graph = Graph.from_edges(9, [(i, (i + k) % 9) for i in range(9) for k in (1, 2)])
    save_edge_list(graph, tmp_path / 'g.txt')
    report = run_fit(tmp_path / 'g.txt', tmp_path / 'fit.json')
    np.testing.assert_allclose(report.alpha_hat, 0.0, atol=1e-8)
    stored = read_json(tmp_path / 'fit.json')
    assert stored['n'] == 9
    assert stored['degrees'] == [4] * 9
    assert stored['converged'] is True


def test_fit_cycle_value(tmp_path):
    save_edge_list(cycle(6), tmp_path / 'c6.txt')
    report = run_fit(tmp_path / 'c6.txt', tmp_path / 'fit.json')
    np.testing.assert_allclose(report.alpha_hat, C6_ALPHA, atol=1e-8)


def test_fit_star_has_boundary_degree(tmp_path):
    save_edge_list(Graph.from_edges(5, [(0, k) for k in range(1, 5)]), tmp_path / 'star.txt')
    with pytest.raises(BoundaryDegreeError) as info:
        run_fit(tmp_path / 'star.txt', tmp_path / 'fit.json')
    assert info.value.node == 0
    assert not (tmp_path / 'fit.json').exists()


def test_fit_report_file_round_trips(tmp_path):
    save_edge_list(cycle(7), tmp_path / 'c7.txt')
    report = run_fit(tmp_path / 'c7.txt', tmp_path / 'fit.json')
    loaded = FitReport.from_dict(read_json(tmp_path / 'fit.json'))
    np.testing.assert_allclose(loaded.alpha_hat, report.alpha_hat)
    assert loaded.iterations == report.iterations


# ==================== EXPERIMENT ====================

def test_replication_row_fields():
    config = make_config(n_list=[40], alpha_gen={'kind': 'uniform', 'low': -0.3, 'high': 0.3})
    row = run_replication(config, 40, 0)
    assert set(row) == set(RESULT_COLUMNS)
    assert row['seed'] == replication_seed(7, 40, 0)
    assert row['converged']
    assert row['error'] == ''
    assert row['max_abs_error'] >= row['mean_abs_error'] > 0
    assert row['q_true'] <= 0.6


def test_experiment_is_deterministic(tmp_path):
    config = make_config(n_list=[30, 60], replications=2)
    results_a, summary_a = run_experiment(config, tmp_path / 'a.csv')
    results_b, summary_b = run_experiment(config, tmp_path / 'b.csv')
    assert summary_a['digest'] == summary_b['digest']
    stable = [c for c in RESULT_COLUMNS if c != 'runtime_ms']
    pd.testing.assert_frame_equal(results_a[stable], results_b[stable])
    assert list(results_a['n']) == [30, 30, 60, 60]
    assert list(results_a['rep']) == [0, 1, 0, 1]


def test_experiment_rows_do_not_depend_on_workers():
    config = make_config(n_list=[20, 30], replications=3, alpha_gen={'kind': 'uniform', 'low': -0.4, 'high': 0.4})
    serial, summary_serial = run_experiment(config, workers=1)
    parallel, summary_parallel = run_experiment(config, workers=2)
    assert summary_serial['digest'] == summary_parallel['digest']
    stable = [c for c in RESULT_COLUMNS if c != 'runtime_ms']
    pd.testing.assert_frame_equal(serial[stable], parallel[stable])


def test_experiment_records_boundary_failures():
    config = make_config(alpha_gen={'kind': 'constant', 'value': 10.0})
    results, summary = run_experiment(config)
    row = results.iloc[0]
    assert not row['converged']
    assert row['error'] == 'boundary-degree'
    assert np.isnan(row['max_abs_error'])
    assert summary['failures'] == 1


def test_experiment_with_sigma_estimate():
    config = make_config(
        n_list=[30],
        covariance={'kind': 'power_decay', 'sigma0': 0.3},
        alpha_gen={'kind': 'uniform', 'low': -0.3, 'high': 0.3},
        estimate_sigma=True,
    )
    results, _ = run_experiment(config)
    row = results.iloc[0]
    assert row['converged']
    if row['error'] == '':
        assert -1.0 < row['sigma_hat'] < 1.0
    else:
        assert row['error'] == 'boundary-estimate'
        assert np.isnan(row['sigma_hat'])


def test_results_file_has_digest_footer(tmp_path):
    config = make_config(n_list=[20], replications=2)
    results, summary = run_experiment(config, tmp_path / 'study.csv')
    text = (tmp_path / 'study.csv').read_text()
    assert text.splitlines()[0] == ','.join(RESULT_COLUMNS)
    assert text.splitlines()[-1] == f"{DIGEST_PREFIX}{summary['digest']}"
    loaded = read_results(tmp_path / 'study.csv')
    assert len(loaded) == 2
    np.testing.assert_allclose(loaded['max_abs_error'], results['max_abs_error'])
    assert (tmp_path / 'study.summary.json').exists()


def test_digest_ignores_runtime():
    config = make_config(n_list=[20])
    results, _ = run_experiment(config)
    shifted = results.copy()
    shifted['runtime_ms'] = shifted['runtime_ms'] + 1000.0
    assert results_digest(shifted) == results_digest(results)


# ==================== SUMMARY ====================

def test_log_log_slope_of_power_law():
    n = np.array([100, 200, 400, 800])
    assert log_log_slope(n, 3.0 * n ** -0.5) == pytest.approx(-0.5)


def test_log_log_slope_needs_two_points():
    assert np.isnan(log_log_slope([100], [0.1]))
    assert np.isnan(log_log_slope([100, 200], [0.1, np.nan]))


def test_summarize_results_per_n():
    frame = pd.DataFrame({
        'n': [100, 100, 400, 400],
        'rep': [0, 1, 0, 1],
        'max_abs_error': [0.2, 0.4, 0.1, 0.2],
        'mean_abs_error': [0.1, 0.2, 0.05, 0.1],
        'iterations': [4, 4, 5, 5],
        'converged': [True, True, True, True],
        'sigma_hat': [np.nan] * 4,
        'q_true': [0.5, 0.5, 0.5, 0.5],
    })
    summary = summarize_results(frame)
    assert [entry['n'] for entry in summary['per_n']] == [100, 400]
    assert summary['per_n'][0]['median_max_abs_error'] == pytest.approx(0.3)
    assert summary['slope'] == pytest.approx(-0.5)
    assert summary['failures'] == 0


# ==================== DIAGNOSE ====================

def test_diagnose_report(tmp_path):
    config = make_config(n_list=[30], alpha_gen={'kind': 'uniform', 'low': -0.3, 'high': 0.3})
    run_generate(config, tmp_path / 'g.txt')
    run_fit(tmp_path / 'g.txt', tmp_path / 'fit.json')
    report = run_diagnose(tmp_path / 'g.txt', tmp_path / 'fit.json', tmp_path / 'diag.json')
    for key in (
        'degree_summary', 'q_hat', 'class_params', 'jacobian_in_class', 'inverse_approximation',
        'lipschitz_bound', 'kantorovich_at_estimate', 'kantorovich_at_start',
        'concentration_threshold', 'degree_deviation', 'consistency_rate',
    ):
        assert key in report
    assert report['jacobian_in_class']
    assert report['inverse_approximation']['observed'] <= report['inverse_approximation']['bound']
    assert report['kantorovich_at_estimate']['delta'] < 1e-6
    assert read_json(tmp_path / 'diag.json')['q_hat'] == pytest.approx(report['q_hat'])


def test_diagnose_rejects_mismatched_fit(tmp_path):
    save_edge_list(cycle(6), tmp_path / 'c6.txt')
    save_edge_list(cycle(7), tmp_path / 'c7.txt')
    run_fit(tmp_path / 'c7.txt', tmp_path / 'fit.json')
    with pytest.raises(InvalidInputError):
        run_diagnose(tmp_path / 'c6.txt', tmp_path / 'fit.json', tmp_path / 'diag.json')
