import json

import pytest

from src.pipeline.cli import main
from src.utils.utils import read_json

STUDY = {
    'n_list': [20],
    'replications': 2,
    'master_seed': 5,
    'alpha_gen': {'kind': 'uniform', 'low': -0.3, 'high': 0.3},
    'covariance': {'kind': 'independent'},
}


def error_payload(capsys):
    err = capsys.readouterr().err
    lines = [line for line in err.splitlines() if line.startswith('{')]
    assert lines, err
    return json.loads(lines[-1])


@pytest.fixture
def study_path(tmp_path):
    path = tmp_path / 'study.json'
    path.write_text(json.dumps(STUDY))
    return path


def test_generate_fit_diagnose(tmp_path, study_path):
    edges, fit, diag = tmp_path / 'g.txt', tmp_path / 'fit.json', tmp_path / 'diag.json'
    assert main(['generate', '--config', str(study_path), '--out', str(edges), '--seed', '9']) == 0
    assert edges.read_text().startswith('n 20\n')
    assert main(['fit', '--edges', str(edges), '--out', str(fit), '--solver', 'diag']) == 0
    assert read_json(fit)['solver'] == 'diag'
    assert main(['diagnose', '--edges', str(edges), '--fit', str(fit), '--out', str(diag)]) == 0
    assert 'kantorovich_at_start' in read_json(diag)


def test_experiment_writes_csv(tmp_path, study_path):
    out = tmp_path / 'study.csv'
    assert main(['experiment', '--config', str(study_path), '--out', str(out), '--workers', '1']) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 4
    assert lines[-1].startswith('# digest sha256 ')


def test_boundary_degree_exit_status(tmp_path, capsys):
    star = tmp_path / 'star.txt'
    star.write_text("n 5\n0 1\n0 2\n0 3\n0 4\n")
    assert main(['fit', '--edges', str(star), '--out', str(tmp_path / 'fit.json')]) == 3
    payload = error_payload(capsys)
    assert payload['error'] == 'boundary-degree'
    assert payload['node'] == 0


def test_format_error_exit_status(tmp_path, capsys):
    broken = tmp_path / 'broken.txt'
    broken.write_text("n 3\n0 1\n0 1\n")
    assert main(['fit', '--edges', str(broken), '--out', str(tmp_path / 'fit.json')]) == 2
    payload = error_payload(capsys)
    assert payload['error'] == 'duplicate-edge'
    assert payload['line'] == 3


def test_missing_edge_file(tmp_path, capsys):
    assert main(['fit', '--edges', str(tmp_path / 'none.txt'), '--out', str(tmp_path / 'fit.json')]) == 2
    assert error_payload(capsys)['error'] == 'format'


def test_invalid_config_exit_status(tmp_path, capsys):
    path = tmp_path / 'bad.json'
    path.write_text(json.dumps(dict(STUDY, replications=0)))
    assert main(['experiment', '--config', str(path), '--out', str(tmp_path / 'x.csv')]) == 2
    assert error_payload(capsys)['error'] == 'config'


def test_seed_out_of_range_rejected(tmp_path, study_path):
    with pytest.raises(SystemExit) as info:
        main(['generate', '--config', str(study_path), '--out', str(tmp_path / 'g.txt'), '--seed', '-1'])
    assert info.value.code == 2
