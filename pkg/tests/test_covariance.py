import numpy as np
import pytest

from src.simulation.covariance import (
    AdditiveNode,
    DenseExplicit,
    Equicorrelated,
    Independent,
    PowerDecay,
    ValidatedCovariance,
    correlation_of,
    latent_dimension,
    load_dense_csv,
    materialize,
    sample_latent,
    spec_from_config,
    spec_to_config,
    validate,
)
from src.utils.errors import (
    DiagonalQueryError,
    InvalidSpecError,
    MustValidateError,
    NotPositiveSemidefiniteError,
)
from src.utils.random_streams import make_stream

DRAWS = 100_000


# ==================== VALIDATE ====================

def test_independent_is_valid():
    cov = validate(Independent(), 5)
    assert isinstance(cov, ValidatedCovariance)
    assert cov.dim == 10
    assert cov.kind == 'independent'


def test_equicorrelated_below_bound_is_not_psd():
    with pytest.raises(NotPositiveSemidefiniteError) as info:
        validate(Equicorrelated(-0.5), 4)
    assert info.value.pivot is not None
    assert info.value.exit_status == 2


def test_equicorrelated_at_bound_is_valid():
    validate(Equicorrelated(-0.2), 4)


@pytest.mark.parametrize('spec', [PowerDecay(1.0), PowerDecay(-1.2), Equicorrelated(1.0)])
def test_out_of_range_parameters_rejected(spec):
    with pytest.raises(InvalidSpecError):
        validate(spec, 4)


def test_additive_requires_zero_sum():
    with pytest.raises(InvalidSpecError):
        validate(AdditiveNode(0.1, (0.1, 0.1, 0.1, 0.0)), 4)


def test_additive_requires_one_effect_per_node():
    with pytest.raises(InvalidSpecError):
        validate(AdditiveNode(0.1, (0.0, 0.0, 0.0)), 4)


def test_additive_valid_spec_is_factored():
    cov = validate(AdditiveNode(0.1, (0.05, -0.05, 0.0, 0.0)), 4)
    np.testing.assert_allclose(cov.factor @ cov.factor.T, materialize(cov.spec, 4), atol=1e-9)


def test_dense_explicit_checks_shape_and_diagonal():
    with pytest.raises(InvalidSpecError):
        validate(DenseExplicit(np.eye(5)), 4)
    bad = np.eye(6)
    bad[0, 0] = 2.0
    with pytest.raises(InvalidSpecError):
        validate(DenseExplicit(bad), 4)


def test_dense_explicit_not_psd_reports_pivot():
    matrix = np.eye(3)
    matrix[0, 1] = matrix[1, 0] = 0.9
    matrix[0, 2] = matrix[2, 0] = 0.9
    matrix[1, 2] = matrix[2, 1] = -0.9
    with pytest.raises(NotPositiveSemidefiniteError) as info:
        validate(DenseExplicit(matrix), 3)
    assert info.value.pivot == 2


def test_dense_cap_enforced():
    n = 12
    with pytest.raises(InvalidSpecError):
        validate(DenseExplicit(np.eye(latent_dimension(n))), n, dense_cap=10)


def test_directed_dimension():
    assert validate(Independent(), 5, directed=True).dim == 20


# ==================== CORRELATION_OF ====================

def test_power_decay_correlation():
    assert correlation_of(PowerDecay(0.5), 3, 5, 5) == pytest.approx(0.25)


def test_independent_correlation_is_zero():
    assert correlation_of(Independent(), 0, 9, 5) == 0.0


def test_additive_correlation():
    spec = AdditiveNode(0.1, (0.05, -0.05, 0.0, 0.0))
    # pairs (0, 1) and (2, 3) on n = 4
    assert correlation_of(spec, 0, 5, 4) == pytest.approx(0.1)


def test_diagonal_query_rejected():
    with pytest.raises(DiagonalQueryError):
        correlation_of(PowerDecay(0.5), 2, 2, 4)


@pytest.mark.parametrize('spec', [
    PowerDecay(0.6),
    Equicorrelated(0.15),
    AdditiveNode(0.1, (0.05, -0.05, 0.02, -0.02)),
])
def test_materialize_agrees_with_correlation_of(spec):
    n = 4
    matrix = materialize(spec, n)
    for t in range(6):
        assert matrix[t, t] == 1.0
        for s in range(6):
            if s != t:
                assert matrix[t, s] == pytest.approx(correlation_of(spec, t, s, n))


# ==================== SAMPLING ====================

def test_sampling_requires_validation():
    with pytest.raises(MustValidateError):
        sample_latent(Independent(), 3, make_stream(0))


def test_independent_sample_covariance():
    draws = sample_latent(validate(Independent(), 3), 3, make_stream(1), size=DRAWS)
    assert draws.shape == (DRAWS, 3)
    sample_cov = np.cov(draws, rowvar=False)
    off = ~np.eye(3, dtype=bool)
    assert np.all(np.abs(sample_cov[off]) <= 4 / np.sqrt(DRAWS))
    # a variance estimate has sqrt(2) times the spread of a covariance estimate
    np.testing.assert_allclose(np.diag(sample_cov), 1.0, atol=5 / np.sqrt(DRAWS))


def test_power_decay_lag_one_correlation():
    draws = sample_latent(validate(PowerDecay(0.8), 4), 4, make_stream(2), size=DRAWS)
    corr = np.corrcoef(draws[:, 2], draws[:, 3])[0, 1]
    assert corr == pytest.approx(0.8, abs=0.01)


@pytest.mark.parametrize('spec', [
    Independent(),
    PowerDecay(-0.7),
    Equicorrelated(0.3),
    Equicorrelated(-0.1),
    AdditiveNode(0.1, (0.05, -0.05, 0.02, -0.02)),
])
def test_unit_marginal_variance(spec):
    draws = sample_latent(validate(spec, 4), 4, make_stream(3), size=DRAWS)
    assert np.var(draws[:, 0]) == pytest.approx(1.0, abs=0.015)
    assert np.var(draws[:, -1]) == pytest.approx(1.0, abs=0.015)


def test_equicorrelated_sample_correlation():
    draws = sample_latent(validate(Equicorrelated(0.3), 5), 5, make_stream(4), size=DRAWS)
    corr = np.corrcoef(draws[:, 1], draws[:, 7])[0, 1]
    assert corr == pytest.approx(0.3, abs=0.015)


def test_single_draw_consumes_dim_normals():
    cov = validate(PowerDecay(0.5), 6)
    rng_a, rng_b = make_stream(9), make_stream(9)
    sample_latent(cov, 6, rng_a)
    rng_b.standard_normal(cov.dim)
    assert rng_a.random() == rng_b.random()


@pytest.mark.parametrize('spec', [PowerDecay(0.5), Equicorrelated(0.1)])
def test_structured_sampling_scales_to_large_networks(spec, monkeypatch):
    def refuse(*args, **kwargs):
        raise AssertionError("structured kinds must not build the N x N matrix")

    monkeypatch.setattr('src.simulation.covariance.materialize', refuse)
    monkeypatch.setattr('src.simulation.covariance._cholesky_check', refuse)
    cov = validate(spec, 500)
    assert cov.factor is None
    draw = sample_latent(cov, 500, make_stream(10))
    assert draw.shape == (124750,)
    assert np.all(np.isfinite(draw))


# ==================== CONFIG ====================

def test_spec_round_trip_through_config():
    for spec in [Independent(), PowerDecay(0.4), Equicorrelated(0.1), AdditiveNode(0.1, (0.1, -0.1, 0.0))]:
        assert spec_from_config(spec_to_config(spec)) == spec


def test_rho_scale_uses_network_size():
    spec = spec_from_config({'kind': 'equicorrelated', 'rho_scale': -0.5}, n=60)
    assert spec.rho == pytest.approx(-0.5 / (1770 - 1))


def test_unknown_kind_rejected():
    with pytest.raises(InvalidSpecError):
        spec_from_config({'kind': 'toeplitz'})
    with pytest.raises(InvalidSpecError):
        spec_from_config({'kind': 'power_decay'})


def test_load_dense_csv(tmp_path):
    matrix = np.array([[1.0, 0.2, 0.1], [0.2, 1.0, 0.3], [0.1, 0.3, 1.0]])
    path = tmp_path / 'sigma.csv'
    np.savetxt(path, matrix, delimiter=',')
    spec = load_dense_csv(path)
    np.testing.assert_allclose(spec.matrix, matrix)
    validate(spec, 3)
