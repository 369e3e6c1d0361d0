# Load config.yaml
# src/utils/config_loader.py

import copy
import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from src.models.correlation_fit import SigmaOptions
from src.models.moment_fit import FitOptions
from src.utils.errors import ConfigError, ProbitNetworkError

logger = logging.getLogger(__name__)

REPO_ROOT = Path(__file__).resolve().parents[2]
DEFAULT_CONFIG_PATH = REPO_ROOT / 'config' / 'config.yaml'

ALPHA_KINDS = ('constant', 'uniform', 'explicit')
COVARIANCE_KINDS = ('independent', 'power_decay', 'equicorrelated', 'additive_node', 'dense_explicit')

BUILTIN_DEFAULTS = {
    'fit': {},
    'covariance': {'dense_cap': 60},
    'estimation': {},
    'experiment': {
        'n_list': [100],
        'replications': 1,
        'master_seed': 0,
        'workers': 1,
        'estimate_sigma': False,
        'alpha_gen': {'kind': 'constant', 'value': 0.0},
        'covariance': {'kind': 'independent'},
    },
    'logging': {'level': 'INFO'},
    'paths': {'results': 'results/'},
}


def _merge(base, override):
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _read_document(path):
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    try:
        if path.suffix.lower() == '.json':
            data = json.loads(text)
        else:
            data = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot parse config file {path}: {e}") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    return data


def load_config(path=None):
    """
    Load project defaults.

    Parameters:
    -----------
    path : str or Path, optional
        YAML file; defaults to config/config.yaml in the repository

    Returns:
    --------
    dict with sections fit, covariance, estimation, experiment, logging, paths
    """
    if path is None:
        if not DEFAULT_CONFIG_PATH.exists():
            return copy.deepcopy(BUILTIN_DEFAULTS)
        path = DEFAULT_CONFIG_PATH
    return _merge(BUILTIN_DEFAULTS, _read_document(path))


def _options(cls, section, overrides=None):
    known = {f.name for f in fields(cls)}
    values = dict(section or {})
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ProbitNetworkError) as e:
        raise ConfigError(f"invalid {cls.__name__}: {e}") from e


def get_fit_options(config=None, **overrides):
    """FitOptions from the 'fit' section, with keyword overrides."""
    config = config if config is not None else load_config()
    return _options(FitOptions, config.get('fit'), overrides)


def get_sigma_options(config=None, **overrides):
    """SigmaOptions from the 'estimation' section, with keyword overrides."""
    config = config if config is not None else load_config()
    return _options(SigmaOptions, config.get('estimation'), overrides)


@dataclass
class ExperimentConfig:
    """
    Monte Carlo study definition.

    Attributes:
    -----------
    n_list : list of int
        Network sizes, each >= 3
    replications : int
        Replications per size, >= 1
    alpha_gen : dict
        {'kind': 'constant', 'value'} | {'kind': 'uniform', 'low', 'high'} |
        {'kind': 'explicit', 'values'}
    covariance : dict
        Covariance description (see simulation.covariance.spec_from_config)
    fit : FitOptions
    master_seed : int
        Unsigned 64-bit seed from which every replication stream is split
    estimate_sigma : bool
        Also run the stage-2 common-parameter estimator
    sigma : SigmaOptions
    workers : int
        Processes for replications (results never depend on it)
    dense_cap : int
    """
    n_list: list
    replications: int
    alpha_gen: dict
    covariance: dict
    fit: FitOptions = field(default_factory=FitOptions)
    master_seed: int = 0
    estimate_sigma: bool = False
    sigma: SigmaOptions = field(default_factory=SigmaOptions)
    workers: int = 1
    dense_cap: int = 60

    def validate(self):
        if not self.n_list:
            raise ConfigError("n_list must not be empty")
        if any(int(n) != n or n < 3 for n in self.n_list):
            raise ConfigError(f"every n must be an integer >= 3, got {self.n_list}")
        self.n_list = [int(n) for n in self.n_list]
        if int(self.replications) < 1:
            raise ConfigError("replications must be at least 1")
        self.replications = int(self.replications)
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        self.master_seed = int(self.master_seed)
        if int(self.workers) < 1:
            raise ConfigError("workers must be at least 1")
        self.workers = int(self.workers)
        kind = self.alpha_gen.get('kind') if isinstance(self.alpha_gen, dict) else None
        if kind not in ALPHA_KINDS:
            raise ConfigError(f"alpha_gen kind must be one of {ALPHA_KINDS}, got {kind!r}")
        required = {'constant': ('value',), 'uniform': ('low', 'high'), 'explicit': ('values',)}[kind]
        missing = [key for key in required if key not in self.alpha_gen]
        if missing:
            raise ConfigError(f"alpha_gen '{kind}' is missing {missing}")
        if kind == 'uniform' and self.alpha_gen['low'] > self.alpha_gen['high']:
            raise ConfigError("alpha_gen uniform needs low <= high")
        cov_kind = self.covariance.get('kind') if isinstance(self.covariance, dict) else None
        if cov_kind not in COVARIANCE_KINDS:
            raise ConfigError(f"covariance kind must be one of {COVARIANCE_KINDS}, got {cov_kind!r}")
        return self

    def to_dict(self):
        return {
            'n_list': list(self.n_list),
            'replications': self.replications,
            'alpha_gen': self.alpha_gen,
            'covariance': self.covariance,
            'fit': {f.name: getattr(self.fit, f.name) for f in fields(self.fit)},
            'master_seed': self.master_seed,
            'estimate_sigma': self.estimate_sigma,
            'workers': self.workers,
        }


def experiment_config_from_dict(data, defaults=None):
    """
    Build an ExperimentConfig from a snake_case mapping, filling gaps from defaults.
    """
    defaults = defaults if defaults is not None else load_config()
    merged = _merge(defaults.get('experiment', {}), data)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(merged) - known - {'n'}
    if unknown:
        raise ConfigError(f"unknown experiment keys: {sorted(unknown)}")
    if 'n' in merged:
        # single-graph documents (generate) may give n instead of n_list
        merged['n_list'] = [merged.pop('n')]
    fit = get_fit_options(defaults, **(merged.pop('fit', None) or {}))
    sigma = get_sigma_options(defaults, **(merged.pop('sigma', None) or {}))
    merged.setdefault('dense_cap', defaults.get('covariance', {}).get('dense_cap', 60))
    try:
        config = ExperimentConfig(fit=fit, sigma=sigma, **merged)
    except TypeError as e:
        raise ConfigError(f"invalid experiment config: {e}") from e
    return config.validate()


def load_experiment_config(path, defaults=None):
    """
    Read an experiment document (.json, or .yaml/.yml).

    Parameters:
    -----------
    path : str or Path
    defaults : dict, optional
        Output of load_config(); read from config/config.yaml when omitted

    Returns:
    --------
    ExperimentConfig
    """
    data = _read_document(path)
    logger.debug("loaded experiment config %s", path)
    return experiment_config_from_dict(data, defaults)
