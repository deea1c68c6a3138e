"""AoIS-aware downlink scheduling: python bindings for the C++ core."""

import json as _json

from ._aois import (
    ConfigError,
    InfeasibleError,
    NumericalError,
    aois_value,
    default_config_json,
    dpp_objective,
    logdet_lower_bound,
    lyapunov_value,
    mimo_rate,
    miso_rate,
    noise_power_w,
    path_loss_db,
    reparameterized_power,
    queue_update,
    rate_floor_powers,
    run_episode_csv,
    run_episode_json,
    sweep_json,
    time_penalty,
    transmission_delay,
    zf_matrix,
    zf_power_weights,
)

__all__ = [
    "ConfigError",
    "InfeasibleError",
    "NumericalError",
    "aois_value",
    "default_config",
    "default_config_json",
    "dpp_objective",
    "logdet_lower_bound",
    "lyapunov_value",
    "mimo_rate",
    "miso_rate",
    "noise_power_w",
    "path_loss_db",
    "reparameterized_power",
    "queue_update",
    "rate_floor_powers",
    "run_episode",
    "run_episode_csv",
    "run_episode_json",
    "sweep",
    "sweep_json",
    "time_penalty",
    "transmission_delay",
    "zf_matrix",
    "zf_power_weights",
]


def default_config():
    """Default simulator configuration as a dict."""
    return _json.loads(default_config_json())


def run_episode(config, mode="zf"):
    """Runs one episode from a config dict (or JSON text); returns the summary dict."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(run_episode_json(text, mode))


def sweep(config, mode, axis, values):
    """Sweeps one axis; returns a list of aggregate dicts."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return sweep_json(text, mode, axis, list(values))
