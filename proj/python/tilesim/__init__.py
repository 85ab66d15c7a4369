"""Python bindings of the tiled manycore simulator."""

from ._tilesim import (
    CapacityError,
    ConfigError,
    Error,
    __version__,
    app_names,
    config_keys,
    default_config,
    dies_per_wafer,
    murphy_yield,
    postprocess,
    run,
    voltage,
)

__all__ = [
    "CapacityError",
    "ConfigError",
    "Error",
    "__version__",
    "app_names",
    "config_keys",
    "default_config",
    "dies_per_wafer",
    "murphy_yield",
    "postprocess",
    "run",
    "voltage",
]
