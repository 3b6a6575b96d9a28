"""Exception types shared across the toolkit.

The CLI maps these onto distinct exit codes (config=2, input=3, scorer=4);
library callers can catch the base class.
"""


class PairselectError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(PairselectError):
    """Invalid configuration: unknown method, bad flag combination, missing path."""


class InputError(PairselectError):
    """Malformed or inconsistent input data (files, score columns, id spaces)."""


class ScorerError(PairselectError):
    """An external scorer process failed or violated the wire protocol."""
