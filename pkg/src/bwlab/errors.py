"""Exception types shared across the package."""
from __future__ import annotations


class BwlabError(Exception):
    """Base class for all package-specific errors."""


class IntegrationError(BwlabError):
    """State integration produced a non-finite value.

    Carries the index of the offending load step (or sub-step) so callers
    can report where the trajectory blew up.
    """

    def __init__(self, message: str, step_index: int | None = None):
        super().__init__(message if step_index is None else f"{message} (step {step_index})")
        self.step_index = step_index


class SamplingError(BwlabError):
    """Rejection sampling exhausted its draw budget."""


class EstimationError(BwlabError):
    """Parameter estimation could not proceed (e.g. every candidate failed)."""


class YieldDetectionError(BwlabError):
    """No yield point could be located on a pushover curve."""


class FragilityFitError(BwlabError):
    """Fragility fitting is degenerate (all or no cells exceed the threshold)."""


class ConfigError(BwlabError):
    """A CLI configuration file is malformed or contains unknown keys."""
