"""Exception types shared across the library.

Argument errors raise plain ValueError; the classes below mark data- and
simulation-level failures that Monte Carlo drivers may want to catch and
count rather than crash on.
"""


class HurstSDEError(Exception):
    """Base class for library-specific runtime failures."""


class SimulationBlowUp(HurstSDEError):
    """A non-finite value appeared while integrating a model path."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"non-finite value at grid index {index}")


class DiffusionDegeneracy(HurstSDEError):
    """|g(X_t)| fell below the invertibility guard.

    Estimators divide by the diffusion, so a vanishing g must fail loudly
    instead of silently producing garbage.
    """


class DegenerateData(HurstSDEError):
    """Observed data cannot support the requested statistic (e.g. zero window energy)."""


class TooManyFailures(HurstSDEError):
    """More than the tolerated fraction of Monte Carlo replications failed."""
