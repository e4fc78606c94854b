"""Exception hierarchy shared by the services, tools and CLI."""

from typing import Optional


class SucsError(Exception):
    """Base class; ``exit_code`` is the process status the CLI reports."""

    exit_code = 1


class RepresentationError(SucsError):
    """Invalid group dimension, spin or action unit."""

    exit_code = 2


class DimensionMismatchError(SucsError):
    """Operands live in different Hilbert spaces or charts."""

    exit_code = 2


class DomainError(SucsError):
    """Input outside the chart or parameter domain."""

    exit_code = 2


class HermiticityError(SucsError):
    """An operator that must be hermitian is not."""

    exit_code = 2


class SamplingError(SucsError):
    """Monte Carlo request that cannot meet its accuracy contract."""

    exit_code = 2


class OracleCapacityError(SucsError):
    """Dense exact oracle asked for a Hilbert space above its cap."""

    exit_code = 2


class ConfigError(SucsError):
    """Malformed run configuration or unknown command option."""

    exit_code = 2


class IntegrationError(SucsError):
    """The adaptive integrator could not continue."""

    def __init__(self, message: str, time: Optional[float] = None):
        self.time = time
        if time is not None:
            message = f"{message} (t = {time:.17g})"
        super().__init__(message)


class PathRegularityError(SucsError):
    """A sampled path does not converge at first order in the time step."""
