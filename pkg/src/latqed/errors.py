"""Exception hierarchy. Every error carries an exit category for the CLI."""


class LatqedError(Exception):
    exit_code = 1


class ConfigurationError(LatqedError):
    exit_code = 2

    def __init__(self, message, problems=None):
        super().__init__(message)
        self.problems = list(problems or [])


class NumericalError(LatqedError):
    exit_code = 3


class ConvergenceError(NumericalError):
    pass


class TraceError(NumericalError):
    """Lost track of a bound state while stepping the potential strength."""


class FitError(NumericalError):
    pass


class DegeneracyError(NumericalError):
    pass


class GaugeError(NumericalError):
    pass


class PoleError(NumericalError):
    pass


class RegimeError(LatqedError):
    exit_code = 4


class SupercriticalityNotReached(RegimeError):
    pass


class DomainError(RegimeError):
    pass


class PreconditionError(RegimeError):
    pass
