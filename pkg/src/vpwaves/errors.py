"""Exception hierarchy.

Every numerical failure derives from :class:`NumericalError` so the CLI can map
it to exit code 3; configuration problems derive from :class:`ConfigError`
(exit code 2).
"""


class VPWavesError(Exception):
    """Base class for all package errors."""


class ConfigError(VPWavesError, ValueError):
    pass


class NumericalError(VPWavesError, ArithmeticError):
    pass


# profiles
class ZeroMass(NumericalError):
    pass


class UnresolvableKernel(NumericalError):
    pass


class UnresolvedBump(NumericalError):
    pass


class OutOfDomain(NumericalError):
    pass


class NegativeDensity(NumericalError):
    pass


# quadrature / transforms
class PoleOutsideDomain(NumericalError):
    pass


class NonFiniteSample(NumericalError):
    pass


class InvalidSpec(ConfigError):
    pass


class GridMismatch(ConfigError):
    pass


# penrose
class NoConvergence(NumericalError):
    pass


class RootCollapsedToRealAxis(NumericalError):
    pass


class TargetNotReachable(NumericalError):
    pass


# landau
class UnstableMode(NumericalError):
    pass


class DenominatorNearZero(NumericalError):
    pass


class StepTooLarge(NumericalError):
    pass


class InsufficientPoints(NumericalError):
    pass


# bgk
class NotSymmetric(NumericalError):
    pass


class OutOfTabulatedRange(NumericalError):
    pass


class NotACenter(NumericalError):
    pass


class OrbitEscapesWell(NumericalError):
    pass


class BracketNotFound(NumericalError):
    pass


# simulation
class NeutralityViolated(NumericalError):
    pass


class AccuracyBoundExceeded(NumericalError):
    pass
