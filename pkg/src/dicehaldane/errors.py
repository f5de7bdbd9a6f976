"""Exception types shared across the package."""


class DiceHaldaneError(Exception):
    """Base class for all package-specific errors."""


class NegativeRadicand(DiceHaldaneError):
    """No real exceptional-point strength exists at the requested momentum."""


class ConvergenceFailure(DiceHaldaneError):
    """The underlying eigensolver failed to converge."""


class InsufficientDynamicRange(DiceHaldaneError):
    """Rigidity varies by less than one decade across the fit window."""


class NoEPInBracket(DiceHaldaneError):
    """Minimal phase rigidity never dips below threshold inside the bracket."""


class GapClosure(DiceHaldaneError):
    """A band touches its neighbor on the integration mesh."""


class NoClosure(DiceHaldaneError):
    """No gap closure found inside the mass search bracket."""


class GeometryError(DiceHaldaneError):
    """Inconsistent ribbon geometry or site table."""


class NoEdgeStates(DiceHaldaneError):
    """The Hermitian reference run finds no edge states."""


class ZeroVector(DiceHaldaneError):
    """A state vector with zero norm was supplied."""


class ReferenceOnSpectrum(DiceHaldaneError):
    """The winding reference energy lies on the spectral curve."""
