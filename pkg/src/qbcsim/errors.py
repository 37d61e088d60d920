"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, ValidationError -> 3,
ProtocolAbort -> 4.
"""


class QbcError(Exception):
    """Base class for all package errors."""


class ValidationError(QbcError, ValueError):
    """A numerical invariant was violated (non-unitary matrix, bad norm, ...)."""


class ConfigError(QbcError, ValueError):
    """A config file or strategy specification could not be interpreted."""


class ProtocolAbort(QbcError, RuntimeError):
    """The protocol run had to stop (unknown operator label, failed strategy)."""


class SynthesisError(QbcError, RuntimeError):
    """Attack synthesis could not produce a coefficient matrix."""


class NotConcealingError(SynthesisError):
    """The operator quadruple (or a specific input state) is not concealing."""


class DegenerateStateError(SynthesisError):
    """The two branch images of the input state are parallel; the linear
    system for the cheat coefficients is singular."""


class ProportionalOperatorsError(SynthesisError):
    """All four operators are scalar multiples of each other; the two
    commitments coincide and an attack is meaningless."""


class GeneratorRejectionError(QbcError, ValueError):
    """A parametrized operator family produced a non-unitary member."""
