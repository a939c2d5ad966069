"""Exception hierarchy.

Every error carries the name of the module that raised it and a short
remediation hint.  The CLI maps the three base classes to exit codes.
"""


class PeriodicaError(Exception):
    module = "periodica"
    hint = ""
    exit_code = 4

    def __init__(self, message="", *, hint=None):
        super().__init__(message)
        if hint is not None:
            self.hint = hint

    def describe(self):
        msg = f"[{self.module}] {type(self).__name__}: {self}"
        if self.hint:
            msg += f" (hint: {self.hint})"
        return msg


class InputError(PeriodicaError):
    """Malformed or mathematically invalid input."""
    exit_code = 2


class PrecisionError(PeriodicaError):
    """The working precision is too low for a reliable answer."""
    exit_code = 3
    hint = "raise --prec or use --auto-prec"


class InvariantError(PeriodicaError):
    """An internal consistency check failed."""
    exit_code = 4


# numerics
class NonConvergence(PrecisionError):
    module = "numerics"


class DiskEscape(PrecisionError):
    module = "numerics"


class SlowConvergence(PrecisionError):
    module = "numerics"


# curve
class ParseError(InputError):
    module = "curve"


class NotSquarefree(InputError):
    module = "curve"


class ZeroLeadingForm(InputError):
    module = "curve"


# skeleton
class DegenerateDiagram(PrecisionError):
    module = "skeleton"


# continuation
class NearCriticalFiber(PrecisionError):
    module = "continuation"


class PathTooClose(PrecisionError):
    module = "continuation"


class NotIrreducible(InputError):
    module = "continuation"


class MonodromyRelationFailed(InvariantError):
    module = "continuation"


# homology
class NonIntegerPairing(InvariantError):
    module = "homology"


class NonUnitDivisor(InvariantError):
    module = "homology"


class GenusMismatch(InputError):
    module = "homology"
    hint = "supply a basis of regular differentials with --differentials"


# differentials
class DependentNumerators(InputError):
    module = "differentials"


class SmallDenominator(InvariantError):
    module = "differentials"


# periods
class OrderCapExceeded(PrecisionError):
    module = "periods"


class RiemannCheckFailed(InvariantError):
    module = "periods"
    hint = "check the differential basis (--differentials)"


class SingularAlphaBlock(InvariantError):
    module = "periods"


# lattice
class NotPositiveDefinite(InvariantError):
    module = "lattice"


class NotFound(PrecisionError):
    module = "lattice"


# abelian
class PrecisionTooLow(PrecisionError):
    module = "abelian"


class StructureConstantsNotRational(PrecisionError):
    module = "abelian"


class IdempotentSearchFailed(InvariantError):
    module = "abelian"


class ClosureFailure(PrecisionError):
    module = "abelian"
