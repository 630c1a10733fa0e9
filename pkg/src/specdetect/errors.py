"""Exception types shared across the package."""


class SpecDetectError(Exception):
    """Base class for all package errors."""


class InvalidSpec(SpecDetectError, ValueError):
    """Degree specification or block parameters are inconsistent."""


class InvalidRegion(SpecDetectError, ValueError):
    """Requested parameters lie outside the model's valid region."""


class InvalidDegree(SpecDetectError, ValueError):
    """Degree parameter outside the supported range."""


class ParityUnrepairable(SpecDetectError, RuntimeError):
    """Could not make the per-module stub counts pairable."""


class StubImbalance(SpecDetectError, RuntimeError):
    """Cross-edge request exceeds the available stubs of a module."""


class RepairFailed(SpecDetectError, RuntimeError):
    """Multigraph could not be simplified by double-edge swaps."""


class ZeroDegreeVertex(SpecDetectError, ValueError):
    """Normalized Laplacian requested for a graph with an isolated vertex."""


class DimensionMismatch(SpecDetectError, ValueError):
    """Vector length does not match the matrix dimension."""


class LengthMismatch(SpecDetectError, ValueError):
    """Two vectors that must be index-aligned have different lengths."""


class ZeroVector(SpecDetectError, ValueError):
    """An operation that needs a nonzero vector received the zero vector."""


class TooLarge(SpecDetectError, ValueError):
    """Dense-oracle request beyond the supported size."""


class BadZeroMode(SpecDetectError, ValueError):
    """The supplied deflation vector is not a null vector of the matrix."""


class NoConvergence(SpecDetectError, RuntimeError):
    """Iterative eigensolver failed to reach the requested residual."""


class UnstableField(SpecDetectError, RuntimeError):
    """A cavity field left the stable region 1 + A > 0."""


class BisectionFailed(SpecDetectError, RuntimeError):
    """No sign change found for the growth-factor bisection."""


class NonConvergence(SpecDetectError, RuntimeError):
    """Population dynamics failed to settle."""


class EmptyPopulation(SpecDetectError, ValueError):
    """Histogram requested from an empty population."""


class NoRealRoot(SpecDetectError, ValueError):
    """Closed-form quadratic has no real solution."""


class NewtonDiverged(SpecDetectError, RuntimeError):
    """Damped Newton iteration failed to converge."""


class EmaClosureFailed(SpecDetectError, RuntimeError):
    """No real effective-medium variance at the requested eigenvalue."""


class UnequalModulesUnsupported(SpecDetectError, ValueError):
    """Combined scalar only defined for equal-size modules."""


class InvalidGrid(SpecDetectError, ValueError):
    """Experiment grid empty or out of range."""
