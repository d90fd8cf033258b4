"""
Errors - Exception hierarchy shared by all ccpnet modules.

Every error derives from CcpnetError and from the builtin that matches its
family, so callers may catch either ``CcpnetError`` or ``ValueError`` /
``RuntimeError``.
"""

from typing import Any, Optional


class CcpnetError(Exception):
    """Base class for all ccpnet errors."""


# Linear algebra and probability

class DimensionMismatch(CcpnetError, ValueError):
    """Operands live on different tensor spaces."""


class InvalidOperator(CcpnetError, ValueError):
    """Matrix has the wrong shape or is not finite."""


class InvalidProjection(CcpnetError, ValueError):
    """Operator is not a Hermitian idempotent."""


class InvalidState(CcpnetError, ValueError):
    """Matrix is not a density operator."""


class NonCommuting(CcpnetError, ValueError):
    """Events that must commute do not."""


class ZeroConditioningEvent(CcpnetError, ValueError):
    """Conditioning event has probability below the floor."""


class ZeroProjection(CcpnetError, ValueError):
    """A nonzero projection was required."""


class RankOutOfRange(CcpnetError, ValueError):
    """Requested rank outside [0, total_dim]."""


# Common causes

class NotCorrelated(CcpnetError, ValueError):
    """The pair is not positively correlated."""


class DenominatorVanishes(CcpnetError, ValueError):
    """phi(A v B) is numerically 1, so the canonical value is undefined."""


class Infeasible(CcpnetError, RuntimeError):
    """No subprojection with the requested state value exists."""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class DegenerateNesting(CcpnetError, ValueError):
    """Canonical value equals phi(A ^ B); the cause would be A ^ B itself."""


class BudgetExhausted(CcpnetError, RuntimeError):
    """Search budget ran out; ``best`` holds the best result found so far."""

    def __init__(self, message: str, best: Any = None):
        super().__init__(message)
        self.best = best


class SoundnessViolation(CcpnetError, RuntimeError):
    """A constructed projection or canonical cause failed its own check."""


# Bell

class ProductState(CcpnetError, ValueError):
    """State factorizes across the two factor sets."""


class NotFound(CcpnetError, RuntimeError):
    """No correlated pair found within budget."""

    def __init__(self, message: str, best_covariance: float = 0.0):
        super().__init__(message)
        self.best_covariance = best_covariance


class SupportOverlap(CcpnetError, ValueError):
    """Factor sets that must be disjoint overlap."""


# Geometry and lattice

class MalformedRegion(CcpnetError, ValueError):
    """Region expression cannot be evaluated."""


class DegenerateBox(CcpnetError, ValueError):
    """Sampling box has zero or negative extent."""


class NotSpacelikeSeparated(CcpnetError, ValueError):
    """Regions are not spacelike separated."""


class NoValidSlab(CcpnetError, RuntimeError):
    """No localization slab satisfies both geometric constraints."""


class RegionOutsideLattice(CcpnetError, ValueError):
    """Region's t=0 shadow leaves the lattice."""


class LatticeTooLarge(CcpnetError, ValueError):
    """Lattice dimension exceeds the configured cap."""


class NoCorrelationFound(CcpnetError, RuntimeError):
    """No correlated projections across the two bases."""


# Input / configuration

class SchemaError(CcpnetError, ValueError):
    """Input document does not match the expected schema."""

    def __init__(self, message: str, path: str = "$", line: Optional[int] = None):
        location = f"{path}" if line is None else f"{path} (line {line})"
        super().__init__(f"{location}: {message}")
        self.path = path
        self.line = line


class ConfigError(CcpnetError, ValueError):
    """Unknown or invalid configuration value."""
