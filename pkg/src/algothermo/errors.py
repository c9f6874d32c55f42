"""Exception types shared across the package.

Each maps to a distinct CLI exit code, so library code raises these
rather than bare ValueError when the failure is meaningful to a caller.
"""
from __future__ import annotations


class ConfigError(ValueError):
    """Malformed machine spec, grid, or option combination."""


class ResourceLimitError(RuntimeError):
    """A configured budget (program count, table size, fuel) was exceeded."""


class NumericDomainError(ArithmeticError):
    """An operand left the domain an operation can certify (log of a
    nonpositive interval, division through zero, divergent tail)."""


class UnsolvableError(ValueError):
    """A root-finding target lies outside the achievable range."""
