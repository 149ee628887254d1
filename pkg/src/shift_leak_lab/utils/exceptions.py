"""
Custom exceptions for the shift-and-leak lab.
"""

from typing import Optional, Any, Dict, Iterable


class LabError(Exception):
    """Base exception for lab errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ConfigurationError(LabError):
    """Configuration-related errors."""
    pass


class BenchParseError(LabError):
    """Bench text that cannot be turned into a valid netlist."""

    def __init__(self, message: str, line: int, column: int,
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(f"line {line}, column {column}: {message}", details)
        self.reason = message
        self.line = line
        self.column = column


class NetlistError(LabError):
    """Invalid netlist queries or evaluation preconditions."""
    pass


class LockingError(LabError):
    """Key-gate insertion or key application failures."""
    pass


class KeyLengthError(LockingError):
    """Key length does not match the number of key gates."""

    def __init__(self, expected: int, actual: int, details: Optional[Dict[str, Any]] = None):
        super().__init__(f"key length mismatch: expected {expected} bits, got {actual}", details)
        self.expected = expected
        self.actual = actual


class StitchError(LabError):
    """Scan chain stitching or layout consistency errors."""
    pass


class PlanInfeasibleError(LabError):
    """A leak condition cannot be staged through the scan chain."""

    def __init__(self, message: str, chain: Optional[int] = None, position: Optional[int] = None,
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details)
        self.chain = chain
        self.position = position


class DecodeError(LabError):
    """Observed PO value outside the decode map of a plan."""

    def __init__(self, observed: Any, domain: Iterable[Any], details: Optional[Dict[str, Any]] = None):
        domain = sorted(domain)
        super().__init__(f"observed PO value {observed!r} outside decode domain {domain}", details)
        self.observed = observed
        self.domain = domain


class InvariantViolation(LabError):
    """Internal invariant broken, e.g. a recovered bit that disagrees with the audit key."""
    pass
