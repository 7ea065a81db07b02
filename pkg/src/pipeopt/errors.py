"""Shared exception types."""


class CapacityError(RuntimeError):
    """A discretization or enumeration would exceed its configured size cap.

    Raised instead of silently attempting infeasibly large work; the CLI maps
    this to its own exit code so callers can tell "too big" from "wrong".
    """


class InputError(ValueError):
    """Malformed or invalid input data (files, schemas, instance invariants)."""
