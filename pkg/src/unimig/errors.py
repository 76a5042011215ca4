"""Exception hierarchy shared across the toolchain."""

from __future__ import annotations


class MigrationError(Exception):
    """Base class for all domain errors raised by this package."""


class TextParseError(MigrationError):
    """Syntax error in a textual input (Athena, DDL, Orion, schema JSON).

    Carries the 1-based line/column of the offending token when known.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{where}: {message}"
        super().__init__(message)


class ModelError(MigrationError):
    """A model violates its invariants or an element cannot be resolved."""


class TransformError(MigrationError):
    """A model-to-model transformation cannot be applied."""


class EvolutionError(MigrationError):
    """A schema change operation cannot be applied; inputs stay untouched."""


class TraceError(MigrationError):
    """Malformed trace link, identifier, or trace file."""


class SourceError(MigrationError):
    """The file-backed source store is missing, inconsistent, or misused."""
