"""Exception hierarchy. CLI maps these onto exit codes."""


class VentclassError(Exception):
    """Base class for all package errors."""


class DataError(VentclassError):
    """Problems with input data (parsing, schema, joining)."""


class ParseError(DataError):
    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class StructureError(DataError):
    """Structurally invalid file (e.g. BE without BS, no breaths)."""


class SchemaError(DataError):
    """Missing or malformed columns in a CSV input."""


class DuplicateAnnotationError(DataError):
    """Two annotations for the same (file_id, breath_ordinal)."""


class JoinError(DataError):
    """Annotations referencing breaths that do not exist."""


class DegenerateBreathError(DataError):
    """Breath too short to compute metadata."""


class ModelError(VentclassError):
    """Problems with model files or model configuration."""


class ModelFormatError(ModelError):
    """Malformed or truncated model document."""


class VersionMismatchError(ModelError):
    """Model document written by an incompatible format version."""


class ConfigError(VentclassError):
    """Invalid configuration values."""
