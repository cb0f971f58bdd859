"""Exception types shared across the pipeline."""


class ConfigError(ValueError):
    """Invalid configuration or degenerate input that makes a step undefined."""


class DataError(ValueError):
    """Input data that cannot be processed (e.g. non-finite values)."""


class ParseError(ValueError):
    """A single input line could not be parsed; the stream can continue."""

    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class UnknownNodeError(KeyError):
    pass


class ModelFormatError(ValueError):
    """Model file is corrupt, from another format version, or mismatched."""
