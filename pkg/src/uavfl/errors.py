class ConfigError(ValueError):
    """Invalid configuration value, tagged with the offending field path."""

    def __init__(self, field: str, message: str, line: int | None = None):
        self.field = field
        self.line = line
        where = f"{field} (line {line})" if line is not None else field
        super().__init__(f"{where}: {message}")


class ProtocolError(ValueError):
    pass


class ComparisonError(ValueError):
    pass
