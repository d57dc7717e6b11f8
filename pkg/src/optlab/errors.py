"""Exception types shared across the package."""


class ContractError(ValueError):
    """An input violates a documented precondition."""


class ConfigError(ContractError):
    """An experiment configuration is invalid.

    ``line`` is the 1-based line in the config file when known.
    """

    def __init__(self, message: str, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConvergenceError(RuntimeError):
    """An inner iterative solver failed to reach its tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        self.residual = residual
        super().__init__(f"{message} (last residual {residual:.3e})")
