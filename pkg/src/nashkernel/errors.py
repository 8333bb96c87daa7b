"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration or violated model precondition."""


class NumericalDiagnostic(ArithmeticError):
    """A numerical routine failed a self-check (non-convergence, bad quadrature, overflow)."""
