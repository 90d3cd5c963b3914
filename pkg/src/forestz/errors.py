"""Exception types shared across the package."""


class CapExceededError(RuntimeError):
    """An exhaustive computation would exceed its configured size cap."""

    def __init__(self, what: str, required: int, cap: int):
        super().__init__(f"{what}: {required} exceeds cap {cap}; raise the cap to at least {required}")
        self.what = what
        self.required = required
        self.cap = cap


class ConfigError(ValueError):
    """Invalid configuration field or file."""
