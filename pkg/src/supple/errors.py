"""Exception types shared across the package."""


class RejectedInput(ValueError):
    """Input violates an operation's precondition."""


class InsufficientData(ValueError):
    """Too few nonzero samples to fit an asymptotic exponent."""


class IllConditioned(RejectedInput):
    """Linear system too ill-conditioned to trust."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge."""
