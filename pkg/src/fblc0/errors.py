class FBLError(Exception):
    """Base class for errors raised by fblc0."""


class DomainError(FBLError, ValueError):
    """An argument lies outside the ambient domain (unknown generator, bad ambient)."""


class PreconditionError(FBLError, ValueError):
    """A documented precondition of an operation does not hold."""


class DegenerateInputError(FBLError, ValueError):
    pass


class EnumerationLimitError(FBLError, ValueError):
    """Joint support too large for exhaustive sign enumeration; use ball_sup_search."""


class InadmissibleWitnessError(FBLError, ValueError):
    def __init__(self, dual_ball_sup: float, tol: float):
        self.dual_ball_sup = dual_ball_sup
        super().__init__(
            f"witness is not admissible: dual-ball supremum {dual_ball_sup!r} exceeds 1 + {tol!r}"
        )


class TruncationExhaustedError(FBLError, RuntimeError):
    pass


class ConfigError(FBLError, ValueError):
    pass


class ParseError(FBLError, ValueError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
