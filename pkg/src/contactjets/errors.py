"""Exception types shared across the toolkit."""


class InputError(ValueError):
    """Rejected input: wrong shapes, non-unit directions, unsupported options."""


class DiagnosticError(RuntimeError):
    """Equivalent formulations disagreed, or an evaluation produced NaN.

    Raised when an internal cross-check fails. This signals an implementation
    problem (or a numerically degenerate input), never a mathematical verdict.
    """
