"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An input broke a documented precondition (wrong shape, non-Hermitian, bad range)."""


class NumericIntegrityError(ArithmeticError):
    """An internal cross-check failed (imaginary residue, QBER route mismatch, ...).

    These indicate a numerical fault in the pipeline itself, never bad user input.
    """
