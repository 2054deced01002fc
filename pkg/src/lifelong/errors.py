"""Shared exception types."""


class DimensionMismatchError(ValueError):
    """Operands live in different ambient dimensions."""


class EmptyBasisError(ValueError):
    """An operation that needs at least one basis vector got none."""


class SampleBudgetError(RuntimeError):
    """A learner exhausted its sample budget before meeting its contract."""


class CombinatorialBudgetError(RuntimeError):
    """A brute-force search exceeded its configured size guard."""


class OracleInconsistencyError(RuntimeError):
    """An oracle returned a counterexample that does not disagree with the hypothesis."""


class GenerationBudgetError(RuntimeError):
    """Rejection sampling in an instance generator ran out of attempts."""
