"""Exception hierarchy shared by all modules."""


class ExpBernError(Exception):
    """Base class for computational failures (CLI exit status 1)."""


class NonFiniteError(ExpBernError, OverflowError):
    """Evaluation produced inf or nan."""


class OrderUndeterminedError(ExpBernError):
    """All derivatives up to the requested order vanish numerically."""


class OrderMismatchError(ExpBernError):
    """A 0/0 limit was requested at an order inconsistent with the data."""


class NotChebyshevError(ExpBernError):
    """The space is not an extended Chebyshev system for {a, b}."""

    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class ConstructionError(ExpBernError):
    """An identity that holds in exact arithmetic failed numerically."""


class LimitUnresolvedError(ExpBernError):
    """The confluent limit could not be resolved to the requested accuracy."""


class MissingNodesError(ExpBernError, KeyError):
    """A sample table does not cover every node of the operator."""

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"sample table misses nodes {self.missing}")

    def __str__(self):
        return self.args[0]
