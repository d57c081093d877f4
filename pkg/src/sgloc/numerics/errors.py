"""Exception types raised by the tensor substrate."""


class NumericsError(ValueError):
    pass


class ShapeError(NumericsError):
    pass


class NonFiniteError(NumericsError):
    pass


class DegenerateRowError(NumericsError):
    """A softmax row had no unmasked entry."""


class LabelError(NumericsError):
    pass


class RankError(NumericsError):
    pass


class UndefinedSimilarityError(NumericsError):
    pass


class EvaluationError(RuntimeError):
    """Loss evaluation produced a non-finite value at a perturbed point."""
