from . import ops
from .errors import (
    DegenerateRowError,
    EvaluationError,
    LabelError,
    NonFiniteError,
    NumericsError,
    RankError,
    ShapeError,
    UndefinedSimilarityError,
)
from .gradcheck import STENCILS, finite_diff_check, relative_error, stencil_values
from .graph import Graph, Node
from .ops import binary_cross_entropy, cosine_similarity, masked_softmax, matmul
from .optim import OptimizerState, adam_update
from .tensor import Tensor, identity

__all__ = [
    "ops", "Graph", "Node", "Tensor", "identity",
    "matmul", "masked_softmax", "cosine_similarity", "binary_cross_entropy",
    "STENCILS", "finite_diff_check", "relative_error", "stencil_values", "OptimizerState", "adam_update",
    "DegenerateRowError", "EvaluationError", "LabelError", "NonFiniteError", "NumericsError",
    "RankError", "ShapeError", "UndefinedSimilarityError",
]
