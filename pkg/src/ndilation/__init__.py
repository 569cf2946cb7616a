"""N-dilations of factorizable unital quantum channels on finite-dimensional algebras."""
from .algebra import (
    AlgebraElement,
    MatrixAlgebra,
    diagonal_algebra,
    full_algebra,
    make_algebra,
    partial_trace,
    tensor_algebra,
    trace,
)
from .channel import Channel, choi_matrix, make_channel
from .dilation import NDilation, build_n_dilation, verify_n_dilation
from .factorization import UnitaryFactorization, factorization_from_unitary, verify_one_dilation
from .gns import classify, representing_matrix
from .unitary_dilation import bridge_check, egervary_n_dilation

__version__ = "0.1.0"

__all__ = [
    "AlgebraElement", "MatrixAlgebra", "diagonal_algebra", "full_algebra", "make_algebra",
    "partial_trace", "tensor_algebra", "trace", "Channel", "choi_matrix", "make_channel",
    "NDilation", "build_n_dilation", "verify_n_dilation", "UnitaryFactorization",
    "factorization_from_unitary", "verify_one_dilation", "classify", "representing_matrix",
    "bridge_check", "egervary_n_dilation",
]
