"""Fast Jacobi polynomials through nonoscillatory phase functions.

Evaluation of P~_nu(t) in O(1) time from tabulated phase and amplitude
functions, O(n) Gauss-Jacobi quadrature and an orthogonal Jacobi transform
built from a low-rank factorization and FFTs.
"""

from .errors import (AccuracyError, AccuracyWarning, ConsistencyError, DomainError,
                     FastJacobiError, FormatError, ParameterError)
from .jacobi_ref import JacobiParams, ptilde_ref
from .jactransform import (TransformPlan, build_transform_plan, dense_jacobi_matrix,
                           forward, inverse)
from .phasefn import (PhaseExpansion, build_phase_expansion, eval_p, eval_phase,
                      eval_ptilde, load, save)
from .quadrule import (QuadratureRule, gauss_jacobi, gauss_jacobi_reference,
                       modified_gauss_jacobi)

__all__ = [
    "AccuracyError", "AccuracyWarning", "ConsistencyError", "DomainError",
    "FastJacobiError", "FormatError", "ParameterError",
    "JacobiParams", "ptilde_ref",
    "PhaseExpansion", "build_phase_expansion", "eval_phase", "eval_ptilde", "eval_p",
    "save", "load",
    "QuadratureRule", "gauss_jacobi", "modified_gauss_jacobi", "gauss_jacobi_reference",
    "TransformPlan", "build_transform_plan", "dense_jacobi_matrix", "forward", "inverse",
]
