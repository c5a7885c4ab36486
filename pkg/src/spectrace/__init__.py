"""Numerical laboratory for regularized spectral traces of high-order
two-point boundary value problems perturbed by finite complex measures."""

from spectrace.bc import (
    BoundaryConditionSet,
    BoundaryForm,
    ComplexPolynomial,
    DependentForms,
    classify_shape,
    normalize,
    validate,
)
from spectrace.determinants import (
    LeadingDeterminants,
    NotRegular,
    OddOrderUnsupported,
    RegularityReport,
    char_det,
    char_det_minor,
    leading_determinants,
    leading_matrix,
    nu,
    regularity,
)
from spectrace.measure import Measure, UnsupportedEndpointDerivative
from spectrace.spectrum import (
    CountMismatch,
    SpectralProblem,
    SpectrumSlice,
    atom_jump,
    char_det_q,
    find_eigenvalues,
    fundamental_matrix,
)
from spectrace.trace import (
    TraceEstimate,
    cesaro,
    cesaro_bracketed,
    partial_sums,
    rhs_prediction,
)
from spectrace.green import (
    GreenDiagonal,
    NearSpectrum,
    QuadratureNotConverged,
    contour_trace_integral,
    frak_C_via_lemma51,
    green_diag,
)

__version__ = "0.1.0"
