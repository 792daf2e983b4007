"""Operational entanglement measures and constrained lower bounds for 4xN states.

The package computes two operational measures -- the transpose negativity and
a flip-map negativity built from a positive (not completely positive) map --
and turns them into closed-form singly-constrained and numerically built
doubly-constrained lower bounds on the entanglement of formation, the tangle,
and the concurrence.
"""

__version__ = "0.1.0"

from .bounds import (  # noqa: F401
    Constraint,
    Measure,
    better_constraint,
    binary_entropy,
    bound_value,
    comparison_grid,
    conc_bound_nt,
    conc_bound_phi,
    eof_bound_nt,
    eof_bound_phi,
    gamma_of_nt,
    htilde_nt,
    tangle_bound_nt,
    tangle_bound_phi,
    tangle_tilde_nt,
)
from .linalg import (  # noqa: F401
    HermitianSpectrum,
    hermitian_eig,
    is_hermitian,
    is_unitary,
    kron,
    partial_trace,
    partial_transpose,
    trace_norm,
)
from .measures import (  # noqa: F401
    AngularMomentumBasis,
    MeasurePoint,
    aligned_pure_state,
    apply_phi_B,
    concurrence_pure,
    eof_pure,
    gap_sample,
    measure_point,
    negativity,
    nhat_phi,
    phi_image_aligned,
    phi_map,
    phi_negativity,
    pure_negativity,
    tangle_pure,
    v_matrix,
)
from .region import (  # noqa: F401
    BranchSolution,
    RegionBoundary,
    boundary_table,
    feasible_mu4_scan,
    in_pure_region,
    lower_boundary,
    pure_state_region,
    solve_constraints,
    upper_boundary,
)
from .spectrum import (  # noqa: F401
    AdmissiblePair,
    SpectrumSummary,
    admissible_pairs,
    admissible_sum,
    predicted_spectrum,
    r_poly_coeffs,
    r_roots,
    verify_against_direct,
)
from .states import (  # noqa: F401
    DensityMatrix,
    PureState,
    SchmidtDecomposition,
    SchmidtVector,
    haar_random_pure,
    make_isotropic,
    make_max_entangled,
    make_product,
    schmidt_decompose,
)
from .surface import (  # noqa: F401
    BoundSurface,
    GridFunction2D,
    build_bound_surface,
    build_gtilde,
    diagonal_consistency,
    extend_monotone,
    load_surface,
    lower_convex_envelope,
    monotone_envelope,
    query,
    query_many,
    save_surface,
)
