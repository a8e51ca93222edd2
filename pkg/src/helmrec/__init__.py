"""Linear finite elements for the 2D Helmholtz equation with impedance
boundary conditions, polynomial-preserving gradient recovery, Richardson
extrapolation of recovered gradients, and the recovery-based a posteriori
error estimator."""

from .analytic import (
    ExactEval,
    ProblemSpec,
    bessel_j,
    bessel_problem,
    exact_eval,
    gaussian_problem,
    robin_g,
    source_f,
    verify_manufactured,
)
from .assembly import (
    QuadratureRule,
    SparseComplexMatrix,
    assemble_elliptic_projection,
    assemble_helmholtz,
    quadrature_rule,
    write_matrix_market,
)
from .extrapolate import LevelPair, estimator_eta, make_level_pair, prolong, richardson
from .fields import NodalField, VectorNodalField
from .mesh import (
    EdgeGeometry,
    Mesh,
    MeshQualityReport,
    ParentMap,
    Point2,
    alpha_report,
    build_hexagon_mesh,
    build_square_mesh,
    delaunay_mesh,
    edge_geometry,
    eval_p1,
    load_mesh,
    refine_red,
    save_mesh,
)
from .metrics import (
    ConvergenceRecord,
    ErrorBundle,
    critical_mesh_size,
    error_bundle,
    fit_order,
    grad_diff_l2,
    grad_error_l2,
    reference_norms,
)
from .recovery import Patch, PatchDegenerate, RecoveryOperator, build_patch, recover_gradient
from .solve import NoConvergence, SingularSystem, SolveReport, solve
from .studies import (
    StudyConfig,
    run_critical_h,
    run_estimator_only,
    run_pollution_scan,
    run_refinement_study,
)

__version__ = "0.1.0"
