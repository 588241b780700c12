"""Conformal metrics of constant curvature k and boundary curvature c on
triangulated surfaces, and weak uniformization of triple junction surfaces."""

from .atlas import AtlasRow, BoundaryCurve, LengthInverter, c_hat, invert_length, sweep, verify_scaling
from .disk import DiskParameter, disk_c, disk_c_hat, disk_curvature, disk_length, rho_from_length
from .junction import (
    BoundaryMetric,
    MatchResult,
    PositiveEulerCharacteristic,
    SurfaceComponent,
    TopologyError,
    TripleJunctionSpec,
    all_disk_case,
    check_compatibility,
    load_spec,
    match_junction,
    uniqueness_probe,
)
from .mesh import (
    MeshError,
    TriangleMesh,
    euler_characteristic,
    generate_double_torus_with_hole,
    generate_torus_with_hole,
    generate_torus_with_round_hole,
    load_mesh,
    write_off,
)
from .operators import ConformalState, DiscreteOperators, build_operators, conformal_measures
from .solver import (
    CurvatureTarget,
    InadmissibleTarget,
    NearBlowup,
    NonConvergence,
    SolveReport,
    SolverError,
    SolverOptions,
    continuation_solve,
    discrete_energy,
    jacobian,
    length_derivative,
    residual,
    solve,
    solve_linearized,
)

__version__ = "0.1.0"
