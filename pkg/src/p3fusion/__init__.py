"""Exact computations with fusion systems on extraspecial groups of order p**3.

Constructs the six systems in which every order-p^2 subgroup is radical,
their unique minimal characteristic bisets and idempotent coefficients, and
the permutation realization of the fusion action.
"""

from .biset import (
    BisetClass,
    FormalBiset,
    GraphSubgroup,
    MarkVector,
    are_conjugate,
    biset_class,
    brute_force_fixed_points,
    compose,
    count_fixed_points,
    decompose_by_marks,
    is_left_stable,
    is_right_stable,
    mark_vector,
    n_set,
    opposite,
    restrict_left,
)
from .fusion import (
    FusionClass,
    FusionMorphism,
    FusionSystem,
    FusionSystemSpec,
    LambdaSets,
    MatrixGL2,
    aut_F_V,
    build_out_F,
    builtin_fusion_system,
    builtin_systems,
    f_number,
    fusion_system,
    lambda_sets,
    lift_matrix_to_aut,
    resolve_system,
)
from .group import (
    GroupElement,
    GroupMorphism,
    Subgroup,
    ambient_group,
    centralizer,
    conjugation_morphism,
    maximal_subgroups,
    multiply,
)
from .idempotent import omega0, omega1, omega2, omega3, verify_idempotent_stability
from .realize import build_index_set, check_transitivity, perm_from_morphism
from .solver import SolverResult, exoticity_bound, minimal_biset, verify_table

__version__ = "0.1.0"

__all__ = [
    "BisetClass", "FormalBiset", "GraphSubgroup", "MarkVector",
    "are_conjugate", "biset_class", "brute_force_fixed_points", "compose",
    "count_fixed_points", "decompose_by_marks", "is_left_stable",
    "is_right_stable", "mark_vector", "n_set", "opposite", "restrict_left",
    "FusionClass", "FusionMorphism", "FusionSystem", "FusionSystemSpec",
    "LambdaSets", "MatrixGL2", "aut_F_V", "build_out_F",
    "builtin_fusion_system", "builtin_systems", "f_number", "fusion_system",
    "lambda_sets", "lift_matrix_to_aut", "resolve_system",
    "GroupElement", "GroupMorphism", "Subgroup", "ambient_group",
    "centralizer", "conjugation_morphism", "maximal_subgroups", "multiply",
    "omega0", "omega1", "omega2", "omega3", "verify_idempotent_stability",
    "build_index_set", "check_transitivity", "perm_from_morphism",
    "SolverResult", "exoticity_bound", "minimal_biset", "verify_table",
]
