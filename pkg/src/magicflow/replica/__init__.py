"""Replica Weingarten tensor network for circuit-averaged CSS entropies."""
from .contract import (
    ContractionResult,
    SpinMPS,
    annealed_css_entropy,
    annealed_curve,
    contract_annealed_upsilon,
    layer_pairs,
)
from .group import (
    GramMatrix,
    SymmetricGroupTable,
    WeingartenMatrix,
    compose,
    cycle_count,
    enumerate_permutations,
    gram_matrix,
    inverse,
    weingarten_matrix,
)
from .mps_magic import css_entropy_mps, mps_to_dense, product_mps, random_mps
from .tensors import (
    BottomBoundary,
    GateTensor,
    TopTensor,
    boundary_weight,
    build_bottom_boundary,
    build_gate_tensor,
    build_top_tensor,
    overlap_vector,
)
