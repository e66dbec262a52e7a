from .fcp import (
    FcpConfig,
    FcpResult,
    MappingException,
    fcp_map,
    fcp_map_tensor,
    filters_to_json,
    normal_equations,
    stack_frames,
    weighted_residual,
)
from .mapping import (
    ChannelMapper,
    FcpMapper,
    MappingMethod,
    WienerMapper,
    create_mapper,
    map_sources,
)
from .solver import solve_hermitian, tikhonov_eps
from .weights import LambdaWeights, compute_lambda
from .wiener import WienerConfig, WienerResult, apply_filter, cross_correlation, gram_matrix, wiener_map

__all__ = [
    "ChannelMapper",
    "FcpConfig",
    "FcpMapper",
    "FcpResult",
    "LambdaWeights",
    "MappingException",
    "MappingMethod",
    "WienerConfig",
    "WienerMapper",
    "WienerResult",
    "apply_filter",
    "compute_lambda",
    "create_mapper",
    "cross_correlation",
    "fcp_map",
    "fcp_map_tensor",
    "filters_to_json",
    "gram_matrix",
    "map_sources",
    "normal_equations",
    "solve_hermitian",
    "stack_frames",
    "tikhonov_eps",
    "weighted_residual",
    "wiener_map",
]
