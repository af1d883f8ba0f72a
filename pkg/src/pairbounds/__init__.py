"""Sharp bounds for two-person encouragement designs with strategic take-up."""
from .typespace import (
    PROFILES,
    PairType,
    TypeSpaceConfig,
    best_response,
    classify,
    decode_type,
    encode_type,
    enumerate_pair_types,
    is_symmetric,
    nash_set,
    potential_outcome,
)
from .restrictions import Restriction, UnsupportedNonlinear, compile_restriction, falsifiable_combination_check
from .program import (
    ADE,
    ASE,
    FixedAllocation,
    IdentifiedInterval,
    LinearProgramSpec,
    PolicyTarget,
    bounds,
    build_program,
    identified_interval,
)

__version__ = "0.1.0"
