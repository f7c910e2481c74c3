"""
Simulator utilities
"""

from .helpers import (
    float_key,
    derive_seed,
    derive_rng,
    parse_seed,
    parse_float_list,
    parse_int_list,
    symmetric_grid
)
from .parallel import run_ordered

__all__ = [
    'float_key',
    'derive_seed',
    'derive_rng',
    'parse_seed',
    'parse_float_list',
    'parse_int_list',
    'symmetric_grid',
    'run_ordered'
]
