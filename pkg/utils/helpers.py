"""
Utility functions for seeding, grids and value parsing
"""

import re
from typing import List, Optional, Sequence, Union

import numpy as np

SEED_BITS = 64


def float_key(value: float) -> int:
    """
    Map a float to a stable integer key for seed derivation

    Args:
        value: Any finite float (-0.0 and 0.0 share a key)

    Returns:
        The IEEE-754 bit pattern as a non-negative int
    """
    return int(np.float64(float(value) + 0.0).view(np.uint64))


def derive_seed(master: int, *keys: int) -> int:
    """
    Derive a 64-bit child seed from a master seed and integer keys

    Args:
        master: Master seed (non-negative int)
        keys: Spawn keys identifying the work unit

    Returns:
        Deterministic 64-bit integer seed
    """
    seq = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in keys))
    hi, lo = seq.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Build an independent generator for the stream (seed, keys)"""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(seq))


def parse_seed(text: Union[str, int, None], default: int) -> int:
    """
    Parse a seed flag value

    Args:
        text: Integer text, 'random', or None
        default: Seed used when text is None

    Returns:
        Seed as non-negative int ('random' draws fresh entropy)
    """
    if text is None:
        return int(default)
    if isinstance(text, (int, np.integer)):
        seed = int(text)
    elif str(text).strip().lower() == 'random':
        return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])
    else:
        seed = int(str(text).strip())
    if seed < 0 or seed >= 2 ** SEED_BITS:
        raise ValueError(f"seed must be in [0, 2**{SEED_BITS}), got {seed}")
    return seed


def parse_float_list(text: Optional[str]) -> List[float]:
    """
    Parse a comma or whitespace separated list of floats

    Args:
        text: e.g. '0, 0.05,0.1'

    Returns:
        List of floats (empty for empty text)
    """
    if not text:
        return []
    parts = [p for p in re.split(r'[,\s]+', str(text).strip()) if p]
    return [float(p) for p in parts]


def parse_int_list(text: Optional[str]) -> List[int]:
    """Parse a comma or whitespace separated list of ints"""
    if not text:
        return []
    parts = [p for p in re.split(r'[,\s]+', str(text).strip()) if p]
    return [int(p) for p in parts]


def symmetric_grid(half_range: float, points: int) -> List[float]:
    """
    Build an odd-length grid symmetric about zero that contains 0 exactly

    Args:
        half_range: Grid spans [-half_range, half_range]
        points: Number of points (rounded up to odd)

    Returns:
        List of grid values
    """
    if points <= 1:
        return [0.0]
    if points % 2 == 0:
        points += 1
    half = points // 2
    steps = np.arange(-half, half + 1) * (half_range / half)
    return [float(s) + 0.0 for s in steps]
