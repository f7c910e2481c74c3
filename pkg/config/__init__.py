"""Config loader for simulator defaults"""
import json
import os
from functools import lru_cache
from typing import Dict, Any, List

from dotenv import load_dotenv

load_dotenv()

CONFIG_PATH = os.path.join(os.path.dirname(__file__), 'defaults.json')


@lru_cache(maxsize=1)
def load_defaults() -> Dict[str, Any]:
    """Load and cache simulator defaults from JSON file"""
    with open(CONFIG_PATH, 'r') as f:
        return json.load(f)


def get_default_seed() -> int:
    """Get the fixed master seed used when none is given"""
    return int(load_defaults()['default_seed'])


def get_default_radius(order: int, modes: int) -> float:
    """
    Get the default VCP contour radius for a correlation order.

    Args:
        order: Correlation order N = |outputs|
        modes: Number of occupied input modes

    Returns:
        The max-order radius when order == modes, else the low-order radius
    """
    vcp = load_defaults()['vcp']
    if order >= modes:
        return float(vcp['max_order_radius'])
    return float(vcp['low_order_radius'])


def get_default_d() -> int:
    """Get the default phase-circle cardinality for QCP"""
    return int(load_defaults()['qcp']['d'])


def get_ensemble_defaults() -> Dict[str, int]:
    """Get default (L1, L2) ensemble shape"""
    ensemble = load_defaults()['ensemble']
    return {'L1': int(ensemble['L1']), 'L2': int(ensemble['L2'])}


def get_noise_levels() -> List[float]:
    """Get default phase-noise standard deviations (radians) for sweeps"""
    return [float(s) for s in load_defaults()['noise']['levels']]


def get_default_realizations() -> int:
    """Get default number of noise realizations averaged per point"""
    return int(load_defaults()['noise']['realizations'])


def get_fringe_points() -> int:
    """Get default number of phi grid points in a fringe scan"""
    return int(load_defaults()['fringe']['points'])


def get_guard_limits() -> Dict[str, int]:
    """Get brute-force size guards for the exact oracles"""
    return {k: int(v) for k, v in load_defaults()['guards'].items()}


def get_unitarity_tolerance() -> float:
    """Get max-norm tolerance on U^dagger U - I"""
    return float(load_defaults()['numerics']['unitarity_tolerance'])


def get_batch_size() -> int:
    """Get vectorisation batch size (QUFTI_BATCH_SIZE overrides)"""
    override = os.getenv('QUFTI_BATCH_SIZE')
    if override:
        return max(1, int(override))
    return int(load_defaults()['numerics']['batch_size'])


def get_ryser_block_bits() -> int:
    """Get number of columns enumerated as one vectorised block in Ryser"""
    return int(load_defaults()['numerics']['ryser_block_bits'])


def get_worker_count() -> int:
    """Get worker pool size (QUFTI_WORKERS overrides)"""
    override = os.getenv('QUFTI_WORKERS')
    if override:
        return max(1, int(override))
    return int(load_defaults().get('workers', 1))
