"""
Discrete qudit complex-P sampler (QCP)
Unbiased Monte Carlo estimates of sub-matrix permanents and of their
modulus squared from random d-th roots of unity. Maximum-order
correlations only.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from config import get_default_d, get_guard_limits, get_batch_size
from ensemble import EstimateResult, batched_mean, summarize
from networks import UnitaryMatrix
from services.validation import (
    ParameterValidator,
    InvalidDimensionError,
    InvalidDrawError,
    MaxOrderOnlyError,
    NumericFailureError,
)
from utils.helpers import derive_rng
from utils.parallel import run_ordered

logger = logging.getLogger(__name__)

METHOD = 'qcp'

# stream offsets for the two independent draws of each subensemble
Q_STREAM = 0
Q_TILDE_STREAM = 1


@dataclass(frozen=True)
class QcpConfig:
    """Phase-circle cardinality d with input subset and output subset of equal size"""
    inputs: Tuple[int, ...]
    outputs: Tuple[int, ...]
    d: int = field(default_factory=get_default_d)
    debug_log_check: bool = False

    def __post_init__(self):
        d = ParameterValidator.positive_int(self.d, 'd', minimum=2)
        inputs = tuple(int(k) for k in self.inputs)
        outputs = tuple(int(k) for k in self.outputs)
        if not inputs:
            raise InvalidDimensionError("inputs must not be empty")
        if len(inputs) != len(outputs):
            raise MaxOrderOnlyError(
                f"QCP only estimates maximum-order correlations: |outputs|={len(outputs)} != |inputs|={len(inputs)}"
            )
        object.__setattr__(self, 'd', d)
        object.__setattr__(self, 'inputs', inputs)
        object.__setattr__(self, 'outputs', outputs)

    @classmethod
    def max_order(cls, modes: int, d: Optional[int] = None, debug_log_check: bool = False) -> 'QcpConfig':
        """Every input and every output mode of an M-mode network"""
        modes = ParameterValidator.positive_int(modes, 'M')
        all_modes = tuple(range(modes))
        return cls(inputs=all_modes, outputs=all_modes, d=d or get_default_d(),
                   debug_log_check=debug_log_check)

    @property
    def order(self) -> int:
        return len(self.inputs)


@dataclass(frozen=True, eq=False)
class QuditDraw:
    """Paired discrete draws q and q-tilde over the input subset"""
    q: np.ndarray
    q_tilde: np.ndarray

    @classmethod
    def sample(cls, cfg: QcpConfig, rng_q: np.random.Generator,
               rng_q_tilde: np.random.Generator) -> 'QuditDraw':
        """Draw q and q-tilde from their own streams"""
        return cls(q=rng_q.integers(0, cfg.d, size=cfg.order),
                   q_tilde=rng_q_tilde.integers(0, cfg.d, size=cfg.order))


@dataclass(frozen=True)
class PermanentEstimate:
    """Sampled permanent with the standard error of its mean"""
    value: complex
    stderr: float
    samples: int
    seed: int


def roots_of_unity(d: int) -> np.ndarray:
    """z^k for k = 0..d-1, exact on the real and imaginary axes"""
    k = np.arange(d)
    roots = np.exp(2j * np.pi * k / d)
    quarter = (4 * k) % d == 0
    axis_values = np.array([1, 1j, -1, -1j])[(4 * k[quarter]) // d % 4]
    roots[quarter] = axis_values
    return roots


def _check_network(network: UnitaryMatrix, cfg: QcpConfig) -> None:
    ParameterValidator.mode_subset(cfg.inputs, network.dim, 'inputs')
    ParameterValidator.mode_subset(cfg.outputs, network.dim, 'outputs')


def _sampler(network: UnitaryMatrix, cfg: QcpConfig):
    """Build p(q) for a batch of draws with shape (size, N)"""
    sub = network.submatrix(cfg.outputs, cfg.inputs)
    sub_t = sub.T
    roots = roots_of_unity(cfg.d)

    def evaluate(q: np.ndarray) -> np.ndarray:
        zq = roots[q]
        row_sums = zq @ sub_t
        values = np.prod(zq.conj(), axis=1) * np.prod(row_sums, axis=1)
        if cfg.debug_log_check:
            deviation = log_product_check(zq, row_sums, values)
            logger.debug(f"QCP log-domain cross-check: max relative deviation {deviation:.3e}")
        return values

    return evaluate


def log_product_check(zq: np.ndarray, row_sums: np.ndarray, values: np.ndarray) -> float:
    """
    Recompute p(q) through log magnitudes and summed phases

    Args:
        zq: Root powers z^q, shape (size, N)
        row_sums: Row sums of U(outputs, inputs) z^q, shape (size, N)
        values: Directly accumulated products, shape (size,)

    Returns:
        Max relative deviation between the two accumulations
    """
    with np.errstate(divide='ignore'):
        log_magnitude = np.log(np.abs(row_sums)).sum(axis=1)
    phase = np.angle(row_sums).sum(axis=1) - np.angle(zq).sum(axis=1)
    reference = np.exp(log_magnitude) * np.exp(1j * phase)
    scale = np.maximum(np.abs(reference), np.finfo(np.float64).tiny)
    return float(np.max(np.abs(values - reference) / scale)) if values.size else 0.0


def sample_p(network: UnitaryMatrix, cfg: QcpConfig, q: Sequence[int]) -> complex:
    """
    One permanent sample for a draw q over the input subset

    p(q) = prod_{i in inputs} z^{-q_i} * prod_{k in outputs} sum_{j in inputs} U_kj z^{q_j}

    Args:
        network: Unitary network U
        cfg: QCP configuration
        q: Integers in 0..d-1, one per input mode

    Returns:
        Complex sample p(q)

    Raises:
        InvalidDrawError: If q has the wrong length or an out-of-range entry
    """
    _check_network(network, cfg)
    draw = np.asarray(q)
    if draw.ndim != 1 or draw.shape[0] != cfg.order:
        raise InvalidDrawError(f"q must have {cfg.order} entries, got shape {draw.shape}")
    if not np.issubdtype(draw.dtype, np.integer):
        raise InvalidDrawError(f"q entries must be integers, got {draw.dtype}")
    if np.any(draw < 0) or np.any(draw >= cfg.d):
        raise InvalidDrawError(f"q entries must lie in 0..{cfg.d - 1}, got {draw.tolist()}")
    return complex(_sampler(network, cfg)(draw[None, :])[0])


def _draw_batch(evaluate, cfg: QcpConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    values = evaluate(rng.integers(0, cfg.d, size=(size, cfg.order)))
    if not np.all(np.isfinite(values)):
        raise NumericFailureError(f"non-finite permanent sample at order {cfg.order}")
    return values


def estimate_permanent(
    network: UnitaryMatrix,
    cfg: QcpConfig,
    L: int,
    seed: int,
    batch_size: int = 0
) -> PermanentEstimate:
    """
    Estimate perm U(outputs, inputs) from L uniform draws of q

    Args:
        network: Unitary network U
        cfg: QCP configuration
        L: Number of draws
        seed: Stream seed
        batch_size: Vectorisation batch (config default when 0)

    Returns:
        PermanentEstimate
    """
    _check_network(network, cfg)
    L = ParameterValidator.positive_int(L, 'L')
    evaluate = _sampler(network, cfg)
    rng = derive_rng(seed, Q_STREAM)
    batch_size = batch_size or get_batch_size()

    sums = []
    square_sums = []
    remaining = L
    while remaining > 0:
        size = min(batch_size, remaining)
        values = _draw_batch(evaluate, cfg, rng, size)
        sums.append(np.sum(values))
        square_sums.append(np.sum(np.abs(values) ** 2))
        remaining -= size

    mean = complex(np.sum(sums) / L)
    spread = max(float(np.sum(square_sums)) / L - abs(mean) ** 2, 0.0)
    return PermanentEstimate(value=mean, stderr=math.sqrt(spread / L), samples=L, seed=int(seed))


def estimate_perm_squared(
    network: UnitaryMatrix,
    cfg: QcpConfig,
    L1: int,
    L2: int,
    seed: int,
    workers: int = 1,
    batch_size: int = 0
) -> EstimateResult:
    """
    Estimate |perm U(outputs, inputs)|^2

    Subensemble i averages p over L2 draws of q and, separately, over L2
    draws of q-tilde on an independent stream; Q_i is the real part of
    <p(q)> conj(<p(q-tilde)>).

    Args:
        network: Unitary network U
        cfg: QCP configuration
        L1: Number of subensembles (>= 2)
        L2: Draws per subensemble and per stream
        seed: Master seed
        workers: Thread pool size over subensembles
        batch_size: Vectorisation batch (config default when 0)

    Returns:
        EstimateResult tagged 'qcp'
    """
    _check_network(network, cfg)
    L1, L2 = ParameterValidator.ensemble_shape(L1, L2)
    evaluate = _sampler(network, cfg)

    def run_subensemble(index: int) -> complex:
        rng_q = derive_rng(seed, index, Q_STREAM)
        rng_q_tilde = derive_rng(seed, index, Q_TILDE_STREAM)
        perm = batched_mean(lambda size: _draw_batch(evaluate, cfg, rng_q, size), L2, batch_size)
        perm_tilde = batched_mean(lambda size: _draw_batch(evaluate, cfg, rng_q_tilde, size), L2, batch_size)
        return perm * perm_tilde.conjugate()

    start = time.perf_counter()
    products = run_ordered(run_subensemble, list(range(L1)), workers)
    elapsed = time.perf_counter() - start
    result = summarize(np.array(products), L2, seed, METHOD, elapsed)
    logger.info(
        f"QCP order {cfg.order} on {network.label}: Q={result.mean:.6g} +/- {result.stderr:.3g} "
        f"(d={cfg.d}, L1={L1}, L2={L2}, {elapsed:.2f}s)"
    )
    return result


def enumerate_perm_exact(network: UnitaryMatrix, cfg: QcpConfig, batch_size: int = 0) -> complex:
    """
    Exact permanent by summing p(q) over all d^N draws

    Cross terms cancel under the full sum, so the average equals
    perm U(outputs, inputs) for single-photon inputs.

    Args:
        network: Unitary network U
        cfg: QCP configuration
        batch_size: Draws evaluated per chunk (config default when 0)

    Returns:
        Complex permanent

    Raises:
        SizeLimitError: If d^N exceeds the enumeration guard
    """
    _check_network(network, cfg)
    total = cfg.d ** cfg.order
    ParameterValidator.size_guard(total, get_guard_limits()['enumeration_max_draws'],
                                  'enumeration size d^N', 'enumeration limit')
    evaluate = _sampler(network, cfg)
    place_values = cfg.d ** np.arange(cfg.order, dtype=np.int64)
    offset = 0

    def next_chunk(size: int) -> np.ndarray:
        nonlocal offset
        index = np.arange(offset, offset + size, dtype=np.int64)
        offset += size
        digits = (index[:, None] // place_values) % cfg.d
        return evaluate(digits)

    value = batched_mean(next_chunk, total, batch_size)
    logger.debug(f"Enumerated {total} draws for order {cfg.order} on {network.label}")
    return value
