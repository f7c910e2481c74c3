"""
Continuous von Mises complex-P sampler (VCP)
Draws weighted phase-space samples for single-photon inputs and estimates
normally ordered output correlations of any order
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.special import i0e

from ensemble import EstimateResult, batched_mean, summarize
from networks import UnitaryMatrix, apply_network
from services.validation import (
    ParameterValidator,
    InvalidDimensionError,
    NumericFailureError,
)
from utils.helpers import derive_rng
from utils.parallel import run_ordered

logger = logging.getLogger(__name__)

METHOD = 'vcp'

# below this concentration the Best-Fisher envelope uses its Taylor form
SMALL_KAPPA = 1e-5


@dataclass(frozen=True)
class VcpConfig:
    """Contour radius and single-photon input pattern"""
    radius: float
    occupancy: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'radius', ParameterValidator.positive(self.radius, 'radius'))
        object.__setattr__(self, 'occupancy', ParameterValidator.occupancy(self.occupancy))

    @classmethod
    def all_occupied(cls, modes: int, radius: float) -> 'VcpConfig':
        """One photon in every input mode"""
        modes = ParameterValidator.positive_int(modes, 'M')
        return cls(radius=radius, occupancy=(1,) * modes)

    @property
    def modes(self) -> int:
        return len(self.occupancy)

    @property
    def occupied(self) -> Tuple[int, ...]:
        """Indices of input modes carrying a photon"""
        return tuple(k for k, n in enumerate(self.occupancy) if n)


@dataclass(frozen=True, eq=False)
class VcpSample:
    """
    One weighted phase-space sample

    alpha_k = r exp(i(phi_k + theta_k/2)) and beta_k = r exp(-i(phi_k - theta_k/2)),
    so alpha_k beta_k = r^2 exp(i theta_k) carries no classical phase.
    """
    phi: np.ndarray
    theta: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    weight: complex


def sample_von_mises(kappa: float, rng: np.random.Generator, size=None):
    """
    Draw angles in [-pi, pi) with density proportional to exp(kappa cos theta)

    Best-Fisher wrapped-Cauchy rejection; valid for every kappa >= 0.

    Args:
        kappa: Concentration >= 0
        rng: Random stream
        size: Output shape, or None for a single float

    Returns:
        float or ndarray of angles
    """
    kappa = ParameterValidator.non_negative(kappa, 'kappa')
    shape = () if size is None else (tuple(size) if np.iterable(size) else (int(size),))
    count = int(np.prod(shape)) if shape else 1

    if kappa == 0:
        angles = rng.uniform(-np.pi, np.pi, count)
    else:
        if kappa < SMALL_KAPPA:
            s = 1.0 / kappa + kappa
        else:
            tau = 1.0 + math.sqrt(1.0 + 4.0 * kappa ** 2)
            rho = (tau - math.sqrt(2.0 * tau)) / (2.0 * kappa)
            s = (1.0 + rho ** 2) / (2.0 * rho)

        angles = np.empty(count)
        pending = np.arange(count)
        while pending.size:
            u1, u2, u3 = rng.random((3, pending.size))
            z = np.cos(np.pi * u1)
            f = (1.0 + s * z) / (s + z)
            c = kappa * (s - f)
            with np.errstate(divide='ignore'):
                accept = (c * (2.0 - c) - u2 > 0) | (np.log(c / u2) + 1.0 - c >= 0)
            theta = np.sign(u3 - 0.5) * np.arccos(np.clip(f, -1.0, 1.0))
            angles[pending[accept]] = theta[accept]
            pending = pending[~accept]
        angles[angles >= np.pi] = -np.pi

    if size is None:
        return float(angles[0])
    return angles.reshape(shape)


def mode_weights(cfg: VcpConfig, theta: np.ndarray) -> np.ndarray:
    """
    Per-mode complex weights Omega_k

    Omega_k = (n_k!)^2 I0(r^2) r^{-2 n_k} exp(i(r^2 sin theta_k - n_k theta_k))
    on occupied modes, 1 on empty modes.

    Args:
        cfg: Sampler configuration
        theta: Nonclassical phases, one per mode (ignored on empty modes)

    Returns:
        Complex array of length M
    """
    theta = ParameterValidator.vector_length(np.asarray(theta, dtype=np.float64), cfg.modes, 'theta')
    r2 = cfg.radius ** 2
    n = np.asarray(cfg.occupancy, dtype=np.float64)
    factorial_sq = np.array([math.factorial(k) ** 2 for k in cfg.occupancy], dtype=np.float64)
    magnitude = factorial_sq * (i0e(r2) * np.exp(r2)) / r2 ** n
    weights = magnitude * np.exp(1j * (r2 * np.sin(theta) - n * theta))
    return np.where(n > 0, weights, 1.0 + 0j)


def log_weight_magnitude(cfg: VcpConfig) -> float:
    """log |Omega| summed over occupied modes"""
    r2 = cfg.radius ** 2
    log_i0 = math.log(i0e(r2)) + r2
    total = 0.0
    for n in cfg.occupancy:
        if n:
            total += 2.0 * math.lgamma(n + 1) + log_i0 - 2.0 * n * math.log(cfg.radius)
    return total


def _draw_phases(cfg: VcpConfig, rng: np.random.Generator, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """Classical phases ~ U(-pi, pi) and nonclassical phases ~ VM(0, r^2) on occupied modes"""
    occupied = len(cfg.occupied)
    phi = rng.uniform(-np.pi, np.pi, (size, occupied))
    theta = sample_von_mises(cfg.radius ** 2, rng, (size, occupied))
    return phi, theta


def draw_sample(cfg: VcpConfig, rng: np.random.Generator) -> VcpSample:
    """
    Draw one weighted sample for every input mode

    Empty modes keep alpha = beta = 0 and unit weight.

    Args:
        cfg: Sampler configuration
        rng: Random stream

    Returns:
        VcpSample
    """
    occupied = list(cfg.occupied)
    phi = np.zeros(cfg.modes)
    theta = np.zeros(cfg.modes)
    if occupied:
        phi_occ, theta_occ = _draw_phases(cfg, rng, 1)
        phi[occupied] = phi_occ[0]
        theta[occupied] = theta_occ[0]

    r = cfg.radius
    mask = np.asarray(cfg.occupancy) > 0
    alpha = np.where(mask, r * np.exp(1j * (phi + theta / 2)), 0j)
    beta = np.where(mask, r * np.exp(-1j * (phi - theta / 2)), 0j)
    weight = complex(np.prod(mode_weights(cfg, theta)))
    if not np.isfinite(weight):
        raise NumericFailureError(f"sample weight overflows for {len(occupied)} occupied modes at r={r}")
    return VcpSample(phi=phi, theta=theta, alpha=alpha, beta=beta, weight=weight)


def _moment_sampler(network: UnitaryMatrix, cfg: VcpConfig, outputs: Tuple[int, ...]):
    """
    Build draw(rng, size) returning Omega * prod_{k in outputs} n_k^out per sample

    Each batch of input amplitudes, zero on empty modes, is propagated
    with apply_network and the output columns are read off.
    """
    occupied = list(cfg.occupied)
    columns = list(outputs)
    r = cfg.radius
    r2 = r ** 2
    log_weight = log_weight_magnitude(cfg)

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        phi, theta = _draw_phases(cfg, rng, size)
        alpha = np.zeros((size, cfg.modes), dtype=np.complex128)
        beta = np.zeros((size, cfg.modes), dtype=np.complex128)
        alpha[:, occupied] = r * np.exp(1j * (phi + theta / 2))
        beta[:, occupied] = r * np.exp(-1j * (phi - theta / 2))
        alpha_out, beta_out = apply_network(network, alpha, beta)
        number = alpha_out[:, columns] * beta_out[:, columns]

        # log-magnitude plus phase, exponentiated once per sample
        with np.errstate(divide='ignore'):
            log_magnitude = log_weight + np.log(np.abs(number)).sum(axis=1)
        phase = (r2 * np.sin(theta) - theta).sum(axis=1) + np.angle(number).sum(axis=1)
        with np.errstate(over='ignore'):
            values = np.exp(log_magnitude) * np.exp(1j * phase)
        if not np.all(np.isfinite(values)):
            raise NumericFailureError(
                f"moment product overflows: log magnitude up to {np.max(log_magnitude):.1f}"
            )
        return values

    return draw


def estimate_correlation(
    network: UnitaryMatrix,
    cfg: VcpConfig,
    outputs: Sequence[int],
    L1: int,
    L2: int,
    seed: int,
    workers: int = 1,
    batch_size: int = 0
) -> EstimateResult:
    """
    Estimate <prod_{k in outputs} n_k> for the configured input pattern

    Each of the L1 subensembles averages L2 weighted samples on its own
    stream derived from (seed, subensemble index).

    Args:
        network: Unitary network U
        cfg: Radius and input occupancy (length M)
        outputs: 0-based output modes (non-empty)
        L1: Number of subensembles (>= 2)
        L2: Samples per subensemble
        seed: Master seed
        workers: Thread pool size over subensembles
        batch_size: Vectorisation batch (config default when 0)

    Returns:
        EstimateResult tagged 'vcp'
    """
    if cfg.modes != network.dim:
        raise InvalidDimensionError(
            f"occupancy covers {cfg.modes} modes but the network has {network.dim}"
        )
    outputs = ParameterValidator.mode_subset(outputs, network.dim, 'outputs')
    L1, L2 = ParameterValidator.ensemble_shape(L1, L2)
    draw = _moment_sampler(network, cfg, outputs)

    def run_subensemble(index: int) -> complex:
        rng = derive_rng(seed, index)
        return batched_mean(lambda size: draw(rng, size), L2, batch_size)

    start = time.perf_counter()
    means = run_ordered(run_subensemble, list(range(L1)), workers)
    elapsed = time.perf_counter() - start
    result = summarize(np.array(means), L2, seed, METHOD, elapsed)
    logger.info(
        f"VCP order {len(outputs)} on {network.label}: Q={result.mean:.6g} +/- {result.stderr:.3g} "
        f"(r={cfg.radius}, L1={L1}, L2={L2}, {elapsed:.2f}s)"
    )
    return result
