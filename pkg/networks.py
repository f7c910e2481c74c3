"""
Network construction for Fourier-transform interferometers
Builds and validates the unitary transfer matrices fed to the samplers
"""
import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.linalg import qr

from config import get_unitarity_tolerance
from services.validation import (
    ParameterValidator,
    InvalidDimensionError,
    InvalidProfileError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    """
    M x M complex transfer matrix of a lossless photonic network.

    Unitarity is checked at construction; the entries array is made
    read-only so instances can be shared across worker threads.
    """
    entries: np.ndarray
    label: str = 'U'

    def __post_init__(self):
        matrix = np.array(self.entries, dtype=np.complex128, copy=True)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
            raise InvalidDimensionError(f"{self.label} must be a non-empty square matrix, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise InvalidDimensionError(f"{self.label} has non-finite entries")
        deviation = unitarity_deviation(matrix)
        tolerance = get_unitarity_tolerance()
        if deviation >= tolerance:
            raise InvalidDimensionError(
                f"{self.label} is not unitary: max|U^dagger U - I| = {deviation:.3e} >= {tolerance:.0e}"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, 'entries', matrix)

    @property
    def dim(self) -> int:
        """Mode count M"""
        return self.entries.shape[0]

    def submatrix(self, rows, cols) -> np.ndarray:
        """Rows (outputs) by cols (inputs) selection U(rows, cols)"""
        return self.entries[np.ix_(list(rows), list(cols))]

    def __matmul__(self, other: 'UnitaryMatrix') -> 'UnitaryMatrix':
        return UnitaryMatrix(self.entries @ other.entries, label=f"{self.label}*{other.label}")


@dataclass(frozen=True)
class PhaseProfile:
    """Phase gradient with one realization of per-mode Gaussian noise offsets"""
    gradient: float
    noise_sigma: float = 0.0
    offsets: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        gradient = ParameterValidator.finite(self.gradient, 'gradient')
        sigma = ParameterValidator.non_negative(self.noise_sigma, 'noise_sigma')
        offsets = tuple(float(x) for x in self.offsets)
        if sigma == 0 and any(x != 0 for x in offsets):
            raise InvalidProfileError("offsets must all be zero when noise_sigma is 0")
        if not all(np.isfinite(offsets)):
            raise InvalidProfileError("offsets must be finite")
        object.__setattr__(self, 'gradient', gradient)
        object.__setattr__(self, 'noise_sigma', sigma)
        object.__setattr__(self, 'offsets', offsets)

    @classmethod
    def noiseless(cls, modes: int, gradient: float) -> 'PhaseProfile':
        """Profile with all offsets zero"""
        modes = ParameterValidator.positive_int(modes, 'M')
        return cls(gradient=gradient, noise_sigma=0.0, offsets=(0.0,) * modes)

    def phases(self) -> np.ndarray:
        """Per-mode phases j*phi + xi_j for j = 1..M"""
        j = np.arange(1, len(self.offsets) + 1, dtype=np.float64)
        return j * self.gradient + np.asarray(self.offsets, dtype=np.float64)


def unitarity_deviation(matrix: np.ndarray) -> float:
    """Max-norm of U^dagger U - I"""
    gram = matrix.conj().T @ matrix
    return float(np.max(np.abs(gram - np.eye(matrix.shape[0]))))


def _fourier_entries(modes: int) -> np.ndarray:
    j = np.arange(modes)
    # reduce jk mod M before scaling so large M keeps full phase accuracy
    exponent = np.outer(j, j) % modes
    phases = np.exp(2j * np.pi * exponent / modes)
    # quarter turns are exactly +-1, +-i so cancelling amplitudes cancel to 0
    quarter = (4 * exponent) % modes == 0
    phases[quarter] = np.array([1, 1j, -1, -1j])[(4 * exponent[quarter]) // modes]
    return phases / np.sqrt(modes)


def build_fourier(modes: int) -> UnitaryMatrix:
    """
    Discrete Fourier network F[j][k] = exp(2 pi i j k / M) / sqrt(M)

    Args:
        modes: Mode count M >= 1

    Returns:
        UnitaryMatrix F
    """
    modes = ParameterValidator.positive_int(modes, 'M')
    return UnitaryMatrix(_fourier_entries(modes), label=f"F{modes}")


def build_qufti(modes: int, profile: PhaseProfile) -> UnitaryMatrix:
    """
    Quantum Fourier transform interferometer V = F^dagger diag(e^{i phi_j}) F

    Args:
        modes: Mode count M >= 1
        profile: Gradient and noise offsets, one offset per mode

    Returns:
        UnitaryMatrix V

    Raises:
        InvalidProfileError: If the profile does not have M offsets
    """
    modes = ParameterValidator.positive_int(modes, 'M')
    if len(profile.offsets) != modes:
        raise InvalidProfileError(
            f"profile has {len(profile.offsets)} offsets for a {modes}-mode network"
        )
    fourier = _fourier_entries(modes)
    mask = np.exp(1j * profile.phases())
    matrix = fourier.conj().T @ (mask[:, None] * fourier)
    return UnitaryMatrix(matrix, label=f"QuFTI{modes}")


def sample_noise(
    modes: int,
    gradient: float,
    noise_sigma: float,
    rng: np.random.Generator
) -> PhaseProfile:
    """
    Draw one phase-noise realization xi_j ~ Normal(0, sigma^2)

    Args:
        modes: Mode count M
        gradient: Phase gradient phi (radians per mode index)
        noise_sigma: Standard deviation of xi (radians)
        rng: Random stream; consumed only when noise_sigma > 0

    Returns:
        PhaseProfile with M offsets
    """
    modes = ParameterValidator.positive_int(modes, 'M')
    sigma = ParameterValidator.non_negative(noise_sigma, 'noise_sigma')
    if sigma == 0:
        return PhaseProfile.noiseless(modes, gradient)
    offsets = rng.normal(0.0, sigma, size=modes)
    return PhaseProfile(gradient=gradient, noise_sigma=sigma, offsets=tuple(offsets))


def apply_network(
    network: UnitaryMatrix,
    alpha: np.ndarray,
    beta: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Propagate phase-space amplitudes: (alpha, beta) -> (U alpha, U* beta)

    Args:
        network: Unitary U
        alpha: Complex vector of length M (or batch with last axis M)
        beta: Complex vector of the same shape

    Returns:
        Tuple of output amplitude arrays
    """
    alpha = np.asarray(alpha, dtype=np.complex128)
    beta = np.asarray(beta, dtype=np.complex128)
    for name, vector in (('alpha', alpha), ('beta', beta)):
        if vector.ndim == 0 or vector.shape[-1] != network.dim:
            raise InvalidDimensionError(
                f"{name} must have last axis {network.dim}, got shape {vector.shape}"
            )
    matrix = network.entries
    return alpha @ matrix.T, beta @ matrix.conj().T


def random_unitary(modes: int, rng: np.random.Generator) -> UnitaryMatrix:
    """
    Haar-random unitary from the QR decomposition of a Ginibre matrix

    Args:
        modes: Mode count M
        rng: Random stream

    Returns:
        UnitaryMatrix drawn from the Haar measure
    """
    modes = ParameterValidator.positive_int(modes, 'M')
    ginibre = (rng.standard_normal((modes, modes)) + 1j * rng.standard_normal((modes, modes))) / np.sqrt(2)
    q, r = qr(ginibre)
    diagonal = np.diag(r)
    q = q * (diagonal / np.abs(diagonal))
    return UnitaryMatrix(q, label=f"Haar{modes}")


def fourier_sensitivity_period(modes: int) -> float:
    """Fringe period 2 pi / M of the noiseless interferometer"""
    modes = ParameterValidator.positive_int(modes, 'M')
    return 2 * np.pi / modes
