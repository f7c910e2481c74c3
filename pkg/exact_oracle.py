"""
Exact reference computations
Matrix permanents, brute-force Fock output statistics and the analytic
count-rate formula used to validate the samplers
"""
import logging
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, permutations
from typing import Dict, List, Sequence, Tuple

import numpy as np

from config import get_guard_limits, get_ryser_block_bits
from networks import UnitaryMatrix
from services.validation import ParameterValidator, InvalidDimensionError

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-9


@dataclass
class FockDistribution:
    """Output photon-number distribution for single photons in a set of inputs"""
    modes: int
    photons: int
    outcomes: List[Tuple[Tuple[int, ...], float]] = field(default_factory=list)

    def total_probability(self) -> float:
        """Sum of all outcome probabilities"""
        return math.fsum(p for _, p in self.outcomes)

    def probability(self, occupation: Sequence[int]) -> float:
        """Probability of one occupation vector (0 if not listed)"""
        key = tuple(int(n) for n in occupation)
        for occ, p in self.outcomes:
            if occ == key:
                return p
        return 0.0

    def as_dict(self) -> Dict[Tuple[int, ...], float]:
        """Outcomes keyed by occupation vector"""
        return dict(self.outcomes)


def _as_square(matrix) -> np.ndarray:
    array = np.asarray(matrix, dtype=np.complex128)
    if array.ndim != 2 or array.shape[0] != array.shape[1] or array.shape[0] < 1:
        raise InvalidDimensionError(f"permanent needs a non-empty square matrix, got shape {array.shape}")
    return array


def permanent_ryser(matrix) -> complex:
    """
    Permanent by Ryser's inclusion-exclusion formula

    perm(A) = (-1)^n sum_S (-1)^|S| prod_i sum_{j in S} A_ij.
    The low columns are enumerated as one vectorised block; the remaining
    columns are walked in Gray-code order, updating the running column sum
    by one column per step.

    Args:
        matrix: n x n complex matrix

    Returns:
        perm(A) as complex

    Raises:
        InvalidDimensionError: If not square
        SizeLimitError: If n exceeds the Ryser guard
    """
    A = _as_square(matrix)
    n = A.shape[0]
    ParameterValidator.size_guard(n, get_guard_limits()['ryser_max_n'], 'matrix size', 'Ryser limit')

    block = min(n, get_ryser_block_bits())
    masks = np.arange(2 ** block)
    bits = (masks[:, None] >> np.arange(block)) & 1
    low_sums = bits.astype(np.complex128) @ A[:, :block].T
    low_signs = 1.0 - 2.0 * (bits.sum(axis=1) % 2)

    high = A[:, block:]
    high_count = n - block
    high_sum = np.zeros(n, dtype=np.complex128)
    sign = 1.0
    total = 0j
    for step in range(2 ** high_count):
        if step:
            j = (step & -step).bit_length() - 1
            gray = step ^ (step >> 1)
            if (gray >> j) & 1:
                high_sum += high[:, j]
            else:
                high_sum -= high[:, j]
            sign = -sign
        products = np.prod(low_sums + high_sum, axis=1)
        total += sign * np.dot(low_signs, products)

    return complex((-1) ** n * total)


def permanent_by_definition(matrix) -> complex:
    """
    Permanent as the sum over all n! permutations

    Args:
        matrix: n x n complex matrix with n <= definition guard

    Returns:
        perm(A) as complex
    """
    A = _as_square(matrix)
    n = A.shape[0]
    ParameterValidator.size_guard(n, get_guard_limits()['definition_max_n'], 'matrix size', 'permutation-sum limit')
    rows = np.arange(n)
    total = 0j
    for cols in permutations(range(n)):
        total += np.prod(A[rows, list(cols)])
    return complex(total)


def fock_output_distribution(network: UnitaryMatrix, inputs: Sequence[int]) -> FockDistribution:
    """
    Full output distribution for one photon in each input mode

    p(n) = |perm U(n, inputs)|^2 / prod_k n_k!, where U(n, inputs) repeats
    output row k n_k times.

    Args:
        network: Unitary network
        inputs: 0-based occupied input modes

    Returns:
        FockDistribution over all occupation vectors with sum(n) = |inputs|

    Raises:
        SizeLimitError: If the photon number or configuration count exceeds its guard
    """
    modes = network.dim
    inputs = ParameterValidator.mode_subset(inputs, modes, 'inputs')
    photons = len(inputs)
    guards = get_guard_limits()
    ParameterValidator.size_guard(photons, guards['fock_max_photons'], 'photon number', 'Fock enumeration limit')
    configurations = math.comb(modes + photons - 1, photons)
    ParameterValidator.size_guard(configurations, guards['fock_max_configurations'],
                                  'output configuration count', 'Fock configuration limit')

    entries = network.entries
    distribution = FockDistribution(modes=modes, photons=photons)
    for rows in combinations_with_replacement(range(modes), photons):
        occupation = np.bincount(rows, minlength=modes)
        sub = entries[np.ix_(list(rows), list(inputs))]
        weight = float(np.prod([math.factorial(int(n)) for n in occupation]))
        p = abs(permanent_ryser(sub)) ** 2 / weight
        distribution.outcomes.append((tuple(int(n) for n in occupation), p))

    total = distribution.total_probability()
    if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
        logger.warning(f"Fock distribution sums to {total:.12f} for {network.label}")
    logger.debug(f"Enumerated {configurations} output configurations for {photons} photons in {modes} modes")
    return distribution


def fock_correlation(network: UnitaryMatrix, inputs: Sequence[int], outputs: Sequence[int]) -> float:
    """
    Exact normally ordered correlation <prod_{k in outputs} n_k>

    Args:
        network: Unitary network
        inputs: 0-based occupied input modes (one photon each)
        outputs: 0-based output modes in the correlation

    Returns:
        Expected product of output photon numbers
    """
    outputs = ParameterValidator.mode_subset(outputs, network.dim, 'outputs')
    distribution = fock_output_distribution(network, inputs)
    terms = []
    for occupation, p in distribution.outcomes:
        moment = 1
        for k in outputs:
            moment *= occupation[k]
        if moment:
            terms.append(p * moment)
    return math.fsum(terms)


def q_conjecture(modes: int, gradient: float) -> float:
    """
    Analytic maximum-order count rate of the noiseless interferometer

    Q = prod_{j=1}^{M-1} [2j(M-j) cos(M phi) + M^2 - 2jM + 2j^2] / M^2

    Args:
        modes: Mode count M >= 2
        gradient: Phase gradient phi (radians)

    Returns:
        Q in [0, 1]
    """
    modes = ParameterValidator.positive_int(modes, 'M', minimum=2)
    gradient = ParameterValidator.finite(gradient, 'phi')
    j = np.arange(1, modes, dtype=np.float64)
    factors = (2 * j * (modes - j) * np.cos(modes * gradient) + modes ** 2 - 2 * j * modes + 2 * j ** 2) / modes ** 2
    return float(np.prod(factors))


def max_order_rate(network: UnitaryMatrix, inputs: Sequence[int], outputs: Sequence[int]) -> float:
    """|perm U(outputs, inputs)|^2 by Ryser"""
    inputs = ParameterValidator.mode_subset(inputs, network.dim, 'inputs')
    outputs = ParameterValidator.mode_subset(outputs, network.dim, 'outputs')
    if len(inputs) != len(outputs):
        raise InvalidDimensionError(
            f"maximum-order rate needs |outputs| == |inputs|, got {len(outputs)} and {len(inputs)}"
        )
    return abs(permanent_ryser(network.submatrix(outputs, inputs))) ** 2
