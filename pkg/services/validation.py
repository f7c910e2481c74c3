"""
Parameter validation and error types for the simulator
"""

import math
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np


class QuftiError(Exception):
    """Base class for all simulator failures"""
    pass


class ValidationError(QuftiError):
    """Raised when a parameter or configuration is invalid"""
    pass


class InvalidDimensionError(ValidationError):
    """Raised for a non-positive mode count or mismatched array shapes"""
    pass


class InvalidProfileError(ValidationError):
    """Raised when a phase profile does not fit the network"""
    pass


class InvalidSpecError(ValidationError):
    """Raised for an invalid correlation or scan specification"""
    pass


class InvalidDrawError(ValidationError):
    """Raised when a discrete phase index is out of range"""
    pass


class MaxOrderOnlyError(ValidationError):
    """Raised when QCP is asked for a correlation below maximum order"""
    pass


class SizeLimitError(QuftiError):
    """Raised when a brute-force oracle would exceed its size guard"""
    pass


class NumericFailureError(QuftiError):
    """Raised when a weight or moment product is not finite"""
    pass


class ParameterValidator:
    """Validates numeric parameters before any estimator runs"""

    @staticmethod
    def positive_int(value, name: str, minimum: int = 1) -> int:
        """
        Validate an integer parameter with a lower bound

        Args:
            value: Value to check
            name: Parameter name used in the error message
            minimum: Smallest allowed value

        Raises:
            InvalidDimensionError: If not an integer or below minimum

        Returns:
            The value as int
        """
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise InvalidDimensionError(f"{name} must be an integer, got {value!r}")
        if value < minimum:
            raise InvalidDimensionError(f"{name} must be >= {minimum}, got {value}")
        return int(value)

    @staticmethod
    def non_negative(value, name: str) -> float:
        """Validate a finite real parameter >= 0"""
        try:
            number = float(value)
        except (TypeError, ValueError):
            raise ValidationError(f"{name} must be a real number, got {value!r}")
        if not math.isfinite(number) or number < 0:
            raise ValidationError(f"{name} must be finite and >= 0, got {value!r}")
        return number

    @staticmethod
    def positive(value, name: str) -> float:
        """Validate a finite real parameter > 0"""
        number = ParameterValidator.non_negative(value, name)
        if number == 0:
            raise ValidationError(f"{name} must be > 0")
        return number

    @staticmethod
    def finite(value, name: str) -> float:
        """Validate a finite real parameter"""
        try:
            number = float(value)
        except (TypeError, ValueError):
            raise ValidationError(f"{name} must be a real number, got {value!r}")
        if not math.isfinite(number):
            raise ValidationError(f"{name} must be finite, got {value!r}")
        return number

    @staticmethod
    def mode_subset(modes: Iterable[int], dim: int, name: str,
                    allow_empty: bool = False) -> Tuple[int, ...]:
        """
        Validate a set of 0-based mode indices

        Args:
            modes: Mode indices
            dim: Mode count M of the network
            name: Parameter name used in the error message
            allow_empty: Whether an empty subset is acceptable

        Raises:
            InvalidSpecError: If empty, duplicated or out of range

        Returns:
            Tuple of mode indices in the given order
        """
        subset = tuple(int(k) for k in modes)
        if not subset and not allow_empty:
            raise InvalidSpecError(f"{name} must not be empty")
        if len(set(subset)) != len(subset):
            raise InvalidSpecError(f"{name} contains repeated modes: {subset}")
        for k in subset:
            if not 0 <= k < dim:
                raise InvalidSpecError(f"{name} mode {k} outside 0..{dim - 1}")
        return subset

    @staticmethod
    def occupancy(pattern: Sequence[int]) -> Tuple[int, ...]:
        """Validate a single-photon input pattern (entries 0 or 1)"""
        occupancy = tuple(int(n) for n in pattern)
        if not occupancy:
            raise InvalidDimensionError("occupancy must cover at least one mode")
        for k, n in enumerate(occupancy):
            if n not in (0, 1):
                raise ValidationError(
                    f"occupancy of mode {k} is {n}; only 0 or 1 photons per mode are supported"
                )
        return occupancy

    @staticmethod
    def ensemble_shape(L1, L2, min_L1: int = 2) -> Tuple[int, int]:
        """Validate the subensemble count L1 and subensemble size L2"""
        try:
            L1 = ParameterValidator.positive_int(L1, 'L1', minimum=min_L1)
            L2 = ParameterValidator.positive_int(L2, 'L2', minimum=1)
        except InvalidDimensionError as e:
            raise InvalidSpecError(str(e))
        return L1, L2

    @staticmethod
    def vector_length(vector: np.ndarray, dim: int, name: str) -> np.ndarray:
        """Validate that a vector has exactly dim entries"""
        array = np.asarray(vector)
        if array.ndim != 1 or array.shape[0] != dim:
            raise InvalidDimensionError(
                f"{name} must have length {dim}, got shape {array.shape}"
            )
        return array

    @staticmethod
    def size_guard(size: int, limit: int, what: str, limit_name: Optional[str] = None) -> None:
        """Raise SizeLimitError naming the limit when size exceeds it"""
        if size > limit:
            label = limit_name or 'limit'
            raise SizeLimitError(f"{what} is {size}, above the {label} of {limit}")
