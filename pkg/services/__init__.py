"""
Simulator services: validation and result writing
"""

from .validation import (
    QuftiError,
    ValidationError,
    InvalidDimensionError,
    InvalidProfileError,
    InvalidSpecError,
    InvalidDrawError,
    MaxOrderOnlyError,
    SizeLimitError,
    NumericFailureError,
    ParameterValidator,
)

__all__ = [
    'QuftiError', 'ValidationError', 'InvalidDimensionError', 'InvalidProfileError',
    'InvalidSpecError', 'InvalidDrawError', 'MaxOrderOnlyError', 'SizeLimitError',
    'NumericFailureError', 'ParameterValidator',
]
