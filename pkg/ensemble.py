"""
Subensemble statistics shared by the phase-space samplers
"""
import logging
import math
from dataclasses import dataclass, asdict
from typing import Callable, Dict, Any

import numpy as np

from config import get_batch_size
from services.validation import NumericFailureError

logger = logging.getLogger(__name__)

IMAG_WARNING_SIGMAS = 5.0


@dataclass(frozen=True)
class EstimateResult:
    """Estimated correlation with its sampling error and provenance"""
    mean: float
    stderr: float
    imag_diagnostic: float
    imag_stderr: float
    L1: int
    L2: int
    seed: int
    method: str
    wall_time: float = 0.0

    @property
    def samples(self) -> int:
        """Total samples L1 * L2"""
        return self.L1 * self.L2

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def exact_result(value: float, method: str, seed: int = 0, wall_time: float = 0.0) -> EstimateResult:
    """Wrap an exact value as a zero-error result"""
    return EstimateResult(
        mean=float(value), stderr=0.0, imag_diagnostic=0.0, imag_stderr=0.0,
        L1=1, L2=1, seed=int(seed), method=method, wall_time=wall_time
    )


def batched_mean(draw: Callable[[int], np.ndarray], count: int, batch_size: int = 0) -> complex:
    """
    Mean of count samples produced batch by batch

    Args:
        draw: Callable(size) returning a complex array of that many samples
        count: Total number of samples
        batch_size: Max samples per call (config default when 0)

    Returns:
        Mean using pairwise summation within and across batches
    """
    batch_size = batch_size or get_batch_size()
    sums = []
    remaining = count
    while remaining > 0:
        size = min(batch_size, remaining)
        values = draw(size)
        sums.append(np.sum(values))
        remaining -= size
    total = np.sum(np.asarray(sums, dtype=np.complex128))
    if not np.isfinite(total):
        raise NumericFailureError(f"non-finite sample sum over {count} samples")
    return complex(total / count)


def summarize(
    subensemble_means: np.ndarray,
    L2: int,
    seed: int,
    method: str,
    wall_time: float = 0.0
) -> EstimateResult:
    """
    Reduce L1 complex subensemble means to mean, stderr and imaginary diagnostic

    stderr = sqrt((<Q^2> - <Q>^2) / L1) over the real parts; the imaginary
    parts get the same treatment for the reality check.

    Args:
        subensemble_means: Complex array of length L1, in subensemble order
        L2: Samples per subensemble
        seed: Seed echoed into the result
        method: Method tag
        wall_time: Elapsed seconds

    Returns:
        EstimateResult
    """
    values = np.asarray(subensemble_means, dtype=np.complex128)
    if not np.all(np.isfinite(values)):
        raise NumericFailureError(f"{method}: non-finite subensemble mean")
    L1 = values.shape[0]
    real = values.real
    imag = values.imag
    mean = float(np.mean(real))
    stderr = math.sqrt(float(np.var(real)) / L1)
    imag_mean = float(np.mean(imag))
    imag_stderr = math.sqrt(float(np.var(imag)) / L1)

    if imag_stderr > 0 and abs(imag_mean) > IMAG_WARNING_SIGMAS * imag_stderr:
        logger.warning(
            f"{method}: imaginary part {imag_mean:.3e} exceeds {IMAG_WARNING_SIGMAS:g} x its stderr {imag_stderr:.3e}"
        )

    return EstimateResult(
        mean=mean,
        stderr=stderr,
        imag_diagnostic=imag_mean,
        imag_stderr=imag_stderr,
        L1=L1,
        L2=int(L2),
        seed=int(seed),
        method=method,
        wall_time=wall_time
    )
