"""
Experiment orchestration
Fringe scans over the phase gradient, phase-noise sweeps, contour-radius
sweeps and the sampling-error baselines they are compared against
"""
import logging
import math
import time
from dataclasses import dataclass, asdict, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import (
    get_default_d,
    get_default_radius,
    get_default_realizations,
    get_default_seed,
    get_ensemble_defaults,
    get_worker_count,
)
from ensemble import EstimateResult, exact_result
from exact_oracle import fock_correlation, max_order_rate, q_conjecture
from networks import PhaseProfile, build_qufti, sample_noise
from qcp_sampler import QcpConfig, estimate_perm_squared
from services.validation import (
    ParameterValidator,
    InvalidSpecError,
    MaxOrderOnlyError,
)
from utils.helpers import derive_rng, derive_seed, float_key
from utils.parallel import run_ordered
from vcp_sampler import VcpConfig, estimate_correlation

logger = logging.getLogger(__name__)

METHODS = ('vcp', 'qcp', 'exact', 'conjecture')
SAMPLED_METHODS = ('vcp', 'qcp')

CSV_COLUMNS = [
    'method', 'M', 'N', 'd', 'r', 'phi', 'noise_sigma', 'realizations',
    'L1', 'L2', 'seed', 'Q_mean', 'Q_stderr', 'Q_imag', 'wall_time_s',
]

REALIZATION_COLUMNS = [
    'phi', 'noise_sigma', 'realization', 'task_seed', 'Q_mean', 'Q_stderr', 'Q_imag', 'wall_time_s',
]

# stream key under each (level, realization) noise seed
NOISE_KEY = 0
# seed key under each (level, point, realization) task seed
ESTIMATOR_KEY = 1


@dataclass(frozen=True)
class ScanSpec:
    """
    Fully resolved parameters of one fringe scan.

    r, d, L1, L2, realizations and seed fall back to the config defaults
    when left as None (a noiseless scan defaults to one realization);
    outputs defaults to the first N output modes.
    """
    M: int
    phi_grid: Tuple[float, ...]
    method: str
    order: Optional[int] = None
    r: Optional[float] = None
    d: Optional[int] = None
    L1: Optional[int] = None
    L2: Optional[int] = None
    noise_sigma: float = 0.0
    realizations: Optional[int] = None
    seed: Optional[int] = None
    outputs: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        method = str(self.method).lower()
        if method not in METHODS:
            raise InvalidSpecError(f"method must be one of {', '.join(METHODS)}, got {self.method!r}")
        M = ParameterValidator.positive_int(self.M, 'M')
        grid = tuple(ParameterValidator.finite(phi, 'phi') for phi in self.phi_grid)
        if not grid:
            raise InvalidSpecError("phi grid must not be empty")

        order = M if self.order is None else ParameterValidator.positive_int(self.order, 'N')
        if order > M:
            raise InvalidSpecError(f"order N={order} exceeds mode count M={M}")
        if self.outputs is None:
            outputs = tuple(range(order))
        else:
            outputs = ParameterValidator.mode_subset(self.outputs, M, 'outputs')
            if self.order is not None and len(outputs) != order:
                raise InvalidSpecError(f"{len(outputs)} outputs given for order N={order}")
            order = len(outputs)

        sigma = ParameterValidator.non_negative(self.noise_sigma, 'noise_sigma')
        if self.realizations is not None:
            realizations = self.realizations
        else:
            realizations = get_default_realizations() if sigma > 0 else 1
        realizations = ParameterValidator.positive_int(realizations, 'realizations')
        ensemble = get_ensemble_defaults()
        L1 = self.L1 if self.L1 is not None else ensemble['L1']
        L2 = self.L2 if self.L2 is not None else ensemble['L2']
        if method in SAMPLED_METHODS:
            L1, L2 = ParameterValidator.ensemble_shape(L1, L2)
        r = ParameterValidator.positive(self.r if self.r is not None else get_default_radius(order, M), 'r')
        d = ParameterValidator.positive_int(self.d if self.d is not None else get_default_d(), 'd', minimum=2)
        seed = int(self.seed if self.seed is not None else get_default_seed())

        if method == 'qcp' and order != M:
            raise MaxOrderOnlyError(f"QCP only estimates maximum-order correlations: N={order} < M={M}")
        if method == 'conjecture':
            if M < 2:
                raise InvalidSpecError("conjecture needs M >= 2")
            if order != M or sigma > 0:
                raise InvalidSpecError("conjecture covers only noiseless maximum-order correlations")

        for name, value in (('method', method), ('M', M), ('phi_grid', grid), ('order', order),
                            ('r', r), ('d', d), ('L1', int(L1)), ('L2', int(L2)),
                            ('noise_sigma', sigma), ('realizations', realizations),
                            ('seed', seed), ('outputs', outputs)):
            object.__setattr__(self, name, value)

    @property
    def N(self) -> int:
        return self.order

    def to_dict(self) -> Dict[str, Any]:
        """Resolved configuration, lists in place of tuples"""
        config = asdict(self)
        config['phi_grid'] = list(self.phi_grid)
        config['outputs'] = list(self.outputs)
        return config


@dataclass
class ScanResult:
    """One row per grid point plus the per-realization values behind it"""
    spec: ScanSpec
    rows: pd.DataFrame
    realizations: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=REALIZATION_COLUMNS))

    def peak(self) -> pd.Series:
        """Row at the grid point nearest phi = 0"""
        return self.rows.loc[self.rows['phi'].abs().idxmin()]


def _task_seed(master: int, noise_sigma: float, phi: float, realization: int) -> int:
    return derive_seed(master, float_key(noise_sigma), float_key(phi), realization)


def _noise_seed(master: int, noise_sigma: float, realization: int) -> int:
    # no phi key: one realization keeps its offsets across the whole grid
    return derive_seed(master, float_key(noise_sigma), realization)


def run_estimator(spec: ScanSpec, phi: float, realization: int = 0, workers: int = 1) -> EstimateResult:
    """
    Build one noise realization of the QuFTI at phi and run the spec's method on it

    The offsets xi depend on (seed, noise_sigma, realization) only, so a
    realization is the same noisy network swept across the fringe. The
    estimator stream is keyed on phi as well.

    Args:
        spec: Resolved scan spec
        phi: Phase gradient of this point
        realization: Noise realization index
        workers: Worker pool size passed to the sampler

    Returns:
        EstimateResult for this realization
    """
    if spec.method == 'conjecture':
        start = time.perf_counter()
        value = q_conjecture(spec.M, phi)
        return exact_result(value, 'conjecture', spec.seed, time.perf_counter() - start)

    noise_rng = derive_rng(_noise_seed(spec.seed, spec.noise_sigma, realization), NOISE_KEY)
    profile = sample_noise(spec.M, phi, spec.noise_sigma, noise_rng)
    network = build_qufti(spec.M, profile)
    inputs = tuple(range(spec.M))
    task_seed = _task_seed(spec.seed, spec.noise_sigma, phi, realization)
    estimator_seed = derive_seed(task_seed, ESTIMATOR_KEY)

    if spec.method == 'exact':
        start = time.perf_counter()
        if spec.order == spec.M:
            value = max_order_rate(network, inputs, spec.outputs)
        else:
            value = fock_correlation(network, inputs, spec.outputs)
        return exact_result(value, 'exact', spec.seed, time.perf_counter() - start)

    if spec.method == 'qcp':
        cfg = QcpConfig(inputs=inputs, outputs=spec.outputs, d=spec.d)
        return estimate_perm_squared(network, cfg, spec.L1, spec.L2, estimator_seed, workers)

    cfg = VcpConfig.all_occupied(spec.M, spec.r)
    return estimate_correlation(network, cfg, spec.outputs, spec.L1, spec.L2, estimator_seed, workers)


def _method_parameters(spec: ScanSpec) -> Dict[str, Any]:
    """d, r, L1 and L2 as the method uses them; NaN (a blank cell) otherwise"""
    sampled = spec.method in SAMPLED_METHODS
    return {
        'd': spec.d if spec.method == 'qcp' else np.nan,
        'r': spec.r if spec.method == 'vcp' else np.nan,
        'L1': spec.L1 if sampled else np.nan,
        'L2': spec.L2 if sampled else np.nan,
    }


def _aggregate(values: List[EstimateResult]) -> Tuple[float, float, float, float]:
    """Average realizations; stderr is the estimator's own for a single realization"""
    wall = math.fsum(v.wall_time for v in values)
    if len(values) == 1:
        only = values[0]
        return only.mean, only.stderr, only.imag_diagnostic, wall
    means = np.array([v.mean for v in values])
    imags = np.array([v.imag_diagnostic for v in values])
    stderr = math.sqrt(float(np.var(means)) / len(values))
    return float(np.mean(means)), stderr, float(np.mean(imags)), wall


def normalize_fringe(rows: pd.DataFrame) -> pd.DataFrame:
    """
    Add Q_normalized = Q_mean / Q_mean at the grid point nearest phi = 0

    Args:
        rows: Fringe rows with phi and Q_mean columns

    Returns:
        Copy of rows with the extra column (NaN when the peak value is 0)
    """
    normalized = rows.copy()
    if normalized.empty:
        normalized['Q_normalized'] = pd.Series(dtype=float)
        return normalized
    peak = float(normalized.loc[normalized['phi'].abs().idxmin(), 'Q_mean'])
    if peak == 0:
        normalized['Q_normalized'] = np.nan
    else:
        normalized['Q_normalized'] = normalized['Q_mean'] / peak
    return normalized


def fringe_scan(spec: ScanSpec, workers: Optional[int] = None) -> ScanResult:
    """
    Estimate Q(phi) over the spec's grid

    Each grid point averages spec.realizations noise realizations. Every
    (point, realization) task seeds itself from (seed, noise_sigma, phi,
    realization index), so a row can be rerun on its own. When there are
    fewer tasks than workers, the spare workers go to the samplers'
    subensembles.

    Args:
        spec: Resolved scan spec
        workers: Pool size over tasks (config/env default when None)

    Returns:
        ScanResult
    """
    workers = workers or get_worker_count()
    tasks = [
        (point, phi, realization)
        for point, phi in enumerate(spec.phi_grid)
        for realization in range(spec.realizations)
    ]
    sampler_workers = max(1, workers // len(tasks))
    logger.info(
        f"Fringe scan: method={spec.method} M={spec.M} N={spec.order} points={len(spec.phi_grid)} "
        f"noise_sigma={spec.noise_sigma} R={spec.realizations} workers={workers}"
    )

    def run_task(task):
        _, phi, realization = task
        seed = _task_seed(spec.seed, spec.noise_sigma, phi, realization)
        return seed, run_estimator(spec, phi, realization, sampler_workers)

    start = time.perf_counter()
    outcomes = run_ordered(run_task, tasks, workers)

    rows = []
    realization_rows = []
    for point, phi in enumerate(spec.phi_grid):
        block = outcomes[point * spec.realizations:(point + 1) * spec.realizations]
        values = [estimate for _, estimate in block]
        for realization, (seed, estimate) in enumerate(block):
            realization_rows.append({
                'phi': phi, 'noise_sigma': spec.noise_sigma, 'realization': realization,
                'task_seed': seed, 'Q_mean': estimate.mean, 'Q_stderr': estimate.stderr,
                'Q_imag': estimate.imag_diagnostic, 'wall_time_s': estimate.wall_time,
            })
        mean, stderr, imag, wall = _aggregate(values)
        rows.append({
            'method': spec.method, 'M': spec.M, 'N': spec.order, **_method_parameters(spec),
            'phi': phi, 'noise_sigma': spec.noise_sigma, 'realizations': spec.realizations,
            'seed': spec.seed,
            'Q_mean': mean, 'Q_stderr': stderr, 'Q_imag': imag, 'wall_time_s': wall,
        })

    table = normalize_fringe(pd.DataFrame(rows, columns=CSV_COLUMNS))
    logger.info(f"Fringe scan finished in {time.perf_counter() - start:.2f}s")
    return ScanResult(spec=spec, rows=table,
                      realizations=pd.DataFrame(realization_rows, columns=REALIZATION_COLUMNS))


def noise_sweep(spec: ScanSpec, noise_levels: Sequence[float], workers: Optional[int] = None) -> List[ScanResult]:
    """
    One fringe scan per noise level on the same grid and master seed

    Args:
        spec: Base spec; its noise_sigma is replaced per level
        noise_levels: Standard deviations of the phase noise (radians)
        workers: Pool size over tasks

    Returns:
        List of ScanResult in level order
    """
    levels = [ParameterValidator.non_negative(s, 'noise_sigma') for s in noise_levels]
    if not levels:
        raise InvalidSpecError("noise sweep needs at least one noise level")
    results = []
    for sigma in levels:
        logger.info(f"Noise level sigma={sigma}")
        results.append(fringe_scan(replace(spec, noise_sigma=sigma), workers))
    return results


def combine_results(results: Sequence[ScanResult]) -> ScanResult:
    """Stack several scans into one result for writing; the first spec is kept"""
    if not results:
        raise InvalidSpecError("nothing to combine")
    rows = pd.concat([r.rows for r in results], ignore_index=True)
    realizations = pd.concat([r.realizations for r in results], ignore_index=True)
    return ScanResult(spec=results[0].spec, rows=rows, realizations=realizations)


def r_sweep(
    M: int,
    phi: float,
    order: int,
    r_grid: Sequence[float],
    L1: int,
    L2: int,
    seed: int,
    outputs: Optional[Sequence[int]] = None,
    workers: Optional[int] = None
) -> pd.DataFrame:
    """
    VCP sampling error against the contour radius at a fixed point

    Every radius reuses the same noiseless network, seed and sample budget.

    Args:
        M: Mode count
        phi: Phase gradient
        order: Correlation order N
        r_grid: Radii to try
        L1: Subensembles
        L2: Samples per subensemble
        seed: Seed shared by all radii
        outputs: Output modes (first N by default)
        workers: Pool size over subensembles

    Returns:
        DataFrame with one row per radius
    """
    radii = [ParameterValidator.positive(r, 'r') for r in r_grid]
    if not radii:
        raise InvalidSpecError("r grid must not be empty")
    workers = workers or get_worker_count()
    network = build_qufti(M, PhaseProfile.noiseless(M, phi))
    order = ParameterValidator.positive_int(order, 'N')
    if outputs is None:
        outputs = tuple(range(order))
    elif len(outputs) != order:
        raise InvalidSpecError(f"{len(outputs)} outputs given for order N={order}")

    rows = []
    for r in radii:
        cfg = VcpConfig.all_occupied(M, r)
        result = estimate_correlation(network, cfg, outputs, L1, L2, seed, workers)
        rows.append({
            'r': r, 'phi': float(phi), 'M': M, 'N': order, 'L1': L1, 'L2': L2, 'seed': int(seed),
            'Q_mean': result.mean, 'Q_stderr': result.stderr, 'Q_imag': result.imag_diagnostic,
        })
    return pd.DataFrame(rows)


def shot_noise_baseline(M: int, phi: float, L1: int, L2: int) -> float:
    """Experimental sampling error sqrt(Q_conj(M, phi) / (L1 L2))"""
    L1 = ParameterValidator.positive_int(L1, 'L1')
    L2 = ParameterValidator.positive_int(L2, 'L2')
    return math.sqrt(max(q_conjecture(M, phi), 0.0) / (L1 * L2))


def error_comparison(
    M: int,
    phi_grid: Sequence[float],
    r: float,
    d: int,
    L1: int,
    L2: int,
    seed: int,
    workers: Optional[int] = None
) -> pd.DataFrame:
    """
    QCP and VCP maximum-order errors next to the shot-noise baseline

    Args:
        M: Mode count
        phi_grid: Phase gradients
        r: VCP contour radius
        d: QCP phase-circle cardinality
        L1: Subensembles
        L2: Samples per subensemble
        seed: Master seed; each phi gets its own derived seed
        workers: Pool size over subensembles

    Returns:
        DataFrame with phi, Q_conj, qcp/vcp means and errors and shot_noise
    """
    workers = workers or get_worker_count()
    modes = tuple(range(M))
    rows = []
    for phi in phi_grid:
        network = build_qufti(M, PhaseProfile.noiseless(M, phi))
        point_seed = derive_seed(seed, float_key(phi))
        qcp = estimate_perm_squared(network, QcpConfig(inputs=modes, outputs=modes, d=d),
                                    L1, L2, point_seed, workers)
        vcp = estimate_correlation(network, VcpConfig.all_occupied(M, r), modes,
                                   L1, L2, point_seed, workers)
        rows.append({
            'phi': float(phi), 'Q_conj': q_conjecture(M, phi),
            'qcp_mean': qcp.mean, 'qcp_stderr': qcp.stderr,
            'vcp_mean': vcp.mean, 'vcp_stderr': vcp.stderr,
            'shot_noise': shot_noise_baseline(M, phi, L1, L2),
        })
    return pd.DataFrame(rows)


def fringe_half_width(result) -> Optional[float]:
    """
    Half width at half maximum on the phi >= 0 side of a fringe

    Args:
        result: ScanResult or a rows DataFrame with phi and Q_normalized

    Returns:
        Interpolated phi where Q_normalized first falls to 0.5, None if it never does
    """
    rows = result.rows if isinstance(result, ScanResult) else result
    if 'Q_normalized' not in rows.columns:
        rows = normalize_fringe(rows)
    if rows.empty:
        return None
    peak_phi = float(rows.loc[rows['phi'].abs().idxmin(), 'phi'])
    side = rows[rows['phi'] >= peak_phi].sort_values('phi')
    phis = side['phi'].to_numpy(dtype=float)
    values = side['Q_normalized'].to_numpy(dtype=float)
    for i in range(1, len(phis)):
        if values[i] <= 0.5:
            span = values[i] - values[i - 1]
            if span == 0:
                return float(phis[i])
            return float(phis[i - 1] + (0.5 - values[i - 1]) * (phis[i] - phis[i - 1]) / span)
    return None
