#!/usr/bin/env python3
"""
Reproduce Figure Tables
=======================
Regenerates the CSV tables behind the published QuFTI results.

Flow:
1. max-order: QCP vs VCP sampling error against phi, plus the VCP error
   against contour radius (M = 100, phi = 0.007)
2. noise: QCP fringes at several phase-noise levels, 20 realizations each
3. low-order: VCP fringes for N = 30, 25, 20 at M = 30, plus the error
   against radius for N = 25 at phi = 0.01

Usage:
    python scripts/reproduce_figures.py max-order --output-dir results
    python scripts/reproduce_figures.py all --scale desk --workers 4

Full scale takes hours; --scale desk runs each table at a size that
finishes in minutes on a laptop.
"""

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from config import get_default_seed, get_noise_levels, get_worker_count
from experiments import (
    ScanSpec,
    combine_results,
    error_comparison,
    fringe_half_width,
    fringe_scan,
    noise_sweep,
    r_sweep,
)
from services.results_writer import write_results, write_table
from services.validation import QuftiError
from utils.helpers import symmetric_grid

logger = logging.getLogger(__name__)

FIGURES = ('max-order', 'noise', 'low-order')


@dataclass(frozen=True)
class FigurePreset:
    """Sizes for one scale of the three tables"""
    max_order_M: int
    max_order_L2: int
    max_order_points: int
    r_sweep_L2: int
    max_order_radii: Sequence[float]
    noise_M: int
    noise_L2: int
    noise_realizations: int
    noise_points: int
    low_order_M: int
    low_orders: Sequence[int]
    low_order_L2: int
    low_order_points: int
    low_order_r_sweep_order: int
    low_order_radii: Sequence[float]
    low_order_r_sweep_L2: int
    L1: int = 200


PRESETS: Dict[str, FigurePreset] = {
    'full': FigurePreset(
        max_order_M=100, max_order_L2=10_000, max_order_points=21,
        r_sweep_L2=100_000, max_order_radii=(0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0),
        noise_M=100, noise_L2=10_000, noise_realizations=20, noise_points=41,
        low_order_M=30, low_orders=(30, 25, 20), low_order_L2=1_000_000, low_order_points=41,
        low_order_r_sweep_order=25, low_order_radii=(0.4, 0.6, 0.7, 0.8, 0.9, 1.0, 1.2),
        low_order_r_sweep_L2=10_000,
    ),
    'desk': FigurePreset(
        max_order_M=20, max_order_L2=1_000, max_order_points=11,
        r_sweep_L2=1_000, max_order_radii=(0.1, 0.3, 0.5, 1.0),
        noise_M=20, noise_L2=1_000, noise_realizations=5, noise_points=21,
        low_order_M=12, low_orders=(12, 10, 8), low_order_L2=10_000, low_order_points=21,
        low_order_r_sweep_order=10, low_order_radii=(0.4, 0.6, 0.8, 1.0, 1.2),
        low_order_r_sweep_L2=2_000, L1=50,
    ),
}

MAX_ORDER_PHI = 0.007
LOW_ORDER_PHI = 0.01
LOW_ORDER_RADIUS = 0.8


class FigureRunner:
    """
    Run the figure tables and write them as CSV

    Usage:
        runner = FigureRunner('results', PRESETS['desk'], seed=7)
        runner.run('noise')
    """

    def __init__(self, output_dir: str, preset: FigurePreset, seed: int, workers: int):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.preset = preset
        self.seed = seed
        self.workers = workers
        logger.info(f"FigureRunner initialized with output_dir: {output_dir}")

    def run(self, figure: str) -> List[Path]:
        print(f"\n{'='*50}")
        print(f"Figure: {figure}")
        print(f"{'='*50}")
        if figure == 'max-order':
            return self.run_max_order()
        if figure == 'noise':
            return self.run_noise()
        return self.run_low_order()

    def run_max_order(self) -> List[Path]:
        p = self.preset
        M = p.max_order_M
        # one fringe period starting at the peak
        grid = [float(x) for x in np.linspace(0.0, 2 * np.pi / M, p.max_order_points)]
        table = error_comparison(M, grid, r=0.1, d=2, L1=p.L1, L2=p.max_order_L2,
                                 seed=self.seed, workers=self.workers)
        errors = write_table(table, self.output_dir / 'max_order_errors.csv')
        print(f"  QCP below VCP at {int((table['qcp_stderr'] < table['vcp_stderr']).sum())}/{len(table)} points")

        radii = r_sweep(M, MAX_ORDER_PHI, M, p.max_order_radii, p.L1, p.r_sweep_L2,
                        self.seed, workers=self.workers)
        sweep = write_table(radii, self.output_dir / 'max_order_r_sweep.csv')
        return [errors, sweep]

    def run_noise(self) -> List[Path]:
        p = self.preset
        M = p.noise_M
        spec = ScanSpec(M=M, phi_grid=tuple(symmetric_grid(np.pi / M, p.noise_points)),
                        method='qcp', d=2, L1=p.L1, L2=p.noise_L2,
                        realizations=p.noise_realizations, seed=self.seed)
        results = noise_sweep(spec, get_noise_levels(), self.workers)
        for result in results:
            print(f"  sigma={result.spec.noise_sigma:<5} Q(0)={float(result.peak()['Q_mean']):.4f}")
        path = write_results(combine_results(results), 'csv', self.output_dir / 'noise_fringes.csv')
        return [path]

    def run_low_order(self) -> List[Path]:
        p = self.preset
        M = p.low_order_M
        grid = tuple(symmetric_grid(np.pi / M, p.low_order_points))
        results = []
        for order in p.low_orders:
            spec = ScanSpec(M=M, phi_grid=grid, method='vcp', order=order, r=LOW_ORDER_RADIUS,
                            L1=p.L1, L2=p.low_order_L2, seed=self.seed)
            result = fringe_scan(spec, self.workers)
            width = fringe_half_width(result)
            print(f"  N={order:<3} half width={'n/a' if width is None else f'{width:.4f}'}")
            results.append(result)
        fringes = write_results(combine_results(results), 'csv', self.output_dir / 'low_order_fringes.csv')

        radii = r_sweep(M, LOW_ORDER_PHI, p.low_order_r_sweep_order, p.low_order_radii,
                        p.L1, p.low_order_r_sweep_L2, self.seed, workers=self.workers)
        sweep = write_table(radii, self.output_dir / 'low_order_r_sweep.csv')
        return [fringes, sweep]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Regenerate the QuFTI result tables"
    )
    parser.add_argument(
        'figure',
        choices=FIGURES + ('all',),
        help='Table to regenerate'
    )
    parser.add_argument(
        '--output-dir', '-o',
        default='results',
        help='Directory for the CSV files'
    )
    parser.add_argument(
        '--scale',
        choices=sorted(PRESETS),
        default='full',
        help='full (hours) or desk (minutes)'
    )
    parser.add_argument('--seed', type=int, default=None, help='Master seed')
    parser.add_argument('--workers', type=int, default=None, help='Worker threads')
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    runner = FigureRunner(
        args.output_dir,
        PRESETS[args.scale],
        seed=args.seed if args.seed is not None else get_default_seed(),
        workers=args.workers or get_worker_count(),
    )
    figures = FIGURES if args.figure == 'all' else (args.figure,)
    try:
        for figure in figures:
            for path in runner.run(figure):
                print(f"  Saved: {path}")
    except QuftiError as e:
        print(f"Error: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
