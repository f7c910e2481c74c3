"""
Result file writer for scan tables
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

from experiments import CSV_COLUMNS, ScanResult
from services.validation import QuftiError, ValidationError

logger = logging.getLogger(__name__)

FORMATS = ('csv', 'jsonl')

FLOAT_FORMAT = '%.17g'


class ResultsWriteError(QuftiError):
    """Custom exception for result file failures"""
    pass


def _clean(value: Any) -> Any:
    """Plain Python scalars for json, NaN as null"""
    if hasattr(value, 'item'):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class ResultsWriter:
    """
    Write ScanResult tables as CSV or line-delimited JSON

    Usage:
        writer = ResultsWriter(record_timing=False)
        writer.write(result, 'fringe.csv')
    """

    def __init__(self, fmt: str = 'csv', record_timing: bool = False):
        """
        Initialize writer

        Args:
            fmt: 'csv' or 'jsonl'
            record_timing: Keep wall_time_s values; blank them otherwise
        """
        fmt = fmt.lower()
        if fmt not in FORMATS:
            raise ValidationError(f"format must be one of {', '.join(FORMATS)}, got {fmt!r}")
        self.fmt = fmt
        self.record_timing = record_timing

    def table(self, result: ScanResult) -> pd.DataFrame:
        """Rows in output column order, timing blanked unless recorded"""
        rows = result.rows.copy()
        for column in CSV_COLUMNS:
            if column not in rows.columns:
                rows[column] = pd.Series(dtype=float)
        if not self.record_timing:
            rows['wall_time_s'] = None
        return rows

    def to_csv_text(self, result: ScanResult) -> str:
        """CSV with the fixed column set and 17 significant digits"""
        return self.table(result)[CSV_COLUMNS].to_csv(index=False, float_format=FLOAT_FORMAT)

    def to_records(self, result: ScanResult) -> List[Dict[str, Any]]:
        """One record per row, each embedding the resolved scan config"""
        rows = self.table(result)
        columns = CSV_COLUMNS + [c for c in rows.columns if c not in CSV_COLUMNS]
        config = result.spec.to_dict()
        records = []
        for _, row in rows[columns].iterrows():
            record = {column: _clean(row[column]) for column in columns}
            record['config'] = config
            records.append(record)
        return records

    def to_jsonl_text(self, result: ScanResult) -> str:
        return ''.join(json.dumps(record, sort_keys=False) + '\n' for record in self.to_records(result))

    def write(self, result: ScanResult, path: Union[str, Path]) -> Path:
        """
        Write a result file

        Args:
            result: Scan to serialize
            path: Destination file (parent directories are created)

        Returns:
            Path written

        Raises:
            ResultsWriteError: If the file cannot be written
        """
        path = Path(path)
        text = self.to_csv_text(result) if self.fmt == 'csv' else self.to_jsonl_text(result)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', newline='') as f:
                f.write(text)
        except OSError as e:
            logger.error(f"Could not write {path}: {e}")
            raise ResultsWriteError(f"could not write {path}: {e}") from e
        logger.info(f"Wrote {len(result.rows)} rows to {path} ({self.fmt})")
        return path


def write_results(result: ScanResult, fmt: str, path: Union[str, Path],
                  record_timing: bool = False) -> Path:
    """Write result to path in the given format"""
    return ResultsWriter(fmt, record_timing).write(result, path)


def write_table(table: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Write an auxiliary table (r sweep, error comparison) as CSV"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    except OSError as e:
        logger.error(f"Could not write {path}: {e}")
        raise ResultsWriteError(f"could not write {path}: {e}") from e
    logger.info(f"Wrote {len(table)} rows to {path}")
    return path
