"""
Diagnostics Journal
Per-step diagnostics records as NDJSON (one JSON object per line, written
in step order) plus a CSV summary and JSON check reports.
"""
import csv
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Dict, List, Optional, Union

from errors import NonFiniteError
from utils.logger import logger

# Residual columns summarized by their maximum over the run
RESIDUAL_KEYS = ('maxwell', 'charge', 'charge_law', 'energy', 'action_reaction', 'thermo', 'stress')
# Integrated quantities summarized by their final value and drift
INTEGRAL_KEYS = ('W', 'Q', 'dW')


@dataclass
class DiagnosticsRecord:
    """Diagnostics of one step (max-norm residuals and domain integrals)"""
    step: int
    tau: float

    # Residuals
    maxwell: float         # nabla+ A - Theta
    charge: float          # d_tau rho + div J
    charge_law: float      # kappa (d_tau rho + div J) - i M
    energy: float          # d_tau W + div P + Re(J, conj A)
    action_reaction: float
    thermo: float
    stress: float

    # Integrals
    W: float
    Q: float
    dW: float

    # Classification histogram of the cross energy
    separation: int = 0
    absorption: int = 0
    conservation: int = 0

    def check_finite(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float) and not math.isfinite(value):
                raise NonFiniteError(f"diagnostics.{f.name}", step=self.step)


class DiagnosticsJournal:
    """Writes diagnostics records and the run summary"""

    def __init__(self, out_dir: Union[str, Path], name: str = 'diagnostics'):
        """
        Initialize the journal

        Args:
            out_dir: Output directory (created if missing)
            name: Base name of the NDJSON and CSV files
        """
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.ndjson_path = self.out_dir / f"{name}.ndjson"
        self.summary_path = self.out_dir / f"{name}_summary.csv"
        self.records: List[DiagnosticsRecord] = []
        self._fh = open(self.ndjson_path, 'w', encoding='utf-8', newline='\n')

    def __enter__(self) -> 'DiagnosticsJournal':
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()
        return False

    def log_record(self, record: DiagnosticsRecord):
        """Append one record; non-finite values abort the run"""
        record.check_finite()
        self.records.append(record)
        self._fh.write(json.dumps(asdict(record), allow_nan=False) + '\n')

    def flush(self):
        if not self._fh.closed:
            self._fh.flush()

    def close(self):
        """Flush records and write the CSV summary (also after an abort)"""
        if self._fh.closed:
            return
        self._fh.close()
        self._write_summary()
        logger.debug(f"Journal closed: {len(self.records)} records in {self.ndjson_path}")

    def get_summary(self) -> Dict[str, Dict[str, float]]:
        """Max of each residual and first/final/drift of each integral"""
        if not self.records:
            return {}
        summary = {}
        for key in RESIDUAL_KEYS:
            summary[key] = {'max': max(getattr(r, key) for r in self.records)}
        for key in INTEGRAL_KEYS:
            first, last = getattr(self.records[0], key), getattr(self.records[-1], key)
            summary[key] = {'first': first, 'final': last, 'drift': last - first}
        return summary

    def _write_summary(self):
        summary = self.get_summary()
        with open(self.summary_path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(['quantity', 'statistic', 'value'])
            writer.writerow(['records', 'count', len(self.records)])
            for key, stats in summary.items():
                for stat, value in stats.items():
                    writer.writerow([key, stat, repr(float(value))])


def read_records(path: Union[str, Path]) -> List[DiagnosticsRecord]:
    """Load an NDJSON diagnostics file"""
    records = []
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(DiagnosticsRecord(**json.loads(line)))
    return records


def max_residual(records: List[DiagnosticsRecord], key: str) -> Optional[float]:
    return max((getattr(r, key) for r in records), default=None)


def write_report(out_dir: Union[str, Path], name: str, payload: Dict) -> Path:
    """Write a JSON check report to out_dir/name.json"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.json"
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2, sort_keys=True, allow_nan=False)
        f.write('\n')
    logger.info(f"📝 Report written to {path}")
    return path
