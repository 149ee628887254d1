"""
Combined per-design table: overhead, coverage and recovered key bits for the
original, DFS and MSSD versions of each design.
"""

from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Union

import pandas as pd

from src.shift_leak_lab.attacks.outcome import AttackReport
from src.shift_leak_lab.reports.coverage import CoverageReport
from src.shift_leak_lab.reports.overhead import OverheadReport
from src.shift_leak_lab.utils.exporter import export_table_csv, export_tables_to_excel

COLUMNS = [
    "design",
    "key_bits",
    "scan_outs",
    "original_coverage",
    "dfs_overhead_pct",
    "dfs_coverage",
    "dfs_recovered",
    "mssd_overhead_pct",
    "mssd_coverage",
    "mssd_recovered",
    "mssd_below_dfs",
]


def table_row(dfs: OverheadReport, mssd: OverheadReport, coverage: Optional[CoverageReport] = None,
              attacks: Optional[Mapping[str, AttackReport]] = None) -> Dict[str, Any]:
    attacks = attacks or {}

    def cov(label: str) -> Optional[float]:
        if coverage is None or label not in coverage.entries:
            return None
        return round(coverage.entries[label].test_coverage * 100, 4)

    def recovered(label: str) -> Optional[int]:
        report = attacks.get(label)
        return report.recovered if report is not None else None

    return {
        "design": dfs.design,
        "key_bits": dfs.key_bits,
        "scan_outs": dfs.scan_outs,
        "original_coverage": cov("original"),
        "dfs_overhead_pct": round(dfs.percent, 4),
        "dfs_coverage": cov("dfs"),
        "dfs_recovered": recovered("dfs"),
        "mssd_overhead_pct": round(mssd.percent, 4),
        "mssd_coverage": cov("mssd"),
        "mssd_recovered": recovered("mssd"),
        "mssd_below_dfs": mssd.added < dfs.added,
    }


def combined_table(rows: Iterable[Mapping[str, Any]]) -> pd.DataFrame:
    """Rows in design order; an empty input gives a header-only frame."""
    records: List[Mapping[str, Any]] = list(rows)
    return pd.DataFrame.from_records(records, columns=COLUMNS)


def export_combined(table: pd.DataFrame, out_dir: Union[str, Path], stem: str = "combined",
                    excel: bool = True) -> List[Path]:
    out_dir = Path(out_dir)
    paths = [export_table_csv(out_dir / f"{stem}.csv", table)]
    if excel:
        paths.append(export_tables_to_excel(out_dir / f"{stem}.xlsx", {stem: table}))
    return paths
