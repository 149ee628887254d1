# src/shift_leak_lab/utils/exporter.py

from pathlib import Path
from typing import Any, Dict, Mapping, Union

import pandas as pd
import yaml

from src.shift_leak_lab.utils.logger import get_report_logger

logger = get_report_logger()

PathLike = Union[str, Path]


def dump_yaml(data: Mapping[str, Any]) -> str:
    """Byte-stable YAML text for report payloads."""
    return yaml.safe_dump(dict(data), sort_keys=False, default_flow_style=False, width=120)


def write_yaml_report(path: PathLike, data: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_yaml(data))
    logger.info("Wrote report %s", path)
    return path


def export_table_csv(csv_path: PathLike, table: pd.DataFrame) -> Path:
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(csv_path, index=False, lineterminator="\n")
    logger.info("Exported table with %d rows: %s", len(table), csv_path)
    return csv_path


def export_tables_to_excel(excel_path: PathLike, tables: Dict[str, pd.DataFrame]) -> Path:
    """
    Write each table to its own sheet. Empty tables still get a header-only
    sheet so the workbook always has a visible sheet.
    """
    excel_path = Path(excel_path)
    excel_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with pd.ExcelWriter(excel_path, engine="openpyxl") as writer:
            if not tables:
                pd.DataFrame().to_excel(writer, sheet_name="empty", index=False)
            for sheet_name, table in tables.items():
                if table.empty:
                    logger.warning("No rows for sheet '%s', writing header only", sheet_name)
                table.to_excel(writer, sheet_name=sheet_name[:31], index=False)
        logger.info("Exported Excel file successfully: %s", excel_path)
    except Exception:
        logger.error("Failed to export Excel file %s", excel_path, exc_info=True)
        raise
    return excel_path
