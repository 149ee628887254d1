"""
Gate-count overhead of the secure-scan instrumentation.

Counts are tallies of instantiated primitives against fixed inventories:
every secure cell costs two muxes and a flop; DFS adds one read-blocking OR
per scan-out plus a Test transition detector; MSSD adds a single
shift-disable block and a single clock-gating block whatever the chain count.
The delay line of the shift-disable block counts as one primitive.
"""

from dataclasses import dataclass, field
from typing import Any, Dict

from src.shift_leak_lab.chip.layout import ScanChainLayout
from src.shift_leak_lab.chip.session import DefenseVariant
from src.shift_leak_lab.locking.locks import LockedDesign
from src.shift_leak_lab.utils.logger import get_report_logger

logger = get_report_logger()

SECURE_CELL_INVENTORY = {"MUX": 2, "DFF": 1}
DFS_DETECTOR_INVENTORY = {"DFF": 2, "NOT": 2, "AND": 1, "OR": 2}
MSSD_SHIFT_DISABLE_INVENTORY = {"DELAY": 1, "NOT": 1, "DFF": 1, "NOR": 1, "AND": 1}
MSSD_CLOCK_GATING_INVENTORY = {"NOR": 1, "OR": 1, "DFF": 1, "LATCH": 1, "AND": 1}


def _scaled(inventory: Dict[str, int], times: int) -> Dict[str, int]:
    return {kind: count * times for kind, count in inventory.items()}


def _merge(*inventories: Dict[str, int]) -> Dict[str, int]:
    merged: Dict[str, int] = {}
    for inventory in inventories:
        for kind, count in inventory.items():
            merged[kind] = merged.get(kind, 0) + count
    return dict(sorted(merged.items()))


@dataclass(frozen=True)
class OverheadReport:
    design: str
    variant: str
    scan_outs: int
    key_bits: int
    baseline: int
    secure_cells: int
    masking: int
    inventory: Dict[str, int] = field(default_factory=dict)

    @property
    def added(self) -> int:
        return self.secure_cells + self.masking

    @property
    def percent(self) -> float:
        return 100.0 * self.added / self.baseline if self.baseline else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "design": self.design,
            "variant": self.variant,
            "secure_cell_inventory": dict(SECURE_CELL_INVENTORY),
            "scan_outs": self.scan_outs,
            "key_bits": self.key_bits,
            "baseline_primitives": self.baseline,
            "secure_cell_primitives": self.secure_cells,
            "masking_primitives": self.masking,
            "added_primitives": self.added,
            "overhead_percent": round(self.percent, 4),
            "inventory": dict(self.inventory),
        }


def masking_inventory(variant: DefenseVariant, scan_outs: int) -> Dict[str, int]:
    if DefenseVariant(variant) is DefenseVariant.DFS:
        return _merge({"OR": scan_outs}, DFS_DETECTOR_INVENTORY)
    return _merge(MSSD_SHIFT_DISABLE_INVENTORY, MSSD_CLOCK_GATING_INVENTORY)


def baseline_primitives(locked: LockedDesign) -> int:
    """Gates and flops of the design without its key gates."""
    n = locked.netlist
    return len(n.gates) - locked.key_bits + len(n.flops)


def overhead(locked: LockedDesign, layout: ScanChainLayout, variant: DefenseVariant) -> OverheadReport:
    variant = DefenseVariant(variant)
    secure = _scaled(SECURE_CELL_INVENTORY, locked.key_bits)
    masking = masking_inventory(variant, layout.n_chains)
    report = OverheadReport(
        design=locked.netlist.name,
        variant=variant.value,
        scan_outs=layout.n_chains,
        key_bits=locked.key_bits,
        baseline=baseline_primitives(locked),
        secure_cells=sum(secure.values()),
        masking=sum(masking.values()),
        inventory=_merge(secure, masking),
    )
    logger.info("Overhead %s/%s: +%d primitives over %d (%.2f%%)",
                report.design, report.variant, report.added, report.baseline, report.percent)
    return report
