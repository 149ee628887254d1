"""
Invariant validators for lab artifacts.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, List, Optional

import numpy as np

from src.shift_leak_lab.atpg.leak import LeakCondition
from src.shift_leak_lab.attacks.outcome import AttackReport
from src.shift_leak_lab.chip.layout import ScanChainLayout
from src.shift_leak_lab.core.cells import CellKind, cell_net
from src.shift_leak_lab.core.netlist import Cone, Netlist
from src.shift_leak_lab.core.simulator import PatternBlock, TernaryValue, simulate_packed, ternary_net_values, unpack
from src.shift_leak_lab.locking.locks import Key, LockedDesign, apply_key, interference_score, strip_key_gates
from src.shift_leak_lab.utils.exceptions import InvariantViolation, StitchError
from src.shift_leak_lab.utils.logger import get_validation_logger

logger = get_validation_logger()


class ValidationSeverity(Enum):
    """Validation error severity levels."""
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


@dataclass
class ValidationResult:
    """Validation result container."""
    entity: str
    value: Any
    is_valid: bool
    severity: ValidationSeverity
    message: str


def _log(entity: str, results: List[ValidationResult]) -> None:
    errors = [r.message for r in results if not r.is_valid]
    warnings = [r.message for r in results if r.is_valid and r.severity is ValidationSeverity.WARNING]
    logger.log_validation(entity, not errors, errors, warnings)


class LeakConditionValidator:
    """
    Exhaustive check that a leak condition decodes the leaky cell for every
    assignment of its unknown cells. Unconstrained PIs and cells are tried at
    all-0 and all-1, and must also stay don't-care under three-valued
    simulation.
    """

    def __init__(self, n: Netlist, unknown_limit: int = 16):
        self.netlist = n
        self.unknown_limit = unknown_limit

    def validate(self, cone: Cone, cond: LeakCondition) -> ValidationResult:
        n = self.netlist
        entity = f"{cond.leak_cell}@{cond.po}"
        leak_net = cell_net(n, cond.leak_cell)
        unknown_nets = sorted(cell_net(n, cell) for cell in cond.unknown_cells)
        if len(unknown_nets) > self.unknown_limit:
            return ValidationResult(entity, len(unknown_nets), True, ValidationSeverity.WARNING,
                                    f"skipped: {len(unknown_nets)} unknown cells exceed limit {self.unknown_limit}")

        fixed = {cell_net(n, cell): value for cell, value in cond.constrained_cells.items()
                 if cell != cond.leak_cell}
        fixed.update(cond.constrained_pis)

        ternary = {net: TernaryValue.X for net in n.sources}
        ternary.update({net: TernaryValue.of(value) for net, value in fixed.items()})
        for value in (0, 1):
            ternary[leak_net] = TernaryValue.of(value)
            observed = ternary_net_values(n, ternary)[cond.po]
            if observed != TernaryValue.of(cond.expected[value]):
                return ValidationResult(entity, value, False, ValidationSeverity.ERROR,
                                        f"three-valued PO is {observed} with leak bit {value}")

        names = [leak_net] + unknown_nets
        block = PatternBlock.exhaustive(names)
        leak_bits = block.to_matrix()[:, 0]
        want = np.where(leak_bits == 1, cond.expected[1], cond.expected[0]).astype(np.uint8)
        for fill in (0, 1):
            constants = {net: fill for net in n.sources if net not in names}
            constants.update(fixed)
            values = simulate_packed(n, block, constants=constants)
            got = unpack(values[cond.po], block.count)
            mismatches = int(np.count_nonzero(got != want))
            if mismatches:
                return ValidationResult(entity, mismatches, False, ValidationSeverity.ERROR,
                                        f"{mismatches} of {block.count} assignments mis-decode (fill={fill})")
        return ValidationResult(entity, block.count, True, ValidationSeverity.INFO,
                                f"holds for all {block.count} assignments")


class LayoutValidator:
    """Structural checks on a scan layout against its locked design."""

    def validate(self, layout: ScanChainLayout, locked: LockedDesign) -> List[ValidationResult]:
        results = []
        try:
            layout.validate(locked.netlist.num_flops, locked.key_bits)
            results.append(ValidationResult("layout", layout.total_cells, True, ValidationSeverity.INFO,
                                            "every cell appears exactly once"))
        except StitchError as e:
            results.append(ValidationResult("layout", None, False, ValidationSeverity.ERROR, e.message))
            _log("layout", results)
            return results

        for c, chain in enumerate(layout.chains):
            if chain[-1].kind is CellKind.SC:
                results.append(ValidationResult(f"chain {c}", str(chain[-1]), True, ValidationSeverity.WARNING,
                                                f"{chain[-1]} is the last cell of chain {c}"))
        lengths = [len(chain) for chain in layout.chains]
        if max(lengths) - min(lengths) > 1:
            results.append(ValidationResult("layout", lengths, True, ValidationSeverity.INFO,
                                            f"unbalanced chain lengths {lengths}"))
        _log("layout", results)
        return results


class LockValidator:
    """Hidden key restores the original function; recorded interference score is reproducible."""

    def __init__(self, patterns: int = 256, seed: int = 0):
        self.patterns = patterns
        self.seed = seed

    def validate(self, locked: LockedDesign, original: Optional[Netlist] = None) -> List[ValidationResult]:
        original = original if original is not None else strip_key_gates(locked)
        results = []

        if locked.hidden_key is not None:
            unlocked = apply_key(locked, locked.hidden_key)
            rng = np.random.default_rng(self.seed)
            block = PatternBlock.random(original.sources, self.patterns, rng)
            want = simulate_packed(original, block)
            got = simulate_packed(unlocked, block)
            observed = list(original.outputs) + [flop.d for flop in original.flops]
            differing = [net for net in observed if not np.array_equal(want[net], got[net])]
            if differing:
                results.append(ValidationResult("hidden_key", differing, False, ValidationSeverity.ERROR,
                                                f"hidden key does not restore {len(differing)} observed nets"))
            else:
                results.append(ValidationResult("hidden_key", self.patterns, True, ValidationSeverity.INFO,
                                                "hidden key restores the original function"))

        if locked.interference is not None:
            score = interference_score(original, [record.host_net for record in locked.records])
            ok = score == locked.interference
            results.append(ValidationResult(
                "interference_score", score, ok,
                ValidationSeverity.INFO if ok else ValidationSeverity.ERROR,
                f"recomputed {score}, recorded {locked.interference}",
            ))
        _log(f"lock {locked.netlist.name}", results)
        return results


class KeyAuditValidator:
    """Recovered bits against the planted key."""

    def validate(self, report: AttackReport, key: Key) -> ValidationResult:
        if len(key) != report.key_bits:
            result = ValidationResult("key_audit", len(key), False, ValidationSeverity.CRITICAL,
                                      f"audit key has {len(key)} bits, report has {report.key_bits}")
        else:
            wrong = sorted(i for i, bit in report.recovered_bits().items() if key[i] != bit)
            if wrong:
                result = ValidationResult("key_audit", wrong, False, ValidationSeverity.CRITICAL,
                                          f"false recovery of key bits {wrong}")
            else:
                result = ValidationResult("key_audit", report.recovered, True, ValidationSeverity.INFO,
                                          f"{report.recovered}/{report.key_bits} recovered bits match")
        _log(f"attack on {report.design}", [result])
        return result

    def enforce(self, report: AttackReport, key: Key) -> None:
        result = self.validate(report, key)
        if not result.is_valid:
            raise InvariantViolation(result.message, {"value": result.value})
