import pytest

from src.shift_leak_lab.atpg.leak import gen_leak_condition
from src.shift_leak_lab.attacks.outcome import AttackReport, KeyBitOutcome, RecoveryStatus
from src.shift_leak_lab.chip.layout import ScanChainLayout
from src.shift_leak_lab.core.bench import read_bench
from src.shift_leak_lab.core.cells import CellRef
from src.shift_leak_lab.core.netlist import extract_fanin_cone
from src.shift_leak_lab.locking.locks import Key, lock_rll
from src.shift_leak_lab.utils.exceptions import InvariantViolation
from src.shift_leak_lab.validation.validator import (
    KeyAuditValidator,
    LayoutValidator,
    LeakConditionValidator,
    LockValidator,
    ValidationSeverity,
)


def _report(bits):
    records = [KeyBitOutcome(i) if bit is None else KeyBitOutcome(i, RecoveryStatus.LEAKED, bit)
               for i, bit in enumerate(bits)]
    return AttackReport("toy", "rll", "dfs", 1, records)


def test_key_audit_passes_on_matching_bits():
    result = KeyAuditValidator().validate(_report([1, None, 0]), Key((1, 1, 0)))
    assert result.is_valid
    assert result.message == "2/3 recovered bits match"


def test_key_audit_flags_false_recovery():
    validator = KeyAuditValidator()
    result = validator.validate(_report([1, None, 0]), Key((0, 1, 1)))
    assert not result.is_valid
    assert result.severity is ValidationSeverity.CRITICAL
    assert result.value == [0, 2]
    with pytest.raises(InvariantViolation) as info:
        validator.enforce(_report([1, None, 0]), Key((0, 1, 1)))
    assert info.value.details == {"value": [0, 2]}


def test_key_audit_length_mismatch():
    assert not KeyAuditValidator().validate(_report([1]), Key((1, 0))).is_valid


def test_lock_validator_catches_a_wrong_key(bench_dir):
    c17 = read_bench(bench_dir / "c17.bench")
    locked = lock_rll(c17, 4, seed=3)
    assert all(r.is_valid for r in LockValidator(seed=3).validate(locked, c17))

    wrong = locked.with_key(locked.hidden_key.flipped(0))
    (result,) = LockValidator(seed=3).validate(wrong, c17)
    assert not result.is_valid
    assert result.entity == "hidden_key"


def test_layout_validator_reports_structural_errors(dip_example):
    locked, _ = dip_example
    broken = ScanChainLayout.explicit([["SC0", "SC1", "RC0"]])
    (result,) = LayoutValidator().validate(broken, locked)
    assert not result.is_valid
    assert "SC2" in result.message


def test_leak_validator_skips_above_the_unknown_limit(dip_example):
    locked, _ = dip_example
    n = locked.netlist
    cone = extract_fanin_cone(n, "y")
    cond = gen_leak_condition(n, cone, CellRef.rc(0), {CellRef.sc(0), CellRef.sc(1)}, (),
                              known_values={CellRef.sc(2): 1})
    assert LeakConditionValidator(n).validate(cone, cond).is_valid

    unknown = type(cond)(cond.po, cond.leak_cell, cond.cell_constraints, cond.pi_constraints,
                         cond.expected, cond.fault, frozenset({CellRef.sc(0), CellRef.sc(1)}))
    result = LeakConditionValidator(n, unknown_limit=1).validate(cone, unknown)
    assert result.is_valid
    assert result.severity is ValidationSeverity.WARNING
    assert result.value == 2
