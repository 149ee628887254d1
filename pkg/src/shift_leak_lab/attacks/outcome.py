"""
Attack result types.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional

from src.shift_leak_lab.locking.locks import Key
from src.shift_leak_lab.utils.exceptions import InvariantViolation


class RecoveryStatus(str, Enum):
    PREPROCESSED = "preprocessed"
    LEAKED = "leaked"
    UNRECOVERED = "unrecovered"


class RecoveryMethod(str, Enum):
    DIP = "dip-loop"
    SHIFT_AND_LEAK = "shift-and-leak"
    NONE = "none"


@dataclass
class KeyBitOutcome:
    index: int
    status: RecoveryStatus = RecoveryStatus.UNRECOVERED
    bit: Optional[int] = None
    queries: int = 0
    method: RecoveryMethod = RecoveryMethod.NONE

    @property
    def recovered(self) -> bool:
        return self.status is not RecoveryStatus.UNRECOVERED

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "status": self.status.value,
            "bit": self.bit,
            "queries": self.queries,
            "method": self.method.value,
        }


@dataclass
class DipLoopState:
    """Oracle pairs of one cone's DIP loop; every pair comes from a real query."""
    po: str
    cap: int
    pairs: List[Dict[str, int]] = field(default_factory=list)
    observed: List[int] = field(default_factory=list)
    iterations: int = 0
    resolved: bool = False

    def record(self, dip: Mapping[str, int], output: int) -> None:
        self.pairs.append(dict(dip))
        self.observed.append(int(output))
        self.iterations += 1

    @property
    def capped(self) -> bool:
        return not self.resolved and self.iterations >= self.cap


@dataclass
class AttackReport:
    design: str
    scheme: str
    defense: str
    n_chains: int
    records: List[KeyBitOutcome]
    config: Dict[str, Any] = field(default_factory=dict)
    seeds: Dict[str, int] = field(default_factory=dict)
    durations: Dict[str, float] = field(default_factory=dict)
    cones_processed: int = 0
    cones_unresolved: int = 0
    dip_iterations: int = 0
    total_queries: int = 0
    scan_control: bool = False

    @property
    def key_bits(self) -> int:
        return len(self.records)

    def count(self, status: RecoveryStatus) -> int:
        return sum(1 for record in self.records if record.status is status)

    @property
    def recovered(self) -> int:
        return sum(1 for record in self.records if record.recovered)

    @property
    def residual(self) -> int:
        """Bits left for brute force."""
        return self.key_bits - self.recovered

    def recovered_bits(self) -> Dict[int, int]:
        return {record.index: record.bit for record in self.records if record.recovered}

    def audit(self, key: Key) -> None:
        """Every recovered bit must equal the planted key bit."""
        if len(key) != self.key_bits:
            raise InvariantViolation(f"audit key has {len(key)} bits, report has {self.key_bits}")
        wrong = sorted(index for index, bit in self.recovered_bits().items() if key[index] != bit)
        if wrong:
            raise InvariantViolation(f"false recovery of key bits {wrong}", {"indices": wrong})

    def summary(self) -> Dict[str, Any]:
        return {
            "design": self.design,
            "locking": self.scheme,
            "defense": self.defense,
            "scan_chains": self.n_chains,
            "key_bits": self.key_bits,
            "recovered": self.recovered,
            "preprocessed": self.count(RecoveryStatus.PREPROCESSED),
            "leaked": self.count(RecoveryStatus.LEAKED),
            "unrecovered": self.count(RecoveryStatus.UNRECOVERED),
            "brute_force_residual": self.residual,
            "oracle_queries": self.total_queries,
            "cones_processed": self.cones_processed,
            "cones_unresolved": self.cones_unresolved,
            "dip_iterations": self.dip_iterations,
            "scan_control_confirmed": self.scan_control,
        }

    def to_dict(self) -> Dict[str, Any]:
        """Report payload; wall-clock durations are kept out so reruns are byte-identical."""
        return {
            "summary": self.summary(),
            "seeds": dict(self.seeds),
            "config": dict(self.config),
            "key_bits": [record.to_dict() for record in self.records],
        }

    def timings_dict(self) -> Dict[str, Any]:
        return {
            "design": self.design,
            "scan_chains": self.n_chains,
            "durations_s": {phase: round(seconds, 6) for phase, seconds in self.durations.items()},
        }
