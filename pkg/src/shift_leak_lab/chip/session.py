"""
Pin-level oracle chip.

The session holds the locked netlist, its scan layout and the hidden key, and
exposes only pins: mode inputs (test, se), primary inputs, scan-in per chain,
primary outputs and scan-out per chain.

DFS: secure cells load the key in M0, hold in M1a/M1b and shift in M2. Scan-out
is forced to 1 while test=0 and, after any 0→1 test transition, until the next
power-on reset.

MSSD: every shift is gated by SD, scan-out is forced to 1 while SD=0, and the
first clock after an M2→M0 switch does not reach the RCs. The transition
detector samples test on clock edges only; a sampled 0→1 edge latches and
keeps SD at 0 until power-on reset, so shifting is only ever available to a
chip powered up with test=1 that has not left test mode since.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from src.shift_leak_lab.chip.layout import ScanChainLayout
from src.shift_leak_lab.chip.trace import SessionTrace
from src.shift_leak_lab.core.cells import CellKind, CellRef
from src.shift_leak_lab.core.netlist import key_input_name, sequence_or_mapping
from src.shift_leak_lab.core.simulator import boolean_net_values
from src.shift_leak_lab.locking.locks import Key, LockedDesign
from src.shift_leak_lab.utils.exceptions import KeyLengthError, LockingError, NetlistError
from src.shift_leak_lab.utils.logger import get_chip_logger

logger = get_chip_logger()

MASK_VALUE = 1


@dataclass(frozen=True)
class ModeInputs:
    test: int
    se: int

    def __post_init__(self):
        if self.test not in (0, 1) or self.se not in (0, 1):
            raise ValueError(f"mode pins must be 0/1, got test={self.test} se={self.se}")

    @property
    def name(self) -> str:
        return _MODE_NAMES[(self.test, self.se)]

    def __str__(self) -> str:
        return self.name


_MODE_NAMES = {(0, 0): "M0", (0, 1): "M1a", (1, 0): "M1b", (1, 1): "M2"}

M0 = ModeInputs(0, 0)
M1A = ModeInputs(0, 1)
M1B = ModeInputs(1, 0)
M2 = ModeInputs(1, 1)


class DefenseVariant(str, Enum):
    DFS = "dfs"
    MSSD = "mssd"


def sd_value(test: int, se: int, test_stable: bool) -> int:
    """Shift disable: 1 only in M2 while test_stable holds (no latched test posedge)."""
    return int(bool(test) and bool(se) and test_stable)


PinValues = Union[Sequence[int], Mapping[str, int], None]


class ChipSession:
    """
    A single mutable chip. Pin operations are strictly sequential.

    `variant` is public (the defense is visible in the netlist); the hidden key
    has no accessor.
    """

    def __init__(self, locked: LockedDesign, layout: ScanChainLayout, variant: DefenseVariant,
                 key: Optional[Key] = None, mode: ModeInputs = M0, seed: int = 0,
                 trace: Optional[SessionTrace] = None):
        key = key if key is not None else locked.hidden_key
        if key is None:
            raise LockingError("a chip needs the hidden key of its locked design")
        if len(key) != locked.key_bits:
            raise KeyLengthError(locked.key_bits, len(key))
        layout.validate(locked.netlist.num_flops, locked.key_bits)

        self.netlist = locked.netlist
        self.layout = layout
        self.variant = DefenseVariant(variant)
        self.seed = seed
        self.trace = trace
        self.__key = tuple(key)

        self._sources = {CellKind.RC: [flop.q for flop in self.netlist.flops],
                         CellKind.SC: [key_input_name(k) for k in range(locked.key_bits)]}
        # M1a shift path: position of the previous RC in the same chain, None at the head
        self._rc_upstream_of: List[Dict[int, Optional[int]]] = []
        for chain in layout.chains:
            rc_positions = [p for p, cell in enumerate(chain) if cell.kind is CellKind.RC]
            self._rc_upstream_of.append({p: (rc_positions[r - 1] if r else None)
                                         for r, p in enumerate(rc_positions)})

        self.pin_operations = 0
        self.clock_pulses = 0
        self.observations = 0
        self.reset(mode)

    # power-on

    def reset(self, mode: ModeInputs = M0) -> None:
        """Power-on reset: all cells 0, SRB, shift-disable latch and clock gating cleared."""
        self._cells: List[List[int]] = [[0] * len(chain) for chain in self.layout.chains]
        # DFS read-out detector watches the pin; MSSD's DFF only sees clock edges
        self._test_level = mode.test
        self._test_sample = mode.test
        self._prev_clock_mode = mode
        self._sticky = False
        self._shift_locked = False
        self._countdown = 0
        logger.debug("Chip reset in %s (%s)", mode, self.variant.value)

    # pins

    def step(self, m: ModeInputs, pi: PinValues = None, si: Optional[Sequence[int]] = None) -> Tuple[Dict[str, int], Tuple[int, ...]]:
        """One clock pulse; po and so reflect the state before the edge."""
        pi_values = self._pi(pi)
        si_values = self._si(si)
        po, next_state = self._evaluate(pi_values)

        if self.variant is DefenseVariant.DFS:
            if self._test_level == 0 and m.test == 1:
                self._sticky = True
            masked = m.test == 0 or self._sticky
            sd = None
        else:
            if self._test_sample == 0 and m.test == 1:
                self._shift_locked = True
            sd = sd_value(m.test, m.se, not self._shift_locked)
            masked = sd == 0
            if self._prev_clock_mode == M2 and m == M0:
                self._countdown = 1

        so = tuple(MASK_VALUE if masked else chain[-1] for chain in self._cells)
        self._clock(m, sd, si_values, next_state)

        self._test_level = m.test
        self._test_sample = m.test
        self._prev_clock_mode = m
        self.pin_operations += 1
        self.clock_pulses += 1
        if self.trace is not None:
            self.trace.record("step", m.name, [pi_values[net] for net in self.netlist.inputs], si_values,
                              [po[net] for net in self.netlist.outputs], so, masked)
        return po, so

    def observe(self, m: ModeInputs, pi: PinValues = None) -> Dict[str, int]:
        """Clockless mode switch and PO read; the MSSD detector sees no edge."""
        pi_values = self._pi(pi)
        po, _ = self._evaluate(pi_values)
        if self.variant is DefenseVariant.DFS and self._test_level == 0 and m.test == 1:
            self._sticky = True
        self._test_level = m.test
        self.pin_operations += 1
        self.observations += 1
        if self.trace is not None:
            self.trace.record("observe", m.name, [pi_values[net] for net in self.netlist.inputs], None,
                              [po[net] for net in self.netlist.outputs], None, True)
        return po

    def debug_snapshot(self) -> Dict[CellRef, int]:
        """Simulation-side view of every cell; never reachable through pins."""
        return {cell: self._cells[c][p] for cell, (c, p) in self.layout.positions.items()}

    # internals

    def _pi(self, pi: PinValues) -> Dict[str, int]:
        if pi is None:
            return {net: 0 for net in self.netlist.inputs}
        values = sequence_or_mapping(pi, self.netlist.inputs, "pi")
        missing = [net for net in self.netlist.inputs if net not in values]
        if missing:
            raise NetlistError(f"pi: missing values for {missing}")
        return {net: int(values[net]) for net in self.netlist.inputs}

    def _si(self, si: Optional[Sequence[int]]) -> List[int]:
        if si is None:
            return [0] * self.layout.n_chains
        si = [int(bit) for bit in si]
        if len(si) != self.layout.n_chains:
            raise NetlistError(f"si: expected {self.layout.n_chains} bits, got {len(si)}")
        return si

    def _evaluate(self, pi: Dict[str, int]) -> Tuple[Dict[str, int], List[int]]:
        sources = dict(pi)
        for cell, (c, p) in self.layout.positions.items():
            sources[self._sources[cell.kind][cell.index]] = self._cells[c][p]
        values = boolean_net_values(self.netlist, sources)
        po = {net: values[net] for net in self.netlist.outputs}
        return po, [values[flop.d] for flop in self.netlist.flops]

    def _clock(self, m: ModeInputs, sd: Optional[int], si: List[int], next_state: List[int]) -> None:
        old = self._cells
        new = [list(chain) for chain in old]
        gated = False
        if self.variant is DefenseVariant.MSSD and self._countdown:
            gated = True
            self._countdown -= 1

        for c, chain in enumerate(self.layout.chains):
            full_shift = m == M2 and (sd is None or sd == 1)
            for p, cell in enumerate(chain):
                if cell.kind is CellKind.SC:
                    if m == M0:
                        new[c][p] = self.__key[cell.index]
                    elif full_shift:
                        new[c][p] = old[c][p - 1] if p else si[c]
                    continue

                if gated:
                    continue
                if self.variant is DefenseVariant.DFS:
                    if m == M2:
                        new[c][p] = old[c][p - 1] if p else si[c]
                    elif m == M1A:
                        new[c][p] = self._rc_upstream(c, p, si[c])
                    else:
                        new[c][p] = next_state[cell.index]
                elif sd == 1:
                    new[c][p] = old[c][p - 1] if p else si[c]
                else:
                    new[c][p] = next_state[cell.index]
        self._cells = new

    def _rc_upstream(self, chain: int, position: int, si: int) -> int:
        upstream = self._rc_upstream_of[chain][position]
        return si if upstream is None else self._cells[chain][upstream]


def boot(locked: LockedDesign, layout: ScanChainLayout, variant: Union[str, DefenseVariant],
         mode: ModeInputs = M0, seed: int = 0, key: Optional[Key] = None,
         trace: Optional[SessionTrace] = None) -> ChipSession:
    """Power up a chip with all cells 0 and the test pin at mode.test."""
    return ChipSession(locked, layout, DefenseVariant(variant), key=key, mode=mode, seed=seed, trace=trace)
