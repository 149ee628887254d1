"""
Scan cell references and their nets.

RC(i) is the regular scan cell of flop i; its content drives the flop's Q net.
SC(k) is the secure cell of key bit k; its content drives keyinput<k>.
"""

import re
from dataclasses import dataclass
from enum import Enum
from typing import Dict

from src.shift_leak_lab.core.netlist import Netlist, key_index_of, key_input_name
from src.shift_leak_lab.utils.exceptions import NetlistError

_CELL_TOKEN = re.compile(r"^(RC|SC)(\d+)$")


class CellKind(str, Enum):
    RC = "RC"
    SC = "SC"


@dataclass(frozen=True, order=True)
class CellRef:
    kind: CellKind
    index: int

    @classmethod
    def rc(cls, index: int) -> "CellRef":
        return cls(CellKind.RC, index)

    @classmethod
    def sc(cls, index: int) -> "CellRef":
        return cls(CellKind.SC, index)

    @classmethod
    def parse(cls, token: str) -> "CellRef":
        match = _CELL_TOKEN.match(token.strip().upper())
        if not match:
            raise ValueError(f"not a cell reference: {token!r}")
        return cls(CellKind(match.group(1)), int(match.group(2)))

    @property
    def is_secure(self) -> bool:
        return self.kind is CellKind.SC

    def __str__(self) -> str:
        return f"{self.kind.value}{self.index}"


def cell_net(n: Netlist, cell: CellRef) -> str:
    """Net driven by a cell's content."""
    if cell.kind is CellKind.RC:
        if not 0 <= cell.index < len(n.flops):
            raise NetlistError(f"{cell} has no flop in {n.name}")
        return n.flops[cell.index].q
    net = key_input_name(cell.index)
    if net not in n.drivers or n.drivers[net] != "key":
        raise NetlistError(f"{cell} has no key input in {n.name}")
    return net


def net_cells(n: Netlist) -> Dict[str, CellRef]:
    """State-holding source nets → cell."""
    result = {flop.q: CellRef.rc(flop.index) for flop in n.flops}
    for net in n.key_inputs:
        index = key_index_of(net)
        if index is not None:
            result[net] = CellRef.sc(index)
    return result
