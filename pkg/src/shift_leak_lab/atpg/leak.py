"""
Leak-condition generation.

A leak condition sensitizes one cell (the leaky cell) to a primary output while
the cells whose content is unknown stay at X. Two dual-rail copies of the PO
fan-in cone share every free source; the leaky cell is 0 in one copy and 1 in
the other, and the PO must be known in both copies with different values.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Collection, Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

from pysat.examples.rc2 import RC2
from pysat.formula import WCNF
from pysat.solvers import Solver

from src.shift_leak_lab.atpg.encoding import CnfBuilder, Rails, rails_value
from src.shift_leak_lab.atpg.fault_sim import Fault
from src.shift_leak_lab.core.cells import CellRef, cell_net
from src.shift_leak_lab.core.netlist import Cone, Netlist, key_index_of
from src.shift_leak_lab.core.simulator import TernaryValue
from src.shift_leak_lab.utils.exceptions import DecodeError, NetlistError
from src.shift_leak_lab.utils.logger import get_atpg_logger

logger = get_atpg_logger()


@dataclass(frozen=True)
class LeakCondition:
    po: str
    leak_cell: CellRef
    cell_constraints: Dict[CellRef, TernaryValue]
    pi_constraints: Dict[str, TernaryValue]
    expected: Tuple[int, int]
    fault: Fault
    unknown_cells: FrozenSet[CellRef] = field(default_factory=frozenset)

    def __post_init__(self):
        if None in self.expected or self.expected[0] == self.expected[1]:
            raise NetlistError(f"leak condition on {self.po} needs two distinct known PO values")

    @property
    def constrained_cells(self) -> Dict[CellRef, int]:
        return {cell: int(v) for cell, v in self.cell_constraints.items() if v.is_known}

    @property
    def constrained_pis(self) -> Dict[str, int]:
        return {net: int(v) for net, v in self.pi_constraints.items() if v.is_known}

    @property
    def uses_pis(self) -> bool:
        return bool(self.constrained_pis)

    @property
    def decode_map(self) -> Dict[int, int]:
        """Observed PO value → leaked bit."""
        return {self.expected[0]: 0, self.expected[1]: 1}

    def decode(self, observed: int) -> int:
        try:
            return self.decode_map[observed]
        except KeyError:
            raise DecodeError(observed, self.decode_map) from None

    def to_dict(self) -> Dict[str, object]:
        return {
            "po": self.po,
            "leak_cell": str(self.leak_cell),
            "cells": {str(cell): str(v) for cell, v in sorted(self.cell_constraints.items())},
            "pis": {net: str(v) for net, v in sorted(self.pi_constraints.items())},
            "expected": list(self.expected),
            "fault": str(self.fault),
        }


def cone_cells(n: Netlist, cone: Cone) -> List[CellRef]:
    """Scan cells whose content feeds the cone: RCs by flop index, then SCs."""
    cells = [CellRef.rc(i) for i in sorted(cone.flops)]
    cells += sorted(CellRef.sc(key_index_of(net)) for net in cone.keys if key_index_of(net) is not None)
    return cells


def gen_leak_condition(
    n: Netlist,
    cone: Cone,
    leak_cell: CellRef,
    controllable: Collection[CellRef],
    unknown: Collection[CellRef],
    known_values: Optional[Mapping[CellRef, int]] = None,
    solver: str = "glucose4",
    minimize: bool = True,
    dump_dir: Optional[Union[str, Path]] = None,
) -> Optional[LeakCondition]:
    """
    Leak condition for leak_cell at cone.po, or None when the cell cannot be
    observed there with the unknown cells at X.

    known_values are constants and take precedence over `unknown`. Cone cells
    listed nowhere are treated as unknown. With minimize, a MaxSAT pass keeps
    the number of constrained cells (then PIs) minimal.
    """
    known = dict(known_values or {})
    controllable = set(controllable) - {leak_cell}
    unknown = set(unknown) - set(known) - {leak_cell}
    if controllable & unknown:
        overlap = ", ".join(map(str, sorted(controllable & unknown)))
        raise NetlistError(f"cells both controllable and unknown: {overlap}")
    if controllable & set(known):
        overlap = ", ".join(map(str, sorted(controllable & set(known))))
        raise NetlistError(f"cells both controllable and known: {overlap}")

    cells = cone_cells(n, cone)
    if leak_cell not in cells:
        raise NetlistError(f"{leak_cell} is not in the fan-in cone of {cone.po}")

    builder = CnfBuilder()
    shared: Dict[str, Rails] = {}
    free_pis: Dict[str, Rails] = {}
    free_cells: Dict[CellRef, Rails] = {}
    for net in sorted(cone.pis):
        free_pis[net] = shared[net] = builder.free_rails(f"pi:{net}")
    for cell in cells:
        if cell == leak_cell:
            continue
        net = cell_net(n, cell)
        if cell in known:
            shared[net] = builder.const_rails(known[cell])
        elif cell in controllable:
            free_cells[cell] = shared[net] = builder.free_rails(f"cell:{cell}")
        else:
            shared[net] = builder.const_rails(None)

    leak_net = cell_net(n, leak_cell)
    gates = n.gates_in(cone.gates)
    copies = []
    for value in (0, 1):
        sources = dict(shared)
        sources[leak_net] = builder.const_rails(value)
        copies.append(builder.encode_dual_rail(sources, gates))
    (z0, o0), (z1, o1) = copies[0][cone.po], copies[1][cone.po]
    builder.add([builder.new_and([o0, z1]), builder.new_and([z0, o1])])

    if dump_dir is not None:
        path = Path(dump_dir) / f"{cone.po}_{leak_cell}.cnf"
        path.parent.mkdir(parents=True, exist_ok=True)
        builder.to_cnf().to_file(str(path))

    model = _solve(builder, free_cells, free_pis, solver, minimize)
    if model is None:
        logger.debug("No leak condition for %s at %s", leak_cell, cone.po)
        return None

    cell_constraints: Dict[CellRef, TernaryValue] = {}
    for cell in cells:
        if cell in free_cells:
            cell_constraints[cell] = TernaryValue.of(rails_value(model, free_cells[cell]))
        elif cell in known and cell != leak_cell:
            cell_constraints[cell] = TernaryValue.of(known[cell])
        else:
            cell_constraints[cell] = TernaryValue.X
    pi_constraints = {net: TernaryValue.of(rails_value(model, rails)) for net, rails in free_pis.items()}
    expected = (rails_value(model, copies[0][cone.po]), rails_value(model, copies[1][cone.po]))

    unknown_cells = frozenset(cell for cell in cells
                              if cell != leak_cell and cell not in known and cell not in controllable)
    condition = LeakCondition(
        po=cone.po,
        leak_cell=leak_cell,
        cell_constraints=cell_constraints,
        pi_constraints=pi_constraints,
        expected=expected,
        fault=Fault(leak_net, 0),
        unknown_cells=unknown_cells,
    )
    logger.debug("Leak condition for %s at %s: %d cells, %d PIs constrained",
                 leak_cell, cone.po, len(condition.constrained_cells), len(condition.constrained_pis))
    return condition


def _solve(builder: CnfBuilder, free_cells: Mapping[CellRef, Rails], free_pis: Mapping[str, Rails],
           solver: str, minimize: bool) -> Optional[List[int]]:
    if not minimize or not (free_cells or free_pis):
        with Solver(name=solver, bootstrap_with=builder.clauses) as s:
            return s.get_model() if s.solve() else None

    wcnf = WCNF()
    for clause in builder.clauses:
        wcnf.append(clause)
    # one constrained cell outweighs every PI together
    cell_weight = len(free_pis) + 1
    for zero, one in free_cells.values():
        wcnf.append([-zero], weight=cell_weight)
        wcnf.append([-one], weight=cell_weight)
    for zero, one in free_pis.values():
        wcnf.append([-zero], weight=1)
        wcnf.append([-one], weight=1)
    with RC2(wcnf, solver=solver) as rc2:
        return rc2.compute()
