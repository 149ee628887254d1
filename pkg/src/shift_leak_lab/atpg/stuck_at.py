"""
SAT-based stuck-at test generation.

The miter shares every source and every gate outside the fault's fan-out cone
between the good and faulty machines; only the cone is duplicated, with the
faulty net tied to the stuck value. An observation point that differs is
required. UNSAT proves the fault untestable.
"""

from typing import Dict, List, Optional, Sequence

from pysat.solvers import Solver

from src.shift_leak_lab.atpg.encoding import CnfBuilder, model_value
from src.shift_leak_lab.atpg.fault_sim import Fault, observation_points
from src.shift_leak_lab.core.netlist import Netlist, fanout_cone
from src.shift_leak_lab.utils.logger import get_atpg_logger

logger = get_atpg_logger()


class StuckAtTestGenerator:
    """One good/faulty miter per fault."""

    def __init__(self, n: Netlist, solver: str = "glucose4"):
        self.netlist = n
        self.solver_name = solver
        self.observed = observation_points(n)

    def generate(self, fault: Fault) -> Optional[Dict[str, int]]:
        """A source assignment detecting the fault, or None when untestable."""
        n = self.netlist
        builder = CnfBuilder()
        good = builder.encode_boolean(n, "g")
        for net in n.sources:
            good.setdefault(net, builder.var(f"g:{net}"))

        members = fanout_cone(n, fault.net) | {fault.net}
        points = [p for p in self.observed if p in members]
        if not points:
            return None

        faulty = {net: lit for net, lit in good.items() if net not in members}
        faulty[fault.net] = builder.const(fault.stuck_at)
        for gate in n.gates_in(members):
            if gate.output == fault.net:
                continue
            out = builder.var(f"f:{gate.output}")
            builder.boolean_gate(gate, [faulty[net] for net in gate.inputs], out)
            faulty[gate.output] = out

        diffs = [builder.new_xor(good[p], faulty[p]) for p in points]
        builder.add(diffs)

        with Solver(name=self.solver_name, bootstrap_with=builder.clauses) as solver:
            if not solver.solve():
                logger.debug("Fault %s proven untestable", fault)
                return None
            model = solver.get_model()
        return {net: model_value(model, good[net]) for net in n.sources}

    def top_up(self, faults: Sequence[Fault], limit: Optional[int] = None):
        """
        Deterministic patterns for the given faults, in order.
        Returns (patterns, untestable faults).
        """
        patterns: List[Dict[str, int]] = []
        untestable: List[Fault] = []
        for fault in faults:
            if limit is not None and len(patterns) >= limit:
                break
            pattern = self.generate(fault)
            if pattern is None:
                untestable.append(fault)
            else:
                patterns.append(pattern)
        logger.info("SAT top-up on %s: %d patterns, %d untestable faults",
                    self.netlist.name, len(patterns), len(untestable))
        return patterns, untestable
