"""
CNF encodings of netlists for pysat.

Two flavours share one variable pool:
  - Boolean Tseitin: one literal per net.
  - Dual rail: a (zero, one) literal pair per net; (0,0) is X. Gate clauses
    follow Kleene strong semantics, so a net is known in a model exactly when
    three-valued simulation would make it known.
"""

from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from pysat.formula import CNF, IDPool

from src.shift_leak_lab.core.netlist import Gate, GateKind, Netlist

Rails = Tuple[int, int]


class CnfBuilder:
    """Clause accumulator over an IDPool with a shared TRUE literal."""

    def __init__(self):
        self.pool = IDPool()
        self.clauses: List[List[int]] = []
        self.true = self.pool.id("__true__")
        self.clauses.append([self.true])
        self._fresh = 0

    def var(self, name: str) -> int:
        return self.pool.id(name)

    def fresh(self, label: str = "t") -> int:
        self._fresh += 1
        return self.pool.id(f"__{label}{self._fresh}")

    def const(self, value: int) -> int:
        return self.true if value else -self.true

    def add(self, clause: Iterable[int]) -> None:
        self.clauses.append(list(clause))

    def to_cnf(self) -> CNF:
        return CNF(from_clauses=self.clauses)

    @property
    def nof_vars(self) -> int:
        return self.pool.top

    # Boolean primitives on literals

    def and_(self, out: int, ins: Sequence[int]) -> None:
        for lit in ins:
            self.add([-out, lit])
        self.add([out] + [-lit for lit in ins])

    def or_(self, out: int, ins: Sequence[int]) -> None:
        for lit in ins:
            self.add([out, -lit])
        self.add([-out] + list(ins))

    def xor2(self, out: int, a: int, b: int) -> None:
        self.add([-out, a, b])
        self.add([-out, -a, -b])
        self.add([out, -a, b])
        self.add([out, a, -b])

    def equal(self, a: int, b: int) -> None:
        self.add([-a, b])
        self.add([a, -b])

    def new_and(self, ins: Sequence[int]) -> int:
        out = self.fresh("a")
        self.and_(out, ins)
        return out

    def new_or(self, ins: Sequence[int]) -> int:
        out = self.fresh("o")
        self.or_(out, ins)
        return out

    def new_xor(self, a: int, b: int) -> int:
        out = self.fresh("x")
        self.xor2(out, a, b)
        return out

    # Boolean Tseitin

    def boolean_gate(self, gate: Gate, ins: Sequence[int], out: int) -> None:
        kind = gate.kind
        target = -out if kind.inverting else out
        if kind in (GateKind.AND, GateKind.NAND):
            self.and_(target, ins)
        elif kind in (GateKind.OR, GateKind.NOR):
            self.or_(target, ins)
        elif kind in (GateKind.XOR, GateKind.XNOR):
            self.xor2(target, ins[0], ins[1])
        else:
            self.equal(target, ins[0])

    def encode_boolean(self, n: Netlist, prefix: str, sources: Optional[Mapping[str, int]] = None,
                       gates: Optional[Sequence[Gate]] = None,
                       values: Optional[Dict[str, int]] = None) -> Dict[str, int]:
        """
        Literal per net. Unmapped sources get named variables on first use;
        nets already in values are reused and only the listed gates are encoded.
        """
        lits: Dict[str, int] = dict(values or {})
        lits.update(sources or {})
        for gate in (gates if gates is not None else n.gates):
            if gate.output in lits:
                continue
            ins = []
            for net in gate.inputs:
                if net not in lits:
                    lits[net] = self.var(f"{prefix}:{net}")
                ins.append(lits[net])
            out = self.var(f"{prefix}:{gate.output}")
            self.boolean_gate(gate, ins, out)
            lits[gate.output] = out
        return lits

    # dual rail

    def free_rails(self, name: str) -> Rails:
        zero, one = self.var(f"{name}.z"), self.var(f"{name}.o")
        self.add([-zero, -one])
        return zero, one

    def const_rails(self, value: Optional[int]) -> Rails:
        """Known constant, or X for None."""
        if value is None:
            return -self.true, -self.true
        return (-self.true, self.true) if value else (self.true, -self.true)

    def dual_rail_gate(self, kind: GateKind, ins: Sequence[Rails]) -> Rails:
        zeros = [z for z, _ in ins]
        ones = [o for _, o in ins]
        if kind in (GateKind.BUF, GateKind.NOT):
            zero, one = ins[0]
        elif kind in (GateKind.AND, GateKind.NAND):
            zero, one = self.new_or(zeros), self.new_and(ones)
        elif kind in (GateKind.OR, GateKind.NOR):
            zero, one = self.new_and(zeros), self.new_or(ones)
        else:
            (za, oa), (zb, ob) = ins
            one = self.new_or([self.new_and([oa, zb]), self.new_and([za, ob])])
            zero = self.new_or([self.new_and([za, zb]), self.new_and([oa, ob])])
        return (one, zero) if kind.inverting else (zero, one)

    def encode_dual_rail(self, sources: Mapping[str, Rails], gates: Sequence[Gate]) -> Dict[str, Rails]:
        rails: Dict[str, Rails] = dict(sources)
        for gate in gates:
            rails[gate.output] = self.dual_rail_gate(gate.kind, [rails[net] for net in gate.inputs])
        return rails


def model_value(model: Sequence[int], lit: int) -> int:
    """Truth value of a literal in a pysat model (1-based, signed)."""
    index = abs(lit) - 1
    # variables that occur in no clause may be missing from the model
    value = index < len(model) and model[index] > 0
    return int(value if lit > 0 else not value)


def rails_value(model: Sequence[int], rails: Rails) -> Optional[int]:
    """1, 0 or None (X) from a dual-rail pair."""
    if model_value(model, rails[1]):
        return 1
    if model_value(model, rails[0]):
        return 0
    return None
