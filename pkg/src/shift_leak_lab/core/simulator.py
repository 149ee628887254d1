"""
Netlist evaluation: Kleene three-valued, plain Boolean, and bit-parallel
packed simulation (64 patterns per uint64 word) with optional stuck-at
injection.
"""

import operator
from dataclasses import dataclass
from enum import IntEnum
from functools import reduce
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.shift_leak_lab.core.netlist import Gate, GateKind, Netlist, sequence_or_mapping
from src.shift_leak_lab.utils.exceptions import NetlistError

WORD_BITS = 64
ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


class TernaryValue(IntEnum):
    ZERO = 0
    ONE = 1
    X = 2

    @classmethod
    def of(cls, value) -> "TernaryValue":
        if isinstance(value, TernaryValue):
            return value
        if value is None or (isinstance(value, str) and value.upper() == "X"):
            return cls.X
        if value in (0, 1, "0", "1", False, True):
            return cls(int(value))
        raise ValueError(f"not a ternary value: {value!r}")

    @property
    def is_known(self) -> bool:
        return self is not TernaryValue.X

    def invert(self) -> "TernaryValue":
        if self is TernaryValue.X:
            return self
        return TernaryValue(1 - self.value)

    def __str__(self) -> str:
        return "X" if self is TernaryValue.X else str(self.value)


_0, _1, _X = TernaryValue.ZERO, TernaryValue.ONE, TernaryValue.X


def kleene(kind: GateKind, values: Sequence[TernaryValue]) -> TernaryValue:
    """Kleene strong three-valued gate semantics."""
    if kind in (GateKind.AND, GateKind.NAND):
        if _0 in values:
            result = _0
        elif all(v is _1 for v in values):
            result = _1
        else:
            result = _X
    elif kind in (GateKind.OR, GateKind.NOR):
        if _1 in values:
            result = _1
        elif all(v is _0 for v in values):
            result = _0
        else:
            result = _X
    elif kind in (GateKind.XOR, GateKind.XNOR):
        if _X in values:
            result = _X
        else:
            result = TernaryValue(reduce(operator.xor, (v.value for v in values)))
    else:
        result = values[0]
    return result.invert() if kind.inverting else result


def boolean(kind: GateKind, values: Sequence[int]) -> int:
    if kind in (GateKind.AND, GateKind.NAND):
        result = int(all(values))
    elif kind in (GateKind.OR, GateKind.NOR):
        result = int(any(values))
    elif kind in (GateKind.XOR, GateKind.XNOR):
        result = reduce(operator.xor, values)
    else:
        result = values[0]
    return result ^ 1 if kind.inverting else result


def _source_assignment(n: Netlist, pi, state, key, default) -> Dict[str, object]:
    values: Dict[str, object] = {}
    values.update(sequence_or_mapping(pi, n.inputs, "pi"))
    if state is not None:
        if isinstance(state, Mapping):
            values.update({n.flops[i].q: v for i, v in state.items()})
        else:
            values.update(sequence_or_mapping(state, [f.q for f in n.flops], "state"))
    if key is not None:
        values.update(sequence_or_mapping(key, n.key_inputs, "key"))
    else:
        values.update({net: default for net in n.key_inputs})
    missing = [net for net in n.sources if net not in values]
    if missing:
        raise NetlistError(f"unassigned sources: {missing[:8]}{'...' if len(missing) > 8 else ''}")
    return values


def ternary_net_values(n: Netlist, sources: Mapping[str, object]) -> Dict[str, TernaryValue]:
    """All net values under Kleene semantics; sources must be fully assigned."""
    values = {net: TernaryValue.of(sources[net]) for net in n.sources}
    for gate in n.gates:
        values[gate.output] = kleene(gate.kind, [values[net] for net in gate.inputs])
    return values


def boolean_net_values(n: Netlist, sources: Mapping[str, int]) -> Dict[str, int]:
    values = {net: int(sources[net]) for net in n.sources}
    for gate in n.gates:
        values[gate.output] = boolean(gate.kind, [values[net] for net in gate.inputs])
    return values


def eval_ternary(n: Netlist, pi, state, key=None) -> Tuple[Dict[str, TernaryValue], Tuple[TernaryValue, ...]]:
    """
    Kleene evaluation. pi/key accept a name mapping or a sequence aligned with
    n.inputs / n.key_inputs; state is aligned with flop indices. Missing key → X.
    """
    values = ternary_net_values(n, _source_assignment(n, pi, state, key, _X))
    return ({net: values[net] for net in n.outputs},
            tuple(values[flop.d] for flop in n.flops))


def eval_bool(n: Netlist, pi, state, key=None) -> Tuple[Dict[str, int], Tuple[int, ...]]:
    sources = _source_assignment(n, pi, state, key, None)
    if any(v is None for v in sources.values()):
        raise NetlistError("Boolean evaluation needs every key input assigned")
    values = boolean_net_values(n, sources)
    return ({net: values[net] for net in n.outputs},
            tuple(values[flop.d] for flop in n.flops))


@dataclass
class PatternBlock:
    """
    Packed Boolean patterns: words[s, w] holds bits of source s for patterns
    64*w .. 64*w+63 (pattern p at bit p % 64).
    """
    names: Tuple[str, ...]
    words: np.ndarray
    count: int

    @property
    def width(self) -> int:
        return self.words.shape[1]

    @property
    def valid_mask(self) -> np.ndarray:
        mask = np.full(self.width, ALL_ONES, dtype=np.uint64)
        tail = self.count % WORD_BITS
        if tail and self.width:
            mask[-1] = np.uint64((1 << tail) - 1)
        return mask

    @classmethod
    def from_matrix(cls, names: Sequence[str], bits: np.ndarray) -> "PatternBlock":
        """bits has shape (patterns, len(names)) with 0/1 entries."""
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1, len(names))
        count = bits.shape[0]
        width = max(1, -(-count // WORD_BITS))
        padded = np.zeros((width * WORD_BITS, len(names)), dtype=np.uint64)
        padded[:count] = bits
        shifts = np.arange(WORD_BITS, dtype=np.uint64)
        stacked = padded.T.reshape(len(names), width, WORD_BITS) << shifts
        words = np.bitwise_or.reduce(stacked, axis=2) if len(names) else np.zeros((0, width), dtype=np.uint64)
        return cls(names=tuple(names), words=words.astype(np.uint64), count=count)

    @classmethod
    def from_rows(cls, names: Sequence[str], rows: Iterable[Mapping[str, int]]) -> "PatternBlock":
        rows = list(rows)
        bits = np.array([[int(row[name]) for name in names] for row in rows], dtype=np.uint8)
        return cls.from_matrix(names, bits.reshape(len(rows), len(names)))

    @classmethod
    def exhaustive(cls, names: Sequence[str]) -> "PatternBlock":
        if len(names) > 24:
            raise NetlistError(f"refusing exhaustive enumeration over {len(names)} sources")
        patterns = np.arange(1 << len(names), dtype=np.uint64)[:, None]
        bits = (patterns >> np.arange(len(names), dtype=np.uint64)) & np.uint64(1)
        return cls.from_matrix(names, bits)

    @classmethod
    def random(cls, names: Sequence[str], count: int, rng: np.random.Generator) -> "PatternBlock":
        return cls.from_matrix(names, rng.integers(0, 2, size=(count, len(names)), dtype=np.uint8))

    def to_matrix(self) -> np.ndarray:
        shifts = np.arange(WORD_BITS, dtype=np.uint64)
        bits = (self.words[:, :, None] >> shifts) & np.uint64(1)
        return bits.reshape(len(self.names), -1)[:, :self.count].T.astype(np.uint8)

    def rows(self) -> List[Dict[str, int]]:
        return [dict(zip(self.names, map(int, row))) for row in self.to_matrix()]

    def concat(self, other: "PatternBlock") -> "PatternBlock":
        if other.names != self.names:
            raise NetlistError("cannot concatenate pattern blocks over different sources")
        return PatternBlock.from_matrix(self.names, np.vstack([self.to_matrix(), other.to_matrix()]))

    def head(self, count: int) -> "PatternBlock":
        return PatternBlock.from_matrix(self.names, self.to_matrix()[:count])


def unpack(words: np.ndarray, count: int) -> np.ndarray:
    shifts = np.arange(WORD_BITS, dtype=np.uint64)
    return ((words[:, None] >> shifts) & np.uint64(1)).reshape(-1)[:count].astype(np.uint8)


def _packed_gate(kind: GateKind, values: List[np.ndarray]) -> np.ndarray:
    if kind in (GateKind.AND, GateKind.NAND):
        result = reduce(np.bitwise_and, values)
    elif kind in (GateKind.OR, GateKind.NOR):
        result = reduce(np.bitwise_or, values)
    elif kind in (GateKind.XOR, GateKind.XNOR):
        result = reduce(np.bitwise_xor, values)
    else:
        result = values[0]
    return np.invert(result) if kind.inverting else result.copy()


def simulate_packed(
    n: Netlist,
    block: PatternBlock,
    stuck_at: Optional[Tuple[str, int]] = None,
    constants: Optional[Mapping[str, int]] = None,
    base: Optional[Mapping[str, np.ndarray]] = None,
    only_gates: Optional[Sequence[Gate]] = None,
) -> Dict[str, np.ndarray]:
    """
    Bit-parallel evaluation. Sources come from the block or from constants.
    With base and only_gates, only the listed gates are re-evaluated on top
    of base values (fan-out cone re-simulation for a fault).
    """
    constants = constants or {}
    stuck_net, stuck_value = stuck_at if stuck_at is not None else (None, 0)
    forced = np.full(block.width, ALL_ONES if stuck_value else np.uint64(0), dtype=np.uint64)

    if base is not None:
        values = dict(base)
    else:
        values = {}
        rows = {name: i for i, name in enumerate(block.names)}
        for net in n.sources:
            if net in rows:
                values[net] = block.words[rows[net]]
            elif net in constants:
                values[net] = np.full(block.width, ALL_ONES if constants[net] else np.uint64(0), dtype=np.uint64)
            else:
                raise NetlistError(f"source {net!r} not assigned by pattern block")

    if stuck_net is not None:
        values[stuck_net] = forced

    for gate in (only_gates if only_gates is not None else n.gates):
        if gate.output != stuck_net:
            values[gate.output] = _packed_gate(gate.kind, [values[net] for net in gate.inputs])
    return values


def random_vectors(names: Sequence[str], count: int, seed: int) -> List[Dict[str, int]]:
    rng = np.random.default_rng(seed)
    return PatternBlock.random(names, count, rng).rows()


