"""
Gate-level netlist model.

A Netlist is immutable. Sources are primary inputs, designated key inputs and
flop Q outputs; every other net is driven by exactly one gate. Gates are kept
in a topological order of the combinational graph, so a single forward pass
evaluates the circuit.
"""

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from src.shift_leak_lab.utils.exceptions import NetlistError

KEY_INPUT_PREFIX = "keyinput"
KEY_INPUT_PATTERN = re.compile(rf"^{KEY_INPUT_PREFIX}(\d+)$")


class GateKind(str, Enum):
    """Closed gate vocabulary of the bench dialect."""
    AND = "AND"
    NAND = "NAND"
    OR = "OR"
    NOR = "NOR"
    XOR = "XOR"
    XNOR = "XNOR"
    NOT = "NOT"
    BUF = "BUF"

    @classmethod
    def from_token(cls, token: str) -> "GateKind":
        name = token.upper()
        if name == "BUFF":
            name = "BUF"
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown gate type {token!r}") from None

    @property
    def arity(self) -> Tuple[int, Optional[int]]:
        """(min, max) number of inputs; max None means n-ary."""
        if self in (GateKind.NOT, GateKind.BUF):
            return 1, 1
        if self in (GateKind.XOR, GateKind.XNOR):
            return 2, 2
        return 1, None

    @property
    def inverting(self) -> bool:
        return self in (GateKind.NAND, GateKind.NOR, GateKind.XNOR, GateKind.NOT)


@dataclass(frozen=True)
class Gate:
    output: str
    kind: GateKind
    inputs: Tuple[str, ...]


@dataclass(frozen=True)
class Flop:
    index: int
    q: str
    d: str


def key_index_of(net: str) -> Optional[int]:
    """Key index encoded in a `keyinput<i>` net name, else None."""
    match = KEY_INPUT_PATTERN.match(net)
    return int(match.group(1)) if match else None


def key_input_name(index: int) -> str:
    return f"{KEY_INPUT_PREFIX}{index}"


@dataclass(frozen=True)
class Netlist:
    name: str
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]
    gates: Tuple[Gate, ...]
    flops: Tuple[Flop, ...] = ()
    key_inputs: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "flops", tuple(self.flops))
        object.__setattr__(self, "key_inputs", tuple(self.key_inputs))
        object.__setattr__(self, "gates", tuple(self.gates))

        drivers = self.drivers
        referenced = [net for gate in self.gates for net in gate.inputs]
        referenced += [flop.d for flop in self.flops] + list(self.outputs)
        for net in referenced:
            if net not in drivers:
                raise NetlistError(f"net {net!r} is referenced but never driven")

        graph = self.graph
        if not nx.is_directed_acyclic_graph(graph):
            cycle = nx.find_cycle(graph)
            raise NetlistError(f"combinational cycle through {[edge[0] for edge in cycle]}")

        declared = {gate.output: i for i, gate in enumerate(self.gates)}
        by_output = {gate.output: gate for gate in self.gates}
        order = nx.lexicographical_topological_sort(graph, key=lambda net: (declared.get(net, -1), net))
        object.__setattr__(self, "gates", tuple(by_output[net] for net in order if net in by_output))

    @cached_property
    def drivers(self) -> Dict[str, str]:
        """Net → driver role ('pi', 'key', 'flop' or 'gate')."""
        drivers: Dict[str, str] = {}

        def claim(net: str, role: str):
            if net in drivers:
                raise NetlistError(f"net {net!r} has more than one driver ({drivers[net]}, {role})")
            drivers[net] = role

        for net in self.inputs:
            claim(net, "pi")
        for net in self.key_inputs:
            claim(net, "key")
        for position, flop in enumerate(self.flops):
            if flop.index != position:
                raise NetlistError(f"flop indices must be dense 0..F-1, found {flop.index} at {position}")
            claim(flop.q, "flop")
        for gate in self.gates:
            low, high = gate.kind.arity
            if len(gate.inputs) < low or (high is not None and len(gate.inputs) > high):
                raise NetlistError(f"gate {gate.output!r}: {gate.kind.value} with {len(gate.inputs)} inputs")
            claim(gate.output, "gate")
        return drivers

    @cached_property
    def graph(self) -> nx.DiGraph:
        """Combinational graph; flop D→Q is not an edge."""
        graph = nx.DiGraph()
        graph.add_nodes_from(self.drivers)
        for gate in self.gates:
            for net in gate.inputs:
                graph.add_edge(net, gate.output)
        return graph

    @cached_property
    def gate_map(self) -> Dict[str, Gate]:
        return {gate.output: gate for gate in self.gates}

    @cached_property
    def flop_by_q(self) -> Dict[str, Flop]:
        return {flop.q: flop for flop in self.flops}

    @cached_property
    def sources(self) -> Tuple[str, ...]:
        """Nets without a gate driver: PIs, key inputs, flop Qs."""
        return self.inputs + self.key_inputs + tuple(flop.q for flop in self.flops)

    @cached_property
    def nets(self) -> Tuple[str, ...]:
        return self.sources + tuple(gate.output for gate in self.gates)

    @cached_property
    def internal_nets(self) -> Tuple[str, ...]:
        """Gate-driven nets, in topological order."""
        return tuple(gate.output for gate in self.gates)

    @cached_property
    def fanout(self) -> Dict[str, Tuple[str, ...]]:
        """Gate outputs fed directly by each net."""
        result: Dict[str, List[str]] = {net: [] for net in self.drivers}
        for gate in self.gates:
            for net in gate.inputs:
                result[net].append(gate.output)
        return {net: tuple(outs) for net, outs in result.items()}

    @cached_property
    def topo_index(self) -> Dict[str, int]:
        return {gate.output: i for i, gate in enumerate(self.gates)}

    @property
    def num_flops(self) -> int:
        return len(self.flops)

    def driver_of(self, net: str) -> str:
        try:
            return self.drivers[net]
        except KeyError:
            raise NetlistError(f"unknown net {net!r}") from None

    def key_index_map(self) -> Dict[int, str]:
        """Key index → key input net, for nets following the keyinput<i> convention."""
        result = {}
        for net in self.key_inputs:
            index = key_index_of(net)
            if index is None:
                raise NetlistError(f"key input {net!r} does not follow the {KEY_INPUT_PREFIX}<i> convention")
            result[index] = net
        return result

    def gates_in(self, members: Iterable[str]) -> List[Gate]:
        """Gates whose output is in members, in topological order."""
        wanted = set(members)
        return [gate for gate in self.gates if gate.output in wanted]

    def replace(self, **changes) -> "Netlist":
        params = dict(name=self.name, inputs=self.inputs, outputs=self.outputs,
                      gates=self.gates, flops=self.flops, key_inputs=self.key_inputs)
        params.update(changes)
        return Netlist(**params)


@dataclass(frozen=True)
class Cone:
    """Combinational fan-in cone of one primary output."""
    po: str
    pis: FrozenSet[str]
    flops: FrozenSet[int]
    gates: FrozenSet[str]
    keys: FrozenSet[str] = frozenset()

    @property
    def size(self) -> int:
        return len(self.pis) + len(self.flops) + len(self.keys)


def extract_fanin_cone(n: Netlist, po: str) -> Cone:
    """
    Backward reachability from a PO through gates, stopping at PIs, key inputs
    and flop Q outputs (flop D→Q is not a combinational edge).
    """
    if po not in n.outputs:
        raise NetlistError(f"{po!r} is not a declared primary output of {n.name}")
    members = nx.ancestors(n.graph, po) | {po}
    pis, keys, flops, gates = set(), set(), set(), set()
    for net in members:
        role = n.drivers[net]
        if role == "pi":
            pis.add(net)
        elif role == "key":
            keys.add(net)
        elif role == "flop":
            flops.add(n.flop_by_q[net].index)
        else:
            gates.add(net)
    return Cone(po=po, pis=frozenset(pis), flops=frozenset(flops),
                gates=frozenset(gates), keys=frozenset(keys))


def fanout_cone(n: Netlist, net: str) -> FrozenSet[str]:
    """Nets combinationally downstream of net (excluding net itself)."""
    if net not in n.drivers:
        raise NetlistError(f"unknown net {net!r}")
    return frozenset(nx.descendants(n.graph, net))


def cone_sources(n: Netlist, cone: Cone) -> List[str]:
    """Source nets of a cone in netlist source order."""
    flop_qs = {n.flops[i].q for i in cone.flops}
    members = set(cone.pis) | set(cone.keys) | flop_qs
    return [net for net in n.sources if net in members]


def sequence_or_mapping(values, names: Sequence[str], label: str) -> Dict[str, object]:
    """Normalize a positional sequence or a name mapping into a name → value dict."""
    if values is None:
        return {}
    if isinstance(values, dict) or hasattr(values, "keys"):
        return {name: values[name] for name in names if name in values}
    values = list(values)
    if len(values) != len(names):
        raise NetlistError(f"{label}: expected {len(names)} values, got {len(values)}")
    return dict(zip(names, values))
