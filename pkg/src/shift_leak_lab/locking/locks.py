"""
Key-gate insertion: random logic locking and an interference-driven
(SLL-style) placement heuristic.

A key gate cuts a host net h: the original driver is renamed to h_lk<i> and
h = XOR/XNOR(h_lk<i>, keyinput<i>), so fan-out of h is untouched. XOR is
transparent under key bit 0, XNOR under key bit 1.
"""

import random
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from src.shift_leak_lab.core.netlist import Gate, GateKind, Netlist, fanout_cone, key_index_of, key_input_name
from src.shift_leak_lab.utils.exceptions import KeyLengthError, LockingError
from src.shift_leak_lab.utils.helpers import bits_to_text, text_to_bits
from src.shift_leak_lab.utils.logger import get_locking_logger

logger = get_locking_logger()

SLL_LABEL = "sll-heuristic"


class KeyGatePolarity(str, Enum):
    XOR = "XOR"
    XNOR = "XNOR"

    @property
    def transparent_bit(self) -> int:
        return 0 if self is KeyGatePolarity.XOR else 1

    @property
    def gate_kind(self) -> GateKind:
        return GateKind(self.value)


@dataclass(frozen=True)
class Key:
    bits: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        if not self.bits:
            raise LockingError("a key needs at least one bit")
        if any(b not in (0, 1) for b in self.bits):
            raise LockingError("key bits must be 0 or 1")

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, index: int) -> int:
        return self.bits[index]

    def __iter__(self):
        return iter(self.bits)

    def flipped(self, index: int) -> "Key":
        bits = list(self.bits)
        bits[index] ^= 1
        return Key(tuple(bits))

    @classmethod
    def from_text(cls, text: str) -> "Key":
        """One bit per line; blank lines and '#' comments ignored."""
        bits = []
        for number, line in enumerate(text.splitlines(), start=1):
            try:
                line_bits = text_to_bits(line.split("#")[0])
            except ValueError as e:
                raise LockingError(f"malformed key text on line {number}: {e}")
            if len(line_bits) > 1:
                raise LockingError(f"malformed key text on line {number}: expected one bit, got {len(line_bits)}")
            bits.extend(line_bits)
        return cls(tuple(bits))

    def to_text(self) -> str:
        return "\n".join(bits_to_text([b]) for b in self.bits) + "\n"

    @classmethod
    def read(cls, path: Union[str, Path]) -> "Key":
        return cls.from_text(Path(path).read_text())

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_text())
        return path


@dataclass(frozen=True)
class KeyGateRecord:
    key_index: int
    host_net: str
    polarity: KeyGatePolarity

    def to_dict(self) -> Dict[str, object]:
        return {"index": self.key_index, "host": self.host_net, "polarity": self.polarity.value}


@dataclass(frozen=True)
class LockedDesign:
    netlist: Netlist
    records: Tuple[KeyGateRecord, ...]
    hidden_key: Optional[Key] = field(default=None, repr=False, compare=False)
    scheme: str = "rll"
    seed: Optional[int] = None
    interference: Optional[int] = None

    def __post_init__(self):
        indices = sorted(record.key_index for record in self.records)
        if indices != list(range(len(self.records))):
            raise LockingError(f"key indices must be dense 0..K-1, got {indices}")
        if self.hidden_key is not None and len(self.hidden_key) != len(self.records):
            raise KeyLengthError(len(self.records), len(self.hidden_key))

    @property
    def key_bits(self) -> int:
        return len(self.records)

    def record(self, key_index: int) -> KeyGateRecord:
        for record in self.records:
            if record.key_index == key_index:
                return record
        raise LockingError(f"no key gate for key index {key_index}")

    def with_key(self, key: Optional[Key]) -> "LockedDesign":
        return LockedDesign(self.netlist, self.records, key, self.scheme, self.seed, self.interference)

    @classmethod
    def from_netlist(cls, locked: Netlist, hidden_key: Optional[Key] = None,
                     scheme: str = "unknown") -> "LockedDesign":
        """Rebuild key-gate records from the keyinput<i> fan-out of a locked netlist."""
        records = []
        for net in locked.key_inputs:
            index = key_index_of(net)
            sinks = locked.fanout[net]
            if index is None or len(sinks) != 1:
                raise LockingError(f"key input {net!r} must drive exactly one key gate")
            gate = locked.gate_map[sinks[0]]
            if gate.kind not in (GateKind.XOR, GateKind.XNOR) or len(gate.inputs) != 2:
                raise LockingError(f"key input {net!r} drives {gate.kind.value} gate {gate.output!r}")
            records.append(KeyGateRecord(index, gate.output, KeyGatePolarity(gate.kind.value)))
        records.sort(key=lambda r: r.key_index)
        return cls(locked, tuple(records), hidden_key, scheme)

    def to_report_dict(self) -> Dict[str, object]:
        payload: Dict[str, object] = {
            "design": self.netlist.name,
            "scheme": self.scheme,
            "key_bits": self.key_bits,
            "seed": self.seed,
        }
        if self.interference is not None:
            payload["interference_score"] = self.interference
        payload["key_gates"] = [record.to_dict() for record in self.records]
        return payload


def _candidates(n: Netlist, K: int) -> List[str]:
    if n.key_inputs:
        raise LockingError(f"{n.name} already has {len(n.key_inputs)} key inputs")
    if K < 1:
        raise LockingError(f"key length must be >= 1, got {K}")
    candidates = list(n.internal_nets)
    if K > len(candidates):
        raise LockingError(
            f"cannot insert {K} key gates: {n.name} has only {len(candidates)} internal nets",
            {"requested": K, "available": len(candidates)},
        )
    return candidates


def _insert(n: Netlist, hosts: Sequence[str], polarities: Sequence[KeyGatePolarity]) -> Tuple[Netlist, Tuple[KeyGateRecord, ...]]:
    taken = set(n.drivers)
    by_host = {host: i for i, host in enumerate(hosts)}
    gates: List[Gate] = []
    for gate in n.gates:
        index = by_host.get(gate.output)
        if index is None:
            gates.append(gate)
            continue
        renamed = f"{gate.output}_lk{index}"
        while renamed in taken:
            renamed += "_"
        taken.add(renamed)
        gates.append(Gate(output=renamed, kind=gate.kind, inputs=gate.inputs))
        gates.append(Gate(output=gate.output, kind=polarities[index].gate_kind,
                          inputs=(renamed, key_input_name(index))))
    locked = n.replace(gates=tuple(gates), key_inputs=tuple(key_input_name(i) for i in range(len(hosts))))
    records = tuple(KeyGateRecord(i, host, polarities[i]) for i, host in enumerate(hosts))
    return locked, records


def _draw_polarities(rng: random.Random, K: int) -> List[KeyGatePolarity]:
    return [KeyGatePolarity.XNOR if rng.random() < 0.5 else KeyGatePolarity.XOR for _ in range(K)]


def _hidden_key(polarities: Sequence[KeyGatePolarity]) -> Key:
    return Key(tuple(p.transparent_bit for p in polarities))


def lock_rll(n: Netlist, K: int, seed: int) -> LockedDesign:
    """K key gates on uniformly drawn distinct internal nets."""
    candidates = _candidates(n, K)
    rng = random.Random(seed)
    hosts = rng.sample(candidates, K)
    polarities = _draw_polarities(rng, K)
    locked, records = _insert(n, hosts, polarities)
    logger.info("RLL locked %s with %d key gates (seed=%d)", n.name, K, seed)
    return LockedDesign(locked, records, _hidden_key(polarities), "rll", seed)


def _pair_score(a: str, b: str, cones: Dict[str, FrozenSet[str]]) -> int:
    score = len(cones[a] & cones[b])
    score += int(a in cones[b]) + int(b in cones[a])
    return score


def interference_score(n: Netlist, hosts: Iterable[str]) -> int:
    """
    Sum over host pairs of shared fan-out nets, plus one for each host that
    lies on the other's propagation path.
    """
    hosts = list(hosts)
    cones = {host: fanout_cone(n, host) for host in hosts}
    return sum(_pair_score(a, b, cones) for a, b in combinations(hosts, 2))


def lock_sll_heuristic(n: Netlist, K: int, seed: int, pool_size: int = 256) -> LockedDesign:
    """
    Greedy interference maximisation. The seed-matched random draw is kept as
    a fallback so the result never scores below it.
    """
    candidates = _candidates(n, K)
    rng = random.Random(seed)
    baseline = rng.sample(candidates, K)

    if K == 1:
        hosts = baseline
    else:
        pool_size = max(pool_size, 2 * K)
        if len(candidates) > pool_size:
            pool = set(rng.sample(candidates, pool_size)) | set(baseline)
            pool = [net for net in candidates if net in pool]
        else:
            pool = list(candidates)
        rng.shuffle(pool)
        cones = {net: fanout_cone(n, net) for net in pool}

        best_pair, best = (pool[0], pool[1]), -1
        for i, a in enumerate(pool):
            for b in pool[i + 1:]:
                score = _pair_score(a, b, cones)
                if score > best:
                    best_pair, best = (a, b), score

        chosen = list(best_pair)
        totals = {net: _pair_score(net, chosen[0], cones) + _pair_score(net, chosen[1], cones)
                  for net in pool if net not in chosen}
        while len(chosen) < K:
            pick = max(totals, key=lambda net: totals[net])
            chosen.append(pick)
            del totals[pick]
            for net in totals:
                totals[net] += _pair_score(net, pick, cones)

        hosts = chosen if interference_score(n, chosen) >= interference_score(n, baseline) else baseline

    polarities = _draw_polarities(rng, K)
    locked, records = _insert(n, hosts, polarities)
    score = interference_score(n, hosts)
    logger.info("%s locked %s with %d key gates (seed=%d, interference=%d)", SLL_LABEL, n.name, K, seed, score)
    return LockedDesign(locked, records, _hidden_key(polarities), SLL_LABEL, seed, score)


def lock(n: Netlist, scheme: str, K: int, seed: int, pool_size: int = 256) -> LockedDesign:
    if scheme == "rll":
        return lock_rll(n, K, seed)
    if scheme in ("sll", SLL_LABEL):
        return lock_sll_heuristic(n, K, seed, pool_size)
    raise LockingError(f"unknown locking scheme {scheme!r}")


def apply_key(d: LockedDesign, k: Key) -> Netlist:
    """Substitute key constants and simplify each key gate to BUF or NOT."""
    if len(k) != d.key_bits:
        raise KeyLengthError(d.key_bits, len(k))
    key_nets = set(d.netlist.key_inputs)
    by_host = {record.host_net: record for record in d.records}
    gates = []
    for gate in d.netlist.gates:
        record = by_host.get(gate.output)
        if record is None:
            if key_nets.intersection(gate.inputs):
                raise LockingError(f"key input feeds non-key gate {gate.output!r}")
            gates.append(gate)
            continue
        data = [net for net in gate.inputs if net not in key_nets]
        if len(data) != 1:
            raise LockingError(f"key gate {gate.output!r} is not a two-input key gate")
        kind = GateKind.BUF if k[record.key_index] == record.polarity.transparent_bit else GateKind.NOT
        gates.append(Gate(output=gate.output, kind=kind, inputs=(data[0],)))
    return d.netlist.replace(gates=tuple(gates), key_inputs=())


def strip_key_gates(d: LockedDesign) -> Netlist:
    """The pre-locking netlist: key gates removed, renamed host drivers restored."""
    key_nets = set(d.netlist.key_inputs)
    hosts = {record.host_net for record in d.records}
    restore: Dict[str, str] = {}
    for gate in d.netlist.gates:
        if gate.output in hosts:
            data = [net for net in gate.inputs if net not in key_nets]
            restore[data[0]] = gate.output
    gates = [Gate(output=restore.get(gate.output, gate.output), kind=gate.kind, inputs=gate.inputs)
             for gate in d.netlist.gates if gate.output not in hosts]
    return d.netlist.replace(gates=tuple(gates), key_inputs=())
