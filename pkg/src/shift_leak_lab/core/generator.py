"""
Seeded synthetic benchmark generators.

random_netlist builds an unstructured sequential circuit. desk_netlist adds an
observation stage per flop (obs<i> = NAND(q_i, OR(pi, core net))) so every PO
cone holds at least one flop and every flop can reach a PO.
"""

import random
from typing import List, Tuple

from src.shift_leak_lab.core.netlist import Flop, Gate, GateKind, Netlist

_KINDS = [GateKind.AND, GateKind.NAND, GateKind.OR, GateKind.NOR,
          GateKind.XOR, GateKind.XNOR, GateKind.NOT, GateKind.BUF]
_WEIGHTS = [4, 4, 4, 4, 2, 2, 2, 1]


def _grow_core(rng: random.Random, pool: List[str], count: int, prefix: str) -> List[Gate]:
    gates = []
    for i in range(count):
        kind = rng.choices(_KINDS, weights=_WEIGHTS)[0]
        low, high = kind.arity
        fanin = 1 if high == 1 else (2 if high == 2 else rng.choice((2, 2, 3)))
        # favour recent nets so the core gets some depth
        window = pool[-max(8, len(pool) // 2):] if rng.random() < 0.7 else pool
        inputs = rng.sample(window, min(fanin, len(window)))
        if len(inputs) < low:
            inputs = inputs * low
        gate = Gate(output=f"{prefix}{i}", kind=kind, inputs=tuple(inputs))
        gates.append(gate)
        pool.append(gate.output)
    return gates


def random_netlist(n_inputs: int, n_outputs: int, n_flops: int, n_gates: int,
                   seed: int, name: str = "random") -> Netlist:
    rng = random.Random(seed)
    inputs = [f"in{i}" for i in range(n_inputs)]
    qs = [f"q{i}" for i in range(n_flops)]
    pool = inputs + qs
    gates = _grow_core(rng, pool, n_gates, "g")
    outputs = [gate.output for gate in rng.sample(gates, min(n_outputs, len(gates)))]
    late = [gate.output for gate in gates[len(gates) // 2:]] or [gate.output for gate in gates]
    flops = [Flop(index=i, q=q, d=rng.choice(late)) for i, q in enumerate(qs)]
    return Netlist(name=name, inputs=tuple(inputs), outputs=tuple(outputs),
                   gates=tuple(gates), flops=tuple(flops))


def desk_netlist(seed: int, n_inputs: int = 8, n_flops: int = 32, n_core_gates: int = 160,
                 name: str = "desk") -> Netlist:
    rng = random.Random(seed)
    inputs = [f"in{i}" for i in range(n_inputs)]
    qs = [f"q{i}" for i in range(n_flops)]
    pool = inputs + qs
    core = _grow_core(rng, pool, n_core_gates, "g")
    core_nets = [gate.output for gate in core]
    late = core_nets[len(core_nets) // 2:] or core_nets

    stage: List[Gate] = []
    outputs: List[str] = []
    for i, q in enumerate(qs):
        sel = Gate(output=f"sel{i}", kind=GateKind.OR,
                   inputs=(inputs[i % n_inputs], rng.choice(core_nets)))
        obs = Gate(output=f"obs{i}", kind=GateKind.NAND, inputs=(q, sel.output))
        stage += [sel, obs]
        outputs.append(obs.output)
    flops = [Flop(index=i, q=q, d=rng.choice(late)) for i, q in enumerate(qs)]
    return Netlist(name=f"{name}{seed}", inputs=tuple(inputs), outputs=tuple(outputs),
                   gates=tuple(core + stage), flops=tuple(flops))


def netlist_stats(n: Netlist) -> Tuple[int, int, int, int]:
    """(PIs, POs, flops, gates)"""
    return len(n.inputs), len(n.outputs), len(n.flops), len(n.gates)
