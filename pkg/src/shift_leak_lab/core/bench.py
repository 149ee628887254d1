"""
ISCAS bench codec.

Accepted dialect: INPUT(x), OUTPUT(y), q = DFF(d) and y = GATE(a, b, ...)
statements with '#' comments. Gate names are case-insensitive and BUFF is an
alias of BUF. Statements are self-delimiting, so several may share a line.
Inputs named keyinput<i> become designated key inputs.
"""

import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import networkx as nx

from src.shift_leak_lab.core.netlist import Flop, Gate, GateKind, Netlist, key_index_of
from src.shift_leak_lab.utils.exceptions import BenchParseError, NetlistError
from src.shift_leak_lab.utils.logger import get_netlist_logger

logger = get_netlist_logger()

_NAME = r"[^\s()=,#]+"
_STATEMENT = re.compile(
    rf"\s*(?:(?P<decl>INPUT|OUTPUT)\s*\(\s*(?P<decl_net>{_NAME})\s*\)"
    rf"|(?P<out>{_NAME})\s*=\s*(?P<kind>[A-Za-z_]+)\s*\((?P<args>[^()]*)\))",
    re.IGNORECASE,
)
_COMMENT = re.compile(r"#[^\n]*")


class _Locator:
    """Offset → (line, column), both 1-based."""

    def __init__(self, text: str):
        self.starts = [0] + [m.end() for m in re.finditer(r"\n", text)]

    def __call__(self, offset: int) -> Tuple[int, int]:
        lo, hi = 0, len(self.starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.starts[mid] <= offset:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1, offset - self.starts[lo] + 1


def _split_args(args: str, base: int) -> List[Tuple[str, int]]:
    result = []
    for match in re.finditer(r"[^,]+", args):
        token = match.group(0)
        stripped = token.strip()
        if stripped:
            result.append((stripped, base + match.start() + token.index(stripped)))
    return result


def parse_bench(text: str, name: str = "netlist") -> Netlist:
    """Parse bench text into a Netlist, raising BenchParseError with a location."""
    where = _Locator(text)
    # Comments are blanked rather than removed to keep offsets intact.
    body = _COMMENT.sub(lambda m: " " * len(m.group(0)), text)

    inputs: List[str] = []
    outputs: List[str] = []
    gates: List[Gate] = []
    flops: List[Tuple[str, str]] = []
    driven_at: Dict[str, int] = {}
    references: List[Tuple[str, int]] = []
    gate_at: Dict[str, int] = {}

    def fail(message: str, offset: int):
        line, column = where(offset)
        raise BenchParseError(message, line, column)

    def drive(net: str, offset: int):
        if net in driven_at:
            line, _ = where(driven_at[net])
            fail(f"duplicate driver for net {net!r} (first driven on line {line})", offset)
        driven_at[net] = offset

    pos = 0
    while True:
        while pos < len(body) and body[pos].isspace():
            pos += 1
        if pos >= len(body):
            break
        match = _STATEMENT.match(body, pos)
        if not match:
            fail(f"unrecognized statement {body[pos:pos + 20].split(chr(10))[0]!r}", pos)

        if match.group("decl"):
            net = match.group("decl_net")
            offset = match.start("decl_net")
            if match.group("decl").upper() == "INPUT":
                drive(net, offset)
                inputs.append(net)
            elif net not in outputs:
                outputs.append(net)
                references.append((net, offset))
        else:
            out = match.group("out")
            out_offset = match.start("out")
            args = _split_args(match.group("args"), match.start("args"))
            token = match.group("kind")
            if token.upper() == "DFF":
                if len(args) != 1:
                    fail(f"DFF {out!r} takes exactly one input, got {len(args)}", out_offset)
                drive(out, out_offset)
                flops.append((out, args[0][0]))
            else:
                try:
                    kind = GateKind.from_token(token)
                except ValueError as e:
                    fail(str(e), match.start("kind"))
                low, high = kind.arity
                if len(args) < low or (high is not None and len(args) > high):
                    fail(f"{kind.value} gate {out!r} cannot take {len(args)} inputs", match.start("kind"))
                drive(out, out_offset)
                gates.append(Gate(output=out, kind=kind, inputs=tuple(net for net, _ in args)))
                gate_at[out] = out_offset
            references.extend(args)
        pos = match.end()

    for net, offset in references:
        if net not in driven_at:
            fail(f"undefined net {net!r}", offset)

    graph = nx.DiGraph()
    for gate in gates:
        for net in gate.inputs:
            graph.add_edge(net, gate.output)
    try:
        cycle = nx.find_cycle(graph)
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle:
        nets = [edge[1] for edge in cycle]
        first = min(nets, key=lambda net: gate_at[net])
        fail(f"combinational cycle through {' -> '.join(nets)}", gate_at[first])

    primary = [net for net in inputs if key_index_of(net) is None]
    keys = sorted((net for net in inputs if key_index_of(net) is not None), key=key_index_of)
    try:
        netlist = Netlist(
            name=name,
            inputs=tuple(primary),
            outputs=tuple(outputs),
            gates=tuple(gates),
            flops=tuple(Flop(index=i, q=q, d=d) for i, (q, d) in enumerate(flops)),
            key_inputs=tuple(keys),
        )
    except NetlistError as e:
        raise BenchParseError(e.message, 1, 1) from e

    logger.debug(
        "Parsed %s: %d PIs, %d key inputs, %d POs, %d gates, %d flops",
        name, len(netlist.inputs), len(netlist.key_inputs), len(netlist.outputs),
        len(netlist.gates), len(netlist.flops),
    )
    return netlist


def serialize_bench(n: Netlist) -> str:
    """Bench text; gates in topological order, key inputs after PIs."""
    lines = [
        f"# {n.name}",
        f"# {len(n.inputs)} inputs",
        f"# {len(n.key_inputs)} key inputs",
        f"# {len(n.outputs)} outputs",
        f"# {len(n.flops)} D-type flipflops",
        f"# {len(n.gates)} gates",
        "",
    ]
    lines += [f"INPUT({net})" for net in n.inputs + n.key_inputs]
    lines.append("")
    lines += [f"OUTPUT({net})" for net in n.outputs]
    lines.append("")
    lines += [f"{flop.q} = DFF({flop.d})" for flop in n.flops]
    if n.flops:
        lines.append("")
    lines += [f"{gate.output} = {gate.kind.value}({', '.join(gate.inputs)})" for gate in n.gates]
    return "\n".join(lines) + "\n"


def read_bench(path: Union[str, Path], name: Optional[str] = None) -> Netlist:
    path = Path(path)
    return parse_bench(path.read_text(), name=name or path.name.split(".")[0])


def write_bench(path: Union[str, Path], n: Netlist) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_bench(n))
    logger.info("Wrote bench %s (%d gates)", path, len(n.gates))
    return path
