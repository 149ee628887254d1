"""
Bench codec: dialect, error locations and round trips through the netlist model.
"""

import pytest

from src.shift_leak_lab.core.bench import parse_bench, read_bench, serialize_bench, write_bench
from src.shift_leak_lab.core.netlist import GateKind, Netlist
from src.shift_leak_lab.utils.exceptions import BenchParseError, NetlistError


def test_minimal_inverter():
    n = parse_bench("INPUT(a) OUTPUT(y) y=NOT(a)")
    assert n.inputs == ("a",)
    assert n.outputs == ("y",)
    assert len(n.gates) == 1
    assert n.gates[0].kind is GateKind.NOT


def test_single_flop():
    n = parse_bench("INPUT(a) OUTPUT(q) q=DFF(a)")
    assert n.num_flops == 1
    assert n.flops[0].q == "q" and n.flops[0].d == "a"
    assert n.gates == ()


def test_undefined_net_reports_its_line():
    text = "INPUT(b)\nOUTPUT(y)\ny=AND(a,b)\n"
    with pytest.raises(BenchParseError) as info:
        parse_bench(text)
    assert info.value.line == 3
    assert "undefined net 'a'" in info.value.reason


def test_duplicate_driver_rejected():
    with pytest.raises(BenchParseError, match="duplicate driver"):
        parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\ny = BUF(a)\n")


def test_combinational_cycle_rejected():
    text = "INPUT(a)\nOUTPUT(x)\nx = AND(a, z)\nz = NOT(x)\n"
    with pytest.raises(BenchParseError, match="cycle"):
        parse_bench(text)


def test_loop_through_flop_is_legal():
    n = parse_bench("INPUT(a)\nOUTPUT(y)\nq = DFF(y)\ny = XOR(a, q)\n")
    assert n.num_flops == 1


def test_buff_alias_and_case_insensitive_gates():
    n = parse_bench("INPUT(a)\nOUTPUT(y)\nt = buff(a)\ny = nand(t, a)\n")
    assert [g.kind for g in n.gates] == [GateKind.BUF, GateKind.NAND]


def test_unknown_gate_type():
    with pytest.raises(BenchParseError, match="unknown gate type"):
        parse_bench("INPUT(a)\nOUTPUT(y)\ny = MUX(a, a)\n")


def test_key_inputs_are_separated_and_sorted():
    text = "INPUT(keyinput1)\nINPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\nt = XOR(a, keyinput0)\ny = XNOR(t, keyinput1)\n"
    n = parse_bench(text)
    assert n.inputs == ("a",)
    assert n.key_inputs == ("keyinput0", "keyinput1")


def test_comments_are_ignored():
    n = parse_bench("# header\nINPUT(a) # trailing\nOUTPUT(y)\ny = NOT(a)\n")
    assert n.inputs == ("a",)


def test_iscas_files_parse(bench_dir):
    c17 = read_bench(bench_dir / "c17.bench")
    assert (len(c17.inputs), len(c17.outputs), len(c17.gates)) == (5, 2, 6)
    s27 = read_bench(bench_dir / "s27.bench")
    assert (len(s27.inputs), s27.num_flops, len(s27.gates)) == (4, 3, 10)
    assert s27.name == "s27"


def test_serialize_then_parse_preserves_structure(bench_dir, tmp_path):
    s27 = read_bench(bench_dir / "s27.bench")
    path = write_bench(tmp_path / "s27_copy.bench", s27)
    again = read_bench(path, name="s27")
    assert again.inputs == s27.inputs
    assert again.outputs == s27.outputs
    assert again.flops == s27.flops
    assert set(again.gates) == set(s27.gates)
    assert serialize_bench(again) == serialize_bench(s27)


def test_netlist_rejects_undriven_reference():
    with pytest.raises(NetlistError, match="never driven"):
        Netlist(name="bad", inputs=("a",), outputs=("y",), gates=())
