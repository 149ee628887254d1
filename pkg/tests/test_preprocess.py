"""
DIP-loop pre-processing against brute-force key enumeration.
"""

import itertools

import pytest

from src.shift_leak_lab.attacks.preprocess import iteration_cap, preprocess, run_preprocess
from src.shift_leak_lab.attacks.protocol import AttackCapabilities
from src.shift_leak_lab.chip.layout import ScanChainLayout, stitch
from src.shift_leak_lab.chip.session import boot
from src.shift_leak_lab.core.bench import parse_bench, read_bench
from src.shift_leak_lab.core.generator import random_netlist
from src.shift_leak_lab.core.netlist import cone_sources, extract_fanin_cone, key_index_of, key_input_name
from src.shift_leak_lab.core.simulator import boolean_net_values
from src.shift_leak_lab.locking.locks import Key, LockedDesign, lock_rll


def _brute_force_unique_bits(locked, po):
    """Bits shared by every key assignment that matches the planted key on all cone inputs."""
    n = locked.netlist
    cone = extract_fanin_cone(n, po)
    key_nets = sorted(cone.keys, key=key_index_of)
    inputs = [net for net in cone_sources(n, cone) if net not in key_nets]
    planted = {net: locked.hidden_key[key_index_of(net)] for net in key_nets}

    def po_value(assignment, keys):
        sources = {net: 0 for net in n.sources}
        sources.update(assignment)
        sources.update(keys)
        return boolean_net_values(n, sources)[po]

    vectors = [dict(zip(inputs, bits)) for bits in itertools.product((0, 1), repeat=len(inputs))]
    truth = [po_value(v, planted) for v in vectors]
    consistent = []
    for bits in itertools.product((0, 1), repeat=len(key_nets)):
        keys = dict(zip(key_nets, bits))
        if all(po_value(v, keys) == t for v, t in zip(vectors, truth)):
            consistent.append(keys)
    unique = {}
    for net in key_nets:
        values = {keys[net] for keys in consistent}
        if len(values) == 1:
            unique[key_index_of(net)] = values.pop()
    return unique


def test_three_sc_cone_gives_all_three_bits(dip_example):
    locked, layout = dip_example
    session = boot(locked, layout, "dfs")
    result = run_preprocess(session, locked, layout)
    assert result.bits == {0: 1, 1: 0, 2: 1}
    assert result.unresolved == []
    assert result.iterations <= 2 ** 3
    dip_queries = session.observations - result.capabilities.queries
    assert all(result.queries[i] == dip_queries for i in range(3))


def test_keyless_cone_is_skipped(shift_example):
    locked, layout = shift_example
    result = run_preprocess(boot(locked, layout, "dfs"), locked, layout)
    assert [state.po for state in result.states] == ["out1"]
    assert result.bits == {0: 1}


def test_mssd_blocks_cones_that_need_rc_loading(dip_example):
    locked, layout = dip_example
    result = run_preprocess(boot(locked, layout, "mssd"), locked, layout)
    assert result.bits == {}
    assert result.skipped == ["y"]
    assert not result.capabilities.rc_preload
    assert result.capabilities.queries > 0


def test_combinational_cones_stay_attackable_under_mssd(bench_dir):
    c17 = read_bench(bench_dir / "c17.bench")
    locked = lock_rll(c17, 3, seed=2)
    layout = stitch(locked, 1, seed=2)
    dfs = preprocess(boot(locked, layout, "dfs"), locked, layout)
    mssd = preprocess(boot(locked, layout, "mssd"), locked, layout)
    assert dfs == mssd


@pytest.mark.parametrize("seed", range(10))
def test_recovered_bits_cover_the_brute_force_unique_bits(seed):
    n = random_netlist(n_inputs=5, n_outputs=4, n_flops=3, n_gates=30, seed=seed)
    locked = lock_rll(n, 4, seed=seed)
    layout = stitch(locked, 1, seed=seed)
    bits = preprocess(boot(locked, layout, "dfs"), locked, layout)

    for index, bit in bits.items():
        assert locked.hidden_key[index] == bit
    for po in n.outputs:
        for index, bit in _brute_force_unique_bits(locked, po).items():
            assert bits.get(index) == bit


def test_iteration_cap_is_bounded():
    assert iteration_cap(3) == 32
    assert iteration_cap(3, factor=1) == 8
    assert iteration_cap(40) == 10000
    assert iteration_cap(40, ceiling=50) == 50


def test_capped_loop_reports_unresolved(dip_example):
    locked, layout = dip_example
    result = run_preprocess(boot(locked, layout, "dfs"), locked, layout, factor=1, ceiling=1)
    assert result.iterations == 1
    assert result.unresolved == ["y"]
    for index, bit in result.bits.items():
        assert locked.hidden_key[index] == bit


def test_every_pair_comes_from_a_real_query(dip_example):
    locked, layout = dip_example
    session = boot(locked, layout, "dfs")
    result = run_preprocess(session, locked, layout)
    state = result.states[0]
    assert len(state.pairs) == state.iterations == session.observations - result.capabilities.queries


# q0 reaches y only through OR(AND(q0, a), a), which is just a
ABSORBED_FLOP_BENCH = """
INPUT(a)
INPUT(keyinput0)
OUTPUT(y)
q0 = DFF(a)
t = AND(q0, a)
g = OR(t, a)
y = XOR(g, keyinput0)
"""


def test_flop_independent_cone_is_attacked_without_scan_control():
    locked = LockedDesign.from_netlist(parse_bench(ABSORBED_FLOP_BENCH, name="absorbed"), Key((1,)), scheme="rll")
    layout = ScanChainLayout.explicit([["RC0", "SC0"]])
    result = run_preprocess(boot(locked, layout, "mssd"), locked, layout)
    assert not result.capabilities.rc_preload
    assert result.capabilities.rc_independent == {"y"}
    assert result.skipped == []
    assert result.bits == {0: 1}


def _consistent_keys(n, po, key_nets, pairs, observed):
    def po_value(assignment, keys):
        sources = {net: 0 for net in n.sources}
        sources.update(assignment)
        sources.update(keys)
        return boolean_net_values(n, sources)[po]

    keys = [dict(zip(key_nets, bits)) for bits in itertools.product((0, 1), repeat=len(key_nets))]
    history = [keys]
    for pair, answer in zip(pairs, observed):
        keys = [k for k in keys if po_value(pair, k) == answer]
        history.append(keys)
    return history


def test_forced_dip_loop_on_mssd_keeps_a_consistent_key(dip_example):
    locked, layout = dip_example
    n = locked.netlist
    result = run_preprocess(boot(locked, layout, "mssd"), locked, layout,
                            capabilities=AttackCapabilities(rc_preload=True))
    state = result.states[0]
    key_nets = [key_input_name(k) for k in range(3)]
    explaining = _consistent_keys(n, "y", key_nets, state.pairs, state.observed)[-1]
    assert explaining
    for index, bit in result.bits.items():
        assert {keys[key_input_name(index)] for keys in explaining} == {bit}


@pytest.mark.parametrize("seed", range(6))
def test_every_dip_strictly_shrinks_the_consistent_key_set(seed):
    n = random_netlist(n_inputs=5, n_outputs=4, n_flops=3, n_gates=30, seed=seed)
    locked = lock_rll(n, 4, seed=seed)
    layout = stitch(locked, 1, seed=seed)
    result = run_preprocess(boot(locked, layout, "dfs"), locked, layout)

    for state in result.states:
        key_nets = sorted(extract_fanin_cone(n, state.po).keys, key=key_index_of)
        planted = {net: locked.hidden_key[key_index_of(net)] for net in key_nets}
        history = _consistent_keys(locked.netlist, state.po, key_nets, state.pairs, state.observed)
        for earlier, later in zip(history, history[1:]):
            assert len(later) < len(earlier)
            assert planted in later
