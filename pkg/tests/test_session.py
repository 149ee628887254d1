"""
Pin-level chip behaviour under DFS and MSSD.
"""

import random

import pytest

from src.shift_leak_lab.attacks.protocol import apply_streams, m1a_streams
from src.shift_leak_lab.chip.session import M0, M1A, M1B, M2, ModeInputs, boot, sd_value
from src.shift_leak_lab.chip.trace import SessionTrace
from src.shift_leak_lab.core.cells import CellKind, CellRef
from src.shift_leak_lab.core.simulator import eval_bool
from src.shift_leak_lab.locking.locks import Key
from src.shift_leak_lab.utils.exceptions import KeyLengthError, NetlistError

MODES = [M0, M1A, M1B, M2]


@pytest.mark.parametrize("test, se, stable, expected", [
    (0, 0, True, 0),
    (0, 1, True, 0),
    (1, 0, True, 0),
    (1, 1, True, 1),
    (1, 1, False, 0),
])
def test_shift_disable_table(test, se, stable, expected):
    assert sd_value(test, se, stable) == expected


def test_mode_names():
    assert [m.name for m in MODES] == ["M0", "M1a", "M1b", "M2"]
    with pytest.raises(ValueError):
        ModeInputs(2, 0)


def test_boot_clears_every_cell(shift_example):
    locked, layout = shift_example
    session = boot(locked, layout, "dfs")
    assert set(session.debug_snapshot().values()) == {0}


@pytest.mark.parametrize("variant", ["dfs", "mssd"])
def test_m0_clock_loads_the_key(dip_example, variant):
    locked, layout = dip_example
    session = boot(locked, layout, variant)
    session.step(M0)
    snapshot = session.debug_snapshot()
    assert [snapshot[CellRef.sc(k)] for k in range(3)] == list(locked.hidden_key)


def test_boot_in_m2_shifts_scs_with_dummy_bits(shift_example):
    locked, layout = shift_example
    session = boot(locked, layout, "dfs", mode=M2, key=Key((0,)))
    for _ in range(4):
        _, so = session.step(M2, si=[1])
        assert so == (0,)
    assert session.debug_snapshot()[CellRef.sc(0)] == 1


def test_dfs_shift_protocol_moves_key_into_leak_cell(shift_example):
    locked, layout = shift_example
    session = boot(locked, layout, "dfs")
    session.step(M0)
    apply_streams(session, M1A, m1a_streams(layout, {CellRef.rc(2): 1, CellRef.rc(3): 0}))
    snapshot = session.debug_snapshot()
    assert (snapshot[CellRef.rc(2)], snapshot[CellRef.rc(3)]) == (1, 0)
    assert snapshot[CellRef.sc(0)] == 1

    apply_streams(session, M2, [[0, 0]])
    snapshot = session.debug_snapshot()
    assert snapshot[CellRef.rc(4)] == 1
    assert snapshot[CellRef.rc(3)] == 1
    assert snapshot[CellRef.rc(5)] == 0


def test_dfs_m1a_holds_secure_cells(dip_example):
    locked, layout = dip_example
    session = boot(locked, layout, "dfs")
    session.step(M0)
    for _ in range(5):
        session.step(M1A, si=[0])
    snapshot = session.debug_snapshot()
    assert [snapshot[CellRef.sc(k)] for k in range(3)] == list(locked.hidden_key)


def test_dfs_masks_scan_out_after_test_posedge(shift_example):
    locked, layout = shift_example
    session = boot(locked, layout, "dfs")
    _, so = session.step(M0)
    assert so == (1,)
    for _ in range(10):
        _, so = session.step(M2, si=[0])
        assert so == (1,)
    session.step(M1B)
    _, so = session.step(M2)
    assert so == (1,)


@pytest.mark.slow
def test_dfs_srb_fuzz(dip_example):
    locked, layout = dip_example
    rng = random.Random(5)
    for _ in range(10_000):
        start = rng.choice(MODES)
        session = boot(locked, layout, "dfs", mode=start)
        previous, posedge_seen = start.test, False
        for _ in range(20):
            m = rng.choice(MODES)
            posedge_seen |= previous == 0 and m.test == 1
            if rng.random() < 0.2:
                session.observe(m)
            else:
                _, so = session.step(m, si=[rng.getrandbits(1)])
                if m.test == 0 or posedge_seen:
                    assert so == (1,)
            previous = m.test


def test_mssd_m1a_ignores_scan_in(desk_design):
    locked, layout = desk_design(seed=1)
    rng = random.Random(0)
    pis = [{net: rng.getrandbits(1) for net in locked.netlist.inputs} for _ in range(100)]
    snapshots = []
    for stream_seed in (1, 2):
        stream = random.Random(stream_seed)
        session = boot(locked, layout, "mssd")
        session.step(M0)
        for pi in pis:
            session.step(M1A, pi=pi, si=[stream.getrandbits(1)])
        snapshots.append(session.debug_snapshot())
    assert snapshots[0] == snapshots[1]


def test_mssd_test_posedge_disables_shift_until_reset(shift_example):
    locked, layout = shift_example
    session = boot(locked, layout, "mssd")
    session.step(M0)
    for _ in range(3):
        _, so = session.step(M2, si=[1])
        assert so == (1,)
        snapshot = session.debug_snapshot()
        assert snapshot[CellRef.rc(0)] == 0
        assert snapshot[CellRef.sc(0)] == 1

    session.reset(M2)
    _, so = session.step(M2, si=[1])
    assert so == (0,)
    assert session.debug_snapshot()[CellRef.rc(0)] == 1


@pytest.mark.parametrize("key", [(0,), (1,)])
def test_mssd_clockless_switch_does_not_hide_the_posedge(shift_example, key):
    locked, layout = shift_example
    session = boot(locked, layout, "mssd", mode=M2, key=Key(key))
    # RC2=1 and RC3=0: two more shifts would park the key bit in RC4, visible on out0
    for bit in [0, 0, 0, 0, 1, 0, 0]:
        session.step(M2, si=[bit])
    snapshot = session.debug_snapshot()
    assert (snapshot[CellRef.rc(2)], snapshot[CellRef.rc(3)]) == (1, 0)

    session.step(M0)
    session.observe(M2)
    for _ in range(2):
        _, so = session.step(M2)
        assert so == (1,)
    assert session.observe(M0)["out0"] == 0
    snapshot = session.debug_snapshot()
    assert {v for c, v in snapshot.items() if c.kind is CellKind.RC} == {0}
    assert snapshot[CellRef.sc(0)] == key[0]


@pytest.mark.slow
def test_mssd_scan_out_stays_masked_after_any_m0_clock(dip_example):
    locked, layout = dip_example
    rng = random.Random(6)
    for _ in range(10_000):
        start = rng.choice(MODES)
        session = boot(locked, layout, "mssd", mode=start)
        shift_open = start.test == 1
        for _ in range(20):
            m = rng.choice(MODES)
            if rng.random() < 0.2:
                session.observe(m)
                continue
            _, so = session.step(m, si=[rng.getrandbits(1)])
            if not (shift_open and m == M2):
                assert so == (1,)
            shift_open &= m.test == 1


@pytest.mark.slow
@pytest.mark.parametrize("variant", ["dfs", "mssd"])
def test_secure_cells_follow_the_mode_table(dip_example, variant):
    locked, layout = dip_example
    chain = layout.chains[0]
    rng = random.Random(11)
    for _ in range(10_000):
        start = rng.choice(MODES)
        session = boot(locked, layout, variant, mode=start)
        shift_open = variant == "dfs" or start.test == 1
        for _ in range(12):
            m = rng.choice(MODES)
            if rng.random() < 0.2:
                session.observe(m)
                continue
            before = session.debug_snapshot()
            si = rng.getrandbits(1)
            session.step(m, si=[si])
            after = session.debug_snapshot()
            for p, cell in enumerate(chain):
                if cell.kind is not CellKind.SC:
                    continue
                if m == M0:
                    expected = locked.hidden_key[cell.index]
                elif m == M2 and shift_open:
                    expected = before[chain[p - 1]] if p else si
                else:
                    expected = before[cell]
                assert after[cell] == expected
            if variant == "mssd":
                shift_open &= m.test == 1


def _chain_contents(session, layout):
    snapshot = session.debug_snapshot()
    return [[snapshot[cell] for cell in chain] for chain in layout.chains]


@pytest.mark.parametrize("d", [1, 3, 7])
def test_m2_pulses_move_every_chain_exactly_d_positions(desk_design, d):
    locked, layout = desk_design(seed=3, n_chains=4)
    rng = random.Random(d)
    session = boot(locked, layout, "dfs")
    session.step(M0)
    apply_streams(session, M1A, [[rng.getrandbits(1) for _ in range(layout.max_rcs_per_chain)]
                                 for _ in range(layout.n_chains)])
    before = _chain_contents(session, layout)

    bits = [[rng.getrandbits(1) for _ in range(layout.n_chains)] for _ in range(d)]
    for si in bits:
        session.step(M2, si=si)
    after = _chain_contents(session, layout)
    for c, chain in enumerate(before):
        expected = [chain[p - d] if p >= d else bits[d - 1 - p][c] for p in range(len(chain))]
        assert after[c] == expected


def test_mssd_every_m2_to_m0_entry_drops_one_rc_update(shift_example):
    locked, layout = shift_example
    session = boot(locked, layout, "mssd", mode=M2)

    def rcs():
        return {v for c, v in session.debug_snapshot().items() if c.kind is CellKind.RC}

    for _ in range(5):
        session.step(M2, pi={"a": 0}, si=[0])
        assert rcs() == {0}
        session.step(M0, pi={"a": 1})
        assert rcs() == {0}
        session.step(M0, pi={"a": 1})
        assert rcs() == {1}
        session.step(M0, pi={"a": 0})
        assert rcs() == {0}


@pytest.mark.parametrize("variant, gated", [("mssd", True), ("dfs", False)])
def test_clock_gating_after_m2_to_m0(shift_example, variant, gated):
    locked, layout = shift_example
    session = boot(locked, layout, variant, mode=M2)
    for _ in range(2):
        session.step(M2, si=[1])
    rcs_before = {c: v for c, v in session.debug_snapshot().items() if c.kind is CellKind.RC}
    assert set(rcs_before.values()) == {0, 1}

    session.step(M0, pi={"a": 1})
    rcs_after = {c: v for c, v in session.debug_snapshot().items() if c.kind is CellKind.RC}
    if gated:
        assert rcs_after == rcs_before
    else:
        assert set(rcs_after.values()) == {1}

    session.step(M0, pi={"a": 1})
    assert {v for c, v in session.debug_snapshot().items() if c.kind is CellKind.RC} == {1}


def test_observe_matches_boolean_evaluation(desk_design):
    locked, layout = desk_design(seed=2)
    session = boot(locked, layout, "dfs")
    session.step(M0)
    rng = random.Random(9)
    apply_streams(session, M1A, [[rng.getrandbits(1) for _ in range(layout.max_rcs_per_chain)]])
    pi = {net: rng.getrandbits(1) for net in locked.netlist.inputs}

    snapshot = session.debug_snapshot()
    state = [snapshot[CellRef.rc(i)] for i in range(locked.netlist.num_flops)]
    expected, _ = eval_bool(locked.netlist, pi, state, list(locked.hidden_key))

    first = session.observe(M0, pi)
    assert first == expected
    assert session.observe(M0, pi) == first
    session.observe(M1A, pi)
    assert session.observe(M0, pi) == first
    assert session.debug_snapshot() == snapshot


def test_counters(shift_example):
    locked, layout = shift_example
    session = boot(locked, layout, "dfs")
    session.step(M0)
    session.observe(M0)
    assert (session.pin_operations, session.clock_pulses, session.observations) == (2, 1, 1)


def test_key_and_pin_checks(shift_example):
    locked, layout = shift_example
    with pytest.raises(KeyLengthError):
        boot(locked, layout, "dfs", key=Key((0, 1)))
    session = boot(locked, layout, "dfs")
    with pytest.raises(NetlistError):
        session.step(M0, si=[0, 1])
    with pytest.raises(NetlistError):
        session.step(M0, pi={})


def test_trace_records_every_pin_operation(shift_example, tmp_path):
    locked, layout = shift_example
    path = tmp_path / "session.trace.jsonl"
    with SessionTrace(path) as trace:
        session = boot(locked, layout, "dfs", trace=trace)
        session.step(M0, pi={"a": 1})
        session.step(M2, si=[1])
        session.observe(M0, {"a": 0})
    assert [r["op"] for r in trace.records] == ["step", "step", "observe"]
    assert trace.records[1]["mode"] == "M2"
    assert trace.records[1]["masked"] is True
    assert SessionTrace.read(path) == trace.records
