import pytest

from src.shift_leak_lab.chip.layout import ScanChainLayout, read_layout, stitch, write_layout
from src.shift_leak_lab.core.cells import CellKind, CellRef
from src.shift_leak_lab.utils.exceptions import StitchError
from src.shift_leak_lab.validation.validator import LayoutValidator, ValidationSeverity


def test_explicit_order_reproduced(shift_example):
    locked, _ = shift_example
    order = [["RC0", "RC1", "RC2", "SC0", "RC3", "RC4", "RC5"]]
    layout = stitch(locked, 1, seed=0, policy="explicit", explicit=order)
    assert [str(cell) for cell in layout.chains[0]] == order[0]
    assert layout.position(CellRef.sc(0)) == (0, 3)
    assert layout.rc_subchain(0) == [CellRef.rc(i) for i in range(6)]


def test_explicit_needs_contents(shift_example):
    locked, _ = shift_example
    with pytest.raises(StitchError, match="needs the chain contents"):
        stitch(locked, 1, seed=0, policy="explicit")


def test_one_cell_per_chain(desk_design):
    locked, _ = desk_design(seed=2)
    total = locked.netlist.num_flops + locked.key_bits
    layout = stitch(locked, total, seed=2)
    assert layout.n_chains == total
    assert all(len(chain) == 1 for chain in layout.chains)


def test_too_many_chains(shift_example):
    locked, _ = shift_example
    with pytest.raises(StitchError, match="cannot stitch 7 cells into 8 chains"):
        stitch(locked, 8, seed=0)


@pytest.mark.parametrize("policy", ["interleaved", "random"])
def test_seeds_change_layout_not_validity(desk_design, policy):
    locked, _ = desk_design(seed=1)
    a = stitch(locked, 2, seed=1, policy=policy)
    b = stitch(locked, 2, seed=2, policy=policy)
    assert a.chains != b.chains
    for layout in (a, b):
        layout.validate(locked.netlist.num_flops, locked.key_bits)
        assert layout.total_cells == locked.netlist.num_flops + locked.key_bits


def test_interleaving_keeps_an_rc_after_every_sc(desk_design):
    locked, layout = desk_design(seed=3)
    chain = layout.chains[0]
    for p, cell in enumerate(chain):
        if cell.kind is CellKind.SC:
            assert any(later.kind is CellKind.RC for later in chain[p + 1:])


def test_validate_rejects_duplicates_and_gaps():
    dup = ScanChainLayout.explicit([["RC0", "SC0"], ["RC0"]])
    with pytest.raises(StitchError, match="appears in chain 0 and chain 1"):
        dup.validate(1, 1)
    gap = ScanChainLayout.explicit([["RC0"]])
    with pytest.raises(StitchError, match="missing from layout: SC0"):
        gap.validate(1, 1)
    extra = ScanChainLayout.explicit([["RC0", "RC3"]])
    with pytest.raises(StitchError, match="unknown cells: RC3"):
        extra.validate(1, 0)


def test_layout_file_round_trip(desk_design, tmp_path):
    _, layout = desk_design(seed=4, n_chains=3)
    path = write_layout(tmp_path / "desk.c3.layout.yaml", layout)
    again = read_layout(path)
    assert again.chains == layout.chains
    assert again.policy == "interleaved"
    assert again.seed == 4


def test_malformed_layout_file(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("chains: [[RC0, XX1]]\n")
    with pytest.raises(StitchError, match="malformed layout"):
        read_layout(path)


def test_layout_validator_warns_on_sc_at_tail(dip_example):
    locked, layout = dip_example
    results = LayoutValidator().validate(layout, locked)
    assert results[0].is_valid
    warnings = [r for r in results if r.severity is ValidationSeverity.WARNING]
    assert [r.value for r in warnings] == ["SC2"]
