import pandas as pd
import pytest

from src.shift_leak_lab.attacks.outcome import AttackReport, KeyBitOutcome, RecoveryStatus
from src.shift_leak_lab.chip.layout import stitch
from src.shift_leak_lab.core.bench import parse_bench, read_bench
from src.shift_leak_lab.core.simulator import PatternBlock, eval_bool
from src.shift_leak_lab.locking.locks import lock_rll, strip_key_gates
from src.shift_leak_lab.reports.coverage import coverage_compare, instrument
from src.shift_leak_lab.reports.overhead import baseline_primitives, masking_inventory, overhead
from src.shift_leak_lab.reports.tables import COLUMNS, combined_table, export_combined, table_row
from src.shift_leak_lab.utils.exceptions import NetlistError


@pytest.fixture
def locked_c17(bench_dir):
    locked = lock_rll(read_bench(bench_dir / "c17.bench"), 4, seed=1)
    return locked, stitch(locked, 1, seed=1)


@pytest.fixture
def locked_desk(desk_design):
    return desk_design(seed=1, key_bits=16)


def test_masking_inventories():
    assert sum(masking_inventory("dfs", 1).values()) == 8
    assert sum(masking_inventory("dfs", 16).values()) == 23
    assert masking_inventory("dfs", 16)["OR"] == 18
    assert sum(masking_inventory("mssd", 1).values()) == 10
    assert masking_inventory("mssd", 1) == masking_inventory("mssd", 32)


def test_secure_cells_cost_three_primitives_each(locked_desk):
    locked, layout = locked_desk
    report = overhead(locked, layout, "dfs")
    assert report.secure_cells == 3 * 16
    assert report.inventory["MUX"] == 32
    assert report.baseline == baseline_primitives(locked)
    assert report.baseline == len(locked.netlist.gates) - 16 + 32


@pytest.mark.parametrize("scan_outs", [8, 16, 32])
def test_mssd_is_cheaper_with_many_scan_outs(desk_design, scan_outs):
    locked, layout = desk_design(seed=2, key_bits=16, n_chains=scan_outs)
    dfs = overhead(locked, layout, "dfs")
    mssd = overhead(locked, layout, "mssd")
    assert mssd.added < dfs.added
    assert dfs.percent > mssd.percent > 0


def test_single_scan_out_favours_dfs(locked_desk):
    locked, layout = locked_desk
    assert overhead(locked, layout, "dfs").added < overhead(locked, layout, "mssd").added


def test_overhead_dict(locked_c17):
    locked, layout = locked_c17
    payload = overhead(locked, layout, "mssd").to_dict()
    assert payload["variant"] == "mssd"
    assert payload["masking_primitives"] == 10
    assert payload["added_primitives"] == 12 + 10
    assert payload["secure_cell_inventory"] == {"MUX": 2, "DFF": 1}


@pytest.mark.parametrize("variant, extra_outputs", [("dfs", ["so0"]), ("mssd", ["sd", "cg_ctrl"])])
def test_instrumentation_preserves_the_design(locked_c17, variant, extra_outputs):
    locked, layout = locked_c17
    n = locked.netlist
    wrapped = instrument(locked, layout, variant)
    assert wrapped.name == f"{n.name}_{variant}"
    assert wrapped.inputs[-2:] == ("test", "se")
    assert list(wrapped.outputs[len(n.outputs):]) == extra_outputs

    for row in PatternBlock.exhaustive(n.inputs).rows():
        base, _ = eval_bool(n, row, [], list(locked.hidden_key))
        pi = dict(row, test=1, se=0)
        state = [0] * len(wrapped.flops)
        wrapped_out, _ = eval_bool(wrapped, pi, state, list(locked.hidden_key))
        assert {po: wrapped_out[po] for po in n.outputs} == base


def test_instrumentation_refuses_name_clashes():
    n = parse_bench("INPUT(test)\nINPUT(b)\nOUTPUT(y)\nn1 = AND(test, b)\ny = NOT(n1)\n")
    locked = lock_rll(n, 1, seed=0)
    with pytest.raises(NetlistError, match="instrumentation nets already used"):
        instrument(locked, stitch(locked, 1, seed=0), "dfs")


def test_full_coverage_on_c17(locked_c17):
    locked, layout = locked_c17
    designs = {variant: instrument(locked, layout, variant) for variant in ("dfs", "mssd")}
    report = coverage_compare(strip_key_gates(locked), designs, budget=1000, seed=1)
    assert list(report.entries) == ["original", "dfs", "mssd"]
    for entry in report.entries.values():
        assert entry.test_coverage == 1.0
        assert entry.patterns == 1000
    assert report.to_dict()["designs"]["original"]["fault_coverage"] == 1.0


def test_coverage_is_monotone_in_budget(bench_dir):
    s27 = read_bench(bench_dir / "s27.bench")
    values = [coverage_compare(s27, {}, budget=budget, seed=3, random_block=4).coverage("original")
              for budget in (1, 2, 4, 8, 16, 64)]
    assert values == sorted(values)


def test_mssd_keeps_desk_coverage(locked_desk):
    locked, layout = locked_desk
    report = coverage_compare(strip_key_gates(locked), {"mssd": instrument(locked, layout, "mssd")},
                              budget=2000, seed=1)
    original = report.entries["original"].test_coverage
    assert abs(report.entries["mssd"].test_coverage - original) <= 0.005


def test_budget_must_be_positive(bench_dir):
    with pytest.raises(NetlistError, match="pattern budget"):
        coverage_compare(read_bench(bench_dir / "c17.bench"), {}, budget=0, seed=1)


def _report(defense, recovered, total=4):
    records = [KeyBitOutcome(i, RecoveryStatus.LEAKED if i < recovered else RecoveryStatus.UNRECOVERED,
                             0 if i < recovered else None) for i in range(total)]
    return AttackReport("c17", "rll", defense, 1, records)


def test_combined_table(locked_c17, tmp_path):
    locked, layout = locked_c17
    row = table_row(overhead(locked, layout, "dfs"), overhead(locked, layout, "mssd"),
                    attacks={"dfs": _report("dfs", 4), "mssd": _report("mssd", 0)})
    assert row["dfs_recovered"] == 4
    assert row["mssd_recovered"] == 0
    assert row["dfs_coverage"] is None
    assert row["mssd_below_dfs"] is False

    table = combined_table([row])
    assert list(table.columns) == COLUMNS
    csv_path, xlsx_path = export_combined(table, tmp_path)
    again = pd.read_csv(csv_path)
    assert again.loc[0, "design"] == locked.netlist.name
    assert pd.read_excel(xlsx_path, sheet_name="combined").shape == (1, len(COLUMNS))


def test_empty_table_is_header_only(tmp_path):
    table = combined_table([])
    (csv_path,) = export_combined(table, tmp_path, excel=False)
    assert csv_path.read_text().strip() == ",".join(COLUMNS)
