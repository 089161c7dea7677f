import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from govsheet.errors import (
    MalformedRow,
    NoLiveTemplate,
    PermissionDenied,
    RoundNotOpen,
    UnknownCostCentre,
    UnknownKeyComponent,
    UnknownVersion,
    VersionFrozen,
)
from govsheet.model import BudgetKey, DataVersionState

from conftest import ADMIN, make_engine, make_world


def key_for(world, cc=None, section=None, line="Licence fees", period=1, version=1):
    return BudgetKey(
        round_id=world.round_id,
        data_version=version,
        cost_centre_id=cc or world.cc_ops,
        section_id=section or world.section_revenue,
        line_item=line,
        period=period,
    )


def test_read_your_write(world):
    engine = world.engine
    engine.budget.put_cell("user.ops", key_for(world), 10_000_00)
    cells = engine.budget.get_slice("user.ops", world.round_id, 1)
    assert len(cells) == 1
    assert cells[0].amount_cents == 10_000_00
    assert cells[0].entered_by == "user.ops"


def test_upsert_replaces_not_duplicates(world):
    engine = world.engine
    key = key_for(world)
    engine.budget.put_cell("user.ops", key, 10_000_00)
    engine.budget.put_cell("user.ops", key, 12_000_00)
    cells = engine.budget.get_slice("user.ops", world.round_id, 1)
    assert len(cells) == 1
    assert cells[0].amount_cents == 12_000_00


def test_out_of_scope_write_denied(world):
    engine = world.engine
    with pytest.raises(PermissionDenied) as excinfo:
        engine.budget.put_cell("user.ops", key_for(world, cc=world.cc_sales), 5_00)
    assert excinfo.value.code == "OUT_OF_SCOPE"


def test_unknown_line_item_rejected(world):
    with pytest.raises(UnknownKeyComponent):
        world.engine.budget.put_cell("user.ops", key_for(world, line="Not a heading"), 100)


def test_line_item_must_match_section(world):
    # "Payroll" exists, but under Costs, not Revenue.
    with pytest.raises(UnknownKeyComponent):
        world.engine.budget.put_cell("user.ops", key_for(world, line="Payroll"), 100)


def test_computed_items_are_not_enterable(world):
    with pytest.raises(UnknownKeyComponent):
        world.engine.budget.put_cell("user.ops", key_for(world, line="Total revenue"), 100)


def test_write_to_closed_round_rejected(world):
    engine = world.engine
    engine.registry.close_round(ADMIN, world.round_id)
    with pytest.raises((RoundNotOpen, VersionFrozen)):
        engine.budget.put_cell("user.ops", key_for(world), 100)


def test_scope_filtering_on_reads(world):
    engine = world.engine
    engine.budget.put_cell("user.ops", key_for(world), 1_00)
    engine.budget.put_cell("user.sales", key_for(world, cc=world.cc_sales), 2_00)
    ops_view = engine.budget.get_slice("user.ops", world.round_id, 1)
    assert {c.key.cost_centre_id for c in ops_view} == {world.cc_ops}
    senior_view = engine.budget.get_slice("senior", world.round_id, 1)
    assert {c.key.cost_centre_id for c in senior_view} == {world.cc_ops, world.cc_sales}


def test_get_slice_empty_store(world):
    assert world.engine.budget.get_slice("senior", world.round_id, 1) == []


def test_get_slice_unknown_version(world):
    with pytest.raises(UnknownVersion):
        world.engine.budget.get_slice("senior", world.round_id, 9)


def test_filters_restrict_slice(world):
    engine = world.engine
    engine.budget.put_cell("user.ops", key_for(world, period=1), 1_00)
    engine.budget.put_cell("user.ops", key_for(world, period=2), 2_00)
    engine.budget.put_cell("user.ops", key_for(world, section=world.section_costs, line="Payroll"), 3_00)
    only_p2 = engine.budget.get_slice("user.ops", world.round_id, 1, periods=[2])
    assert [c.amount_cents for c in only_p2] == [2_00]
    only_costs = engine.budget.get_slice("user.ops", world.round_id, 1, sections=[world.section_costs])
    assert [c.amount_cents for c in only_costs] == [3_00]


def test_next_version_copies_and_freezes(world):
    engine = world.engine
    for period in (1, 2, 3):
        engine.budget.put_cell("user.ops", key_for(world, period=period), period * 100)
    opened = engine.budget.open_next_version(ADMIN, world.round_id)
    assert opened.version == 2
    assert opened.state == DataVersionState.EDITABLE
    v1 = engine.store.get("data_version", f"{world.round_id}\x1f1")
    assert v1.state == DataVersionState.FROZEN

    v2_cells = engine.budget.get_slice("user.ops", world.round_id, 2)
    assert [(c.key.period, c.amount_cents) for c in v2_cells] == [(1, 100), (2, 200), (3, 300)]

    with pytest.raises(VersionFrozen):
        engine.budget.put_cell("user.ops", key_for(world, version=1, period=4), 400)

    # The frozen version still reads in full.
    v1_cells = engine.budget.get_slice("user.ops", world.round_id, 1)
    assert [(c.key.period, c.amount_cents) for c in v1_cells] == [(1, 100), (2, 200), (3, 300)]


def test_frozen_version_contents_are_immutable(world):
    engine = world.engine
    engine.budget.put_cell("user.ops", key_for(world), 77_00)
    engine.budget.open_next_version(ADMIN, world.round_id)
    frozen_csv = engine.budget.slice_csv(ADMIN, world.round_id, 1)
    engine.budget.put_cell("user.ops", key_for(world, version=2), 99_00)
    engine.budget.put_cell("user.sales", key_for(world, cc=world.cc_sales, version=2), 11_00)
    assert engine.budget.slice_csv(ADMIN, world.round_id, 1) == frozen_csv


def test_key_uniqueness_property(world):
    engine = world.engine
    import random

    rng = random.Random(7)
    lines = ["Licence fees", "Consulting"]
    for _ in range(200):
        key = key_for(world, line=rng.choice(lines), period=rng.randint(1, 12))
        engine.budget.put_cell("user.ops", key, rng.randint(-10_000, 10_000))
    cells = engine.budget.get_slice("user.ops", world.round_id, 1)
    keys = [c.key.storage_key() for c in cells]
    assert len(keys) == len(set(keys))
    assert len(keys) <= len(lines) * 12


def test_slice_export_layout_and_determinism(world):
    engine = world.engine
    engine.budget.put_cell("user.sales", key_for(world, cc=world.cc_sales, period=2), 2_50)
    engine.budget.put_cell("user.ops", key_for(world, period=1), 1_25)
    text = engine.budget.slice_csv(ADMIN, world.round_id, 1)
    lines = text.splitlines()
    assert lines[0] == "fiscal,cost_centre,section,line_item,period,amount_cents,data_version"
    assert lines[1] == "FY1,100,Revenue,Licence fees,1,125,1"
    assert lines[2] == "FY1,200,Revenue,Licence fees,2,250,1"
    assert text == engine.budget.slice_csv(ADMIN, world.round_id, 1)


ACTUALS_CSV = """fiscal,cost_centre,section,line_item,period,amount_cents
FY-prev,100,Revenue,Licence fees,1,100000
FY-prev,100,Costs,Payroll,1,45000
FY-prev,200,Revenue,Consulting,2,38000
"""


def test_import_actuals_happy_path(world):
    summary = world.engine.budget.import_actuals(ADMIN, "FY-prev", ACTUALS_CSV)
    assert summary == {"rows": 3, "rejected": 0}
    records = world.engine.budget.list_actuals("senior", "FY-prev")
    assert len(records) == 3
    assert {r.amount_cents for r in records} == {100000, 45000, 38000}


def test_import_actuals_unknown_cost_centre_aborts_all(world):
    bad = ACTUALS_CSV + "FY-prev,999,Revenue,Licence fees,3,5\n"
    with pytest.raises(UnknownCostCentre) as excinfo:
        world.engine.budget.import_actuals(ADMIN, "FY-prev", bad)
    assert excinfo.value.line_no == 5
    assert world.engine.budget.list_actuals("senior", "FY-prev") == []


@pytest.mark.parametrize(
    "row,reason",
    [
        ("FY-prev,100,Revenue,Licence fees,13,5", "period"),
        ("FY-prev,100,Revenue,Licence fees,1,1.5", "amount"),
        ("FY-prev,100,Nowhere,Licence fees,1,5", "section"),
        ("FY-other,100,Revenue,Licence fees,1,5", "fiscal"),
        ("FY-prev,100,Revenue,Licence fees,1", "fields"),
    ],
)
def test_import_actuals_malformed_rows(world, row, reason):
    with pytest.raises(MalformedRow) as excinfo:
        world.engine.budget.import_actuals(ADMIN, "FY-prev", ACTUALS_CSV + row + "\n")
    assert excinfo.value.line_no == 5


def test_import_actuals_duplicate_key_rejected(world):
    dup = ACTUALS_CSV + "FY-prev,100,Revenue,Licence fees,1,222\n"
    with pytest.raises(MalformedRow) as excinfo:
        world.engine.budget.import_actuals(ADMIN, "FY-prev", dup)
    assert excinfo.value.line_no == 5


def test_reimport_replaces_label_atomically(world):
    engine = world.engine
    engine.budget.import_actuals(ADMIN, "FY-prev", ACTUALS_CSV)
    # Derived check: count before, replace with a 1-row file, count after.
    assert len(engine.budget.list_actuals("senior", "FY-prev")) == 3
    engine.budget.import_actuals(
        ADMIN, "FY-prev", "fiscal,cost_centre,section,line_item,period,amount_cents\nFY-prev,100,Revenue,Licence fees,1,7\n"
    )
    records = engine.budget.list_actuals("senior", "FY-prev")
    assert len(records) == 1
    assert records[0].amount_cents == 7


def test_import_requires_permission(world):
    with pytest.raises(PermissionDenied):
        world.engine.budget.import_actuals("user.ops", "FY-prev", ACTUALS_CSV)


def test_seed_from_template_counts_entry_slots(world):
    # The conftest world seeded already: Revenue has 2 entry items, Costs has 2.
    assert len(world.engine.budget.vocabulary_for(world.round_id)) == 4
    # Re-seeding returns the same count.
    assert world.engine.budget.seed_from_template(ADMIN, world.round_id, world.template_id) == 4


def test_vocabulary_readable_by_data_users(world):
    vocabulary = world.engine.budget.get_vocabulary("user.ops", world.round_id)
    assert len(vocabulary.slots) == 4
    assert (world.section_revenue, "Licence fees") in {tuple(s) for s in vocabulary.slots}
    with pytest.raises(PermissionDenied):
        world.engine.budget.get_vocabulary("editor", world.round_id)


def test_seed_requires_live_template(engine):
    engine.registry.create_section(ADMIN, "Revenue")
    budget_round = engine.registry.open_round(ADMIN, "FY")
    with pytest.raises(NoLiveTemplate):
        engine.budget.seed_from_template(ADMIN, budget_round.id)


def test_copy_from_prior_round_equals_source(world):
    engine = world.engine
    engine.budget.put_cell("user.ops", key_for(world, period=1), 11_00)
    engine.budget.put_cell("user.ops", key_for(world, period=2), 22_00)
    engine.budget.put_cell("user.sales", key_for(world, cc=world.cc_sales, line="Consulting", period=3), 33_00)
    engine.registry.close_round(ADMIN, world.round_id)

    new_round = engine.registry.open_round(ADMIN, "FY2")
    engine.budget.seed_from_template(ADMIN, new_round.id, world.template_id, copy_from_round=world.round_id)

    source = engine.budget.get_slice("senior", world.round_id, 1)
    copied = engine.budget.get_slice("senior", new_round.id, 1)
    as_tuples = lambda cells: sorted(
        (c.key.cost_centre_id, c.key.section_id, c.key.line_item, c.key.period, c.amount_cents) for c in cells
    )
    assert as_tuples(copied) == as_tuples(source)


def test_money_exactness_sum_property(world):
    engine = world.engine
    import random

    rng = random.Random(11)
    expected = {}
    for _ in range(100):
        period = rng.randint(1, 12)
        amount = rng.randint(-5_000_00, 5_000_00)
        engine.budget.put_cell("user.ops", key_for(world, period=period), amount)
        expected[period] = amount
    cells = engine.budget.get_slice("user.ops", world.round_id, 1)
    assert sum(c.amount_cents for c in cells) == sum(expected.values())


@settings(max_examples=25, deadline=None)
@given(amounts=st.lists(st.tuples(st.integers(1, 12), st.integers(-10**9, 10**9)), max_size=20))
def test_put_cells_roundtrip_property(amounts):
    engine = make_engine()
    world = make_world(engine)
    final = {}
    for period, amount in amounts:
        engine.budget.put_cell(
            "user.ops",
            BudgetKey(
                round_id=world.round_id,
                data_version=1,
                cost_centre_id=world.cc_ops,
                section_id=world.section_revenue,
                line_item="Licence fees",
                period=period,
            ),
            amount,
        )
        final[period] = amount
    cells = engine.budget.get_slice("user.ops", world.round_id, 1)
    assert {c.key.period: c.amount_cents for c in cells} == final
