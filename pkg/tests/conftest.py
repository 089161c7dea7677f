from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import pytest

from govsheet import Engine, Store
from govsheet.model import AuditVerdict, ItemKind, LineItemDef, Role, TemplateDocument, TemplateSection

ADMIN = "admin"
ADMIN_TOKEN = "tok-admin"


class TickClock:
    """Deterministic clock: strictly increasing, one millisecond per call."""

    def __init__(self, start: datetime | None = None):
        self.current = start or datetime(2026, 3, 1, 9, 0, 0, tzinfo=timezone.utc)

    def __call__(self) -> datetime:
        self.current += timedelta(milliseconds=1)
        return self.current


def make_engine(path=None, **store_kwargs) -> Engine:
    engine = Engine(Store(path, **store_kwargs), clock=TickClock())
    engine.ensure_bootstrap_admin(ADMIN, ADMIN_TOKEN)
    return engine


@pytest.fixture
def engine() -> Engine:
    return make_engine()


def simple_document(extra_item: str | None = None) -> TemplateDocument:
    revenue_items = [
        LineItemDef(name="Licence fees", kind=ItemKind.ENTRY),
        LineItemDef(name="Consulting", kind=ItemKind.ENTRY),
    ]
    if extra_item:
        revenue_items.append(LineItemDef(name=extra_item, kind=ItemKind.ENTRY))
    revenue_items.append(
        LineItemDef(name="Total revenue", kind=ItemKind.COMPUTED, formula_text="SUM(entries)", locked=True)
    )
    return TemplateDocument(
        sections=(
            TemplateSection(name="Revenue", items=tuple(revenue_items)),
            TemplateSection(
                name="Costs",
                items=(
                    LineItemDef(name="Payroll", kind=ItemKind.ENTRY),
                    LineItemDef(name="Rent", kind=ItemKind.ENTRY),
                    LineItemDef(name="Total costs", kind=ItemKind.COMPUTED, formula_text="SUM(entries)", locked=True),
                ),
            ),
        )
    )


@dataclass
class World:
    """Small two-department fixture used by most module tests."""

    engine: Engine
    dept_ops: str = ""
    dept_sales: str = ""
    cc_ops: str = ""
    cc_sales: str = ""
    section_revenue: str = ""
    section_costs: str = ""
    template_id: str = ""
    live_version_id: str = ""
    round_id: str = ""
    principals: dict = field(default_factory=dict)


def make_world(engine: Engine) -> World:
    registry = engine.registry
    world = World(engine=engine)
    for pid, name in (
        ("owner", "Owner"),
        ("editor", "Editor One"),
        ("editor2", "Editor Two"),
        ("auditor", "Auditor"),
        ("senior", "Senior Manager"),
        ("user.ops", "Ops Manager"),
        ("user.sales", "Sales Manager"),
    ):
        registry.create_principal(ADMIN, name, pid)
        world.principals[pid] = pid
    world.dept_ops = registry.create_department(ADMIN, "Operations").id
    world.dept_sales = registry.create_department(ADMIN, "Sales").id
    access = engine.access
    access.grant(ADMIN, "owner", Role.OWNER, all_departments=True)
    access.grant(ADMIN, "editor", Role.EDITOR, all_departments=True)
    access.grant(ADMIN, "editor2", Role.EDITOR, all_departments=True)
    access.grant(ADMIN, "auditor", Role.AUDITOR, all_departments=True)
    access.grant(ADMIN, "senior", Role.SENIOR_MANAGER, all_departments=True)
    access.grant(ADMIN, "user.ops", Role.USER, departments=[world.dept_ops])
    access.grant(ADMIN, "user.sales", Role.USER, departments=[world.dept_sales])
    world.section_revenue = registry.create_section(ADMIN, "Revenue").id
    world.section_costs = registry.create_section(ADMIN, "Costs").id
    world.cc_ops = registry.create_cost_centre(ADMIN, "100", "Ops Centre", world.dept_ops).id
    world.cc_sales = registry.create_cost_centre(ADMIN, "200", "Sales Centre", world.dept_sales).id
    version = engine.templates.create_template("owner", "Budget", simple_document())
    engine.templates.submit_for_audit("editor", version.id)
    engine.templates.audit_decision("auditor", version.id, AuditVerdict.PASS)
    live = engine.templates.release_live("owner", version.id)
    world.template_id = live.template_id
    world.live_version_id = live.id
    world.round_id = registry.open_round(ADMIN, "FY1").id
    engine.budget.seed_from_template(ADMIN, world.round_id, world.template_id)
    return world


@pytest.fixture
def world(engine) -> World:
    return make_world(engine)
