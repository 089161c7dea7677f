"""Seeded demo world: a 28-cost-centre, 6-section organization with a
released budget template, an open round, and the full readiness matrix.

The fixture mirrors a mid-size sales organization: five departments, each
cost centre marked per section as completed (C) or not-applicable (X).
Managers assert completion for their own departments; the admin marks the
structural not-applicable cells. Everything is created through ordinary
engine operations, so the seed itself produces a faithful audit trail.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from .model import (
    Action,
    AuditVerdict,
    ItemKind,
    LineItemDef,
    Role,
    SectionProgress,
    TemplateDocument,
    TemplateSection,
)

if TYPE_CHECKING:
    from .engine import Engine

SECTION_NAMES = (
    "Customer Sales",
    "Employee Overheads",
    "Computer Assets",
    "Property Assets",
    "Rent and Rates",
    "Other",
)

# (code, name, department key, dormant, per-section C/X pattern)
COST_CENTRE_ROWS = (
    ("110", "Hesel Direct", "direct", False, "CCXXXC"),
    ("115", "Local Government", "direct", False, "CCXXXC"),
    ("121", "(Dormant)", "corporate", True, "CCXXXC"),
    ("125", "Central Government", "direct", False, "CCXXXC"),
    ("130", "ST Catinogun", "direct", False, "CCXXXC"),
    ("135", "SMB", "direct", False, "CCXXXC"),
    ("140", "Contracts", "contracts", False, "XCXXXC"),
    ("160", "Corporate", "corporate", False, "CCXXXC"),
    ("181", "Further Education", "corporate", False, "CCXXXC"),
    ("152", "Xerox", "direct", False, "CCXXXC"),
    ("163", "ST Central Services", "contracts", False, "XCXXXC"),
    ("155", "Key Accounts", "direct", False, "CCXXXC"),
    ("162", "Health Contract", "corporate", False, "CCXXXC"),
    ("161", "Health Direct", "corporate", False, "CCXXXC"),
    ("170", "Hesel Existing", "regional", False, "CCXXXC"),
    ("171", "SMB New Nth", "regional", False, "CCXXXC"),
    ("172", "(Dormant)", "regional", True, "XCXXXC"),
    ("173", "Mid Market North", "regional", False, "CCXXXC"),
    ("175", "SMB New Sth", "regional", False, "CCXXXC"),
    ("180", "Scotland", "regional", False, "CCXXXC"),
    ("191", "Southern Ireland", "ireland", False, "XXXXXC"),
    ("192", "Ireland", "ireland", False, "XXXXXC"),
    ("193", "Indirect N Ireland", "ireland", False, "XXXXXC"),
    ("194", "ROI Wholesale", "ireland", False, "XXXXXC"),
    ("195", "Northern Ireland", "ireland", False, "XXXXXC"),
    ("196", "ROI UK Sales", "ireland", False, "XXXXXC"),
    ("197", "NI Wholesale", "ireland", False, "XXXXXC"),
    ("400", "Wholesale Existing", "regional", False, "CCXXXC"),
)

DEPARTMENTS = (
    ("direct", "Direct Sales", "mgr.direct", "Manager, Direct Sales"),
    ("regional", "Regional Sales", "mgr.regional", "Manager, Regional Sales"),
    ("contracts", "Contracts & Services", "mgr.contracts", "Manager, Contracts & Services"),
    ("corporate", "Corporate & Health", "mgr.corporate", "Manager, Corporate & Health"),
    ("ireland", "Ireland", "mgr.ireland", "Manager, Ireland"),
)

PERSONAS = (
    ("owner1", "Budget Owner", Role.OWNER),
    ("editor1", "Template Editor", Role.EDITOR),
    ("editor2", "Second Template Editor", Role.EDITOR),
    ("auditor1", "Structure Auditor", Role.AUDITOR),
    ("senior1", "Finance Director", Role.SENIOR_MANAGER),
)

ROUND_LABEL = "FY-Q3 reforecast"
TEMPLATE_NAME = "Corporate Budget"

_SECTION_ITEMS: dict[str, tuple[str, ...]] = {
    "Customer Sales": ("Licence revenue", "Services revenue", "Hardware revenue"),
    "Employee Overheads": ("Salaries", "Contract staff", "Training", "Travel and expenses"),
    "Computer Assets": ("Hardware purchases", "Software licences"),
    "Property Assets": ("Fit-out", "Furniture"),
    "Rent and Rates": ("Rent", "Business rates", "Utilities"),
    "Other": ("Marketing", "Professional fees", "Sundry"),
}


def build_template_document(draft: bool = False) -> TemplateDocument:
    """The demo budget structure; the draft variant is what the owner first
    drafts before the editor finishes it (one heading differs)."""
    sections = []
    for section_name in SECTION_NAMES:
        entry_names = _SECTION_ITEMS[section_name]
        if draft and section_name == "Employee Overheads":
            entry_names = tuple("Travel" if n == "Travel and expenses" else n for n in entry_names)
        items = [LineItemDef(name=name, kind=ItemKind.ENTRY, locked=False) for name in entry_names]
        items.append(
            LineItemDef(
                name=f"Total {section_name.lower()}",
                kind=ItemKind.COMPUTED,
                formula_text="SUM(" + ",".join(entry_names) + ")",
                locked=True,
            )
        )
        sections.append(TemplateSection(name=section_name, items=tuple(items)))
    return TemplateDocument(sections=tuple(sections))


def seed(engine: "Engine", admin_id: str) -> dict:
    """Create the demo world; requires an existing admin principal."""
    registry = engine.registry
    persona_ids = {}
    for principal_id, display_name, _role in PERSONAS:
        registry.create_principal(admin_id, display_name, principal_id)
        persona_ids[principal_id] = principal_id
    manager_by_key = {}
    for key, _name, manager_id, manager_name in DEPARTMENTS:
        registry.create_principal(admin_id, manager_name, manager_id)
        manager_by_key[key] = manager_id

    department_ids = {}
    for key, name, manager_id, _manager_name in DEPARTMENTS:
        department_ids[key] = registry.create_department(admin_id, name, parent_manager=manager_id).id

    for principal_id, _display_name, role in PERSONAS:
        engine.access.grant(admin_id, principal_id, role, all_departments=True)
    for key, manager_id in manager_by_key.items():
        engine.access.grant(admin_id, manager_id, Role.USER, departments=[department_ids[key]])

    section_ids = [registry.create_section(admin_id, name).id for name in SECTION_NAMES]

    cost_centres = []
    for code, name, dept_key, dormant, _pattern in COST_CENTRE_ROWS:
        cost_centre = registry.create_cost_centre(admin_id, code, name, department_ids[dept_key])
        if dormant:
            cost_centre = registry.set_cost_centre_dormant(admin_id, cost_centre.id, True)
        cost_centres.append(cost_centre)

    # Structure workflow: owner drafts, editor finishes, auditor passes,
    # owner releases.
    draft = engine.templates.create_template("owner1", TEMPLATE_NAME, build_template_document(draft=True))
    engine.templates.edit_wip("editor1", draft.id, build_template_document())
    engine.templates.submit_for_audit("editor1", draft.id)
    engine.templates.audit_decision("auditor1", draft.id, AuditVerdict.PASS, "structure lint clean")
    live = engine.templates.release_live("owner1", draft.id)

    budget_round = registry.open_round(admin_id, ROUND_LABEL)
    slots = engine.budget.seed_from_template(admin_id, budget_round.id, live.template_id)

    for cost_centre, (_code, _name, dept_key, _dormant, pattern) in zip(cost_centres, COST_CENTRE_ROWS):
        manager_id = manager_by_key[dept_key]
        for section_id, glyph in zip(section_ids, pattern):
            if glyph == "X":
                engine.readiness.set_status(
                    admin_id, budget_round.id, 1, cost_centre.id, section_id, SectionProgress.NOT_APPLICABLE
                )
            else:
                engine.readiness.set_status(
                    manager_id, budget_round.id, 1, cost_centre.id, section_id, SectionProgress.COMPLETED
                )

    summary = {
        "departments": len(DEPARTMENTS),
        "cost_centres": len(cost_centres),
        "sections": len(section_ids),
        "principals": len(PERSONAS) + len(DEPARTMENTS) + 1,
        "template_id": live.template_id,
        "live_version_id": live.id,
        "round_id": budget_round.id,
        "vocabulary_slots": slots,
    }
    with engine.operation(admin_id, Action.ADMIN_REGISTRY, "demo/seed") as op:
        engine.access.require(admin_id, Action.ADMIN_REGISTRY)
        op.detail = f"cost_centres={summary['cost_centres']} sections={summary['sections']} round={summary['round_id']}"
    return summary
