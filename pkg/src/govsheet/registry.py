"""Reference data registry: principals, departments, cost centres, sections,
and the budgeting-round lifecycle.

Cost centres are deactivated (marked dormant), never deleted, so historical
budget rows always resolve. At most one round is active (non-closed) at a
time; each revision cycle freezes the previous data version and re-opens the
round with an incremented cycle number.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from .errors import (
    DuplicateCode,
    DuplicateName,
    InvalidState,
    RoundAlreadyOpen,
    UnknownDepartment,
    UnknownPrincipal,
    UnknownRound,
)
from .model import (
    Action,
    BudgetRound,
    CostCentre,
    Department,
    Principal,
    RoundState,
    Section,
)

if TYPE_CHECKING:
    from .engine import Engine


class Registry:
    def __init__(self, engine: "Engine"):
        self._engine = engine

    # -- principals -----------------------------------------------------------

    def create_principal(self, admin_id: str, display_name: str, principal_id: str | None = None) -> Principal:
        engine = self._engine
        target = f"registry/user/{principal_id or 'new'}"
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, target) as op:
            engine.access.require(admin_id, Action.ADMIN_REGISTRY)
            if principal_id is None:
                principal_id = engine.next_id(op.txn, "principal", "P")
            elif op.txn.get("principal", principal_id) is not None:
                raise DuplicateCode(f"principal id {principal_id} already exists")
            principal = Principal(id=principal_id, display_name=display_name)
            op.txn.put("principal", principal_id, principal)
            op.detail = f"{principal_id}: {display_name}"
        return principal

    def set_principal_active(self, admin_id: str, principal_id: str, active: bool) -> Principal:
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, f"registry/user/{principal_id}") as op:
            engine.access.require(admin_id, Action.ADMIN_REGISTRY)
            principal = op.txn.get("principal", principal_id)
            if principal is None:
                raise UnknownPrincipal(principal_id)
            principal = principal.model_copy(update={"active": active})
            op.txn.put("principal", principal_id, principal)
            op.detail = f"{principal_id}: active={active}"
        return principal

    # -- departments / sections / cost centres -----------------------------------

    def create_department(self, admin_id: str, name: str, parent_manager: str | None = None) -> Department:
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, "registry/department") as op:
            engine.access.require(admin_id, Action.ADMIN_REGISTRY)
            if parent_manager is not None and op.txn.get("principal", parent_manager) is None:
                raise UnknownPrincipal(parent_manager)
            department_id = engine.next_id(op.txn, "department", "D")
            department = Department(id=department_id, name=name, parent_manager=parent_manager)
            op.txn.put("department", department_id, department)
            op.detail = f"{department_id}: {name}"
        return department

    def create_section(self, admin_id: str, name: str) -> Section:
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, "registry/section") as op:
            engine.access.require(admin_id, Action.ADMIN_REGISTRY)
            if any(s.name == name for s in op.txn.table("section").values()):
                raise DuplicateName(f"section name {name!r} already registered")
            section_id = engine.next_id(op.txn, "section", "S")
            section = Section(id=section_id, name=name)
            op.txn.put("section", section_id, section)
            op.detail = f"{section_id}: {name}"
        return section

    def create_cost_centre(self, admin_id: str, code: str, name: str, department_id: str) -> CostCentre:
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, f"registry/cost-centre/{code}") as op:
            engine.access.require(admin_id, Action.ADMIN_REGISTRY)
            if any(cc.code == code for cc in op.txn.table("cost_centre").values()):
                raise DuplicateCode(f"cost centre code {code!r} already registered")
            if op.txn.get("department", department_id) is None:
                raise UnknownDepartment(department_id)
            cc_id = engine.next_id(op.txn, "cost_centre", "CC")
            cost_centre = CostCentre(id=cc_id, code=code, name=name, department_id=department_id)
            op.txn.put("cost_centre", cc_id, cost_centre)
            op.detail = f"{cc_id}: {code} {name} in {department_id}"
        return cost_centre

    def set_cost_centre_dormant(self, admin_id: str, cost_centre_id: str, dormant: bool) -> CostCentre:
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, f"registry/cost-centre/{cost_centre_id}") as op:
            engine.access.require(admin_id, Action.ADMIN_REGISTRY)
            cost_centre = op.txn.get("cost_centre", cost_centre_id)
            if cost_centre is None:
                raise UnknownDepartment(cost_centre_id)
            cost_centre = cost_centre.model_copy(update={"dormant": dormant})
            op.txn.put("cost_centre", cost_centre_id, cost_centre)
            op.detail = f"{cost_centre_id}: dormant={dormant}"
        return cost_centre

    # -- rounds ----------------------------------------------------------------------

    def open_round(self, admin_id: str, label: str) -> BudgetRound:
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, "rounds") as op:
            engine.access.require(admin_id, Action.ADMIN_REGISTRY)
            active = [r for r in op.txn.table("round").values() if r.state != RoundState.CLOSED]
            if active:
                raise RoundAlreadyOpen(f"round {active[0].id} is still {active[0].state.value}")
            round_id = engine.next_id(op.txn, "round", "R")
            budget_round = BudgetRound(id=round_id, label=label, state=RoundState.OPEN, cycle_number=1)
            op.txn.put("round", round_id, budget_round)
            engine.budget.create_version_in(op.txn, round_id, 1)
            engine.readiness.init_statuses_in(op.txn, round_id, 1, admin_id)
            op.detail = f"{round_id}: {label} cycle 1"
        return budget_round

    def _round(self, txn, round_id: str) -> BudgetRound:
        budget_round = txn.get("round", round_id)
        if budget_round is None:
            raise UnknownRound(round_id)
        return budget_round

    def submit_round_for_consideration(self, admin_id: str, round_id: str) -> BudgetRound:
        """Open -> UnderConsideration; the considered data version freezes and a
        copied next version opens so departments keep working in parallel."""
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, f"round/{round_id}") as op:
            engine.access.require(admin_id, Action.ADMIN_REGISTRY)
            budget_round = self._round(op.txn, round_id)
            if budget_round.state != RoundState.OPEN:
                raise InvalidState(f"round {round_id} is {budget_round.state.value}, not Open")
            frozen, opened = engine.budget.freeze_and_open_next_in(op.txn, round_id, admin_id)
            budget_round = budget_round.model_copy(update={"state": RoundState.UNDER_CONSIDERATION})
            op.txn.put("round", round_id, budget_round)
            op.detail = f"under consideration; froze v{frozen} opened v{opened}"
        return budget_round

    def approve_round(self, admin_id: str, round_id: str) -> BudgetRound:
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, f"round/{round_id}") as op:
            engine.access.require(admin_id, Action.ADMIN_REGISTRY)
            budget_round = self._round(op.txn, round_id)
            if budget_round.state != RoundState.UNDER_CONSIDERATION:
                raise InvalidState(f"round {round_id} is {budget_round.state.value}, not UnderConsideration")
            budget_round = budget_round.model_copy(update={"state": RoundState.APPROVED})
            op.txn.put("round", round_id, budget_round)
            op.detail = "approved"
        return budget_round

    def advance_cycle(self, admin_id: str, round_id: str) -> BudgetRound:
        """UnderConsideration -> Open with cycle_number + 1. The prior cycle's
        data version was frozen when consideration started."""
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, f"round/{round_id}") as op:
            engine.access.require(admin_id, Action.ADMIN_REGISTRY)
            budget_round = self._round(op.txn, round_id)
            if budget_round.state != RoundState.UNDER_CONSIDERATION:
                raise InvalidState(f"round {round_id} is {budget_round.state.value}, not UnderConsideration")
            budget_round = budget_round.model_copy(
                update={"state": RoundState.OPEN, "cycle_number": budget_round.cycle_number + 1}
            )
            op.txn.put("round", round_id, budget_round)
            op.detail = f"cycle {budget_round.cycle_number}"
        return budget_round

    def close_round(self, admin_id: str, round_id: str) -> BudgetRound:
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, f"round/{round_id}") as op:
            engine.access.require(admin_id, Action.ADMIN_REGISTRY)
            budget_round = self._round(op.txn, round_id)
            if budget_round.state == RoundState.CLOSED:
                raise InvalidState(f"round {round_id} already closed")
            engine.budget.freeze_current_in(op.txn, round_id)
            budget_round = budget_round.model_copy(update={"state": RoundState.CLOSED})
            op.txn.put("round", round_id, budget_round)
            op.detail = "closed"
        return budget_round

    # -- audited reads ------------------------------------------------------------

    def list_principals(self, admin_id: str) -> list[Principal]:
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, "registry/users") as op:
            engine.access.require(admin_id, Action.ADMIN_REGISTRY)
            principals = list(engine.store.table("principal").values())
            op.detail = f"users={len(principals)}"
        return principals

    def list_departments(self, principal_id: str) -> list[Department]:
        engine = self._engine
        with engine.operation(principal_id, Action.READ_BUDGET, "registry/departments") as op:
            engine.access.require(principal_id, Action.READ_BUDGET)
            visible = engine.access.visible_departments(principal_id)
            departments = [d for d in engine.store.table("department").values() if d.id in visible]
            op.detail = f"departments={len(departments)}"
        return departments

    def list_cost_centres(self, principal_id: str) -> list[CostCentre]:
        engine = self._engine
        with engine.operation(principal_id, Action.READ_BUDGET, "registry/cost-centres") as op:
            engine.access.require(principal_id, Action.READ_BUDGET)
            visible = engine.access.visible_departments(principal_id)
            cost_centres = [
                cc for cc in engine.store.table("cost_centre").values() if cc.department_id in visible
            ]
            op.detail = f"cost_centres={len(cost_centres)}"
        return cost_centres

    def list_sections(self, principal_id: str) -> list[Section]:
        engine = self._engine
        with engine.operation(principal_id, Action.READ_BUDGET, "registry/sections") as op:
            engine.access.require(principal_id, Action.READ_BUDGET)
            sections = list(engine.store.table("section").values())
            op.detail = f"sections={len(sections)}"
        return sections

    def list_rounds(self, principal_id: str) -> list[BudgetRound]:
        engine = self._engine
        with engine.operation(principal_id, Action.READ_BUDGET, "rounds") as op:
            engine.access.require(principal_id, Action.READ_BUDGET)
            rounds = list(engine.store.table("round").values())
            op.detail = f"rounds={len(rounds)}"
        return rounds
