"""Role- and department-scoped authorization.

``authorize`` is a pure function of committed grants: a principal may
perform an action when some grant's role confers it and, for
department-scoped resources, every department in the resource scope falls
inside the principal's visible departments. Absence of a grant is denial.
Denials carry a machine-readable reason code; callers log denied attempts
as policy-violation events through the operation wrapper.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Iterable

from .errors import InvalidScope, PermissionDenied, UnknownDepartment, UnknownGrant, UnknownPrincipal
from .model import ROLE_ACTIONS, SEGREGATED_COUNTERPART, Action, Decision, Principal, Role, RoleGrant

if TYPE_CHECKING:
    from .engine import Engine


class AccessControl:
    def __init__(self, engine: "Engine"):
        self._engine = engine

    # -- pure decision functions --------------------------------------------------

    def _principal(self, principal_id: str) -> Principal:
        principal = self._engine.store.get("principal", principal_id)
        if principal is None:
            raise UnknownPrincipal(principal_id)
        return principal

    def grants_for(self, principal_id: str) -> list[RoleGrant]:
        return [g for g in self._engine.store.table("grant").values() if g.principal_id == principal_id]

    def roles_of(self, principal_id: str) -> set[Role]:
        return {g.role for g in self.grants_for(principal_id)}

    def visible_departments(self, principal_id: str) -> set[str]:
        """Union of department scopes across all of the principal's grants."""
        self._principal(principal_id)
        visible: set[str] = set()
        for grant in self.grants_for(principal_id):
            if grant.all_departments:
                return set(self._engine.store.table("department"))
            visible.update(grant.departments)
        return visible

    def authorize(self, principal_id: str, action: Action, resource_scope: Iterable[str] | None = None) -> Decision:
        principal = self._principal(principal_id)
        if not principal.active:
            return Decision(allowed=False, reason=f"INACTIVE_PRINCIPAL: {principal_id} is deactivated")
        grants = self.grants_for(principal_id)
        if not any(action in ROLE_ACTIONS[g.role] for g in grants):
            counterpart = SEGREGATED_COUNTERPART.get(action)
            if counterpart is not None and any(g.role == counterpart for g in grants):
                return Decision(
                    allowed=False,
                    reason=f"SEGREGATION_ROLE: {counterpart.value} may not perform {action.value}",
                )
            return Decision(allowed=False, reason=f"NO_ROLE: no grant of {principal_id} confers {action.value}")
        if resource_scope is not None:
            wanted = set(resource_scope)
            if wanted:
                visible = self.visible_departments(principal_id)
                missing = sorted(wanted - visible)
                if missing:
                    return Decision(
                        allowed=False,
                        reason=f"OUT_OF_SCOPE: department(s) {', '.join(missing)} outside caller scope",
                    )
        return Decision(allowed=True, reason="ALLOWED")

    def require(self, principal_id: str, action: Action, resource_scope: Iterable[str] | None = None) -> None:
        decision = self.authorize(principal_id, action, resource_scope)
        if not decision.allowed:
            code, _, message = decision.reason.partition(": ")
            raise PermissionDenied(code, message or decision.reason)

    # -- grant maintenance ----------------------------------------------------------

    def grant(
        self,
        admin_id: str,
        principal_id: str,
        role: Role,
        departments: Iterable[str] | None = None,
        all_departments: bool = False,
    ) -> RoleGrant:
        """Upsert a grant; repeated (principal, role, department) triples collapse."""
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, f"grants/{principal_id}") as op:
            self.require(admin_id, Action.ADMIN_REGISTRY)
            self._principal(principal_id)
            departments = tuple(dict.fromkeys(departments or ()))
            if not all_departments and not departments:
                raise InvalidScope("explicit scope must name at least one department")
            for department_id in departments:
                if op.txn.get("department", department_id) is None:
                    raise UnknownDepartment(department_id)
            existing = next(
                (g for g in self.grants_for(principal_id) if g.role == role),
                None,
            )
            if existing is not None:
                merged = existing.model_copy(
                    update={
                        "all_departments": existing.all_departments or all_departments,
                        "departments": ()
                        if (existing.all_departments or all_departments)
                        else tuple(dict.fromkeys(existing.departments + departments)),
                    }
                )
                op.txn.put("grant", merged.id, merged)
                op.detail = self._grant_detail(merged, merged=True)
                return merged
            grant_id = engine.next_id(op.txn, "grant", "G")
            grant = RoleGrant(
                id=grant_id,
                principal_id=principal_id,
                role=role,
                all_departments=all_departments,
                departments=() if all_departments else departments,
            )
            op.txn.put("grant", grant_id, grant)
            op.detail = self._grant_detail(grant)
            return grant

    def revoke(self, admin_id: str, grant_id: str) -> None:
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, f"grants/{grant_id}") as op:
            self.require(admin_id, Action.ADMIN_REGISTRY)
            grant = op.txn.get("grant", grant_id)
            if grant is None:
                raise UnknownGrant(grant_id)
            op.txn.delete("grant", grant_id)
            op.detail = f"revoked {self._grant_detail(grant)}"

    def list_grants(self, admin_id: str) -> list[RoleGrant]:
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, "grants") as op:
            self.require(admin_id, Action.ADMIN_REGISTRY)
            grants = list(engine.store.table("grant").values())
            op.detail = f"grants={len(grants)}"
        return grants

    @staticmethod
    def _grant_detail(grant: RoleGrant, merged: bool = False) -> str:
        scope = "all-departments" if grant.all_departments else ",".join(grant.departments)
        prefix = "merged " if merged else ""
        return f"{prefix}{grant.id}: {grant.principal_id} {grant.role.value} [{scope}]"
