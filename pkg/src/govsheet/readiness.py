"""Readiness tracking and the consolidation dependency gate.

Each (cost centre × section) pair of a round carries a declared status:
NotStarted / InProgress / Completed / NotApplicable. NotApplicable encodes
structure (the section does not apply to that cost centre) rather than
progress, so only owners and admins may set it. Downstream processing over
a scope is gated on every applicable pair being Completed or NotApplicable.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Iterable

from .errors import PermissionDenied, UnknownKeyComponent, UnknownRound, UnknownVersion, VersionFrozen
from .model import (
    GATE_SATISFIED,
    STATUS_GLYPH,
    Action,
    BlockingEntry,
    DataVersionState,
    GateResult,
    Role,
    SectionProgress,
    SectionStatus,
    data_version_key,
    status_key,
)

if TYPE_CHECKING:
    from .engine import Engine
    from .store import Transaction

NOT_APPLICABLE_SETTERS = frozenset({Role.OWNER, Role.ADMIN})


class Readiness:
    def __init__(self, engine: "Engine"):
        self._engine = engine

    # -- round plumbing -------------------------------------------------------------

    def init_statuses_in(self, txn: "Transaction", round_id: str, data_version: int, actor: str) -> int:
        """Materialize NotStarted for every (cost centre × section) pair."""
        now = self._engine.now_str()
        count = 0
        for cc in txn.table("cost_centre").values():
            for section in txn.table("section").values():
                status = SectionStatus(
                    round_id=round_id,
                    data_version=data_version,
                    cost_centre_id=cc.id,
                    section_id=section.id,
                    status=SectionProgress.NOT_STARTED,
                    set_by=actor,
                    set_at=now,
                )
                txn.put("status", status.storage_key(), status)
                count += 1
        return count

    # -- operations ---------------------------------------------------------------

    def set_status(
        self,
        principal_id: str,
        round_id: str,
        data_version: int,
        cost_centre_id: str,
        section_id: str,
        status: SectionProgress,
    ) -> SectionStatus:
        engine = self._engine
        target = f"status/{round_id}/v{data_version}/{cost_centre_id}/{section_id}"
        with engine.operation(principal_id, Action.SET_STATUS, target) as op:
            engine.access.require(principal_id, Action.SET_STATUS)
            cost_centre = op.txn.get("cost_centre", cost_centre_id)
            if cost_centre is None:
                raise UnknownKeyComponent(f"cost centre {cost_centre_id}")
            if op.txn.get("section", section_id) is None:
                raise UnknownKeyComponent(f"section {section_id}")
            engine.access.require(principal_id, Action.SET_STATUS, {cost_centre.department_id})
            if status == SectionProgress.NOT_APPLICABLE:
                roles = engine.access.roles_of(principal_id)
                if not roles & NOT_APPLICABLE_SETTERS:
                    raise PermissionDenied(
                        "NOT_APPLICABLE_RESTRICTED",
                        "NotApplicable encodes structure and is reserved to Owner/Admin",
                    )
            if op.txn.get("round", round_id) is None:
                raise UnknownRound(round_id)
            version_row = op.txn.get("data_version", data_version_key(round_id, data_version))
            if version_row is None:
                raise UnknownVersion(f"round {round_id} data version {data_version}")
            if version_row.state != DataVersionState.EDITABLE:
                raise VersionFrozen(f"data version {data_version} of round {round_id} is frozen")
            old = op.txn.get("status", status_key(round_id, data_version, cost_centre_id, section_id))
            record = SectionStatus(
                round_id=round_id,
                data_version=data_version,
                cost_centre_id=cost_centre_id,
                section_id=section_id,
                status=status,
                set_by=principal_id,
                set_at=engine.now_str(),
            )
            op.txn.put("status", record.storage_key(), record)
            op.detail = f"{old.status.value if old else 'unset'} -> {status.value}"
        return record

    def _resolve_version(self, round_id: str, data_version: int) -> None:
        store = self._engine.store
        if store.get("round", round_id) is None:
            raise UnknownRound(round_id)
        if store.get("data_version", data_version_key(round_id, data_version)) is None:
            raise UnknownVersion(f"round {round_id} data version {data_version}")

    def _status_of(self, round_id: str, data_version: int, cost_centre_id: str, section_id: str) -> SectionProgress:
        record = self._engine.store.get("status", status_key(round_id, data_version, cost_centre_id, section_id))
        return record.status if record is not None else SectionProgress.NOT_STARTED

    def get_status(
        self, principal_id: str, round_id: str, data_version: int, cost_centre_id: str, section_id: str
    ) -> SectionStatus:
        """Single readiness cell; untouched pairs read as NotStarted."""
        engine = self._engine
        target = f"status/{round_id}/v{data_version}/{cost_centre_id}/{section_id}"
        with engine.operation(principal_id, Action.READ_BUDGET, target) as op:
            engine.access.require(principal_id, Action.READ_BUDGET)
            cost_centre = op.txn.get("cost_centre", cost_centre_id)
            if cost_centre is None:
                raise UnknownKeyComponent(f"cost centre {cost_centre_id}")
            engine.access.require(principal_id, Action.READ_BUDGET, {cost_centre.department_id})
            self._resolve_version(round_id, data_version)
            record = op.txn.get("status", status_key(round_id, data_version, cost_centre_id, section_id))
            if record is None:
                record = SectionStatus(
                    round_id=round_id,
                    data_version=data_version,
                    cost_centre_id=cost_centre_id,
                    section_id=section_id,
                    status=SectionProgress.NOT_STARTED,
                    set_by="",
                    set_at="",
                )
            op.detail = record.status.value
        return record

    def status_matrix(self, principal_id: str, round_id: str, data_version: int) -> dict:
        """One row per visible cost centre, one column per section; untouched
        pairs default to NotStarted."""
        engine = self._engine
        with engine.operation(principal_id, Action.READ_BUDGET, f"status/{round_id}/v{data_version}/matrix") as op:
            engine.access.require(principal_id, Action.READ_BUDGET)
            self._resolve_version(round_id, data_version)
            visible = engine.access.visible_departments(principal_id)
            columns = list(engine.store.table("section").values())
            rows = []
            for cc in engine.store.table("cost_centre").values():
                if cc.department_id not in visible:
                    continue
                rows.append(
                    {
                        "cost_centre_id": cc.id,
                        "code": cc.code,
                        "name": cc.name,
                        "label": cc.label,
                        "department_id": cc.department_id,
                        "dormant": cc.dormant,
                        "statuses": {
                            section.id: self._status_of(round_id, data_version, cc.id, section.id).value
                            for section in columns
                        },
                    }
                )
            op.detail = f"rows={len(rows)} columns={len(columns)}"
        return {
            "round_id": round_id,
            "data_version": data_version,
            "columns": [{"section_id": s.id, "name": s.name} for s in columns],
            "rows": rows,
        }

    def matrix_csv(self, principal_id: str, round_id: str, data_version: int) -> str:
        """Matrix export: cost-centre label column then one glyph column per section."""
        engine = self._engine
        with engine.operation(principal_id, Action.READ_BUDGET, f"status/{round_id}/v{data_version}/matrix.csv") as op:
            engine.access.require(principal_id, Action.READ_BUDGET)
            self._resolve_version(round_id, data_version)
            visible = engine.access.visible_departments(principal_id)
            columns = list(engine.store.table("section").values())
            lines = [",".join(["cost_centre"] + [s.name for s in columns])]
            row_count = 0
            for cc in engine.store.table("cost_centre").values():
                if cc.department_id not in visible:
                    continue
                glyphs = [
                    STATUS_GLYPH[self._status_of(round_id, data_version, cc.id, section.id)] for section in columns
                ]
                lines.append(",".join([cc.label] + glyphs))
                row_count += 1
            op.detail = f"rows={row_count}"
        return "\n".join(lines) + "\n"

    # -- the gate -------------------------------------------------------------------

    def gate_check(self, round_id: str, data_version: int, scope: Iterable[str] | None = None) -> GateResult:
        """Pure dependency check: ready iff every (cost centre in scope ×
        section) status is Completed or NotApplicable."""
        engine = self._engine
        self._resolve_version(round_id, data_version)
        scope_set = set(scope) if scope is not None else set(engine.store.table("department"))
        blocking = []
        sections = list(engine.store.table("section").values())
        for cc in engine.store.table("cost_centre").values():
            if cc.department_id not in scope_set:
                continue
            for section in sections:
                status = self._status_of(round_id, data_version, cc.id, section.id)
                if status not in GATE_SATISFIED:
                    blocking.append(BlockingEntry(cost_centre_id=cc.id, section_id=section.id, status=status))
        return GateResult(ready=not blocking, blocking=tuple(blocking))

    def gate_check_scoped(
        self, principal_id: str, round_id: str, data_version: int, scope: Iterable[str] | None = None
    ) -> GateResult:
        """Gate check as an audited read, scope-restricted to the caller."""
        engine = self._engine
        with engine.operation(principal_id, Action.READ_BUDGET, f"readiness/{round_id}/v{data_version}/gate") as op:
            scope_set = set(scope) if scope is not None else set(engine.store.table("department"))
            engine.access.require(principal_id, Action.READ_BUDGET, scope_set)
            result = self.gate_check(round_id, data_version, scope_set)
            op.detail = f"ready={result.ready} blocking={len(result.blocking)}"
        return result
