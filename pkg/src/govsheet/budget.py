"""Keyed budget data store: scoped writes, always-current reads, data-version
control and actuals ingestion.

Data and structure stay separate: cells are keyed by (round, data version,
cost centre, section, line item, period) and the valid (section, line item)
vocabulary for a round is derived from the live template's entry items.
Amounts are integer minor currency units throughout, so consolidation is
bit-reproducible. Freezing a data version is irreversible; the next version
opens pre-populated with a full copy of the frozen cells and statuses.
"""

from __future__ import annotations

import csv
import io
import re
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import (
    InvalidState,
    MalformedRow,
    NoLiveTemplate,
    RoundNotOpen,
    UnknownCostCentre,
    UnknownKeyComponent,
    UnknownRound,
    UnknownVersion,
    VersionFrozen,
)
from .model import (
    Action,
    ActualsRecord,
    BudgetCell,
    BudgetKey,
    DataVersion,
    DataVersionState,
    RoundState,
    RoundVocabulary,
    data_version_key,
)

if TYPE_CHECKING:
    from .engine import Engine
    from .store import Transaction

ACTUALS_HEADER = ["fiscal", "cost_centre", "section", "line_item", "period", "amount_cents"]
_INT_RE = re.compile(r"^-?\d+$")

# Round states in which data entry may continue: the open round itself, and a
# round under management consideration (departments work on the editable next
# version while the frozen one is being considered).
_WRITABLE_ROUND_STATES = frozenset({RoundState.OPEN, RoundState.UNDER_CONSIDERATION})


class BudgetStore:
    def __init__(self, engine: "Engine"):
        self._engine = engine

    # -- version plumbing (called inside other modules' transactions) -------------

    def create_version_in(self, txn: "Transaction", round_id: str, version: int) -> DataVersion:
        data_version = DataVersion(round_id=round_id, version=version, state=DataVersionState.EDITABLE)
        txn.put("data_version", data_version.storage_key(), data_version)
        return data_version

    def editable_version_in(self, txn: "Transaction", round_id: str) -> DataVersion | None:
        versions = [v for v in txn.table("data_version").values() if v.round_id == round_id]
        editable = [v for v in versions if v.state == DataVersionState.EDITABLE]
        return max(editable, key=lambda v: v.version) if editable else None

    def freeze_current_in(self, txn: "Transaction", round_id: str) -> int | None:
        current = self.editable_version_in(txn, round_id)
        if current is None:
            return None
        frozen = current.model_copy(update={"state": DataVersionState.FROZEN})
        txn.put("data_version", frozen.storage_key(), frozen)
        return frozen.version

    def freeze_and_open_next_in(self, txn: "Transaction", round_id: str, actor: str) -> tuple[int, int]:
        """Freeze the editable version and open its successor as a full copy
        of cells and readiness statuses."""
        current = self.editable_version_in(txn, round_id)
        if current is None:
            raise InvalidState(f"round {round_id} has no editable data version")
        frozen_version = current.version
        next_version = current.version + 1
        self.freeze_current_in(txn, round_id)
        self.create_version_in(txn, round_id, next_version)
        now = self._engine.now_str()
        for cell in list(txn.table("cell").values()):
            if cell.key.round_id == round_id and cell.key.data_version == frozen_version:
                copied = cell.model_copy(update={"key": cell.key.model_copy(update={"data_version": next_version})})
                txn.put("cell", copied.key.storage_key(), copied)
        for status in list(txn.table("status").values()):
            if status.round_id == round_id and status.data_version == frozen_version:
                copied_status = status.model_copy(update={"data_version": next_version, "set_at": now})
                txn.put("status", copied_status.storage_key(), copied_status)
        return frozen_version, next_version

    # -- operations ---------------------------------------------------------------

    def open_next_version(self, admin_id: str, round_id: str) -> DataVersion:
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, f"budget/{round_id}/next-version") as op:
            engine.access.require(admin_id, Action.ADMIN_REGISTRY)
            if op.txn.get("round", round_id) is None:
                raise UnknownRound(round_id)
            frozen, opened = self.freeze_and_open_next_in(op.txn, round_id, admin_id)
            op.detail = f"froze v{frozen} opened v{opened}"
        return engine.store.get("data_version", data_version_key(round_id, opened))

    def put_cell(self, principal_id: str, key: BudgetKey, amount_cents: int) -> BudgetCell:
        engine = self._engine
        target = f"budget/{key.round_id}/v{key.data_version}/{key.cost_centre_id}/{key.section_id}/{key.line_item}/{key.period}"
        with engine.operation(principal_id, Action.WRITE_BUDGET, target) as op:
            engine.access.require(principal_id, Action.WRITE_BUDGET)
            cost_centre = op.txn.get("cost_centre", key.cost_centre_id)
            if cost_centre is None:
                raise UnknownKeyComponent(f"cost centre {key.cost_centre_id}")
            engine.access.require(principal_id, Action.WRITE_BUDGET, {cost_centre.department_id})
            if op.txn.get("section", key.section_id) is None:
                raise UnknownKeyComponent(f"section {key.section_id}")
            budget_round = op.txn.get("round", key.round_id)
            if budget_round is None:
                raise UnknownKeyComponent(f"round {key.round_id}")
            vocabulary: RoundVocabulary | None = op.txn.get("vocab", key.round_id)
            if vocabulary is None or (key.section_id, key.line_item) not in {
                tuple(slot) for slot in vocabulary.slots
            }:
                raise UnknownKeyComponent(f"line item {key.line_item!r} not registered for section {key.section_id}")
            if budget_round.state not in _WRITABLE_ROUND_STATES:
                raise RoundNotOpen(f"round {key.round_id} is {budget_round.state.value}")
            data_version = op.txn.get("data_version", data_version_key(key.round_id, key.data_version))
            if data_version is None:
                raise UnknownKeyComponent(f"data version {key.data_version} of round {key.round_id}")
            if data_version.state != DataVersionState.EDITABLE:
                raise VersionFrozen(f"data version {key.data_version} of round {key.round_id} is frozen")
            storage_key = key.storage_key()
            old: BudgetCell | None = op.txn.get("cell", storage_key)
            cell = BudgetCell(
                key=key,
                amount_cents=amount_cents,
                entered_by=principal_id,
                entered_at=engine.now_str(),
            )
            op.txn.put("cell", storage_key, cell)
            op.detail = f"old={old.amount_cents if old else 'none'} new={amount_cents}"
        return cell

    def _resolve_version(self, round_id: str, data_version: int) -> None:
        store = self._engine.store
        if store.get("round", round_id) is None or store.get("data_version", data_version_key(round_id, data_version)) is None:
            raise UnknownVersion(f"round {round_id} data version {data_version}")

    def _collect_slice(
        self,
        principal_id: str,
        round_id: str,
        data_version: int,
        cost_centres: Iterable[str] | None,
        sections: Iterable[str] | None,
        periods: Iterable[int] | None,
    ) -> list[BudgetCell]:
        engine = self._engine
        self._resolve_version(round_id, data_version)
        visible = engine.access.visible_departments(principal_id)
        cc_filter = set(cost_centres) if cost_centres is not None else None
        section_filter = set(sections) if sections is not None else None
        period_filter = set(periods) if periods is not None else None
        cc_table = engine.store.table("cost_centre")
        section_table = engine.store.table("section")
        cells = []
        for cell in engine.store.table("cell").values():
            key = cell.key
            if key.round_id != round_id or key.data_version != data_version:
                continue
            cost_centre = cc_table.get(key.cost_centre_id)
            if cost_centre is None or cost_centre.department_id not in visible:
                continue
            if cc_filter is not None and key.cost_centre_id not in cc_filter:
                continue
            if section_filter is not None and key.section_id not in section_filter:
                continue
            if period_filter is not None and key.period not in period_filter:
                continue
            cells.append(cell)
        cells.sort(
            key=lambda c: (
                cc_table[c.key.cost_centre_id].code,
                section_table[c.key.section_id].name,
                c.key.line_item,
                c.key.period,
            )
        )
        return cells

    def get_slice(
        self,
        principal_id: str,
        round_id: str,
        data_version: int,
        cost_centres: Iterable[str] | None = None,
        sections: Iterable[str] | None = None,
        periods: Iterable[int] | None = None,
    ) -> list[BudgetCell]:
        """Committed cells inside (filter ∩ caller's visible departments)."""
        engine = self._engine
        with engine.operation(principal_id, Action.READ_BUDGET, f"budget/{round_id}/v{data_version}") as op:
            engine.access.require(principal_id, Action.READ_BUDGET)
            cells = self._collect_slice(principal_id, round_id, data_version, cost_centres, sections, periods)
            op.detail = f"cells={len(cells)}"
        return cells

    def slice_csv(
        self,
        principal_id: str,
        round_id: str,
        data_version: int,
        cost_centres: Iterable[str] | None = None,
        sections: Iterable[str] | None = None,
        periods: Iterable[int] | None = None,
    ) -> str:
        """Slice export in the actuals column layout plus data_version."""
        engine = self._engine
        with engine.operation(principal_id, Action.READ_BUDGET, f"budget/{round_id}/v{data_version}/export") as op:
            engine.access.require(principal_id, Action.READ_BUDGET)
            cells = self._collect_slice(principal_id, round_id, data_version, cost_centres, sections, periods)
            label = engine.store.get("round", round_id).label
            cc_table = engine.store.table("cost_centre")
            section_table = engine.store.table("section")
            lines = [",".join(ACTUALS_HEADER + ["data_version"])]
            for cell in cells:
                lines.append(
                    ",".join(
                        (
                            label,
                            cc_table[cell.key.cost_centre_id].code,
                            section_table[cell.key.section_id].name,
                            cell.key.line_item,
                            str(cell.key.period),
                            str(cell.amount_cents),
                            str(cell.key.data_version),
                        )
                    )
                )
            op.detail = f"cells={len(cells)}"
        return "\n".join(lines) + "\n"

    # -- vocabulary ----------------------------------------------------------------

    def seed_from_template(
        self,
        admin_id: str,
        round_id: str,
        template_id: str | None = None,
        copy_from_round: str | None = None,
    ) -> int:
        """Register the round's (section, line item) vocabulary from the live
        template's entry items; optionally copy a prior round's final cells."""
        engine = self._engine
        with engine.operation(admin_id, Action.ADMIN_REGISTRY, f"budget/{round_id}/seed") as op:
            engine.access.require(admin_id, Action.ADMIN_REGISTRY)
            budget_round = op.txn.get("round", round_id)
            if budget_round is None:
                raise UnknownRound(round_id)
            if budget_round.state != RoundState.OPEN:
                raise RoundNotOpen(f"round {round_id} is {budget_round.state.value}")
            live = engine.templates.live_version(template_id)
            if live is None:
                raise NoLiveTemplate(template_id or "no live template version")
            sections_by_name = {s.name: s.id for s in op.txn.table("section").values()}
            slots: list[tuple[str, str]] = []
            for doc_section in live.document.sections:
                section_id = sections_by_name.get(doc_section.name)
                if section_id is None:
                    raise UnknownKeyComponent(f"template section {doc_section.name!r} not in registry")
                for item in doc_section.items:
                    if item.kind.value == "Entry":
                        slots.append((section_id, item.name))
            op.txn.put(
                "vocab",
                round_id,
                RoundVocabulary(round_id=round_id, template_version_id=live.id, slots=tuple(slots)),
            )
            copied = 0
            if copy_from_round is not None:
                copied = self._copy_prior_round_in(op.txn, admin_id, copy_from_round, round_id, set(slots))
            op.detail = f"slots={len(slots)} template={live.id} copied_cells={copied}"
        return len(slots)

    def _copy_prior_round_in(
        self, txn: "Transaction", actor: str, source_round: str, target_round: str, slots: set[tuple[str, str]]
    ) -> int:
        if txn.get("round", source_round) is None:
            raise UnknownRound(source_round)
        versions = [v.version for v in txn.table("data_version").values() if v.round_id == source_round]
        if not versions:
            return 0
        final_version = max(versions)
        target_version = self.editable_version_in(txn, target_round)
        if target_version is None:
            raise InvalidState(f"round {target_round} has no editable data version")
        now = self._engine.now_str()
        copied = 0
        for cell in list(txn.table("cell").values()):
            key = cell.key
            if key.round_id != source_round or key.data_version != final_version:
                continue
            if (key.section_id, key.line_item) not in slots:
                continue
            new_key = key.model_copy(update={"round_id": target_round, "data_version": target_version.version})
            txn.put(
                "cell",
                new_key.storage_key(),
                BudgetCell(key=new_key, amount_cents=cell.amount_cents, entered_by=actor, entered_at=now),
            )
            copied += 1
        return copied

    # -- actuals -------------------------------------------------------------------

    def import_actuals(self, admin_id: str, fiscal_label: str, csv_text: str) -> dict:
        """All-or-nothing CSV import; any rejected row aborts with its line number."""
        engine = self._engine
        with engine.operation(admin_id, Action.IMPORT_ACTUALS, f"actuals/{fiscal_label}") as op:
            engine.access.require(admin_id, Action.IMPORT_ACTUALS)
            records = self._parse_actuals(fiscal_label, csv_text)
            removed = 0
            for key, record in list(op.txn.table("actual").items()):
                if record.fiscal_label == fiscal_label:
                    op.txn.delete("actual", key)
                    removed += 1
            for record in records:
                op.txn.put("actual", record.storage_key(), record)
            op.detail = f"rows={len(records)} replaced={removed}"
        return {"rows": len(records), "rejected": 0}

    def _parse_actuals(self, fiscal_label: str, csv_text: str) -> list[ActualsRecord]:
        engine = self._engine
        reader = csv.reader(io.StringIO(csv_text))
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "empty input") from None
        if [h.strip() for h in header] != ACTUALS_HEADER:
            raise MalformedRow(1, f"header must be {','.join(ACTUALS_HEADER)}")
        cc_by_code = {cc.code: cc for cc in engine.store.table("cost_centre").values()}
        section_by_name = {s.name: s for s in engine.store.table("section").values()}
        seen: set[str] = set()
        records = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(ACTUALS_HEADER):
                raise MalformedRow(line_no, f"expected {len(ACTUALS_HEADER)} fields, got {len(row)}")
            fiscal, cc_code, section_name, line_item, period_text, amount_text = (field.strip() for field in row)
            if fiscal != fiscal_label:
                raise MalformedRow(line_no, f"fiscal label {fiscal!r} does not match import label {fiscal_label!r}")
            cost_centre = cc_by_code.get(cc_code)
            if cost_centre is None:
                raise UnknownCostCentre(line_no, f"cost centre code {cc_code!r}")
            section = section_by_name.get(section_name)
            if section is None:
                raise MalformedRow(line_no, f"unknown section {section_name!r}")
            if not _INT_RE.match(period_text) or not 1 <= int(period_text) <= 12:
                raise MalformedRow(line_no, f"period {period_text!r} must be an integer 1-12")
            if not _INT_RE.match(amount_text):
                raise MalformedRow(line_no, f"amount {amount_text!r} must be integer cents")
            record = ActualsRecord(
                fiscal_label=fiscal_label,
                cost_centre_id=cost_centre.id,
                section_id=section.id,
                line_item=line_item,
                period=int(period_text),
                amount_cents=int(amount_text),
            )
            if record.storage_key() in seen:
                raise MalformedRow(line_no, "duplicate key within import")
            seen.add(record.storage_key())
            records.append(record)
        return records

    def get_vocabulary(self, principal_id: str, round_id: str) -> RoundVocabulary:
        """The round's enterable (section, line item) headings; what entry
        surfaces render for data users."""
        engine = self._engine
        with engine.operation(principal_id, Action.READ_BUDGET, f"budget/{round_id}/vocabulary") as op:
            engine.access.require(principal_id, Action.READ_BUDGET)
            vocabulary = op.txn.get("vocab", round_id)
            if vocabulary is None:
                if op.txn.get("round", round_id) is None:
                    raise UnknownRound(round_id)
                vocabulary = RoundVocabulary(round_id=round_id, template_version_id="", slots=())
            op.detail = f"slots={len(vocabulary.slots)}"
        return vocabulary

    def list_actuals(self, principal_id: str, fiscal_label: str | None = None) -> list[ActualsRecord]:
        engine = self._engine
        with engine.operation(principal_id, Action.READ_BUDGET, f"actuals/{fiscal_label or 'all'}") as op:
            engine.access.require(principal_id, Action.READ_BUDGET)
            visible = engine.access.visible_departments(principal_id)
            cc_table = engine.store.table("cost_centre")
            records = [
                record
                for record in engine.store.table("actual").values()
                if (fiscal_label is None or record.fiscal_label == fiscal_label)
                and cc_table[record.cost_centre_id].department_id in visible
            ]
            op.detail = f"records={len(records)}"
        return records

    def cells_of_version(self, round_id: str, data_version: int) -> list[BudgetCell]:
        """Unscoped internal read used by consolidation (scope applied there)."""
        return [
            cell
            for cell in self._engine.store.table("cell").values()
            if cell.key.round_id == round_id and cell.key.data_version == data_version
        ]

    def fiscal_labels(self) -> list[str]:
        return sorted({record.fiscal_label for record in self._engine.store.table("actual").values()})

    def vocabulary_for(self, round_id: str) -> Sequence[tuple[str, str]]:
        vocabulary = self._engine.store.get("vocab", round_id)
        return tuple(tuple(slot) for slot in vocabulary.slots) if vocabulary else ()
