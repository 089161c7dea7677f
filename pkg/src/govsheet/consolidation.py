"""Consolidation and KPI reporting over committed budget cells.

Consolidation is an exact integer fold over a committed snapshot, gated on
readiness: a full (non-provisional) report requires every applicable
section in scope to be complete, while senior roles may consolidate early
with the report flagged provisional. Reports carry a verification stamp —
a content hash over the exported totals payload — so a tampered export is
detectable by recomputation.
"""

from __future__ import annotations

import hashlib
from typing import TYPE_CHECKING, Iterable

from .errors import GateBlocked, UnknownComparator, UnknownDepartment, UnknownReport, UnknownVersion
from .model import (
    Action,
    ComparatorKind,
    ConsolidationReport,
    KpiLine,
    KpiReport,
    TotalsEntry,
    data_version_key,
)

if TYPE_CHECKING:
    from .engine import Engine

REPORT_CSV_HEADER = "scope_hash,section,line_item,period,amount_cents"


def scope_hash(scope: Iterable[str]) -> str:
    return hashlib.sha256(",".join(sorted(scope)).encode("utf-8")).hexdigest()[:12]


class Consolidation:
    def __init__(self, engine: "Engine"):
        self._engine = engine

    # -- helpers -----------------------------------------------------------------

    def _resolve_scope(self, txn, scope: Iterable[str] | None) -> set[str]:
        departments = set(self._engine.store.table("department"))
        if scope is None:
            return departments
        scope_set = set(scope)
        unknown = sorted(scope_set - departments)
        if unknown:
            raise UnknownDepartment(", ".join(unknown))
        return scope_set

    def _resolve_version(self, round_id: str, data_version: int) -> None:
        store = self._engine.store
        if store.get("round", round_id) is None or store.get(
            "data_version", data_version_key(round_id, data_version)
        ) is None:
            raise UnknownVersion(f"round {round_id} data version {data_version}")

    def _section_name(self, section_id: str) -> str:
        return self._engine.store.table("section")[section_id].name

    def _sum_cells(
        self, round_id: str, data_version: int, scope: set[str]
    ) -> tuple[dict[tuple[str, str, int], int], dict[str, dict[tuple[str, str, int], int]]]:
        cc_table = self._engine.store.table("cost_centre")
        totals: dict[tuple[str, str, int], int] = {}
        by_cc: dict[str, dict[tuple[str, str, int], int]] = {}
        for cell in self._engine.budget.cells_of_version(round_id, data_version):
            cc = cc_table[cell.key.cost_centre_id]
            if cc.department_id not in scope:
                continue
            key = (cell.key.section_id, cell.key.line_item, cell.key.period)
            totals[key] = totals.get(key, 0) + cell.amount_cents
            per_cc = by_cc.setdefault(cc.id, {})
            per_cc[key] = per_cc.get(key, 0) + cell.amount_cents
        return totals, by_cc

    def _sorted_entries(self, totals: dict[tuple[str, str, int], int]) -> tuple[TotalsEntry, ...]:
        ordered = sorted(totals.items(), key=lambda kv: (self._section_name(kv[0][0]), kv[0][1], kv[0][2]))
        return tuple(
            TotalsEntry(section_id=sid, line_item=line, period=period, amount_cents=amount)
            for (sid, line, period), amount in ordered
        )

    def _csv_rows(self, report_scope_hash: str, entries: Iterable[TotalsEntry]) -> list[str]:
        return [
            ",".join(
                (
                    report_scope_hash,
                    self._section_name(entry.section_id),
                    entry.line_item,
                    str(entry.period),
                    str(entry.amount_cents),
                )
            )
            for entry in entries
        ]

    @staticmethod
    def stamp_of(rows: list[str]) -> str:
        return hashlib.sha256("\n".join(rows).encode("utf-8")).hexdigest()

    def render_csv(self, report: ConsolidationReport) -> str:
        """Deterministic export; the trailer carries the verification stamp."""
        rows = self._csv_rows(report.scope_hash, report.totals)
        return "\n".join([REPORT_CSV_HEADER, *rows, f"#stamp,{self.stamp_of(rows)}"]) + "\n"

    # -- operations ---------------------------------------------------------------

    def consolidate(
        self,
        principal_id: str,
        round_id: str,
        data_version: int,
        scope: Iterable[str] | None = None,
        allow_provisional: bool = False,
    ) -> ConsolidationReport:
        engine = self._engine
        with engine.operation(principal_id, Action.CONSOLIDATE, f"consolidate/{round_id}/v{data_version}") as op:
            engine.access.require(principal_id, Action.CONSOLIDATE)
            self._resolve_version(round_id, data_version)
            scope_set = self._resolve_scope(op.txn, scope)
            engine.access.require(principal_id, Action.CONSOLIDATE, scope_set)
            gate = engine.readiness.gate_check(round_id, data_version, scope_set)
            if not gate.ready:
                if not allow_provisional:
                    raise GateBlocked(gate.blocking)
                engine.access.require(principal_id, Action.CONSOLIDATE_PROVISIONAL)
            totals, by_cc = self._sum_cells(round_id, data_version, scope_set)
            entries = self._sorted_entries(totals)
            report_scope_hash = scope_hash(scope_set)
            rows = self._csv_rows(report_scope_hash, entries)
            report_id = engine.next_id(op.txn, "report", "REP")
            report = ConsolidationReport(
                id=report_id,
                round_id=round_id,
                data_version=data_version,
                scope=tuple(sorted(scope_set)),
                scope_hash=report_scope_hash,
                provisional=not gate.ready,
                totals=entries,
                by_cost_centre={cc_id: self._sorted_entries(cc_totals) for cc_id, cc_totals in sorted(by_cc.items())},
                generated_at=engine.now_str(),
                verification_stamp=self.stamp_of(rows),
            )
            op.txn.put("report", report_id, report)
            op.detail = (
                f"report={report_id} provisional={report.provisional} "
                f"lines={len(entries)} stamp={report.verification_stamp[:12]}"
            )
        return report

    def get_report(self, principal_id: str, report_id: str) -> ConsolidationReport:
        engine = self._engine
        with engine.operation(principal_id, Action.CONSOLIDATE, f"report/{report_id}") as op:
            engine.access.require(principal_id, Action.CONSOLIDATE)
            report = op.txn.get("report", report_id)
            if report is None:
                raise UnknownReport(report_id)
            op.detail = f"report={report_id}"
        return report

    def export_report(self, principal_id: str, report_id: str) -> str:
        engine = self._engine
        with engine.operation(principal_id, Action.CONSOLIDATE, f"report/{report_id}/export") as op:
            engine.access.require(principal_id, Action.CONSOLIDATE)
            report = op.txn.get("report", report_id)
            if report is None:
                raise UnknownReport(report_id)
            op.detail = f"report={report_id} stamp={report.verification_stamp[:12]}"
        return self.render_csv(report)

    # -- KPIs ------------------------------------------------------------------------

    def _totals_by_line(self, round_id: str, data_version: int, scope: set[str]) -> dict[tuple[str, str], int]:
        totals, _ = self._sum_cells(round_id, data_version, scope)
        collapsed: dict[tuple[str, str], int] = {}
        for (section_id, line_item, _period), amount in totals.items():
            key = (section_id, line_item)
            collapsed[key] = collapsed.get(key, 0) + amount
        return collapsed

    def _actuals_by_line(self, fiscal_label: str, scope: set[str]) -> dict[tuple[str, str], int]:
        cc_table = self._engine.store.table("cost_centre")
        collapsed: dict[tuple[str, str], int] = {}
        for record in self._engine.store.table("actual").values():
            if record.fiscal_label != fiscal_label:
                continue
            if cc_table[record.cost_centre_id].department_id not in scope:
                continue
            key = (record.section_id, record.line_item)
            collapsed[key] = collapsed.get(key, 0) + record.amount_cents
        return collapsed

    def _comparator_totals(
        self,
        round_id: str,
        data_version: int,
        scope: set[str],
        comparator: ComparatorKind,
        fiscal_label: str | None,
    ) -> dict[tuple[str, str], int]:
        store = self._engine.store
        if comparator == ComparatorKind.PRIOR_DATA_VERSION:
            if data_version <= 1 or store.get("data_version", data_version_key(round_id, data_version - 1)) is None:
                raise UnknownComparator(f"round {round_id} has no data version before v{data_version}")
            return self._totals_by_line(round_id, data_version - 1, scope)
        if comparator == ComparatorKind.PRIOR_ROUND:
            round_ids = list(store.table("round"))
            index = round_ids.index(round_id) if round_id in round_ids else -1
            if index <= 0:
                raise UnknownComparator(f"no round precedes {round_id}")
            prior_round = round_ids[index - 1]
            versions = [v.version for v in store.table("data_version").values() if v.round_id == prior_round]
            if not versions:
                raise UnknownComparator(f"round {prior_round} has no data versions")
            return self._totals_by_line(prior_round, max(versions), scope)
        if comparator == ComparatorKind.ACTUALS:
            if fiscal_label is None or fiscal_label not in self._engine.budget.fiscal_labels():
                raise UnknownComparator(f"no actuals imported for {fiscal_label!r}")
            return self._actuals_by_line(fiscal_label, scope)
        raise UnknownComparator(str(comparator))

    def kpi_report(
        self,
        principal_id: str,
        round_id: str,
        data_version: int,
        scope: Iterable[str] | None = None,
        comparator: ComparatorKind = ComparatorKind.PRIOR_DATA_VERSION,
        fiscal_label: str | None = None,
    ) -> KpiReport:
        """Per-line variance of current figures against a prior version, a
        prior round, or imported actuals. Variance percentage is omitted when
        the comparator value is zero."""
        engine = self._engine
        with engine.operation(principal_id, Action.CONSOLIDATE, f"kpi/{round_id}/v{data_version}") as op:
            engine.access.require(principal_id, Action.CONSOLIDATE)
            self._resolve_version(round_id, data_version)
            scope_set = self._resolve_scope(op.txn, scope)
            engine.access.require(principal_id, Action.CONSOLIDATE, scope_set)
            current = self._totals_by_line(round_id, data_version, scope_set)
            baseline = self._comparator_totals(round_id, data_version, scope_set, comparator, fiscal_label)
            lines = []
            for section_id, line_item in sorted(
                set(current) | set(baseline), key=lambda k: (self._section_name(k[0]), k[1])
            ):
                current_cents = current.get((section_id, line_item), 0)
                comparator_cents = baseline.get((section_id, line_item), 0)
                variance = current_cents - comparator_cents
                lines.append(
                    KpiLine(
                        section_id=section_id,
                        section_name=self._section_name(section_id),
                        line_item=line_item,
                        current_cents=current_cents,
                        comparator_cents=comparator_cents,
                        variance_cents=variance,
                        variance_pct=(variance / comparator_cents) if comparator_cents != 0 else None,
                    )
                )
            op.detail = f"comparator={comparator.value} lines={len(lines)}"
        return KpiReport(
            round_id=round_id,
            data_version=data_version,
            scope=tuple(sorted(scope_set)),
            comparator=comparator,
            fiscal_label=fiscal_label,
            lines=tuple(lines),
        )
