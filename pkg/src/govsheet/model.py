"""Shared domain model: enumerations and record types used by every module.

Records are immutable pydantic models; the store persists their
``model_dump(mode="json")`` form, so every field must be JSON-native.
Updates are expressed as ``model_copy(update={...})`` plus a transactional
put, never in-place mutation.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field

# Internal compound-key separator; never appears in user-supplied text
# because record construction strips control characters.
KEY_SEP = "\x1f"


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def format_ts(dt: datetime) -> str:
    """UTC timestamp with millisecond precision, e.g. 2026-08-10T10:12:13.456Z."""
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"


def parse_ts(text: str) -> datetime:
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%S.%fZ").replace(tzinfo=timezone.utc)


class Role(str, Enum):
    USER = "User"
    EDITOR = "Editor"
    AUDITOR = "Auditor"
    OWNER = "Owner"
    SENIOR_MANAGER = "SeniorManager"
    ADMIN = "Admin"


class Action(str, Enum):
    READ_BUDGET = "ReadBudget"
    WRITE_BUDGET = "WriteBudget"
    SET_STATUS = "SetStatus"
    COPY_TO_WIP = "CopyToWip"
    EDIT_STRUCTURE = "EditStructure"
    SUBMIT_FOR_AUDIT = "SubmitForAudit"
    AUDIT_DECIDE = "AuditDecide"
    RELEASE_LIVE = "ReleaseLive"
    CONSOLIDATE = "Consolidate"
    CONSOLIDATE_PROVISIONAL = "ConsolidateProvisional"
    IMPORT_ACTUALS = "ImportActuals"
    ADMIN_REGISTRY = "AdminRegistry"
    READ_AUDIT_LOG = "ReadAuditLog"


# Capability table: which roles confer which actions. Deny-by-default —
# anything not listed here is denied for that role.
ROLE_ACTIONS: dict[Role, frozenset[Action]] = {
    Role.USER: frozenset({Action.READ_BUDGET, Action.WRITE_BUDGET, Action.SET_STATUS}),
    Role.EDITOR: frozenset({Action.EDIT_STRUCTURE, Action.SUBMIT_FOR_AUDIT}),
    Role.AUDITOR: frozenset({Action.AUDIT_DECIDE, Action.READ_AUDIT_LOG}),
    Role.OWNER: frozenset(
        {
            Action.COPY_TO_WIP,
            Action.RELEASE_LIVE,
            Action.READ_BUDGET,
            Action.SET_STATUS,
            Action.CONSOLIDATE,
            Action.CONSOLIDATE_PROVISIONAL,
            Action.READ_AUDIT_LOG,
        }
    ),
    Role.SENIOR_MANAGER: frozenset(
        {Action.READ_BUDGET, Action.CONSOLIDATE, Action.CONSOLIDATE_PROVISIONAL, Action.READ_AUDIT_LOG}
    ),
    Role.ADMIN: frozenset(
        {
            Action.ADMIN_REGISTRY,
            Action.IMPORT_ACTUALS,
            Action.SET_STATUS,
            Action.READ_BUDGET,
            Action.READ_AUDIT_LOG,
        }
    ),
}

# Role pairs whose separation is a compliance rule: holding only the
# counterpart role makes the denial a segregation denial, not a plain
# missing-role denial.
SEGREGATED_COUNTERPART: dict[Action, Role] = {
    Action.RELEASE_LIVE: Role.AUDITOR,
    Action.AUDIT_DECIDE: Role.EDITOR,
}


class RoundState(str, Enum):
    OPEN = "Open"
    UNDER_CONSIDERATION = "UnderConsideration"
    APPROVED = "Approved"
    CLOSED = "Closed"


class VersionState(str, Enum):
    WIP = "Wip"
    UNDER_AUDIT = "UnderAudit"
    APPROVED = "Approved"
    LIVE = "Live"
    ARCHIVED = "Archived"


class DataVersionState(str, Enum):
    EDITABLE = "Editable"
    FROZEN = "Frozen"


class SectionProgress(str, Enum):
    NOT_STARTED = "NotStarted"
    IN_PROGRESS = "InProgress"
    COMPLETED = "Completed"
    NOT_APPLICABLE = "NotApplicable"


STATUS_GLYPH: dict[SectionProgress, str] = {
    SectionProgress.NOT_STARTED: "NS",
    SectionProgress.IN_PROGRESS: "IP",
    SectionProgress.COMPLETED: "C",
    SectionProgress.NOT_APPLICABLE: "X",
}
GLYPH_STATUS = {glyph: status for status, glyph in STATUS_GLYPH.items()}

GATE_SATISFIED = frozenset({SectionProgress.COMPLETED, SectionProgress.NOT_APPLICABLE})


class Outcome(str, Enum):
    OK = "Ok"
    DENIED = "Denied"
    ERROR = "Error"


class ItemKind(str, Enum):
    ENTRY = "Entry"
    COMPUTED = "Computed"


class AuditVerdict(str, Enum):
    PASS = "Pass"
    REFER = "Refer"


class ComparatorKind(str, Enum):
    PRIOR_DATA_VERSION = "PriorDataVersion"
    PRIOR_ROUND = "PriorRound"
    ACTUALS = "Actuals"


class Record(BaseModel):
    model_config = ConfigDict(frozen=True)


# --- registry ---------------------------------------------------------------


class Principal(Record):
    id: str
    display_name: str
    active: bool = True


class Department(Record):
    id: str
    name: str
    parent_manager: str | None = None


class CostCentre(Record):
    id: str
    code: str
    name: str
    department_id: str
    dormant: bool = False

    @property
    def label(self) -> str:
        return f"{self.code} {self.name}"


class Section(Record):
    id: str
    name: str


class BudgetRound(Record):
    id: str
    label: str
    state: RoundState
    cycle_number: int = Field(ge=1)


class RoleGrant(Record):
    id: str
    principal_id: str
    role: Role
    all_departments: bool = False
    departments: tuple[str, ...] = ()

    def covers(self, department_id: str) -> bool:
        return self.all_departments or department_id in self.departments


# --- template structure ------------------------------------------------------


class LineItemDef(Record):
    name: str
    kind: ItemKind
    formula_text: str | None = None
    locked: bool = False


class TemplateSection(Record):
    name: str
    items: tuple[LineItemDef, ...] = ()


class TemplateDocument(Record):
    sections: tuple[TemplateSection, ...] = ()

    def checksum(self) -> str:
        payload = json.dumps(
            self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"), ensure_ascii=False
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class Transition(Record):
    state: VersionState
    at: str
    by: str


class Template(Record):
    id: str
    name: str


class TemplateVersion(Record):
    id: str
    template_id: str
    version_number: int = Field(ge=1)
    state: VersionState
    document: TemplateDocument
    checksum: str
    created_by: str
    edited_by: tuple[str, ...] = ()
    audited_by: str | None = None
    released_by: str | None = None
    audit_note: str | None = None
    transitions: tuple[Transition, ...] = ()


# --- budget data --------------------------------------------------------------


class BudgetKey(Record):
    round_id: str
    data_version: int = Field(ge=1)
    cost_centre_id: str
    section_id: str
    line_item: str
    period: int = Field(ge=1, le=12)

    def storage_key(self) -> str:
        return KEY_SEP.join(
            (
                self.round_id,
                str(self.data_version),
                self.cost_centre_id,
                self.section_id,
                self.line_item,
                str(self.period),
            )
        )


class BudgetCell(Record):
    key: BudgetKey
    amount_cents: int
    entered_by: str
    entered_at: str


class DataVersion(Record):
    round_id: str
    version: int = Field(ge=1)
    state: DataVersionState

    def storage_key(self) -> str:
        return data_version_key(self.round_id, self.version)


def data_version_key(round_id: str, version: int) -> str:
    return KEY_SEP.join((round_id, str(version)))


class RoundVocabulary(Record):
    """Valid (section_id, line_item) pairs for a round, from the live template."""

    round_id: str
    template_version_id: str
    slots: tuple[tuple[str, str], ...] = ()


class ActualsRecord(Record):
    fiscal_label: str
    cost_centre_id: str
    section_id: str
    line_item: str
    period: int = Field(ge=1, le=12)
    amount_cents: int

    def storage_key(self) -> str:
        return KEY_SEP.join(
            (self.fiscal_label, self.cost_centre_id, self.section_id, self.line_item, str(self.period))
        )


# --- readiness ---------------------------------------------------------------


class SectionStatus(Record):
    round_id: str
    data_version: int
    cost_centre_id: str
    section_id: str
    status: SectionProgress
    set_by: str
    set_at: str

    def storage_key(self) -> str:
        return status_key(self.round_id, self.data_version, self.cost_centre_id, self.section_id)


def status_key(round_id: str, data_version: int, cost_centre_id: str, section_id: str) -> str:
    return KEY_SEP.join((round_id, str(data_version), cost_centre_id, section_id))


class BlockingEntry(Record):
    cost_centre_id: str
    section_id: str
    status: SectionProgress


class GateResult(Record):
    ready: bool
    blocking: tuple[BlockingEntry, ...] = ()


# --- access decisions ----------------------------------------------------------


class Decision(Record):
    allowed: bool
    reason: str

    @property
    def code(self) -> str:
        return self.reason.split(":", 1)[0]


# --- consolidation -------------------------------------------------------------


class TotalsEntry(Record):
    section_id: str
    line_item: str
    period: int
    amount_cents: int


class ConsolidationReport(Record):
    id: str
    round_id: str
    data_version: int
    scope: tuple[str, ...]
    scope_hash: str
    provisional: bool
    totals: tuple[TotalsEntry, ...]
    by_cost_centre: dict[str, tuple[TotalsEntry, ...]]
    generated_at: str
    verification_stamp: str


class KpiLine(Record):
    section_id: str
    section_name: str
    line_item: str
    current_cents: int
    comparator_cents: int
    variance_cents: int
    variance_pct: float | None = None


class KpiReport(Record):
    round_id: str
    data_version: int
    scope: tuple[str, ...]
    comparator: ComparatorKind
    fiscal_label: str | None = None
    lines: tuple[KpiLine, ...] = ()


# --- audit ---------------------------------------------------------------------


class AuditRecord(Record):
    seq: int = Field(ge=1)
    timestamp: str
    actor: str
    action: Action
    target: str
    outcome: Outcome
    detail: str = ""
    prev_hash: str
    this_hash: str


class ChainVerdict(Record):
    intact: bool
    first_bad_seq: int | None = None


# --- service -------------------------------------------------------------------


class SessionToken(Record):
    token: str
    principal_id: str
    expires_at: str | None = None


class LintViolation(Record):
    kind: str
    section: str
    item: str | None = None
    message: str = ""


# Store table registry: table name -> record type. The store uses this to
# revive journal payloads; the "meta" table holds raw dicts (counters).
TABLE_MODELS: dict[str, type[Record] | None] = {
    "principal": Principal,
    "department": Department,
    "cost_centre": CostCentre,
    "section": Section,
    "grant": RoleGrant,
    "round": BudgetRound,
    "template": Template,
    "version": TemplateVersion,
    "data_version": DataVersion,
    "vocab": RoundVocabulary,
    "cell": BudgetCell,
    "actual": ActualsRecord,
    "status": SectionStatus,
    "report": ConsolidationReport,
    "audit": AuditRecord,
    "token": SessionToken,
    "meta": None,
}
