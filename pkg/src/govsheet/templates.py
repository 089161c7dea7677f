"""Change control over template structure versions.

The workflow is a five-step state machine per template: an owner copies the
live version to work-in-progress, editors change it, an auditor passes it
for release or refers it back, and an owner releases it live (archiving the
previous live version in the same commit). Two segregation rules are
enforced per version: whoever edited a version may not audit it, and
whoever audited it may not release it. At most one version per template is
live, and at most one is in flight (Wip / UnderAudit / Approved).
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from .errors import (
    InFlightExists,
    InvalidState,
    NoLiveVersion,
    SegregationViolation,
    UnknownTemplate,
    UnknownVersion,
)
from .model import (
    Action,
    AuditVerdict,
    ItemKind,
    LintViolation,
    Template,
    TemplateDocument,
    TemplateVersion,
    Transition,
    VersionState,
)

if TYPE_CHECKING:
    from .engine import Engine

IN_FLIGHT_STATES = frozenset({VersionState.WIP, VersionState.UNDER_AUDIT, VersionState.APPROVED})


class TemplateControl:
    def __init__(self, engine: "Engine"):
        self._engine = engine

    # -- lookups -----------------------------------------------------------------

    def versions_of(self, template_id: str) -> list[TemplateVersion]:
        versions = [v for v in self._engine.store.table("version").values() if v.template_id == template_id]
        return sorted(versions, key=lambda v: v.version_number)

    def live_version(self, template_id: str | None = None) -> TemplateVersion | None:
        live = [
            v
            for v in self._engine.store.table("version").values()
            if v.state == VersionState.LIVE and (template_id is None or v.template_id == template_id)
        ]
        if template_id is None and len(live) != 1:
            return None
        return live[0] if live else None

    def _version(self, txn, version_id: str) -> TemplateVersion:
        version = txn.get("version", version_id)
        if version is None:
            raise UnknownVersion(version_id)
        return version

    def _transition(self, version: TemplateVersion, state: VersionState, actor: str, **updates) -> TemplateVersion:
        transition = Transition(state=state, at=self._engine.now_str(), by=actor)
        return version.model_copy(
            update={"state": state, "transitions": version.transitions + (transition,), **updates}
        )

    # -- workflow operations --------------------------------------------------------

    def create_template(self, owner_id: str, name: str, document: TemplateDocument) -> TemplateVersion:
        """Bootstrap a template with version 1 in Wip; it still has to travel
        the full audit workflow before it can go live."""
        engine = self._engine
        with engine.operation(owner_id, Action.COPY_TO_WIP, "templates") as op:
            engine.access.require(owner_id, Action.COPY_TO_WIP)
            template_id = engine.next_id(op.txn, "template", "T")
            op.txn.put("template", template_id, Template(id=template_id, name=name))
            version_id = engine.next_id(op.txn, "version", "V")
            version = TemplateVersion(
                id=version_id,
                template_id=template_id,
                version_number=1,
                state=VersionState.WIP,
                document=document,
                checksum=document.checksum(),
                created_by=owner_id,
                transitions=(Transition(state=VersionState.WIP, at=engine.now_str(), by=owner_id),),
            )
            op.txn.put("version", version_id, version)
            op.detail = f"{template_id} {name!r} v1 {version_id} checksum={version.checksum[:12]}"
        return version

    def copy_to_wip(self, owner_id: str, template_id: str) -> TemplateVersion:
        engine = self._engine
        with engine.operation(owner_id, Action.COPY_TO_WIP, f"template/{template_id}") as op:
            engine.access.require(owner_id, Action.COPY_TO_WIP)
            if op.txn.get("template", template_id) is None:
                raise UnknownTemplate(template_id)
            live = self.live_version(template_id)
            if live is None:
                raise NoLiveVersion(f"template {template_id} has no live version to copy")
            in_flight = [v for v in self.versions_of(template_id) if v.state in IN_FLIGHT_STATES]
            if in_flight:
                raise InFlightExists(f"version {in_flight[0].id} is {in_flight[0].state.value}")
            version_id = engine.next_id(op.txn, "version", "V")
            version = TemplateVersion(
                id=version_id,
                template_id=template_id,
                version_number=live.version_number + 1,
                state=VersionState.WIP,
                document=live.document,
                checksum=live.checksum,
                created_by=owner_id,
                transitions=(Transition(state=VersionState.WIP, at=engine.now_str(), by=owner_id),),
            )
            op.txn.put("version", version_id, version)
            op.detail = f"copied live v{live.version_number} -> WIP v{version.version_number} ({version_id})"
        return version

    def edit_wip(self, editor_id: str, version_id: str, document: TemplateDocument) -> TemplateVersion:
        engine = self._engine
        with engine.operation(editor_id, Action.EDIT_STRUCTURE, f"template/version/{version_id}") as op:
            engine.access.require(editor_id, Action.EDIT_STRUCTURE)
            version = self._version(op.txn, version_id)
            if version.state != VersionState.WIP:
                raise InvalidState(f"version {version_id} is {version.state.value}, not Wip")
            old_checksum = version.checksum
            edited_by = version.edited_by if editor_id in version.edited_by else version.edited_by + (editor_id,)
            version = version.model_copy(
                update={"document": document, "checksum": document.checksum(), "edited_by": edited_by}
            )
            op.txn.put("version", version_id, version)
            op.detail = f"checksum {old_checksum[:12]} -> {version.checksum[:12]}"
        return version

    def submit_for_audit(self, editor_id: str, version_id: str) -> TemplateVersion:
        engine = self._engine
        with engine.operation(editor_id, Action.SUBMIT_FOR_AUDIT, f"template/version/{version_id}") as op:
            engine.access.require(editor_id, Action.SUBMIT_FOR_AUDIT)
            version = self._version(op.txn, version_id)
            if version.state != VersionState.WIP:
                raise InvalidState(f"version {version_id} is {version.state.value}, not Wip")
            version = self._transition(version, VersionState.UNDER_AUDIT, editor_id)
            op.txn.put("version", version_id, version)
            op.detail = f"v{version.version_number} submitted for audit"
        return version

    def audit_decision(self, auditor_id: str, version_id: str, verdict: AuditVerdict, note: str = "") -> TemplateVersion:
        engine = self._engine
        with engine.operation(auditor_id, Action.AUDIT_DECIDE, f"template/version/{version_id}") as op:
            engine.access.require(auditor_id, Action.AUDIT_DECIDE)
            version = self._version(op.txn, version_id)
            if version.state != VersionState.UNDER_AUDIT:
                raise InvalidState(f"version {version_id} is {version.state.value}, not UnderAudit")
            if auditor_id in version.edited_by:
                raise SegregationViolation(f"{auditor_id} edited version {version_id} and may not audit it")
            if verdict == AuditVerdict.PASS:
                version = self._transition(version, VersionState.APPROVED, auditor_id, audited_by=auditor_id, audit_note=note or None)
            else:
                version = self._transition(version, VersionState.WIP, auditor_id, audit_note=note or None)
            op.txn.put("version", version_id, version)
            op.detail = f"v{version.version_number} {verdict.value}" + (f": {note}" if note else "")
        return version

    def release_live(self, owner_id: str, version_id: str) -> TemplateVersion:
        """Archive the current live version and release this one, atomically."""
        engine = self._engine
        with engine.operation(owner_id, Action.RELEASE_LIVE, f"template/version/{version_id}") as op:
            engine.access.require(owner_id, Action.RELEASE_LIVE)
            version = self._version(op.txn, version_id)
            if version.state != VersionState.APPROVED:
                raise InvalidState(f"version {version_id} is {version.state.value}, not Approved")
            if version.audited_by is not None and owner_id == version.audited_by:
                raise SegregationViolation(f"{owner_id} audited version {version_id} and may not release it")
            previous = self.live_version(version.template_id)
            if previous is not None:
                archived = self._transition(previous, VersionState.ARCHIVED, owner_id)
                op.txn.put("version", previous.id, archived)
            version = self._transition(version, VersionState.LIVE, owner_id, released_by=owner_id)
            op.txn.put("version", version_id, version)
            op.detail = f"v{version.version_number} live" + (
                f", archived v{previous.version_number}" if previous else ""
            )
        return version

    # -- lint --------------------------------------------------------------------

    @staticmethod
    def lint_document(document: TemplateDocument) -> list[LintViolation]:
        """Structural best-practice checks; advisory input to the auditor."""
        violations = []
        for section in document.sections:
            seen: set[str] = set()
            for item in section.items:
                if item.name in seen:
                    violations.append(
                        LintViolation(
                            kind="DUPLICATE_NAME",
                            section=section.name,
                            item=item.name,
                            message=f"duplicate item name {item.name!r} in section {section.name!r}",
                        )
                    )
                seen.add(item.name)
                if item.kind == ItemKind.COMPUTED and not item.locked:
                    violations.append(
                        LintViolation(
                            kind="UNLOCKED_FORMULA",
                            section=section.name,
                            item=item.name,
                            message=f"computed item {item.name!r} must be locked",
                        )
                    )
                if item.kind == ItemKind.ENTRY and item.locked:
                    violations.append(
                        LintViolation(
                            kind="LOCKED_ENTRY",
                            section=section.name,
                            item=item.name,
                            message=f"entry item {item.name!r} must not be locked",
                        )
                    )
                if item.kind == ItemKind.COMPUTED and not (item.formula_text or "").strip():
                    violations.append(
                        LintViolation(
                            kind="EMPTY_FORMULA",
                            section=section.name,
                            item=item.name,
                            message=f"computed item {item.name!r} has no formula text",
                        )
                    )
        return violations

    def lint(self, principal_id: str, document: TemplateDocument) -> list[LintViolation]:
        engine = self._engine
        with engine.operation(principal_id, Action.AUDIT_DECIDE, "templates/lint") as op:
            engine.access.require(principal_id, Action.AUDIT_DECIDE)
            violations = self.lint_document(document)
            op.detail = f"violations={len(violations)}"
        return violations

    # -- audited reads ---------------------------------------------------------------

    def version_history(self, principal_id: str, template_id: str) -> list[TemplateVersion]:
        engine = self._engine
        with engine.operation(principal_id, Action.READ_AUDIT_LOG, f"template/{template_id}/history") as op:
            engine.access.require(principal_id, Action.READ_AUDIT_LOG)
            if engine.store.get("template", template_id) is None:
                raise UnknownTemplate(template_id)
            versions = self.versions_of(template_id)
            op.detail = f"versions={len(versions)}"
        return versions

    def list_templates(self, principal_id: str) -> list[dict]:
        engine = self._engine
        with engine.operation(principal_id, Action.READ_AUDIT_LOG, "templates") as op:
            engine.access.require(principal_id, Action.READ_AUDIT_LOG)
            summaries = []
            for template in engine.store.table("template").values():
                versions = self.versions_of(template.id)
                live = next((v for v in versions if v.state == VersionState.LIVE), None)
                summaries.append(
                    {
                        "template": template,
                        "versions": versions,
                        "live_version_id": live.id if live else None,
                    }
                )
            op.detail = f"templates={len(summaries)}"
        return summaries

    def get_version(self, principal_id: str, version_id: str) -> TemplateVersion:
        engine = self._engine
        with engine.operation(principal_id, Action.READ_AUDIT_LOG, f"template/version/{version_id}") as op:
            engine.access.require(principal_id, Action.READ_AUDIT_LOG)
            version = self._version(op.txn, version_id)
            op.detail = f"v{version.version_number} {version.state.value}"
        return version
