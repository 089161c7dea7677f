"""HTTP/JSON service over the engine.

Every endpoint follows authenticate -> authorize -> act -> audit: the bearer
token resolves to a principal before anything else, and the engine operation
behind the endpoint performs the authorization check and seals the audit
record in the same transaction as the action. Engine errors map to stable
JSON error payloads carrying the machine-readable code.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import Depends, FastAPI, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field, StrictInt

from . import demo
from .config import ServiceConfig
from .engine import Engine
from .errors import (
    AuthenticationFailed,
    EngineError,
    GateBlocked,
    MalformedRow,
    StoreCorrupt,
    VersionFrozen,
)
from .model import (
    Action,
    AuditVerdict,
    BudgetKey,
    ComparatorKind,
    Role,
    SectionProgress,
    TemplateDocument,
)
from .store import Store
from .templates import TemplateControl

API = "/api/v1"


def create_engine(config: ServiceConfig) -> Engine:
    """Open the store, verify the audit chain, and bootstrap the admin token.
    A failed chain verification refuses to serve."""
    store = Store(config.store_path, sync=config.sync_writes)
    engine = Engine(store)
    verdict = engine.verify_chain()
    if not verdict.intact:
        store.close()
        raise StoreCorrupt(verdict.first_bad_seq)
    if config.admin_token:
        engine.ensure_bootstrap_admin(config.admin_principal, config.admin_token)
    return engine


# -- request bodies ---------------------------------------------------------------


class TokenRequest(BaseModel):
    principal_id: str
    ttl_seconds: int | None = 86_400


class PrincipalCreate(BaseModel):
    display_name: str
    id: str | None = None


class PrincipalPatch(BaseModel):
    active: bool


class DepartmentCreate(BaseModel):
    name: str
    parent_manager: str | None = None


class SectionCreate(BaseModel):
    name: str


class CostCentreCreate(BaseModel):
    code: str
    name: str
    department_id: str


class CostCentrePatch(BaseModel):
    dormant: bool


class GrantCreate(BaseModel):
    principal_id: str
    role: Role
    departments: list[str] | None = None
    all_departments: bool = False


class RoundCreate(BaseModel):
    label: str


class SeedTemplateBody(BaseModel):
    template_id: str | None = None
    copy_from_round: str | None = None


class TemplateCreate(BaseModel):
    name: str
    document: TemplateDocument


class LintBody(BaseModel):
    document: TemplateDocument


class AuditDecisionBody(BaseModel):
    verdict: AuditVerdict
    note: str = ""


class CellWrite(BaseModel):
    cost_centre_id: str
    section_id: str
    line_item: str
    period: int = Field(ge=1, le=12)
    amount_cents: StrictInt


class CellBatch(BaseModel):
    round_id: str
    data_version: int = Field(ge=1)
    cells: list[CellWrite]


class StatusPut(BaseModel):
    round_id: str
    data_version: int = Field(ge=1)
    cost_centre_id: str
    section_id: str
    status: SectionProgress


class ConsolidateBody(BaseModel):
    round_id: str
    data_version: int = Field(ge=1)
    scope: list[str] | None = None
    allow_provisional: bool = False


class KpiBody(BaseModel):
    round_id: str
    data_version: int = Field(ge=1)
    scope: list[str] | None = None
    comparator: ComparatorKind
    fiscal_label: str | None = None


class NextVersionBody(BaseModel):
    round_id: str


# -- serialization helpers -----------------------------------------------------------


def dump(record) -> dict:
    return record.model_dump(mode="json")


def dump_version(version, with_lint: bool = True) -> dict:
    payload = dump(version)
    if with_lint:
        payload["lint_violations"] = len(TemplateControl.lint_document(version.document))
    return payload


def _csv_list(raw: str | None) -> list[str] | None:
    return [part for part in raw.split(",") if part] if raw else None


def build_app(engine: Engine, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="govsheet", version="0.1.0", docs_url=None, redoc_url=None)
    app.state.engine = engine

    def current_principal(request: Request) -> str:
        header = request.headers.get("authorization", "")
        if not header.startswith("Bearer "):
            raise AuthenticationFailed("missing bearer token")
        return engine.principal_for_token(header[len("Bearer ") :])

    Caller = Depends(current_principal)

    @app.exception_handler(EngineError)
    async def engine_error_handler(_request: Request, exc: EngineError):
        payload: dict = {"error": exc.code, "message": str(exc)}
        if isinstance(exc, GateBlocked):
            payload["blocking"] = [dump(entry) for entry in exc.blocking]
        if isinstance(exc, MalformedRow):
            payload["line_no"] = exc.line_no
        if isinstance(exc, StoreCorrupt):
            payload["first_bad_seq"] = exc.first_bad_seq
        return JSONResponse(status_code=exc.http_status, content=payload)

    # -- auth ------------------------------------------------------------------

    @app.post(f"{API}/auth/token")
    def mint_token(body: TokenRequest, caller: str = Caller):
        token = engine.mint_token(caller, body.principal_id, body.ttl_seconds)
        return dump(token)

    # -- registry ----------------------------------------------------------------

    @app.get(f"{API}/registry/users")
    def list_users(caller: str = Caller):
        return {"users": [dump(p) for p in engine.registry.list_principals(caller)]}

    @app.post(f"{API}/registry/users", status_code=201)
    def create_user(body: PrincipalCreate, caller: str = Caller):
        return {"user": dump(engine.registry.create_principal(caller, body.display_name, body.id))}

    @app.patch(f"{API}/registry/users/{{principal_id}}")
    def patch_user(principal_id: str, body: PrincipalPatch, caller: str = Caller):
        return {"user": dump(engine.registry.set_principal_active(caller, principal_id, body.active))}

    @app.get(f"{API}/registry/departments")
    def list_departments(caller: str = Caller):
        return {"departments": [dump(d) for d in engine.registry.list_departments(caller)]}

    @app.post(f"{API}/registry/departments", status_code=201)
    def create_department(body: DepartmentCreate, caller: str = Caller):
        return {"department": dump(engine.registry.create_department(caller, body.name, body.parent_manager))}

    @app.get(f"{API}/registry/cost-centres")
    def list_cost_centres(caller: str = Caller):
        return {"cost_centres": [dump(c) for c in engine.registry.list_cost_centres(caller)]}

    @app.post(f"{API}/registry/cost-centres", status_code=201)
    def create_cost_centre(body: CostCentreCreate, caller: str = Caller):
        return {"cost_centre": dump(engine.registry.create_cost_centre(caller, body.code, body.name, body.department_id))}

    @app.patch(f"{API}/registry/cost-centres/{{cost_centre_id}}")
    def patch_cost_centre(cost_centre_id: str, body: CostCentrePatch, caller: str = Caller):
        return {"cost_centre": dump(engine.registry.set_cost_centre_dormant(caller, cost_centre_id, body.dormant))}

    @app.get(f"{API}/registry/sections")
    def list_sections(caller: str = Caller):
        return {"sections": [dump(s) for s in engine.registry.list_sections(caller)]}

    @app.post(f"{API}/registry/sections", status_code=201)
    def create_section(body: SectionCreate, caller: str = Caller):
        return {"section": dump(engine.registry.create_section(caller, body.name))}

    # -- grants ------------------------------------------------------------------

    @app.get(f"{API}/grants")
    def list_grants(caller: str = Caller):
        return {"grants": [dump(g) for g in engine.access.list_grants(caller)]}

    @app.post(f"{API}/grants", status_code=201)
    def create_grant(body: GrantCreate, caller: str = Caller):
        grant = engine.access.grant(caller, body.principal_id, body.role, body.departments, body.all_departments)
        return {"grant": dump(grant)}

    @app.delete(f"{API}/grants/{{grant_id}}")
    def revoke_grant(grant_id: str, caller: str = Caller):
        engine.access.revoke(caller, grant_id)
        return {"revoked": grant_id}

    # -- rounds -------------------------------------------------------------------

    @app.get(f"{API}/rounds")
    def list_rounds(caller: str = Caller):
        rounds = []
        version_table = list(engine.store.table("data_version").values())
        for budget_round in engine.registry.list_rounds(caller):
            payload = dump(budget_round)
            payload["data_versions"] = sorted(
                (dump(v) for v in version_table if v.round_id == budget_round.id),
                key=lambda v: v["version"],
            )
            rounds.append(payload)
        return {"rounds": rounds}

    @app.post(f"{API}/rounds", status_code=201)
    def open_round(body: RoundCreate, caller: str = Caller):
        return {"round": dump(engine.registry.open_round(caller, body.label))}

    @app.post(f"{API}/rounds/{{round_id}}/consider")
    def consider_round(round_id: str, caller: str = Caller):
        return {"round": dump(engine.registry.submit_round_for_consideration(caller, round_id))}

    @app.post(f"{API}/rounds/{{round_id}}/approve")
    def approve_round(round_id: str, caller: str = Caller):
        return {"round": dump(engine.registry.approve_round(caller, round_id))}

    @app.post(f"{API}/rounds/{{round_id}}/advance")
    def advance_round(round_id: str, caller: str = Caller):
        return {"round": dump(engine.registry.advance_cycle(caller, round_id))}

    @app.post(f"{API}/rounds/{{round_id}}/close")
    def close_round(round_id: str, caller: str = Caller):
        return {"round": dump(engine.registry.close_round(caller, round_id))}

    @app.post(f"{API}/rounds/{{round_id}}/seed-template")
    def seed_template(round_id: str, body: SeedTemplateBody, caller: str = Caller):
        slots = engine.budget.seed_from_template(caller, round_id, body.template_id, body.copy_from_round)
        return {"slots": slots}

    # -- templates -------------------------------------------------------------------

    @app.get(f"{API}/templates")
    def list_templates(caller: str = Caller):
        summaries = engine.templates.list_templates(caller)
        return {
            "templates": [
                {
                    "template": dump(s["template"]),
                    "live_version_id": s["live_version_id"],
                    "versions": [dump_version(v) for v in s["versions"]],
                }
                for s in summaries
            ]
        }

    @app.post(f"{API}/templates", status_code=201)
    def create_template(body: TemplateCreate, caller: str = Caller):
        return {"version": dump_version(engine.templates.create_template(caller, body.name, body.document))}

    @app.post(f"{API}/templates/{{template_id}}/wip", status_code=201)
    def copy_to_wip(template_id: str, caller: str = Caller):
        return {"version": dump_version(engine.templates.copy_to_wip(caller, template_id))}

    @app.get(f"{API}/templates/{{template_id}}/history")
    def template_history(template_id: str, caller: str = Caller):
        versions = engine.templates.version_history(caller, template_id)
        return {"versions": [dump_version(v) for v in versions]}

    @app.post(f"{API}/templates/lint")
    def lint_template(body: LintBody, caller: str = Caller):
        return {"violations": [dump(v) for v in engine.templates.lint(caller, body.document)]}

    @app.get(f"{API}/versions/{{version_id}}")
    def get_version(version_id: str, caller: str = Caller):
        version = engine.templates.get_version(caller, version_id)
        return {"version": dump_version(version), "lint": [dump(v) for v in TemplateControl.lint_document(version.document)]}

    @app.put(f"{API}/versions/{{version_id}}/document")
    def edit_document(version_id: str, body: TemplateDocument, caller: str = Caller):
        return {"version": dump_version(engine.templates.edit_wip(caller, version_id, body))}

    @app.post(f"{API}/versions/{{version_id}}/submit")
    def submit_version(version_id: str, caller: str = Caller):
        return {"version": dump_version(engine.templates.submit_for_audit(caller, version_id))}

    @app.post(f"{API}/versions/{{version_id}}/audit")
    def audit_version(version_id: str, body: AuditDecisionBody, caller: str = Caller):
        return {"version": dump_version(engine.templates.audit_decision(caller, version_id, body.verdict, body.note))}

    @app.post(f"{API}/versions/{{version_id}}/release")
    def release_version(version_id: str, caller: str = Caller):
        return {"version": dump_version(engine.templates.release_live(caller, version_id))}

    # -- budget data -------------------------------------------------------------------

    @app.get(f"{API}/budget/cells")
    def get_cells(
        round_id: str,
        data_version: int,
        cost_centres: str | None = Query(default=None),
        sections: str | None = Query(default=None),
        periods: str | None = Query(default=None),
        format: str = Query(default="json"),
        caller: str = Caller,
    ):
        period_list = [int(p) for p in periods.split(",") if p] if periods else None
        if format == "csv":
            text = engine.budget.slice_csv(
                caller, round_id, data_version, _csv_list(cost_centres), _csv_list(sections), period_list
            )
            return PlainTextResponse(text, media_type="text/csv")
        cells = engine.budget.get_slice(
            caller, round_id, data_version, _csv_list(cost_centres), _csv_list(sections), period_list
        )
        return {"cells": [dump(c) for c in cells]}

    @app.put(f"{API}/budget/cells")
    def put_cells(body: CellBatch, caller: str = Caller):
        engine.preflight(caller, Action.WRITE_BUDGET, f"budget/{body.round_id}/v{body.data_version}")
        results = []
        for cell in body.cells:
            key = BudgetKey(
                round_id=body.round_id,
                data_version=body.data_version,
                cost_centre_id=cell.cost_centre_id,
                section_id=cell.section_id,
                line_item=cell.line_item,
                period=cell.period,
            )
            try:
                written = engine.budget.put_cell(caller, key, cell.amount_cents)
            except VersionFrozen:
                raise
            except EngineError as exc:
                results.append({"key": dump(key), "ok": False, "error": exc.code, "message": str(exc)})
            else:
                results.append({"key": dump(key), "ok": True, "amount_cents": written.amount_cents})
        return {"results": results}

    @app.post(f"{API}/budget/next-version", status_code=201)
    def next_version(body: NextVersionBody, caller: str = Caller):
        return {"data_version": dump(engine.budget.open_next_version(caller, body.round_id))}

    @app.get(f"{API}/budget/vocabulary")
    def budget_vocabulary(round_id: str, caller: str = Caller):
        return dump(engine.budget.get_vocabulary(caller, round_id))

    # -- actuals ---------------------------------------------------------------------

    @app.post(f"{API}/actuals/import")
    async def import_actuals(request: Request, fiscal: str, caller: str = Caller):
        text = (await request.body()).decode("utf-8")
        return engine.budget.import_actuals(caller, fiscal, text)

    @app.get(f"{API}/actuals")
    def list_actuals(fiscal: str | None = None, caller: str = Caller):
        return {"actuals": [dump(a) for a in engine.budget.list_actuals(caller, fiscal)]}

    # -- readiness --------------------------------------------------------------------

    @app.get(f"{API}/status")
    def get_status(round_id: str, data_version: int, cost_centre_id: str, section_id: str, caller: str = Caller):
        record = engine.readiness.get_status(caller, round_id, data_version, cost_centre_id, section_id)
        return {"status": dump(record)}

    @app.put(f"{API}/status")
    def put_status(body: StatusPut, caller: str = Caller):
        record = engine.readiness.set_status(
            caller, body.round_id, body.data_version, body.cost_centre_id, body.section_id, body.status
        )
        return {"status": dump(record)}

    @app.get(f"{API}/status/matrix")
    def status_matrix(round_id: str, data_version: int, format: str = Query(default="json"), caller: str = Caller):
        if format == "csv":
            return PlainTextResponse(engine.readiness.matrix_csv(caller, round_id, data_version), media_type="text/csv")
        return engine.readiness.status_matrix(caller, round_id, data_version)

    @app.get(f"{API}/readiness/gate")
    def readiness_gate(round_id: str, data_version: int, scope: str | None = None, caller: str = Caller):
        result = engine.readiness.gate_check_scoped(caller, round_id, data_version, _csv_list(scope))
        return dump(result)

    # -- consolidation -----------------------------------------------------------------

    @app.post(f"{API}/consolidate", status_code=201)
    def consolidate(body: ConsolidateBody, caller: str = Caller):
        report = engine.consolidation.consolidate(
            caller, body.round_id, body.data_version, body.scope, body.allow_provisional
        )
        return {"report": dump(report)}

    @app.post(f"{API}/kpi")
    def kpi(body: KpiBody, caller: str = Caller):
        report = engine.consolidation.kpi_report(
            caller, body.round_id, body.data_version, body.scope, body.comparator, body.fiscal_label
        )
        return {"report": dump(report)}

    @app.get(f"{API}/reports/{{report_id}}")
    def get_report(report_id: str, caller: str = Caller):
        return {"report": dump(engine.consolidation.get_report(caller, report_id))}

    @app.get(f"{API}/reports/{{report_id}}/export.csv")
    def export_report(report_id: str, caller: str = Caller):
        return PlainTextResponse(engine.consolidation.export_report(caller, report_id), media_type="text/csv")

    # -- audit --------------------------------------------------------------------------

    @app.get(f"{API}/audit")
    def query_audit(
        actor: str | None = None,
        action: Action | None = None,
        ts_from: str | None = None,
        ts_to: str | None = None,
        target_prefix: str | None = None,
        caller: str = Caller,
    ):
        records = engine.audit.query(
            caller, actor=actor, action=action, ts_from=ts_from, ts_to=ts_to, target_prefix=target_prefix
        )
        return {"records": [dump(r) for r in records]}

    @app.get(f"{API}/audit/verify")
    def verify_audit(caller: str = Caller):
        engine.preflight(caller, Action.READ_AUDIT_LOG, "audit/verify")
        return dump(engine.verify_chain())

    @app.get(f"{API}/audit/export")
    def export_audit(caller: str = Caller):
        return PlainTextResponse(engine.audit.export_text(caller), media_type="text/plain")

    # -- demo ---------------------------------------------------------------------------

    @app.post(f"{API}/demo/seed", status_code=201)
    def demo_seed(caller: str = Caller):
        engine.preflight(caller, Action.ADMIN_REGISTRY, "demo/seed")
        return {"summary": demo.seed(engine, caller)}

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
