import pytest
from fastapi.testclient import TestClient
from fastapi.routing import APIRoute

from govsheet.api import build_app
from govsheet.model import Outcome, Role, SectionProgress

from conftest import ADMIN, ADMIN_TOKEN, make_engine, make_world


@pytest.fixture
def api():
    engine = make_engine()
    world = make_world(engine)
    app = build_app(engine)
    client = TestClient(app, raise_server_exceptions=False)
    tokens = {ADMIN: ADMIN_TOKEN}
    for pid in ("owner", "editor", "auditor", "senior", "user.ops", "user.sales"):
        tokens[pid] = engine.mint_token(ADMIN, pid).token
    engine.registry.create_principal(ADMIN, "No Grants", "nobody")
    tokens["nobody"] = engine.mint_token(ADMIN, "nobody").token
    return engine, world, client, tokens


def auth(tokens, who):
    return {"Authorization": f"Bearer {tokens[who]}"}


def test_missing_or_unknown_token_is_401(api):
    _engine, world, client, _tokens = api
    assert client.get("/api/v1/rounds").status_code == 401
    assert client.get("/api/v1/rounds", headers={"Authorization": "Bearer bogus"}).status_code == 401


def test_expired_token_is_401(api):
    engine, _world, client, tokens = api
    short = engine.mint_token(ADMIN, "owner", ttl_seconds=0)
    response = client.get("/api/v1/rounds", headers={"Authorization": f"Bearer {short.token}"})
    assert response.status_code == 401
    assert response.json()["error"] == "UNAUTHENTICATED"


def test_round_trip_reference_data(api):
    _engine, world, client, tokens = api
    created = client.post(
        "/api/v1/registry/cost-centres",
        headers=auth(tokens, ADMIN),
        json={"code": "400", "name": "Wholesale Existing", "department_id": world.dept_sales},
    )
    assert created.status_code == 201
    listing = client.get("/api/v1/registry/cost-centres", headers=auth(tokens, "senior"))
    codes = {cc["code"] for cc in listing.json()["cost_centres"]}
    assert "400" in codes

    duplicate = client.post(
        "/api/v1/registry/cost-centres",
        headers=auth(tokens, ADMIN),
        json={"code": "400", "name": "Again", "department_id": world.dept_sales},
    )
    assert duplicate.status_code == 409
    assert duplicate.json()["error"] == "DUPLICATE_CODE"


def test_batch_cell_put_reports_per_cell_outcomes(api):
    engine, world, client, tokens = api
    body = {
        "round_id": world.round_id,
        "data_version": 1,
        "cells": [
            {
                "cost_centre_id": world.cc_ops,
                "section_id": world.section_revenue,
                "line_item": "Licence fees",
                "period": 1,
                "amount_cents": 1500,
            },
            {
                "cost_centre_id": world.cc_sales,
                "section_id": world.section_revenue,
                "line_item": "Licence fees",
                "period": 1,
                "amount_cents": 2500,
            },
        ],
    }
    before = engine.audit.record_count()
    response = client.put("/api/v1/budget/cells", headers=auth(tokens, "user.ops"), json=body)
    assert response.status_code == 200
    results = response.json()["results"]
    assert [r["ok"] for r in results] == [True, False]
    assert results[1]["error"] == "OUT_OF_SCOPE"
    records = engine.audit.records()[before:]
    assert [r.outcome for r in records] == [Outcome.OK, Outcome.DENIED]


def test_batch_against_frozen_version_commits_nothing(api):
    engine, world, client, tokens = api
    engine.budget.open_next_version(ADMIN, world.round_id)
    body = {
        "round_id": world.round_id,
        "data_version": 1,
        "cells": [
            {
                "cost_centre_id": world.cc_ops,
                "section_id": world.section_revenue,
                "line_item": "Licence fees",
                "period": p,
                "amount_cents": 100,
            }
            for p in (1, 2)
        ],
    }
    response = client.put("/api/v1/budget/cells", headers=auth(tokens, "user.ops"), json=body)
    assert response.status_code == 409
    assert response.json()["error"] == "VERSION_FROZEN"
    assert engine.budget.get_slice(ADMIN, world.round_id, 1) == []


def test_non_integer_amount_rejected_by_validation(api):
    _engine, world, client, tokens = api
    body = {
        "round_id": world.round_id,
        "data_version": 1,
        "cells": [
            {
                "cost_centre_id": world.cc_ops,
                "section_id": world.section_revenue,
                "line_item": "Licence fees",
                "period": 1,
                "amount_cents": 10.5,
            }
        ],
    }
    assert client.put("/api/v1/budget/cells", headers=auth(tokens, "user.ops"), json=body).status_code == 422


def test_gate_blocked_payload_lists_offenders(api):
    engine, world, client, tokens = api
    response = client.post(
        "/api/v1/consolidate",
        headers=auth(tokens, "senior"),
        json={"round_id": world.round_id, "data_version": 1, "allow_provisional": False},
    )
    assert response.status_code == 409
    payload = response.json()
    assert payload["error"] == "GATE_BLOCKED"
    assert len(payload["blocking"]) == 4  # 2 cost centres x 2 sections, all NotStarted


def test_template_workflow_over_api(api):
    engine, world, client, tokens = api
    wip = client.post(f"/api/v1/templates/{world.template_id}/wip", headers=auth(tokens, "owner"))
    assert wip.status_code == 201
    version_id = wip.json()["version"]["id"]

    document = wip.json()["version"]["document"]
    document["sections"][0]["items"][0]["name"] = "Licence fees (renamed)"
    edited = client.put(f"/api/v1/versions/{version_id}/document", headers=auth(tokens, "editor"), json=document)
    assert edited.status_code == 200
    assert edited.json()["version"]["edited_by"] == ["editor"]

    assert client.post(f"/api/v1/versions/{version_id}/submit", headers=auth(tokens, "editor")).status_code == 200
    decided = client.post(
        f"/api/v1/versions/{version_id}/audit",
        headers=auth(tokens, "auditor"),
        json={"verdict": "Pass", "note": "ok"},
    )
    assert decided.status_code == 200
    released = client.post(f"/api/v1/versions/{version_id}/release", headers=auth(tokens, "owner"))
    assert released.status_code == 200
    assert released.json()["version"]["state"] == "Live"

    history = client.get(f"/api/v1/templates/{world.template_id}/history", headers=auth(tokens, "auditor"))
    states = {v["version_number"]: v["state"] for v in history.json()["versions"]}
    assert states == {1: "Archived", 2: "Live"}


def test_segregation_surfaced_with_code(api):
    engine, world, client, tokens = api
    engine.access.grant(ADMIN, "editor", Role.AUDITOR, all_departments=True)
    wip = client.post(f"/api/v1/templates/{world.template_id}/wip", headers=auth(tokens, "owner")).json()["version"]
    document = wip["document"]
    client.put(f"/api/v1/versions/{wip['id']}/document", headers=auth(tokens, "editor"), json=document)
    client.post(f"/api/v1/versions/{wip['id']}/submit", headers=auth(tokens, "editor"))
    response = client.post(
        f"/api/v1/versions/{wip['id']}/audit", headers=auth(tokens, "editor"), json={"verdict": "Pass", "note": ""}
    )
    assert response.status_code == 403
    assert response.json()["error"] == "SEGREGATION_VIOLATION"


def test_status_and_matrix_csv(api):
    engine, world, client, tokens = api
    put = client.put(
        "/api/v1/status",
        headers=auth(tokens, "user.ops"),
        json={
            "round_id": world.round_id,
            "data_version": 1,
            "cost_centre_id": world.cc_ops,
            "section_id": world.section_revenue,
            "status": "Completed",
        },
    )
    assert put.status_code == 200
    single = client.get(
        "/api/v1/status",
        headers=auth(tokens, "user.ops"),
        params={
            "round_id": world.round_id,
            "data_version": 1,
            "cost_centre_id": world.cc_ops,
            "section_id": world.section_revenue,
        },
    )
    assert single.json()["status"]["status"] == "Completed"

    csv_response = client.get(
        "/api/v1/status/matrix",
        headers=auth(tokens, "senior"),
        params={"round_id": world.round_id, "data_version": 1, "format": "csv"},
    )
    assert csv_response.headers["content-type"].startswith("text/csv")
    assert csv_response.text.splitlines()[1] == "100 Ops Centre,C,NS"


def test_actuals_import_over_api(api):
    _engine, world, client, tokens = api
    good = "fiscal,cost_centre,section,line_item,period,amount_cents\nFY-prev,100,Revenue,Licence fees,1,5\n"
    response = client.post(
        "/api/v1/actuals/import",
        headers={**auth(tokens, ADMIN), "Content-Type": "text/csv"},
        params={"fiscal": "FY-prev"},
        content=good,
    )
    assert response.status_code == 200
    assert response.json() == {"rows": 1, "rejected": 0}

    bad = good + "FY-prev,999,Revenue,Licence fees,1,5\n"
    failure = client.post(
        "/api/v1/actuals/import",
        headers={**auth(tokens, ADMIN), "Content-Type": "text/csv"},
        params={"fiscal": "FY-prev"},
        content=bad,
    )
    assert failure.status_code == 422
    assert failure.json()["line_no"] == 3


def test_consolidate_report_roundtrip_and_export(api):
    engine, world, client, tokens = api
    for cc, user in ((world.cc_ops, "user.ops"), (world.cc_sales, "user.sales")):
        for section in (world.section_revenue, world.section_costs):
            engine.readiness.set_status(user, world.round_id, 1, cc, section, SectionProgress.COMPLETED)
    engine.budget.put_cell(
        "user.ops",
        __import__("govsheet.model", fromlist=["BudgetKey"]).BudgetKey(
            round_id=world.round_id,
            data_version=1,
            cost_centre_id=world.cc_ops,
            section_id=world.section_revenue,
            line_item="Licence fees",
            period=1,
        ),
        123_45,
    )
    response = client.post(
        "/api/v1/consolidate",
        headers=auth(tokens, "senior"),
        json={"round_id": world.round_id, "data_version": 1},
    )
    assert response.status_code == 201
    report = response.json()["report"]
    assert report["provisional"] is False

    export = client.get(f"/api/v1/reports/{report['id']}/export.csv", headers=auth(tokens, "senior"))
    assert export.status_code == 200
    assert export.text.splitlines()[-1] == f"#stamp,{report['verification_stamp']}"

    fetched = client.get(f"/api/v1/reports/{report['id']}", headers=auth(tokens, "senior"))
    assert fetched.json()["report"]["verification_stamp"] == report["verification_stamp"]


def test_audit_endpoints(api):
    _engine, world, client, tokens = api
    verify = client.get("/api/v1/audit/verify", headers=auth(tokens, "auditor"))
    assert verify.json() == {"intact": True, "first_bad_seq": None}

    records = client.get("/api/v1/audit", headers=auth(tokens, "auditor"), params={"action": "ReleaseLive"})
    assert len(records.json()["records"]) == 1

    export = client.get("/api/v1/audit/export", headers=auth(tokens, "auditor"))
    assert export.status_code == 200
    assert export.text.count("\n") >= 1


def test_demo_seed_endpoint():
    engine = make_engine()
    client = TestClient(build_app(engine), raise_server_exceptions=False)
    response = client.post("/api/v1/demo/seed", headers={"Authorization": f"Bearer {ADMIN_TOKEN}"})
    assert response.status_code == 201
    summary = response.json()["summary"]
    assert summary["cost_centres"] == 28
    assert summary["sections"] == 6


# Request samples for every route; the coverage assertion below fails when an
# endpoint is added without extending this walk.
def walk_requests(world):
    doc = {"sections": []}
    cell = {
        "cost_centre_id": world.cc_ops,
        "section_id": world.section_revenue,
        "line_item": "Licence fees",
        "period": 1,
        "amount_cents": 1,
    }
    return [
        ("POST", "/api/v1/auth/token", {"json": {"principal_id": "owner"}}),
        ("GET", "/api/v1/registry/users", {}),
        ("POST", "/api/v1/registry/users", {"json": {"display_name": "X"}}),
        ("PATCH", "/api/v1/registry/users/owner", {"json": {"active": True}}),
        ("GET", "/api/v1/registry/departments", {}),
        ("POST", "/api/v1/registry/departments", {"json": {"name": "X"}}),
        ("GET", "/api/v1/registry/cost-centres", {}),
        ("POST", "/api/v1/registry/cost-centres", {"json": {"code": "999", "name": "X", "department_id": world.dept_ops}}),
        ("PATCH", f"/api/v1/registry/cost-centres/{world.cc_ops}", {"json": {"dormant": False}}),
        ("GET", "/api/v1/registry/sections", {}),
        ("POST", "/api/v1/registry/sections", {"json": {"name": "X"}}),
        ("GET", "/api/v1/grants", {}),
        ("POST", "/api/v1/grants", {"json": {"principal_id": "owner", "role": "User", "all_departments": True}}),
        ("DELETE", "/api/v1/grants/G1", {}),
        ("GET", "/api/v1/rounds", {}),
        ("POST", "/api/v1/rounds", {"json": {"label": "X"}}),
        ("POST", f"/api/v1/rounds/{world.round_id}/consider", {}),
        ("POST", f"/api/v1/rounds/{world.round_id}/approve", {}),
        ("POST", f"/api/v1/rounds/{world.round_id}/advance", {}),
        ("POST", f"/api/v1/rounds/{world.round_id}/close", {}),
        ("POST", f"/api/v1/rounds/{world.round_id}/seed-template", {"json": {}}),
        ("GET", "/api/v1/templates", {}),
        ("POST", "/api/v1/templates", {"json": {"name": "X", "document": doc}}),
        ("POST", f"/api/v1/templates/{world.template_id}/wip", {}),
        ("GET", f"/api/v1/templates/{world.template_id}/history", {}),
        ("POST", "/api/v1/templates/lint", {"json": {"document": doc}}),
        ("GET", f"/api/v1/versions/{world.live_version_id}", {}),
        ("PUT", f"/api/v1/versions/{world.live_version_id}/document", {"json": doc}),
        ("POST", f"/api/v1/versions/{world.live_version_id}/submit", {}),
        ("POST", f"/api/v1/versions/{world.live_version_id}/audit", {"json": {"verdict": "Pass", "note": ""}}),
        ("POST", f"/api/v1/versions/{world.live_version_id}/release", {}),
        ("GET", "/api/v1/budget/cells", {"params": {"round_id": world.round_id, "data_version": 1}}),
        ("PUT", "/api/v1/budget/cells", {"json": {"round_id": world.round_id, "data_version": 1, "cells": [cell]}}),
        ("POST", "/api/v1/budget/next-version", {"json": {"round_id": world.round_id}}),
        ("GET", "/api/v1/budget/vocabulary", {"params": {"round_id": world.round_id}}),
        ("POST", "/api/v1/actuals/import", {"params": {"fiscal": "X"}, "content": b"fiscal\n"}),
        ("GET", "/api/v1/actuals", {}),
        (
            "GET",
            "/api/v1/status",
            {
                "params": {
                    "round_id": world.round_id,
                    "data_version": 1,
                    "cost_centre_id": world.cc_ops,
                    "section_id": world.section_revenue,
                }
            },
        ),
        (
            "PUT",
            "/api/v1/status",
            {
                "json": {
                    "round_id": world.round_id,
                    "data_version": 1,
                    "cost_centre_id": world.cc_ops,
                    "section_id": world.section_revenue,
                    "status": "Completed",
                }
            },
        ),
        ("GET", "/api/v1/status/matrix", {"params": {"round_id": world.round_id, "data_version": 1}}),
        ("GET", "/api/v1/readiness/gate", {"params": {"round_id": world.round_id, "data_version": 1}}),
        ("POST", "/api/v1/consolidate", {"json": {"round_id": world.round_id, "data_version": 1}}),
        (
            "POST",
            "/api/v1/kpi",
            {"json": {"round_id": world.round_id, "data_version": 1, "comparator": "PriorDataVersion"}},
        ),
        ("GET", "/api/v1/reports/REP1", {}),
        ("GET", "/api/v1/reports/REP1/export.csv", {}),
        ("GET", "/api/v1/audit", {}),
        ("GET", "/api/v1/audit/verify", {}),
        ("GET", "/api/v1/audit/export", {}),
        ("POST", "/api/v1/demo/seed", {}),
    ]


def test_walk_covers_every_route(api):
    engine, world, client, tokens = api
    app = client.app
    covered = {(method, path) for method, path, _ in walk_requests(world)}

    def normalize(path_format: str) -> str:
        return (
            path_format.replace("{principal_id}", "owner")
            .replace("{cost_centre_id}", world.cc_ops)
            .replace("{grant_id}", "G1")
            .replace("{round_id}", world.round_id)
            .replace("{template_id}", world.template_id)
            .replace("{version_id}", world.live_version_id)
            .replace("{report_id}", "REP1")
        )

    for route in app.routes:
        if not isinstance(route, APIRoute):
            continue
        for method in route.methods - {"HEAD", "OPTIONS"}:
            assert (method, normalize(route.path)) in covered, f"walk misses {method} {route.path}"


def test_zero_grant_principal_denied_on_every_endpoint(api):
    """Universal deny-by-default: a principal with no grants gets 403 from
    every endpoint, and each denial lands one Denied audit record."""
    engine, world, client, tokens = api
    for method, path, kwargs in walk_requests(world):
        before = engine.audit.record_count()
        response = client.request(method, path, headers=auth(tokens, "nobody"), **kwargs)
        assert response.status_code == 403, f"{method} {path} -> {response.status_code}"
        records = engine.audit.records()[before:]
        denied = [r for r in records if r.outcome == Outcome.DENIED and r.actor == "nobody"]
        assert len(denied) == 1, f"{method} {path} logged {len(denied)} denials"
