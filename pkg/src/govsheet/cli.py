"""Operator command line.

``govsheet serve --config <path>`` runs the service; every other command is
an HTTP client over the documented API, authenticating with a bearer token
(``--token`` / GOVSHEET_TOKEN) against ``--url`` / GOVSHEET_URL.
"""

from __future__ import annotations

import json
import socket
import sys
from pathlib import Path

import click
import httpx

from .audit import verify_export_text
from .config import load_config
from .errors import BindFailure, StoreCorrupt

DEFAULT_URL = "http://127.0.0.1:8080"


class Client:
    def __init__(self, url: str, token: str):
        self.base = url.rstrip("/") + "/api/v1"
        self.http = httpx.Client(headers={"Authorization": f"Bearer {token}"}, timeout=30.0)

    def call(self, method: str, path: str, **kwargs):
        response = self.http.request(method, self.base + path, **kwargs)
        if response.status_code >= 400:
            try:
                payload = response.json()
            except ValueError:
                payload = {"error": f"HTTP {response.status_code}", "message": response.text}
            message = f"{payload.get('error', 'ERROR')}: {payload.get('message', '')}"
            if "line_no" in payload:
                message += f" (line {payload['line_no']})"
            if "first_bad_seq" in payload:
                message += f" (first bad seq {payload['first_bad_seq']})"
            raise click.ClickException(message)
        if response.headers.get("content-type", "").startswith("application/json"):
            return response.json()
        return response.text


pass_client = click.make_pass_decorator(Client)


def emit(payload) -> None:
    if isinstance(payload, str):
        click.echo(payload, nl=False)
        if not payload.endswith("\n"):
            click.echo()
    else:
        click.echo(json.dumps(payload, indent=2))


@click.group()
@click.option("--url", envvar="GOVSHEET_URL", default=DEFAULT_URL, show_default=True, help="Service base URL.")
@click.option("--token", envvar="GOVSHEET_TOKEN", default="", help="Bearer token.")
@click.pass_context
def main(ctx: click.Context, url: str, token: str):
    """Budget governance service and operator client."""
    ctx.obj = Client(url, token)


# -- serve ------------------------------------------------------------------------


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def serve(config_path):
    """Run the HTTP service (verifies the audit chain before serving)."""
    import uvicorn

    from .api import build_app, create_engine

    config = load_config(config_path)
    try:
        engine = create_engine(config)
    except StoreCorrupt as exc:
        click.echo(f"audit chain verification failed: first_bad_seq={exc.first_bad_seq}", err=True)
        sys.exit(2)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((config.host, config.port))
    except OSError as exc:
        engine.store.close()
        click.echo(f"{BindFailure.code}: cannot bind {config.listen_addr}: {exc}", err=True)
        sys.exit(3)
    finally:
        probe.close()
    app = build_app(engine, ui_dir=config.ui_dir or None)
    uvicorn.run(app, host=config.host, port=config.port, log_level=config.log_level)


# -- user --------------------------------------------------------------------------


@main.group()
def user():
    """Principals, grants and tokens."""


@user.command("add")
@click.argument("display_name")
@click.option("--id", "principal_id", default=None)
@pass_client
def user_add(client: Client, display_name, principal_id):
    emit(client.call("POST", "/registry/users", json={"display_name": display_name, "id": principal_id}))


@user.command("grant")
@click.argument("principal_id")
@click.argument("role")
@click.option("--departments", default=None, help="Comma-separated department ids.")
@click.option("--all-departments", is_flag=True)
@pass_client
def user_grant(client: Client, principal_id, role, departments, all_departments):
    body = {
        "principal_id": principal_id,
        "role": role,
        "departments": departments.split(",") if departments else None,
        "all_departments": all_departments,
    }
    emit(client.call("POST", "/grants", json=body))


@user.command("revoke")
@click.argument("grant_id")
@pass_client
def user_revoke(client: Client, grant_id):
    emit(client.call("DELETE", f"/grants/{grant_id}"))


@user.command("token")
@click.argument("principal_id")
@click.option("--ttl", type=int, default=86_400, show_default=True)
@pass_client
def user_token(client: Client, principal_id, ttl):
    emit(client.call("POST", "/auth/token", json={"principal_id": principal_id, "ttl_seconds": ttl}))


# -- round --------------------------------------------------------------------------


@main.group("round")
def round_group():
    """Budgeting round lifecycle."""


@round_group.command("open")
@click.argument("label")
@pass_client
def round_open(client: Client, label):
    emit(client.call("POST", "/rounds", json={"label": label}))


@round_group.command("consider")
@click.argument("round_id")
@pass_client
def round_consider(client: Client, round_id):
    emit(client.call("POST", f"/rounds/{round_id}/consider"))


@round_group.command("approve")
@click.argument("round_id")
@pass_client
def round_approve(client: Client, round_id):
    emit(client.call("POST", f"/rounds/{round_id}/approve"))


@round_group.command("advance")
@click.argument("round_id")
@pass_client
def round_advance(client: Client, round_id):
    emit(client.call("POST", f"/rounds/{round_id}/advance"))


@round_group.command("close")
@click.argument("round_id")
@pass_client
def round_close(client: Client, round_id):
    emit(client.call("POST", f"/rounds/{round_id}/close"))


@round_group.command("seed-template")
@click.argument("round_id")
@click.option("--template", "template_id", default=None)
@click.option("--copy-from", "copy_from_round", default=None)
@pass_client
def round_seed_template(client: Client, round_id, template_id, copy_from_round):
    body = {"template_id": template_id, "copy_from_round": copy_from_round}
    emit(client.call("POST", f"/rounds/{round_id}/seed-template", json=body))


# -- template -----------------------------------------------------------------------


@main.group()
def template():
    """Template structure change control."""


@template.command("import")
@click.argument("name")
@click.option("--file", "file_path", type=click.Path(exists=True, dir_okay=False), required=True)
@pass_client
def template_import(client: Client, name, file_path):
    document = json.loads(Path(file_path).read_text(encoding="utf-8"))
    document.pop("structure_checksum", None)
    emit(client.call("POST", "/templates", json={"name": name, "document": document}))


@template.command("wip")
@click.argument("template_id")
@pass_client
def template_wip(client: Client, template_id):
    emit(client.call("POST", f"/templates/{template_id}/wip"))


@template.command("edit")
@click.argument("version_id")
@click.option("--file", "file_path", type=click.Path(exists=True, dir_okay=False), required=True)
@pass_client
def template_edit(client: Client, version_id, file_path):
    document = json.loads(Path(file_path).read_text(encoding="utf-8"))
    document.pop("structure_checksum", None)
    emit(client.call("PUT", f"/versions/{version_id}/document", json=document))


@template.command("submit")
@click.argument("version_id")
@pass_client
def template_submit(client: Client, version_id):
    emit(client.call("POST", f"/versions/{version_id}/submit"))


@template.command("audit")
@click.argument("version_id")
@click.option("--verdict", type=click.Choice(["Pass", "Refer"]), required=True)
@click.option("--note", default="")
@pass_client
def template_audit(client: Client, version_id, verdict, note):
    emit(client.call("POST", f"/versions/{version_id}/audit", json={"verdict": verdict, "note": note}))


@template.command("release")
@click.argument("version_id")
@pass_client
def template_release(client: Client, version_id):
    emit(client.call("POST", f"/versions/{version_id}/release"))


@template.command("history")
@click.argument("template_id")
@pass_client
def template_history(client: Client, template_id):
    emit(client.call("GET", f"/templates/{template_id}/history"))


@template.command("export")
@click.argument("version_id")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@pass_client
def template_export(client: Client, version_id, out):
    payload = client.call("GET", f"/versions/{version_id}")
    version = payload["version"]
    document = dict(version["document"])
    document["structure_checksum"] = version["checksum"]
    text = json.dumps(document, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        emit(document)


# -- budget ----------------------------------------------------------------------------


@main.group()
def budget():
    """Budget data commands."""


@budget.command("next-version")
@click.argument("round_id")
@pass_client
def budget_next_version(client: Client, round_id):
    emit(client.call("POST", "/budget/next-version", json={"round_id": round_id}))


@budget.command("export")
@click.argument("round_id")
@click.argument("data_version", type=int)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@pass_client
def budget_export(client: Client, round_id, data_version, out):
    text = client.call(
        "GET", "/budget/cells", params={"round_id": round_id, "data_version": data_version, "format": "csv"}
    )
    if out:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        emit(text)


# -- actuals ----------------------------------------------------------------------------


@main.group()
def actuals():
    """Historic actuals ingestion."""


@actuals.command("import")
@click.argument("fiscal_label")
@click.argument("csv_file", type=click.Path(exists=True, dir_okay=False))
@pass_client
def actuals_import(client: Client, fiscal_label, csv_file):
    text = Path(csv_file).read_text(encoding="utf-8")
    emit(
        client.call(
            "POST",
            "/actuals/import",
            params={"fiscal": fiscal_label},
            content=text.encode("utf-8"),
            headers={"Content-Type": "text/csv"},
        )
    )


# -- status -----------------------------------------------------------------------------


@main.group()
def status():
    """Readiness statuses."""


@status.command("set")
@click.argument("round_id")
@click.argument("data_version", type=int)
@click.argument("cost_centre_id")
@click.argument("section_id")
@click.argument("value", type=click.Choice(["NotStarted", "InProgress", "Completed", "NotApplicable"]))
@pass_client
def status_set(client: Client, round_id, data_version, cost_centre_id, section_id, value):
    body = {
        "round_id": round_id,
        "data_version": data_version,
        "cost_centre_id": cost_centre_id,
        "section_id": section_id,
        "status": value,
    }
    emit(client.call("PUT", "/status", json=body))


@status.command("matrix")
@click.argument("round_id")
@click.argument("data_version", type=int)
@click.option("--csv", "as_csv", is_flag=True, help="Emit the CSV export instead of JSON.")
@pass_client
def status_matrix(client: Client, round_id, data_version, as_csv):
    params = {"round_id": round_id, "data_version": data_version}
    if as_csv:
        params["format"] = "csv"
    emit(client.call("GET", "/status/matrix", params=params))


# -- consolidation -------------------------------------------------------------------------


@main.command()
@click.argument("round_id")
@click.argument("data_version", type=int)
@click.option("--scope", default=None, help="Comma-separated department ids (default: all).")
@click.option("--provisional", is_flag=True, help="Allow a provisional report if the gate is not ready.")
@click.option("--export", "export_csv", is_flag=True, help="Print the stamped CSV export.")
@pass_client
def consolidate(client: Client, round_id, data_version, scope, provisional, export_csv):
    """Run a consolidation over the scope."""
    body = {
        "round_id": round_id,
        "data_version": data_version,
        "scope": scope.split(",") if scope else None,
        "allow_provisional": provisional,
    }
    payload = client.call("POST", "/consolidate", json=body)
    if export_csv:
        emit(client.call("GET", f"/reports/{payload['report']['id']}/export.csv"))
    else:
        emit(payload)


@main.command()
@click.argument("round_id")
@click.argument("data_version", type=int)
@click.option("--comparator", type=click.Choice(["PriorDataVersion", "PriorRound", "Actuals"]), required=True)
@click.option("--fiscal", default=None, help="Fiscal label when comparator is Actuals.")
@click.option("--scope", default=None)
@pass_client
def kpi(client: Client, round_id, data_version, comparator, fiscal, scope):
    """Variance report against a prior version, prior round, or actuals."""
    body = {
        "round_id": round_id,
        "data_version": data_version,
        "comparator": comparator,
        "fiscal_label": fiscal,
        "scope": scope.split(",") if scope else None,
    }
    emit(client.call("POST", "/kpi", json=body))


# -- audit ------------------------------------------------------------------------------------


@main.group("audit")
def audit_group():
    """Audit log access and verification."""


@audit_group.command("verify")
@pass_client
def audit_verify(client: Client):
    payload = client.call("GET", "/audit/verify")
    if payload["intact"]:
        click.echo("intact")
    else:
        click.echo(f"BROKEN at seq {payload['first_bad_seq']}")
        sys.exit(1)


@audit_group.command("export")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@pass_client
def audit_export(client: Client, out):
    text = client.call("GET", "/audit/export")
    if out:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        emit(text)


@audit_group.command("verify-export")
@click.argument("export_file", type=click.Path(exists=True, dir_okay=False))
def audit_verify_export(export_file):
    """Offline re-verification of an exported log (no server required)."""
    verdict = verify_export_text(Path(export_file).read_text(encoding="utf-8"))
    if verdict.intact:
        click.echo("intact")
    else:
        click.echo(f"BROKEN at seq {verdict.first_bad_seq}")
        sys.exit(1)


@audit_group.command("query")
@click.option("--actor", default=None)
@click.option("--action", default=None)
@click.option("--target-prefix", default=None)
@pass_client
def audit_query(client: Client, actor, action, target_prefix):
    params = {k: v for k, v in (("actor", actor), ("action", action), ("target_prefix", target_prefix)) if v}
    emit(client.call("GET", "/audit", params=params))


# -- demo --------------------------------------------------------------------------------------


@main.group()
def demo():
    """Seeded sample world."""


@demo.command("seed")
@pass_client
def demo_seed(client: Client):
    emit(client.call("POST", "/demo/seed"))


if __name__ == "__main__":
    main()
