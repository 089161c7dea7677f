"""Engine facade: wires the submodules over one store and provides the
operation wrapper every mutating or audited call runs through.

The wrapper gives each operation the single-writer transaction, and seals
the outcome into the audit chain inside that same transaction: success
commits the action together with an Ok record; an engine-level failure
rolls the staged changes back and commits only the Denied/Error record.
Either way exactly one record lands per attempted operation.
"""

from __future__ import annotations

import secrets
from contextlib import contextmanager
from datetime import datetime
from typing import Callable, Iterator

from .access import AccessControl
from .audit import AuditLog
from .budget import BudgetStore
from .consolidation import Consolidation
from .errors import AuthenticationFailed, EngineError, PermissionDenied
from .model import Action, Outcome, Principal, RoleGrant, SessionToken, format_ts, parse_ts, utc_now
from .readiness import Readiness
from .registry import Registry
from .store import Store, Transaction
from .templates import TemplateControl

SYSTEM_ACTOR = "system"


class OpContext:
    """Per-operation state handed to the operation body."""

    def __init__(self, txn: Transaction):
        self.txn = txn
        self.detail = ""
        # verify_chain is exempt from usage logging; everything else records.
        self.audit_on_success = True


class Engine:
    def __init__(self, store: Store, clock: Callable[[], datetime] = utc_now):
        self.store = store
        self.clock = clock
        self.audit = AuditLog(self)
        self.access = AccessControl(self)
        self.registry = Registry(self)
        self.templates = TemplateControl(self)
        self.budget = BudgetStore(self)
        self.readiness = Readiness(self)
        self.consolidation = Consolidation(self)

    def now_str(self) -> str:
        return format_ts(self.clock())

    @contextmanager
    def operation(self, actor: str, action: Action, target: str) -> Iterator[OpContext]:
        txn = self.store.begin()
        ctx = OpContext(txn)
        try:
            yield ctx
        except EngineError as exc:
            txn.rollback_changes()
            outcome = Outcome.DENIED if isinstance(exc, PermissionDenied) else Outcome.ERROR
            self.audit.append_in(txn, actor=actor, action=action, target=target, outcome=outcome, detail=exc.audit_detail)
            txn.commit()
            raise
        except BaseException:
            txn.abort()
            raise
        else:
            if ctx.audit_on_success:
                self.audit.append_in(
                    txn, actor=actor, action=action, target=target, outcome=Outcome.OK, detail=ctx.detail
                )
            txn.commit()

    def next_id(self, txn: Transaction, kind: str, prefix: str) -> str:
        row = txn.get("meta", f"seq:{kind}") or {"value": 0}
        value = row["value"] + 1
        txn.put("meta", f"seq:{kind}", {"value": value})
        return f"{prefix}{value}"

    def verify_chain(self):
        return self.audit.verify_chain()

    def preflight(self, actor: str, action: Action, target: str, scope=None) -> None:
        """Role gate for composite endpoints: silent when allowed, one Denied
        record (then PermissionDenied) when not."""
        with self.operation(actor, action, target) as op:
            op.audit_on_success = False
            self.access.require(actor, action, scope)

    # -- authentication ---------------------------------------------------------

    def principal_for_token(self, token: str) -> str:
        with self.store.read_lock():
            row: SessionToken | None = self.store.get("token", token)
            if row is None:
                raise AuthenticationFailed("unknown token")
            if row.expires_at is not None and parse_ts(row.expires_at) <= self.clock():
                raise AuthenticationFailed("token expired")
            return row.principal_id

    def mint_token(self, admin_id: str, principal_id: str, ttl_seconds: int | None = 86_400) -> SessionToken:
        from .errors import UnknownPrincipal

        with self.operation(admin_id, Action.ADMIN_REGISTRY, f"auth/token/{principal_id}") as op:
            self.access.require(admin_id, Action.ADMIN_REGISTRY)
            if op.txn.get("principal", principal_id) is None:
                raise UnknownPrincipal(principal_id)
            expires = None
            if ttl_seconds is not None:
                expires = format_ts(datetime.fromtimestamp(self.clock().timestamp() + ttl_seconds, tz=self.clock().tzinfo))
            token = SessionToken(token=secrets.token_hex(16), principal_id=principal_id, expires_at=expires)
            op.txn.put("token", token.token, token)
            # The token value itself stays out of the audit trail.
            op.detail = f"principal={principal_id} expires={expires or 'never'}"
        return token

    # -- startup bootstrap --------------------------------------------------------

    def ensure_bootstrap_admin(self, principal_id: str, token: str, display_name: str = "Bootstrap Admin") -> None:
        """Idempotently create the configured admin principal, grant and token.

        Runs as the system actor before the service accepts requests; this is
        the only write path that does not consult ``authorize`` (there is no
        principal yet to hold the admin role).
        """
        from .model import Role

        if self.store.get("principal", principal_id) is None:
            with self.operation(SYSTEM_ACTOR, Action.ADMIN_REGISTRY, f"registry/user/{principal_id}") as op:
                op.txn.put("principal", principal_id, Principal(id=principal_id, display_name=display_name))
                op.detail = "bootstrap admin principal"
        has_admin_grant = any(
            g.principal_id == principal_id and g.role == Role.ADMIN for g in self.store.table("grant").values()
        )
        if not has_admin_grant:
            with self.operation(SYSTEM_ACTOR, Action.ADMIN_REGISTRY, f"grants/{principal_id}") as op:
                grant_id = self.next_id(op.txn, "grant", "G")
                op.txn.put(
                    "grant",
                    grant_id,
                    RoleGrant(id=grant_id, principal_id=principal_id, role=Role.ADMIN, all_departments=True),
                )
                op.detail = f"bootstrap grant {grant_id}: Admin all-departments"
        existing = self.store.get("token", token)
        if existing is None or existing.principal_id != principal_id or existing.expires_at is not None:
            with self.operation(SYSTEM_ACTOR, Action.ADMIN_REGISTRY, f"auth/token/{principal_id}") as op:
                op.txn.put("token", token, SessionToken(token=token, principal_id=principal_id, expires_at=None))
                op.detail = f"principal={principal_id} expires=never (configured)"
