"""Tamper-evident audit log: hash-chained, append-only, written in the same
transaction as the action it records.

Chaining: ``this_hash = SHA-256(prev_hash || canonical)`` where the canonical
serialization is the fixed field order (seq, timestamp, actor, action,
target, outcome, detail) joined by the 0x1F unit separator, UTF-8 encoded.
The genesis record chains from 32 zero bytes. Export lines are the canonical
serialization plus both hex hashes, so the chain can be re-verified offline
without this codebase's storage layer.
"""

from __future__ import annotations

import hashlib
from typing import TYPE_CHECKING, Iterable

from .model import Action, AuditRecord, ChainVerdict, Outcome

if TYPE_CHECKING:
    from .engine import Engine

FIELD_SEP = "\x1f"
GENESIS = bytes(32)


def sanitize(text: str) -> str:
    """Field text must not contain the separator or line breaks."""
    return text.replace(FIELD_SEP, " ").replace("\n", " ").replace("\r", " ")


def canonical_serialization(
    seq: int, timestamp: str, actor: str, action: str, target: str, outcome: str, detail: str
) -> str:
    return FIELD_SEP.join((str(seq), timestamp, actor, action, target, outcome, detail))


def record_canonical(record: AuditRecord) -> str:
    return canonical_serialization(
        record.seq,
        record.timestamp,
        record.actor,
        record.action.value,
        record.target,
        record.outcome.value,
        record.detail,
    )


def chain_hash(prev_hash: bytes, canonical: str) -> bytes:
    return hashlib.sha256(prev_hash + canonical.encode("utf-8")).digest()


def export_line(record: AuditRecord) -> str:
    return FIELD_SEP.join((record_canonical(record), record.prev_hash, record.this_hash))


def verify_records(records: Iterable[AuditRecord]) -> ChainVerdict:
    """Recompute the chain from genesis over in-memory records."""
    prev = GENESIS
    expected_seq = 1
    for record in records:
        if record.seq != expected_seq:
            return ChainVerdict(intact=False, first_bad_seq=expected_seq)
        digest = chain_hash(prev, record_canonical(record))
        if record.prev_hash != prev.hex() or record.this_hash != digest.hex():
            return ChainVerdict(intact=False, first_bad_seq=record.seq)
        prev = digest
        expected_seq += 1
    return ChainVerdict(intact=True)


def verify_export_text(text: str) -> ChainVerdict:
    """Offline verification of an exported log (one canonical line per record)."""
    prev = GENESIS
    seq = 0
    for line in text.splitlines():
        if not line:
            continue
        seq += 1
        parts = line.split(FIELD_SEP)
        if len(parts) != 9 or parts[0] != str(seq):
            return ChainVerdict(intact=False, first_bad_seq=seq)
        canonical = FIELD_SEP.join(parts[:7])
        prev_hex, this_hex = parts[7], parts[8]
        digest = chain_hash(prev, canonical)
        if prev_hex != prev.hex() or this_hex != digest.hex():
            return ChainVerdict(intact=False, first_bad_seq=seq)
        prev = digest
    return ChainVerdict(intact=True)


class AuditLog:
    """Engine-facing audit operations.

    ``append_in`` is internal: it is only ever called by the engine's
    operation wrapper inside the transaction of the action being recorded;
    there is no public append path.
    """

    def __init__(self, engine: "Engine"):
        self._engine = engine

    # -- internal append --------------------------------------------------------

    def append_in(self, txn, *, actor: str, action: Action, target: str, outcome: Outcome, detail: str) -> AuditRecord:
        table = txn.table("audit")
        seq = len(table) + 1
        prev = table.get(str(seq - 1))
        prev_hash = bytes.fromhex(prev.this_hash) if prev is not None else GENESIS
        timestamp = self._engine.now_str()
        actor = sanitize(actor)
        target = sanitize(target)
        detail = sanitize(detail)
        canonical = canonical_serialization(seq, timestamp, actor, action.value, target, outcome.value, detail)
        record = AuditRecord(
            seq=seq,
            timestamp=timestamp,
            actor=actor,
            action=action,
            target=target,
            outcome=outcome,
            detail=detail,
            prev_hash=prev_hash.hex(),
            this_hash=chain_hash(prev_hash, canonical).hex(),
        )
        txn.put("audit", str(seq), record)
        return record

    # -- reads -------------------------------------------------------------------

    def records(self) -> list[AuditRecord]:
        table = self._engine.store.table("audit")
        return [table[key] for key in sorted(table, key=int)]

    def record_count(self) -> int:
        return len(self._engine.store.table("audit"))

    def verify_chain(self) -> ChainVerdict:
        """Recompute every hash from genesis. Exempt from usage logging."""
        store = self._engine.store
        with store.read_lock():
            if store.corrupt_frame is not None:
                # Frames and audit records are one-to-one (every commit carries
                # exactly one record), so the first undecodable frame is the
                # first bad sequence number.
                return ChainVerdict(intact=False, first_bad_seq=len(store.table("audit")) + 1)
            return verify_records(self.records())

    def query(
        self,
        principal_id: str,
        *,
        actor: str | None = None,
        action: Action | None = None,
        ts_from: str | None = None,
        ts_to: str | None = None,
        target_prefix: str | None = None,
    ) -> list[AuditRecord]:
        """Filtered read of the log; the query itself is logged as a usage."""
        engine = self._engine
        with engine.operation(principal_id, Action.READ_AUDIT_LOG, "audit") as op:
            engine.access.require(principal_id, Action.READ_AUDIT_LOG)
            results = []
            for record in self.records():
                if actor is not None and record.actor != actor:
                    continue
                if action is not None and record.action != action:
                    continue
                if ts_from is not None and record.timestamp < ts_from:
                    continue
                if ts_to is not None and record.timestamp > ts_to:
                    continue
                if target_prefix is not None and not record.target.startswith(target_prefix):
                    continue
                results.append(record)
            op.detail = f"matched={len(results)}"
        return results

    def export_text(self, principal_id: str) -> str:
        """Full log in the offline-verifiable line format."""
        engine = self._engine
        with engine.operation(principal_id, Action.READ_AUDIT_LOG, "audit/export") as op:
            engine.access.require(principal_id, Action.READ_AUDIT_LOG)
            lines = [export_line(record) for record in self.records()]
            op.detail = f"records={len(lines)}"
        return "\n".join(lines) + ("\n" if lines else "")


__all__ = [
    "AuditLog",
    "FIELD_SEP",
    "GENESIS",
    "canonical_serialization",
    "chain_hash",
    "export_line",
    "record_canonical",
    "sanitize",
    "verify_export_text",
    "verify_records",
]
