"""Single-file transactional store with an append-only journal.

The journal is the store: every commit appends one frame containing the
transaction's table changes, and reopening replays all frames in order.
A frame is ``length (4B big-endian) | payload (JSON, UTF-8) | frame hash
(32B)`` where the frame hash chains over the previous frame's hash, so a
flipped byte anywhere in committed data is detected on reopen. A torn
write at the tail (the crash case) is distinguishable from tampering —
its bytes simply run out — and is truncated away, leaving the last fully
committed state.

Mutations go through a single-writer transaction; readers share the same
lock for consistent snapshots. In-memory mode (``path=None``) skips the
journal entirely and is used by tests that don't exercise persistence.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Mapping

from .model import TABLE_MODELS, Record

logger = logging.getLogger(__name__)

MAGIC = b"GSJ1\n"
FRAME_LEN_BYTES = 4
FRAME_HASH_BYTES = 32
MAX_FRAME_PAYLOAD = 1 << 26
ZERO_HASH = bytes(FRAME_HASH_BYTES)

_MISSING = object()


class JournalWriteError(OSError):
    """Raised when a commit cannot be made durable; the action is aborted."""


class StoreClosed(RuntimeError):
    pass


class Store:
    """Table-oriented state with atomic, journaled commits."""

    def __init__(self, path: str | Path | None, *, sync: bool = True):
        self.path = Path(path) if path is not None else None
        self.sync = sync
        self.tables: dict[str, dict[str, Any]] = {name: {} for name in TABLE_MODELS}
        self.commit_count = 0
        # Frame index (1-based) of the first undecodable frame, if any.
        self.corrupt_frame: int | None = None
        self._lock = threading.RLock()
        self._fh = None
        self._prev_frame_hash = ZERO_HASH
        self._closed = False
        if self.path is not None:
            self._open_and_replay()

    # -- lifecycle -------------------------------------------------------------

    def _open_and_replay(self) -> None:
        fresh = not self.path.exists() or self.path.stat().st_size == 0
        if fresh:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "wb") as fh:
                fh.write(MAGIC)
                fh.flush()
                os.fsync(fh.fileno())
        else:
            self._replay()
        self._fh = open(self.path, "ab")

    def _replay(self) -> None:
        data = self.path.read_bytes()
        if data[: len(MAGIC)] != MAGIC:
            self.corrupt_frame = 1
            logger.error("store %s: bad file header", self.path)
            return
        pos = len(MAGIC)
        frame_no = 0
        prev_hash = ZERO_HASH
        while pos < len(data):
            frame_no += 1
            frame_start = pos
            if pos + FRAME_LEN_BYTES > len(data):
                self._truncate_tail(frame_start, frame_no)
                return
            length = int.from_bytes(data[pos : pos + FRAME_LEN_BYTES], "big")
            pos += FRAME_LEN_BYTES
            if length <= 0 or length > MAX_FRAME_PAYLOAD or pos + length + FRAME_HASH_BYTES > len(data):
                # Bytes run out (or the declared length is impossible at the
                # tail): a torn write, not tampering.
                self._truncate_tail(frame_start, frame_no)
                return
            payload = data[pos : pos + length]
            pos += length
            stored_hash = data[pos : pos + FRAME_HASH_BYTES]
            pos += FRAME_HASH_BYTES
            expected = hashlib.sha256(prev_hash + payload).digest()
            if stored_hash != expected:
                self.corrupt_frame = frame_no
                logger.error("store %s: frame %d fails hash verification", self.path, frame_no)
                return
            try:
                frame = json.loads(payload.decode("utf-8"))
                self._apply_frame(frame)
            except (ValueError, KeyError, TypeError) as exc:
                self.corrupt_frame = frame_no
                logger.error("store %s: frame %d undecodable: %s", self.path, frame_no, exc)
                return
            prev_hash = expected
            self.commit_count = frame["n"]
        self._prev_frame_hash = prev_hash

    def _truncate_tail(self, offset: int, frame_no: int) -> None:
        logger.warning("store %s: discarding torn frame %d at byte %d", self.path, frame_no, offset)
        with open(self.path, "r+b") as fh:
            fh.truncate(offset)
            fh.flush()
            os.fsync(fh.fileno())

    def _apply_frame(self, frame: dict) -> None:
        for change in frame["c"]:
            op, table, key = change[0], change[1], change[2]
            model = TABLE_MODELS[table]
            if op == "p":
                value = change[3]
                self.tables[table][key] = model.model_validate(value) if model is not None else value
            elif op == "d":
                self.tables[table].pop(key, None)
            else:
                raise ValueError(f"unknown change op {op!r}")

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None
            self._closed = True

    # -- access -----------------------------------------------------------------

    @contextmanager
    def read_lock(self) -> Iterator[None]:
        with self._lock:
            yield

    def get(self, table: str, key: str):
        return self.tables[table].get(key)

    def table(self, table: str) -> Mapping[str, Any]:
        return self.tables[table]

    def begin(self) -> "Transaction":
        if self._closed:
            raise StoreClosed("store is closed")
        if self.corrupt_frame is not None:
            raise StoreClosed(f"store journal corrupt at frame {self.corrupt_frame}")
        self._lock.acquire()
        return Transaction(self)

    def _write_frame(self, changes: list) -> None:
        self.commit_count += 1
        if self._fh is None:
            return
        payload = json.dumps({"n": self.commit_count, "c": changes}, separators=(",", ":"), ensure_ascii=False).encode(
            "utf-8"
        )
        frame_hash = hashlib.sha256(self._prev_frame_hash + payload).digest()
        try:
            self._fh.write(len(payload).to_bytes(FRAME_LEN_BYTES, "big"))
            self._fh.write(payload)
            self._fh.write(frame_hash)
            self._fh.flush()
            if self.sync:
                os.fsync(self._fh.fileno())
        except OSError as exc:
            self.commit_count -= 1
            raise JournalWriteError(str(exc)) from exc
        self._prev_frame_hash = frame_hash


class Transaction:
    """Staged changes applied to store state, committed as one journal frame.

    Reads through the store during a transaction see staged changes.
    ``rollback_changes`` undoes staging but keeps the transaction open so a
    failure record can still be committed by the caller.
    """

    def __init__(self, store: Store):
        self._store = store
        self._changes: list = []
        self._undo: list = []
        self._open = True

    @property
    def is_open(self) -> bool:
        return self._open

    def get(self, table: str, key: str):
        return self._store.get(table, key)

    def table(self, table: str) -> Mapping[str, Any]:
        return self._store.table(table)

    def put(self, table: str, key: str, value) -> None:
        assert self._open
        model = TABLE_MODELS[table]
        dumped = value.model_dump(mode="json") if isinstance(value, Record) else value
        if model is not None and not isinstance(value, model):
            raise TypeError(f"table {table!r} expects {model.__name__}")
        tbl = self._store.tables[table]
        self._undo.append((table, key, tbl.get(key, _MISSING)))
        tbl[key] = value
        self._changes.append(("p", table, key, dumped))

    def delete(self, table: str, key: str) -> None:
        assert self._open
        tbl = self._store.tables[table]
        self._undo.append((table, key, tbl.get(key, _MISSING)))
        tbl.pop(key, None)
        self._changes.append(("d", table, key))

    def rollback_changes(self) -> None:
        for table, key, old in reversed(self._undo):
            if old is _MISSING:
                self._store.tables[table].pop(key, None)
            else:
                self._store.tables[table][key] = old
        self._undo.clear()
        self._changes.clear()

    def commit(self) -> None:
        assert self._open
        try:
            if self._changes:
                try:
                    self._store._write_frame(self._changes)
                except JournalWriteError:
                    self.rollback_changes()
                    raise
        finally:
            self._open = False
            self._store._lock.release()

    def abort(self) -> None:
        if not self._open:
            return
        self.rollback_changes()
        self._open = False
        self._store._lock.release()
