"""Module registry and event-sourced session persistence.

Sessions are already driven by a deterministic step log, so persistence is an
append-only JSON Lines file per session: every state-mutating request is
appended and flushed before it is applied and acknowledged. Replaying a log
reconstructs the exact session state; a torn trailing line is an
unacknowledged request and is ignored.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from pathlib import Path

from .cycle import Session, start_session
from .errors import AlreadyObservedError, RekoError, UnknownIdError
from .model import EvidenceState, ModuleIndex, parse_module, validate


class ModuleRegistry:
    """Validated modules loaded once at startup; immutable afterwards."""

    def __init__(self):
        self._modules: dict[str, ModuleIndex] = {}

    @classmethod
    def load_dir(cls, directory) -> tuple["ModuleRegistry", dict]:
        """Load every *.json in the directory. Returns (registry, per-file report)."""
        registry = cls()
        reports = {}
        directory = Path(directory)
        if not directory.is_dir():
            raise RekoError(f"module directory {str(directory)!r} does not exist",
                            code="NO_MODULE_DIR")
        for path in sorted(directory.glob("*.json")):
            name = path.name
            try:
                module = parse_module(path.read_text(encoding="utf-8"))
            except RekoError as exc:
                reports[name] = {"loaded": False, "error": str(exc)}
                continue
            report = validate(module)
            if not report.ok:
                reports[name] = {"loaded": False, "validation": report.to_dict()}
                continue
            if module.id in registry._modules:
                raise RekoError(
                    f"duplicate module id {module.id!r} in {name}", code="DUPLICATE_MODULE")
            registry._modules[module.id] = ModuleIndex(module)
            reports[name] = {"loaded": True, "module_id": module.id,
                             "warnings": report.to_dict()["warnings"]}
        return registry, reports

    def add(self, module) -> None:
        index = ModuleIndex.of(module)
        report = validate(index.module)
        if not report.ok:
            raise RekoError(f"module {index.module.id!r} failed validation",
                            code="INVALID_MODULE")
        if index.module.id in self._modules:
            raise RekoError(f"duplicate module id {index.module.id!r}",
                            code="DUPLICATE_MODULE")
        self._modules[index.module.id] = index

    def get(self, module_id: str) -> ModuleIndex:
        index = self._modules.get(module_id)
        if index is None:
            raise UnknownIdError(f"unknown module id {module_id!r}")
        return index

    def ids(self) -> list[str]:
        return sorted(self._modules)

    def summaries(self) -> list[dict]:
        return [{"id": m.module.id, "name": m.module.name,
                 "domain": m.module.domain, "version": m.module.version}
                for m in (self._modules[i] for i in self.ids())]

    def __len__(self) -> int:
        return len(self._modules)


class _LiveSession:
    __slots__ = ("session", "lock", "log_file")

    def __init__(self, session: Session, log_file):
        self.session = session
        self.lock = threading.Lock()
        self.log_file = log_file


class SessionStore:
    """Live sessions keyed by opaque id, each backed by an append-only event log."""

    def __init__(self, registry: ModuleRegistry, log_dir):
        self._registry = registry
        self._log_dir = Path(log_dir)
        self._log_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._sessions: dict[str, _LiveSession] = {}
        self._replay_all()

    # -- persistence --------------------------------------------------------

    def _log_path(self, session_id: str) -> Path:
        return self._log_dir / f"{session_id}.jsonl"

    def _append(self, live: _LiveSession, record: dict) -> None:
        line = json.dumps(record, sort_keys=True, ensure_ascii=False)
        live.log_file.write(line + "\n")
        live.log_file.flush()
        os.fsync(live.log_file.fileno())

    @staticmethod
    def read_log(path) -> list[dict]:
        """Complete (acknowledged) records of one session log; torn tail ignored."""
        records = []
        with open(path, "r", encoding="utf-8") as fh:
            content = fh.read()
        lines = content.split("\n")
        # Anything after the final newline was never flushed as a full record.
        complete, tail = lines[:-1], lines[-1]
        for i, line in enumerate(complete):
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise RekoError(
                    f"corrupt session log {path} at record {i}: {exc}",
                    code="CORRUPT_LOG")
        del tail  # unacknowledged
        return records

    @staticmethod
    def replay_records(registry: ModuleRegistry, records) -> Session | None:
        """Rebuild a session from its acknowledged records; None if closed."""
        session = None
        for record in records:
            kind = record["kind"]
            if kind == "created":
                index = registry.get(record["module_id"])
                session = start_session(
                    index, record.get("config_overrides") or None,
                    EvidenceState({}, dict(record.get("context") or {})))
            elif session is None:
                raise RekoError("session log does not start with a 'created' record",
                                code="CORRUPT_LOG")
            elif kind == "finding":
                session.ingest(record["finding_id"], record["state"])
            elif kind == "recommended":
                session.recommend(record["k"])
            elif kind == "closed":
                return None
            else:
                raise RekoError(f"unknown record kind {kind!r}", code="CORRUPT_LOG")
        return session

    def _replay_all(self) -> None:
        for path in sorted(self._log_dir.glob("*.jsonl")):
            records = self.read_log(path)
            if not records:
                continue
            session = self.replay_records(self._registry, records)
            if session is None:
                continue  # closed sessions stay closed
            session_id = path.stem
            log_file = open(path, "a", encoding="utf-8")
            self._sessions[session_id] = _LiveSession(session, log_file)

    # -- operations ---------------------------------------------------------

    def create(self, module_id: str, config_overrides: dict | None = None,
               context: dict | None = None) -> tuple[str, Session]:
        index = self._registry.get(module_id)  # raises before any I/O
        session_id = uuid.uuid4().hex
        path = self._log_path(session_id)
        log_file = open(path, "a", encoding="utf-8")
        live = _LiveSession(None, log_file)
        self._append(live, {"kind": "created", "module_id": module_id,
                            "config_overrides": config_overrides or {},
                            "context": context or {}})
        live.session = start_session(index, config_overrides or None,
                                     EvidenceState({}, dict(context or {})))
        with self._lock:
            self._sessions[session_id] = live
        return session_id, live.session

    def _live(self, session_id: str) -> _LiveSession:
        with self._lock:
            live = self._sessions.get(session_id)
        if live is None:
            raise UnknownIdError(f"unknown session id {session_id!r}")
        return live

    def get(self, session_id: str) -> Session:
        return self._live(session_id).session

    def ingest(self, session_id: str, finding_id: str, state: str) -> Session:
        live = self._live(session_id)
        with live.lock:
            # Check before persisting so a bad request leaves no record.
            live.session.index.require_finding(finding_id)
            if state not in ("present", "absent"):
                raise ValueError(f"state must be 'present' or 'absent', got {state!r}")
            if finding_id in live.session.evidence.finding_states:
                raise AlreadyObservedError(f"finding {finding_id!r} already observed")
            self._append(live, {"kind": "finding", "finding_id": finding_id,
                                "state": state})
            live.session.ingest(finding_id, state)
            return live.session

    def recommendations(self, session_id: str, k: int):
        live = self._live(session_id)
        with live.lock:
            if k < 1:
                raise ValueError(f"k must be a positive integer, got {k!r}")
            # recommend() appends to the session step log, so it is a mutation
            # and must be persisted like one.
            self._append(live, {"kind": "recommended", "k": k})
            return live.session.recommend(k), live.session

    def close(self, session_id: str) -> None:
        live = self._live(session_id)
        with live.lock:
            self._append(live, {"kind": "closed"})
            live.log_file.close()
        with self._lock:
            self._sessions.pop(session_id, None)

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(self._sessions)
