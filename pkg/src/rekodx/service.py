"""HTTP+JSON session service over the registry and store."""

from __future__ import annotations

import json
import re
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from . import guard
from .errors import (AlreadyObservedError, ConfigError, RekoError,
                     SessionBudgetError, UnknownIdError)
from .model import module_document
from .reasoning import explain, posterior
from .store import ModuleRegistry, SessionStore

_STATUS_BY_CODE = {
    "UNKNOWN_ID": 404,
    "ALREADY_OBSERVED": 409,
    "CONFIG_ERROR": 400,
    "BUDGET_EXHAUSTED": 409,
}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code


def differential_payload(session) -> dict:
    """Ranked differential with guard verdicts applied; vetoed nodes split out."""
    entries = session.posterior_entries()
    ranked = sorted(entries, key=lambda nid: (-entries[nid], nid))
    guarded, verdicts = guard.check_differential(
        session.index, session.evidence, ranked)
    guarded_set = set(guarded)

    def entry(node_id):
        node = session.index.nodes[node_id]
        return {
            "node_id": node_id,
            "name": node.name,
            "posterior": entries[node_id],
            "status": session.resolved.get(node_id, "active"),
        }

    return {
        "differential": [entry(n) for n in guarded],
        "vetoed": [entry(n) for n in ranked if n not in guarded_set],
        "verdicts": [v.to_dict() for v in verdicts],
        "goal": session.goal.to_dict() if session.goal else None,
        "status": session.status().to_dict(),
        "step_count": session.step_count,
    }


def transcript_payload(session_id: str, session) -> dict:
    return {"session_id": session_id, **session.to_dict()}


class _Api:
    """Route table shared by all handler threads."""

    def __init__(self, registry: ModuleRegistry, store: SessionStore,
                 ui_dir: str | None = None):
        self.registry = registry
        self.store = store
        self.ui_dir = Path(ui_dir) if ui_dir else None

    # Handlers return (status, payload).

    def list_modules(self):
        return 200, self.registry.summaries()

    def get_module(self, module_id):
        return 200, module_document(self.registry.get(module_id).module)

    def create_session(self, body):
        module_id = body.get("module_id")
        if not isinstance(module_id, str):
            raise ApiError(400, "BAD_REQUEST", "body must carry a string 'module_id'")
        overrides = body.get("config_overrides") or {}
        context = body.get("context") or {}
        if not isinstance(overrides, dict) or not isinstance(context, dict):
            raise ApiError(400, "BAD_REQUEST",
                           "'config_overrides' and 'context' must be objects")
        session_id, _ = self.store.create(module_id, overrides, context)
        return 201, {"session_id": session_id}

    def post_finding(self, session_id, body):
        finding_id = body.get("finding_id")
        state = body.get("state")
        if not isinstance(finding_id, str) or state not in ("present", "absent"):
            raise ApiError(400, "BAD_REQUEST",
                           "body must carry 'finding_id' and state 'present'|'absent'")
        session = self.store.ingest(session_id, finding_id, state)
        return 200, differential_payload(session)

    def get_differential(self, session_id):
        return 200, differential_payload(self.store.get(session_id))

    def get_recommendations(self, session_id, query):
        k = 5
        if "k" in query:
            try:
                k = int(query["k"][0])
            except ValueError:
                raise ApiError(400, "BAD_REQUEST", "query parameter k must be an integer")
        if k < 1:
            raise ApiError(400, "BAD_REQUEST", "query parameter k must be >= 1")
        recs, session = self.store.recommendations(session_id, k)
        items = []
        for r in recs:
            doc = r.to_dict()
            doc["name"] = session.index.findings[r.finding_id].name
            items.append(doc)
        return 200, {
            "recommendations": items,
            "goal": session.goal.to_dict() if session.goal else None,
            "status": session.status().to_dict(),
        }

    def get_explanations(self, session_id, node_id):
        session = self.store.get(session_id)
        node = session.index.require_node(node_id)
        prior = session.index.prior.get(node_id)
        if prior is None:
            raise ApiError(400, "MISSING_PRIOR", f"node {node_id!r} has no prior")
        entries = explain(session.index, node_id, session.evidence)
        return 200, {
            "node_id": node_id,
            "name": node.name,
            "prior": prior,
            "posterior": posterior(session.index, node_id, session.evidence),
            "entries": [e.to_dict() for e in entries],
        }

    def get_transcript(self, session_id):
        return 200, transcript_payload(session_id, self.store.get(session_id))

    def delete_session(self, session_id):
        self.store.close(session_id)
        return 200, {"closed": session_id}


_ROUTES = [
    ("GET", re.compile(r"^/modules$"), "list_modules"),
    ("GET", re.compile(r"^/modules/([^/]+)$"), "get_module"),
    ("POST", re.compile(r"^/sessions$"), "create_session"),
    ("POST", re.compile(r"^/sessions/([^/]+)/findings$"), "post_finding"),
    ("GET", re.compile(r"^/sessions/([^/]+)/differential$"), "get_differential"),
    ("GET", re.compile(r"^/sessions/([^/]+)/recommendations$"), "get_recommendations"),
    ("GET", re.compile(r"^/sessions/([^/]+)/explanations/([^/]+)$"), "get_explanations"),
    ("GET", re.compile(r"^/sessions/([^/]+)/transcript$"), "get_transcript"),
    ("DELETE", re.compile(r"^/sessions/([^/]+)$"), "delete_session"),
]

_UI_TYPES = {".html": "text/html; charset=utf-8", ".js": "text/javascript; charset=utf-8",
             ".css": "text/css; charset=utf-8", ".map": "application/json",
             ".svg": "image/svg+xml"}


class ApiHandler(BaseHTTPRequestHandler):
    api: _Api  # set on the server class
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default; tests watch responses
        pass

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            body = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ApiError(400, "BAD_REQUEST", f"request body is not valid JSON: {exc}")
        if not isinstance(body, dict):
            raise ApiError(400, "BAD_REQUEST", "request body must be a JSON object")
        return body

    def _serve_ui(self, path: str) -> bool:
        api = self.server.api
        if api.ui_dir is None:
            return False
        rel = "index.html" if path in ("/", "") else path.lstrip("/")
        target = (api.ui_dir / rel).resolve()
        if not str(target).startswith(str(api.ui_dir.resolve())) or not target.is_file():
            return False
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type",
                         _UI_TYPES.get(target.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)
        return True

    def _dispatch(self, method: str) -> None:
        parsed = urlparse(self.path)
        query = parse_qs(parsed.query)
        try:
            for verb, pattern, name in _ROUTES:
                if verb != method:
                    continue
                match = pattern.match(parsed.path)
                if not match:
                    continue
                handler = getattr(self.server.api, name)
                args = list(match.groups())
                if name == "create_session":
                    args.append(self._read_body())
                elif name == "post_finding":
                    args.append(self._read_body())
                elif name == "get_recommendations":
                    args.append(query)
                status, payload = handler(*args)
                self._send_json(status, payload)
                return
            if method == "GET" and self._serve_ui(parsed.path):
                return
            raise ApiError(404, "NOT_FOUND", f"no route for {method} {parsed.path}")
        except ApiError as exc:
            self._send_json(exc.status, {"error": {"code": exc.code, "message": str(exc)}})
        except (UnknownIdError, AlreadyObservedError, ConfigError,
                SessionBudgetError) as exc:
            status = _STATUS_BY_CODE.get(exc.code, 400)
            self._send_json(status, {"error": {"code": exc.code, "message": str(exc)}})
        except (ValueError, RekoError) as exc:
            self._send_json(400, {"error": {"code": "BAD_REQUEST", "message": str(exc)}})

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_DELETE(self):
        self._dispatch("DELETE")

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()


class Service:
    """Owns the HTTP server plus its registry and store."""

    def __init__(self, module_dir, log_dir, port: int = 0, ui_dir: str | None = None):
        registry, reports = ModuleRegistry.load_dir(module_dir)
        if len(registry) == 0:
            detail = json.dumps(reports, sort_keys=True, indent=2)
            raise RekoError(f"no valid modules in {module_dir}:\n{detail}",
                            code="NO_VALID_MODULES")
        self.load_reports = reports
        self.registry = registry
        self.store = SessionStore(registry, log_dir)
        self.httpd = ThreadingHTTPServer(("127.0.0.1", port), ApiHandler)
        self.httpd.api = _Api(registry, self.store, ui_dir)

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    def serve_forever(self):
        self.httpd.serve_forever()

    def shutdown(self):
        self.httpd.shutdown()
        self.httpd.server_close()
