"""JSON-over-HTTP annotation API plus static hosting for the browser UI.

The server enforces the workflow's blindness rules: while a session is in
the labeling phase no response ever carries another annotator's labels, and
adjudication payloads show candidate label pairs without attribution.
Writes are serialized per session through the store's lock.
"""
from __future__ import annotations

import json
import logging
import re
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .annotate import ADJUDICATING, CLOSED, LABELING, AnnotationSession, SessionError, SessionStore
from .base import ConfigurationError

log = logging.getLogger(__name__)


class AnnotationService:
    """Session operations behind the HTTP endpoints; also usable directly."""

    def __init__(self, store: SessionStore):
        self.store = store
        self._sessions: dict[str, AnnotationSession] = {}

    def session(self, session_id: str) -> AnnotationSession:
        with self.store.lock(session_id):
            if session_id not in self._sessions:
                self._sessions[session_id] = self.store.load(session_id)
            return self._sessions[session_id]

    def register(self, session: AnnotationSession) -> None:
        self._sessions[session.session_id] = session

    def next_item(self, session_id: str, annotator: str, skip: list[str] | None = None) -> dict:
        session = self.session(session_id)
        with self.store.lock(session_id):
            labeled, total = session.progress(annotator)
            payload = {
                "session_id": session_id,
                "annotator": annotator,
                "phase": session.status,
                "labels": list(session.label_set.labels),
                "progress": {"labeled": labeled, "total": total},
                "item": None,
                "done": True,
            }
            if session.status != LABELING:
                return payload
            pending = session.pending_for(annotator)
            if not pending:
                return payload
            skip = skip or []
            fresh = [t for t in pending if t not in skip]
            if fresh:
                chosen = fresh[0]
            else:
                # only skipped items remain: recycle in the order they were skipped
                order = {tweet_id: i for i, tweet_id in enumerate(skip)}
                chosen = min(pending, key=lambda t: order.get(t, len(order)))
            tweet = session.tweet(chosen)
            payload["item"] = {
                "tweet_id": tweet.tweet_id,
                "text": tweet.text,
                "cluster_id": tweet.cluster_id,
            }
            payload["done"] = False
            return payload

    def submit_label(self, session_id: str, annotator: str, tweet_id: str, label: str) -> dict:
        session = self.session(session_id)
        self.store.append(session, {
            "event": "label", "annotator": annotator,
            "tweet_id": tweet_id, "label": label,
        })
        labeled, total = session.progress(annotator)
        return {
            "ok": True,
            "phase": session.status,
            "progress": {"labeled": labeled, "total": total},
        }

    def disagreements(self, session_id: str) -> dict:
        session = self.session(session_id)
        with self.store.lock(session_id):
            if session.status == LABELING:
                # validates completeness before the transition is persisted
                self.store.append(session, {"event": "begin_adjudication"})
            queue = session.disagreement_queue()
            items = []
            for tweet_id in queue:
                tweet = session.tweet(tweet_id)
                pair = session.disagreement_labels(tweet_id)
                items.append({
                    "tweet_id": tweet.tweet_id,
                    "text": tweet.text,
                    "cluster_id": tweet.cluster_id,
                    "labels": list(pair),  # unordered, unattributed
                })
            return {
                "session_id": session_id,
                "phase": session.status,
                "queue": items,
                "remaining": len(items),
            }

    def adjudicate(self, session_id: str, tweet_id: str, label: str) -> dict:
        session = self.session(session_id)
        self.store.append(session, {
            "event": "adjudicate", "tweet_id": tweet_id, "label": label,
        })
        remaining = len(session.disagreement_queue()) if session.status == ADJUDICATING else 0
        return {"ok": True, "phase": session.status, "remaining": remaining}

    def kappa(self, session_id: str) -> dict:
        session = self.session(session_id)
        with self.store.lock(session_id):
            return session.cohen_kappa().to_dict()

    def estimate(self, session_id: str) -> dict:
        session = self.session(session_id)
        with self.store.lock(session_id):
            if session.status != CLOSED:
                raise SessionError("estimates require a closed session")
            return session.weighted_category_estimate().to_dict()


_ROUTES = [
    ("GET", re.compile(r"^/session/([^/]+)/next$"), "next"),
    ("POST", re.compile(r"^/session/([^/]+)/label$"), "label"),
    ("GET", re.compile(r"^/session/([^/]+)/disagreements$"), "disagreements"),
    ("POST", re.compile(r"^/session/([^/]+)/adjudicate$"), "adjudicate"),
    ("GET", re.compile(r"^/session/([^/]+)/kappa$"), "kappa"),
    ("GET", re.compile(r"^/session/([^/]+)/estimate$"), "estimate"),
]

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class _Handler(BaseHTTPRequestHandler):
    server_version = "tweetkit"

    def log_message(self, fmt, *args):  # route through logging, not stderr
        log.debug("%s - %s", self.address_string(), fmt % args)

    # -- plumbing ---------------------------------------------------------

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, ensure_ascii=False, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length <= 0:
            return {}
        raw = self.rfile.read(length)
        try:
            parsed = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValueError(f"request body is not valid JSON: {exc}")
        if not isinstance(parsed, dict):
            raise ValueError("request body must be a JSON object")
        return parsed

    def _dispatch(self, method: str) -> None:
        parsed = urlparse(self.path)
        service: AnnotationService = self.server.service  # type: ignore[attr-defined]
        for verb, pattern, name in _ROUTES:
            match = pattern.match(parsed.path)
            if not match:
                continue
            if verb != method:
                self._send_json(405, {"error": f"{method} not allowed for {parsed.path}"})
                return
            session_id = match.group(1)
            try:
                payload = self._handle(service, name, session_id, parsed)
            except SessionError as exc:
                self._send_json(409, {"error": str(exc)})
            except (ConfigurationError, ValueError) as exc:
                self._send_json(400, {"error": str(exc)})
            except Exception:  # pragma: no cover - defensive
                log.exception("unhandled error serving %s", self.path)
                self._send_json(500, {"error": "internal server error"})
            else:
                self._send_json(200, payload)
            return
        if method == "GET" and self._serve_static(parsed.path):
            return
        self._send_json(404, {"error": f"no route for {method} {parsed.path}"})

    def _handle(self, service: AnnotationService, name: str, session_id: str, parsed) -> dict:
        query = parse_qs(parsed.query)
        if name == "next":
            annotator = _single(query, "annotator")
            skip_raw = _single(query, "skip", required=False)
            skip = [s for s in (skip_raw or "").split(",") if s]
            return service.next_item(session_id, annotator, skip)
        if name == "label":
            body = self._read_body()
            return service.submit_label(
                session_id, _field(body, "annotator"), _field(body, "tweet_id"), _field(body, "label")
            )
        if name == "disagreements":
            return service.disagreements(session_id)
        if name == "adjudicate":
            body = self._read_body()
            return service.adjudicate(session_id, _field(body, "tweet_id"), _field(body, "label"))
        if name == "kappa":
            return service.kappa(session_id)
        if name == "estimate":
            return service.estimate(session_id)
        raise ValueError(f"unknown route {name}")  # pragma: no cover

    def _serve_static(self, path: str) -> bool:
        ui_dir: Path | None = self.server.ui_dir  # type: ignore[attr-defined]
        if ui_dir is None:
            return False
        rel = path.lstrip("/") or "index.html"
        target = (ui_dir / rel).resolve()
        try:
            target.relative_to(ui_dir.resolve())
        except ValueError:
            return False
        if not target.is_file():
            return False
        body = target.read_bytes()
        self.send_response(200)
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)
        return True

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")


def _single(query: dict, key: str, required: bool = True) -> str | None:
    values = query.get(key)
    if not values:
        if required:
            raise ValueError(f"missing query parameter {key!r}")
        return None
    return values[0]


def _field(body: dict, key: str) -> str:
    value = body.get(key)
    if not isinstance(value, str) or not value:
        raise ValueError(f"missing or invalid field {key!r}")
    return value


def make_server(
    store: SessionStore,
    host: str = "127.0.0.1",
    port: int = 0,
    ui_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), _Handler)
    server.service = AnnotationService(store)  # type: ignore[attr-defined]
    server.ui_dir = Path(ui_dir) if ui_dir else None  # type: ignore[attr-defined]
    return server
