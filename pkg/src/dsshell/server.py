"""HTTP+JSON session service for consultation clients.

Newline-delimited JSON messages (schema 1) over plain HTTP:

    POST /sessions                        body {"threshold"?, "initial_evidence"?}
    GET  /sessions/{id}/next              the pending question (or done)
    POST /sessions/{id}/answer            body {"attribute", "value", "confidence"?}
    POST /sessions/{id}/volunteer         body {"evidence": [{attribute,value,confidence?}]}
    GET  /sessions/{id}/beliefs           current per-frame masses and Bel/Pl
    GET  /sessions/{id}/trace             the consultation so far as messages

Every line is one message with a ``type`` of question | answer | volunteer |
beliefs | fired | descend | propagate | done | error.  Sessions are isolated;
operations on one session are serialized behind its lock while the knowledge
base and compiled networks are shared read-only.
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .engine import (
    AWAITING,
    ExitPolicy,
    Session,
    TraceEvent,
    mass_payload,
)
from .kb import KnowledgeBase

SCHEMA = 1


class SessionHub:
    """Owns the live sessions for one served knowledge base."""

    def __init__(self, kb: KnowledgeBase, threshold: float | None = None) -> None:
        self.kb = kb
        self.threshold = threshold
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._count = 0
        self._mutex = threading.Lock()

    def create(
        self,
        threshold: float | None = None,
        initial_evidence: list | None = None,
    ) -> tuple[str, Session]:
        policy_threshold = (
            threshold
            if threshold is not None
            else (self.threshold if self.threshold is not None else self.kb.exit_threshold)
        )
        evidence = None
        if initial_evidence:
            evidence = [
                (
                    row["attribute"],
                    row["value"],
                    float(row.get("confidence", 1.0)),
                )
                for row in initial_evidence
            ]
        session = Session(
            self.kb,
            policy=ExitPolicy(threshold=policy_threshold),
            initial_evidence=evidence,
        )
        with self._mutex:
            self._count += 1
            sid = f"s{self._count}"
            self._sessions[sid] = session
            self._locks[sid] = threading.Lock()
        return sid, session

    def get(self, sid: str) -> tuple[Session, threading.Lock] | None:
        with self._mutex:
            session = self._sessions.get(sid)
            lock = self._locks.get(sid)
        if session is None or lock is None:
            return None
        return session, lock


# --- message building --------------------------------------------------------


def _msg(type_: str, sid: str | None = None, **body) -> dict:
    out = {"schema": SCHEMA, "type": type_}
    if sid is not None:
        out["session"] = sid
    out.update(body)
    return out


def question_message(sid: str, session: Session) -> dict:
    if session.status != AWAITING or session.pending is None:
        return _msg(
            "done",
            sid,
            status=session.status,
            conclusions=session.conclusions,
        )
    q = session.pending
    return _msg(
        "question",
        sid,
        kind=q.kind,
        attribute=q.attribute,
        text=q.text,
        values=list(q.values),
        accepts_confidence=q.accepts_confidence,
        partition=session.partition,
        focus=session.focus_attributes,
    )


def beliefs_message(sid: str, session: Session) -> dict:
    frames = {}
    for attr, mf in session.frame_masses.items():
        frame = session.kb.frame_of(attr)
        frames[attr] = {
            "masses": mass_payload(mf),
            "ignorance": mf.theta_mass,
            "singletons": [
                {
                    "value": v,
                    "bel": mf.bel(frame.singleton(v)),
                    "pl": mf.pl(frame.singleton(v)),
                }
                for v in frame.values
            ],
        }
    partition = session.partition if session.status == AWAITING else None
    return _msg(
        "beliefs", sid, frames=frames, partition=partition,
        focus=session.focus_attributes,
    )


_EVENT_TYPES = {
    "answer": "answer",
    "volunteer": "volunteer",
    "fire": "fired",
    "descend": "descend",
    "propagate": "propagate",
}


def event_messages(sid: str, events: list[TraceEvent]) -> list[dict]:
    out = []
    for event in events:
        type_ = _EVENT_TYPES.get(event.kind)
        if type_ is None:
            continue
        out.append(_msg(type_, sid, **event.data))
    return out


def turn_messages(sid: str, session: Session, since: int) -> list[dict]:
    """Everything a client needs after one input: events, beliefs, and the
    next question (or done)."""
    new_events = [e for e in session.trace if e.seq >= since]
    return [
        *event_messages(sid, new_events),
        beliefs_message(sid, session),
        question_message(sid, session),
    ]


# --- HTTP plumbing -------------------------------------------------------------

_SESSION_PATH = re.compile(
    r"^/sessions/(?P<sid>[A-Za-z0-9_-]+)/(?P<endpoint>next|answer|volunteer|beliefs|trace)$"
)


class _Handler(BaseHTTPRequestHandler):
    hub: SessionHub  # set by make_server

    protocol_version = "HTTP/1.1"

    def log_message(self, *args) -> None:  # quiet by default
        pass

    # every response is NDJSON, one message per line
    def _send(self, status: int, messages: list[dict]) -> None:
        payload = (
            "\n".join(json.dumps(m, separators=(",", ":")) for m in messages)
            + "\n"
        ).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/x-ndjson")
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(payload)

    def _error(self, status: int, message: str) -> None:
        self._send(status, [_msg("error", error=message, status=status)])

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            parsed = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ValueError(f"bad JSON body: {e}") from e
        if not isinstance(parsed, dict):
            raise ValueError("body must be a JSON object")
        return parsed

    def do_OPTIONS(self) -> None:  # CORS preflight for browser clients
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_POST(self) -> None:
        try:
            body = self._body()
        except ValueError as e:
            self._error(400, str(e))
            return
        if self.path == "/sessions":
            try:
                sid, session = self.hub.create(
                    threshold=body.get("threshold"),
                    initial_evidence=body.get("initial_evidence"),
                )
            except (ValueError, KeyError) as e:
                self._error(400, f"cannot create session: {e}")
                return
            self._send(
                201, [*turn_messages(sid, session, 0)]
            )
            return
        match = _SESSION_PATH.match(self.path)
        if not match:
            self._error(404, f"no such endpoint {self.path!r}")
            return
        sid, endpoint = match.group("sid"), match.group("endpoint")
        found = self.hub.get(sid)
        if found is None:
            self._error(404, f"no such session {sid!r}")
            return
        session, lock = found
        with lock:
            since = len(session.trace)
            try:
                if endpoint == "answer":
                    session.submit_answer(
                        body["attribute"],
                        body["value"],
                        float(body.get("confidence", 1.0)),
                    )
                elif endpoint == "volunteer":
                    rows = body.get("evidence", [])
                    session.volunteer(
                        [
                            (
                                row["attribute"],
                                row["value"],
                                float(row.get("confidence", 1.0)),
                            )
                            for row in rows
                        ]
                    )
                else:
                    self._error(405, f"POST not allowed on {endpoint}")
                    return
            except KeyError as e:
                self._error(400, f"missing field {e}")
                return
            except (ValueError, RuntimeError) as e:
                self._error(409, str(e))
                return
            self._send(200, turn_messages(sid, session, since))

    def do_GET(self) -> None:
        match = _SESSION_PATH.match(self.path)
        if not match:
            self._error(404, f"no such endpoint {self.path!r}")
            return
        sid, endpoint = match.group("sid"), match.group("endpoint")
        found = self.hub.get(sid)
        if found is None:
            self._error(404, f"no such session {sid!r}")
            return
        session, lock = found
        with lock:
            if endpoint == "next":
                self._send(200, [question_message(sid, session)])
            elif endpoint == "beliefs":
                self._send(200, [beliefs_message(sid, session)])
            elif endpoint == "trace":
                messages = event_messages(sid, list(session.trace))
                if session.status != AWAITING:
                    messages.append(question_message(sid, session))
                self._send(200, messages)
            else:
                self._error(405, f"GET not allowed on {endpoint}")


def make_server(
    kb: KnowledgeBase, host: str, port: int, threshold: float | None = None
) -> ThreadingHTTPServer:
    hub = SessionHub(kb, threshold=threshold)
    handler = type("BoundHandler", (_Handler,), {"hub": hub})
    server = ThreadingHTTPServer((host, port), handler)
    server.hub = hub  # type: ignore[attr-defined]
    return server


def serve(
    kb: KnowledgeBase, host: str, port: int, threshold: float | None = None
) -> None:
    server = make_server(kb, host, port, threshold)
    try:
        server.serve_forever()
    finally:
        server.server_close()
