"""HTTP+JSON evaluation service over an immutable composite snapshot.

Endpoints:

    GET  /vars          guard variables with stage provenance
    GET  /program/meta  stage names, node counts, mining report (if attached)
    POST /evaluate      {"assignments": {var: bool}, "query": str?}
                        -> {"tree", "inferred", "complete", "report_fields"}

Requests are stateless; the assignment travels with each call. Two identical
/evaluate requests produce byte-identical bodies. Reload swaps the snapshot
atomically; in-flight requests keep the snapshot they started with.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Mapping, Optional

from .compose import CompositeProgram, evaluate_composite, load_composite
from .evaluate import Assignment, EvaluationError, Truth
from .labels import NormalizationConfig, normalize_label, tokenize_query
from .program import count_nodes
from .render import render_tree

log = logging.getLogger(__name__)


class BadRequest(ValueError):
    pass


@dataclass(frozen=True)
class ServiceState:
    """Immutable snapshot the service evaluates against."""

    composite: CompositeProgram
    config: NormalizationConfig = NormalizationConfig()
    mining_report: Optional[dict] = None

    @classmethod
    def load(
        cls,
        composite_path,
        config: Optional[NormalizationConfig] = None,
        mining_report_path=None,
    ) -> "ServiceState":
        mining_report = None
        if mining_report_path:
            with open(mining_report_path, encoding="utf-8") as fh:
                mining_report = json.load(fh)
        return cls(
            composite=load_composite(composite_path),
            config=config or NormalizationConfig(),
            mining_report=mining_report,
        )


class ServiceHandle:
    """One-slot holder enabling atomic snapshot swaps."""

    def __init__(self, state: ServiceState):
        self.state = state

    def reload(self, state: ServiceState) -> None:
        self.state = state


def parse_evaluate_body(state: ServiceState, body: Mapping) -> Assignment:
    if not isinstance(body, Mapping):
        raise BadRequest("request body must be a JSON object")
    raw_assignments = body.get("assignments", {})
    if not isinstance(raw_assignments, Mapping):
        raise BadRequest("'assignments' must map variables to booleans")
    values = {}
    for var, val in raw_assignments.items():
        if not isinstance(val, bool):
            raise BadRequest(f"assignment for {var!r} must be true or false")
        normalized = normalize_label(str(var), state.config)
        if not normalized:
            raise BadRequest(f"variable {var!r} normalizes to nothing")
        values[normalized] = val
    assignment = Assignment.from_bools(values)

    query = body.get("query")
    if query is not None:
        if not isinstance(query, str):
            raise BadRequest("'query' must be a string")
        tokens = tokenize_query(query, state.config)
        assignment = assignment.merged(
            Assignment({token: Truth.TRUE for token in tokens})
        )
    return assignment


def evaluation_payload(state: ServiceState, assignment: Assignment) -> dict:
    result = evaluate_composite(state.composite, assignment)
    if len(result.per_stage) == 1:
        tree = render_tree(result.per_stage[0])
    else:
        tree = {
            "label": "root",
            "annotations": {},
            "children": [
                dict(render_tree(residual), label=name)
                for name, residual in zip(result.stage_names, result.per_stage)
            ],
        }
    return {
        "tree": tree,
        "inferred": result.assignment.defined(),
        "complete": result.complete,
        "report_fields": dict(result.report_fields),
        "bindings": dict(result.final_bindings),
    }


def handle_request(state: ServiceState, method: str, path: str, body: bytes):
    """Pure request dispatcher: returns (status, payload-dict)."""
    if method == "GET" and path == "/vars":
        return 200, {
            "vars": [
                {"name": name, "stages": stages}
                for name, stages in state.composite.variables().items()
            ]
        }
    if method == "GET" and path == "/program/meta":
        return 200, {
            "stages": [
                {"name": name, "nodes": count_nodes(program)}
                for name, program in state.composite.stages
            ],
            "mining_report": state.mining_report,
        }
    if method == "POST" and path == "/evaluate":
        try:
            parsed = json.loads(body.decode("utf-8")) if body.strip() else {}
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return 400, {"error": f"invalid JSON body: {exc}"}
        try:
            assignment = parse_evaluate_body(state, parsed)
            return 200, evaluation_payload(state, assignment)
        except BadRequest as exc:
            return 400, {"error": str(exc)}
        except EvaluationError as exc:
            return 409, {
                "error": str(exc),
                "variable": exc.variable,
                "stage": exc.stage,
            }
    return 404, {"error": f"unknown endpoint {method} {path}"}


def _encode(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def make_server(handle: ServiceHandle, host: str = "127.0.0.1", port: int = 0):
    class Handler(BaseHTTPRequestHandler):
        server_version = "persite"
        sys_version = ""
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            log.debug("%s " + fmt, self.address_string(), *args)

        def _respond(self, status: int, payload: dict) -> None:
            data = _encode(payload)
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(data)

        def _dispatch(self, method: str) -> None:
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            snapshot = handle.state
            try:
                status, payload = handle_request(snapshot, method, self.path, body)
            except Exception as exc:  # pragma: no cover - defensive
                log.exception("unhandled service error")
                status, payload = 500, {"error": f"internal error: {exc}"}
            self._respond(status, payload)

        def do_GET(self) -> None:
            self._dispatch("GET")

        def do_POST(self) -> None:
            self._dispatch("POST")

        def do_OPTIONS(self) -> None:
            # the explorer posts JSON cross-origin, which preflights
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

    return ThreadingHTTPServer((host, port), Handler)


def serve_forever(handle: ServiceHandle, host: str, port: int) -> None:
    server = make_server(handle, host, port)
    bound = server.server_address
    print(f"serving on http://{bound[0]}:{bound[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


__all__ = [
    "BadRequest",
    "ServiceHandle",
    "ServiceState",
    "evaluation_payload",
    "handle_request",
    "make_server",
    "serve_forever",
]
