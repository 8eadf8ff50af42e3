"""HTTP session service: live human dialogues against a trained policy.

The human takes the simulator's place: the service holds one dialogue state
machine per session (the exact same `advance` transition the simulator
uses), asks questions chosen greedily by the policy, and applies the
human's true/false/not-sure answers. Serving never mutates parameters;
every response carries the checkpoint hash for reproducibility.

Endpoints (all JSON; errors as {"code", "message"}):
    POST /sessions                  {"self_report": {symptom: bool}}
    POST /sessions/{id}/answer      {"answer": true | false | "not_sure"}
    GET  /sessions/{id}
    GET  /model
    GET  /healthz
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import dialogue_env, numkit, templates
from .corpus import Vocabulary
from .dialogue_env import ANSWER_FALSE, ANSWER_NOT_SURE, ANSWER_TRUE, DialogueState
from .medgraph import HeteroGraph, load_graph
from .numkit import MODE_GRAPH, QNetwork, load_checkpoint

DEFAULT_SESSION_TTL = 30 * 60.0  # idle sessions expire after 30 minutes
TOP_Q_LIMIT = 5


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class ServingModel:
    """Frozen policy plus everything the endpoints need to describe it."""

    net: QNetwork
    vocab: Vocabulary
    a_norm: np.ndarray | None
    checkpoint_hash: str
    graph_hash: str
    max_turns: int = dialogue_env.MAX_TURNS

    def __post_init__(self):
        if self.net.mode == MODE_GRAPH:
            if self.a_norm is None:
                raise ValueError("graph-mode checkpoint needs its graph")
            self._h = numkit.gcn_forward(self.net, self.a_norm)
        else:
            self._h = None

    def greedy_action(self, state: DialogueState) -> tuple[int, list]:
        encoded = dialogue_env.encode_state(state, self.vocab, self.max_turns)
        q = numkit.action_values(self.net, self.a_norm, encoded, h=self._h)
        order = np.argsort(-q, kind="stable")[:TOP_Q_LIMIT]
        top_q = [[self.vocab.action_name(int(i)), float(q[int(i)])] for i in order]
        return int(np.argmax(q)), top_q


def load_serving_model(checkpoint_path, graph_path=None,
                       max_turns: int = dialogue_env.MAX_TURNS) -> ServingModel:
    """Load a checkpoint (and its graph, verified by hash) for serving."""
    ckpt = load_checkpoint(checkpoint_path)
    graph: HeteroGraph | None = None
    if graph_path is not None:
        graph = load_graph(graph_path)
        if ckpt.graph_hash and graph.content_hash() != ckpt.graph_hash:
            raise ValueError("graph file does not match the checkpoint's graph hash")
        if graph.vocab != ckpt.vocab:
            raise ValueError("graph vocabulary differs from checkpoint vocabulary")
    if ckpt.net.mode == MODE_GRAPH and graph is None:
        raise ValueError("graph-mode checkpoint requires a graph file")
    cfg_turns = ckpt.config.get("max_turns")
    return ServingModel(
        net=ckpt.net,
        vocab=ckpt.vocab,
        a_norm=None if graph is None else graph.normalized,
        checkpoint_hash=ckpt.file_hash,
        graph_hash=ckpt.graph_hash,
        max_turns=int(cfg_turns) if cfg_turns else max_turns,
    )


@dataclass
class Session:
    id: str
    state: DialogueState
    pending_action: int | None
    status: str = "active"  # active | closed
    result: str | None = None  # diagnosis | timeout
    diagnosis: str | None = None
    transcript: list = field(default_factory=list)
    created_at: float = 0.0
    last_active: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock)


def _parse_answer(value) -> str:
    if value is True or value == "true":
        return ANSWER_TRUE
    if value is False or value == "false":
        return ANSWER_FALSE
    if value == "not_sure":
        return ANSWER_NOT_SURE
    raise ServiceError(422, "invalid_answer",
                       f"answer must be true, false or \"not_sure\", got {value!r}")


def create_app(model: ServingModel, *, session_ttl: float = DEFAULT_SESSION_TTL,
               transcript_path=None, ui_dir=None,
               clock=time.monotonic) -> FastAPI:
    """Build the FastAPI app around a frozen serving model."""
    app = FastAPI(title="graphdx diagnosis service")
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()
    vocab = model.vocab

    def action_payload(action: int, top_q: list, debug: bool) -> dict:
        payload = {
            "kind": {"greeting": "greeting", "disease": "diagnosis",
                     "symptom": "inquiry"}[vocab.action_kind(action)],
            "name": vocab.action_name(action),
            "template_text": templates.action_text(vocab, action),
        }
        if debug:
            payload["top_q"] = top_q
        return payload

    def persist_transcript(session: Session) -> None:
        if transcript_path is None:
            return
        record = {
            "session_id": session.id,
            "result": session.result,
            "diagnosis": session.diagnosis,
            "turns": session.state.turn,
            "transcript": session.transcript,
        }
        with store_lock:
            with open(transcript_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record) + "\n")

    def get_session(session_id: str) -> Session:
        now = clock()
        with store_lock:
            session = sessions.get(session_id)
            if session is not None and now - session.last_active > session_ttl:
                del sessions[session_id]
                session = None
            if session is None:
                raise ServiceError(404, "session_not_found",
                                   f"no active session {session_id!r}")
            session.last_active = now
            return session

    def advance_with_policy(session: Session, debug: bool) -> dict:
        """Apply a diagnosis action immediately; otherwise leave the chosen
        action pending until the human answers."""
        action, top_q = model.greedy_action(session.state)
        kind = vocab.action_kind(action)
        payload = action_payload(action, top_q, debug)
        session.transcript.append({
            "speaker": "system", "turn": session.state.turn + 1, **payload})
        if kind == "disease":
            session.state, _ = dialogue_env.advance(
                session.state, action, vocab, max_turns=model.max_turns)
            session.status = "closed"
            session.result = "diagnosis"
            session.diagnosis = vocab.action_name(action)
            persist_transcript(session)
            return {
                "system_action": payload,
                "final_diagnosis": session.diagnosis,
                "terminal": True,
                "result": "diagnosis",
                "turn": session.state.turn,
            }
        session.pending_action = action
        return {
            "system_action": payload,
            "terminal": False,
            "turn": session.state.turn + 1,
        }

    @app.exception_handler(ServiceError)
    async def service_error_handler(_req: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.middleware("http")
    async def checkpoint_header(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-Checkpoint-Hash"] = model.checkpoint_hash
        return response

    async def read_json(request: Request) -> dict:
        body = await request.body()
        if not body:
            raise ServiceError(400, "empty_body", "request body must be JSON")
        try:
            data = json.loads(body)
        except json.JSONDecodeError:
            raise ServiceError(400, "invalid_json", "request body is not valid JSON")
        if not isinstance(data, dict):
            raise ServiceError(400, "invalid_body", "request body must be an object")
        return data

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.get("/model")
    async def model_info():
        return {
            "mode": model.net.mode,
            "diseases": list(vocab.diseases),
            "symptoms": list(vocab.symptoms),
            "greetings": list(vocab.greetings),
            "num_actions": vocab.num_actions,
            "max_turns": model.max_turns,
            "checkpoint_hash": model.checkpoint_hash,
            "graph_hash": model.graph_hash,
        }

    @app.post("/sessions")
    async def create_session(request: Request, debug: int = 0):
        data = await read_json(request)
        self_report = data.get("self_report")
        if not isinstance(self_report, dict) or not self_report:
            raise ServiceError(400, "empty_self_report",
                               "self_report must be a non-empty object")
        for name, value in self_report.items():
            if not vocab.has_symptom(name):
                raise ServiceError(422, "unknown_symptom",
                                   f"unknown symptom: {name}")
            if not isinstance(value, bool):
                raise ServiceError(422, "invalid_symptom_value",
                                   f"symptom {name!r} must be true or false")
        state = dialogue_env.initial_state(self_report, vocab)
        now = clock()
        session = Session(id=uuid.uuid4().hex, state=state, pending_action=None,
                          created_at=now, last_active=now)
        session.transcript.append({
            "speaker": "user", "turn": 0,
            "self_report": {k: bool(v) for k, v in sorted(self_report.items())},
        })
        with store_lock:
            sessions[session.id] = session
        with session.lock:
            response = advance_with_policy(session, bool(debug))
        return {"session_id": session.id, **response}

    @app.post("/sessions/{session_id}/answer")
    async def answer_session(session_id: str, request: Request, debug: int = 0):
        data = await read_json(request)
        if "answer" not in data:
            raise ServiceError(400, "missing_answer", "body needs an 'answer' field")
        answer = _parse_answer(data["answer"])
        session = get_session(session_id)
        if not session.lock.acquire(blocking=False):
            raise ServiceError(409, "busy", "another answer is in flight")
        try:
            if session.status != "active" or session.pending_action is None:
                raise ServiceError(409, "session_closed",
                                   "session is closed; start a new one")
            action = session.pending_action
            session.pending_action = None
            session.state, info = dialogue_env.advance(
                session.state, action, vocab, answer=answer,
                max_turns=model.max_turns)
            session.transcript.append({
                "speaker": "user", "turn": session.state.turn,
                "answer": answer if info.kind == "symptom" else None,
            })
            if info.timed_out:
                session.status = "closed"
                session.result = "timeout"
                persist_transcript(session)
                return {"terminal": True, "result": "timeout",
                        "turn": session.state.turn}
            return advance_with_policy(session, bool(debug))
        finally:
            session.lock.release()

    @app.get("/sessions/{session_id}")
    async def session_info(session_id: str):
        session = get_session(session_id)
        return {
            "session_id": session.id,
            "status": session.status,
            "result": session.result,
            "diagnosis": session.diagnosis,
            "turn": session.state.turn,
            "transcript": session.transcript,
        }

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
