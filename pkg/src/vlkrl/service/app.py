"""HTTP session API.

Sessions are isolated: each SessionRuntime owns its state and pipeline;
turn processing per session is sequential (overlap gets 409). Payloads
are versioned JSON; see the README API reference for field-level docs.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from vlkrl.env.world import World
from vlkrl.gateway.gateway import LlmGateway
from vlkrl.gateway.providers import ProviderError
from vlkrl.mapper.embedding import TrigramEmbeddingProvider
from vlkrl.orchestration.oracles import (
    DualRoleProvider,
    OracleJudgeProvider,
    OracleRespondentProvider,
)
from vlkrl.orchestration.pipeline import PipelineConfig, TurnPipeline
from vlkrl.crossexam.gating import GatingConfig
from vlkrl.mapper.mapping import MapperConfig
from vlkrl.service.runtime import (
    RatingError,
    SessionBusyError,
    SessionRuntime,
    SessionStateError,
    STATUS_ACTIVE,
)
from vlkrl.service.store import SessionStore

API_SCHEMA_VERSION = 1

SERVEABLE_MODES = ("full", "no_crossexam", "no_t2s", "rl_only")


def oracle_provider_factory(world: World):
    from vlkrl.orchestration.oracles import OraclePolicyProvider

    # the unbound policy oracle answers goodbye; llm_only sessions are
    # mainly useful against a live provider
    return DualRoleProvider(
        OracleRespondentProvider(world), OracleJudgeProvider(world),
        OraclePolicyProvider(world),
    )


def http_provider_factory(world: World):
    from vlkrl.gateway.providers import HttpChatProvider

    return HttpChatProvider()


@dataclass
class ServeSettings:
    worlds: dict[str, World]
    data_dir: str | Path = "vlkrl-data"
    provider_factory: Callable[[World], object] = oracle_provider_factory
    checkpoint: str = ""
    anonymize_agents: bool = False
    ui_dir: str = ""
    policy_seed: int = 0


class CreateSessionRequest(BaseModel):
    world: str = "default"
    mode: str = "full"
    user: str = "human"
    seed: int = 0


class UtteranceRequest(BaseModel):
    text: str = ""


class RatingRequest(BaseModel):
    sr: bool
    hr: int


def _build_pipeline(world: World, mode: str, settings: ServeSettings) -> TurnPipeline:
    knowledge = {"full": "full", "no_crossexam": "full", "no_t2s": "no_t2s",
                 "llm_only": "full", "rl_only": "rl_only"}[mode]
    gating = GatingConfig(mode="none" if mode == "no_crossexam" else "cross_exam")
    config = PipelineConfig(knowledge=knowledge, gating=gating, mapper=MapperConfig())
    if knowledge == "rl_only":
        return TurnPipeline(world.ontology, config)
    try:
        provider = settings.provider_factory(world)
    except ValueError as exc:
        raise HTTPException(status_code=503, detail=f"backend unavailable: {exc}")
    gateway = LlmGateway(provider=provider)
    return TurnPipeline(world.ontology, config, gateway=gateway,
                        embedder=TrigramEmbeddingProvider())


def _load_policy(settings: ServeSettings, world: World, mode: str):
    if not settings.checkpoint:
        return None
    from vlkrl.policy.checkpoint import load_checkpoint
    from vlkrl.policy.nets import Mlp
    import numpy as np

    meta, arrays = load_checkpoint(settings.checkpoint)
    sizes = tuple(meta["sizes"])
    policy = Mlp(sizes, np.random.default_rng(0))
    policy.set_flat(arrays[0])
    return policy


def create_app(settings: ServeSettings) -> FastAPI:
    app = FastAPI(title="vlkrl session service", version=str(API_SCHEMA_VERSION))
    store = SessionStore(settings.data_dir)
    sessions: dict[str, SessionRuntime] = {}
    agent_counter = {"n": 0}

    def get_session(session_id: str) -> SessionRuntime:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.post("/sessions", status_code=201)
    def create_session(request: CreateSessionRequest):
        world = settings.worlds.get(request.world)
        if world is None:
            raise HTTPException(status_code=400, detail=f"unknown world '{request.world}'")
        if request.mode not in SERVEABLE_MODES and request.mode != "llm_only":
            raise HTTPException(status_code=400, detail=f"unknown mode '{request.mode}'")
        if request.user not in ("human", "sim"):
            raise HTTPException(status_code=400, detail=f"unknown user kind '{request.user}'")
        pipeline = _build_pipeline(world, request.mode, settings)
        session_id = uuid.uuid4().hex[:12]
        if settings.anonymize_agents:
            agent_counter["n"] += 1
            label = f"agent-{agent_counter['n']}"
        else:
            label = request.mode
        runtime = SessionRuntime(
            session_id, world, request.mode, pipeline,
            user_kind=request.user, seed=request.seed or settings.policy_seed,
            policy=_load_policy(settings, world, request.mode),
            agent_label=label,
        )
        sessions[session_id] = runtime
        store.update_index(session_id, {
            "world": request.world, "mode": request.mode, "agent": label,
            "user": request.user, "status": runtime.status, "rating": None,
            "schema": API_SCHEMA_VERSION,
        })
        store.append(session_id, {"type": "opened", "world": request.world,
                                  "mode": request.mode, "user": request.user,
                                  "schema": API_SCHEMA_VERSION})
        return {"id": session_id, "opening": _opening(), "agent": label}

    def _opening() -> str:
        from vlkrl.service.runtime import OPENING

        return OPENING

    @app.post("/sessions/{session_id}/utterance")
    def post_utterance(session_id: str, request: UtteranceRequest):
        session = get_session(session_id)
        if session.status != STATUS_ACTIVE:
            raise HTTPException(status_code=409, detail=f"session is {session.status}")
        try:
            record = session.utterance(request.text)
        except SessionBusyError:
            raise HTTPException(status_code=409, detail="turn already in flight")
        except SessionStateError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ProviderError as exc:
            raise HTTPException(status_code=502, detail=f"gateway failure: {exc}")
        store.append(session_id, record)
        index = store.read_index().get(session_id, {})
        index["status"] = session.status
        store.update_index(session_id, index)
        return {"reply": record["system_utterance"], "trace": record,
                "status": session.status}

    @app.post("/sessions/{session_id}/terminate")
    def post_terminate(session_id: str):
        session = get_session(session_id)
        try:
            session.terminate()
        except SessionStateError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        store.append(session_id, {"type": "terminated"})
        index = store.read_index().get(session_id, {})
        index["status"] = session.status
        store.update_index(session_id, index)
        return {"status": session.status}

    @app.post("/sessions/{session_id}/rating")
    def post_rating(session_id: str, request: RatingRequest):
        session = get_session(session_id)
        try:
            session.set_rating(request.sr, request.hr)
        except RatingError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except SessionStateError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        store.append(session_id, {"type": "rating", **session.rating})
        index = store.read_index().get(session_id, {})
        index["rating"] = session.rating
        store.update_index(session_id, index)
        return {"ok": True, "rating": session.rating}

    @app.get("/sessions/{session_id}/trace")
    def get_trace(session_id: str):
        session = get_session(session_id)
        return {
            "id": session_id,
            "status": session.status,
            "agent": session.agent_label,
            "rating": session.rating,
            "records": session.records,
        }

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": store.read_index()}

    @app.get("/ratings/summary")
    def ratings_summary():
        by_agent: dict[str, dict] = {}
        for session in sessions.values():
            if session.rating is None:
                continue
            bucket = by_agent.setdefault(
                session.agent_label, {"n": 0, "sr_true": 0, "hr_sum": 0}
            )
            bucket["n"] += 1
            bucket["sr_true"] += int(session.rating["sr"])
            bucket["hr_sum"] += session.rating["hr"]
        return {
            "agents": {
                label: {
                    "n": b["n"],
                    "sr": b["sr_true"] / b["n"],
                    "hr": b["hr_sum"] / b["n"],
                }
                for label, b in sorted(by_agent.items())
            }
        }

    @app.get("/reports/{run}")
    def get_report(run: str):
        path = store.report_path(run)
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"no report '{run}'")
        return JSONResponse(json.loads(path.read_text(encoding="utf-8")))

    if settings.ui_dir and Path(settings.ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=settings.ui_dir, html=True), name="ui")

    return app
