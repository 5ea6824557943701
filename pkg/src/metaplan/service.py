"""HTTP service that runs live sessions for human participants.

All game rules are enforced server-side: concealed values never leave the
server before a click, scores are recomputed from the authoritative trial
state, and a finished session is persisted as a session file that the
fitting pipeline consumes directly.
"""

from __future__ import annotations

import itertools
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import env
from .data_io import (
    ParticipantData,
    TrialRecord,
    bonus_dollars,
    save_session,
    session_to_json,
)
from .env import (
    AlreadyRevealedError,
    Condition,
    InvalidNodeError,
    InvalidPathError,
    PlanningActiveError,
    TaskError,
    TreeTopology,
    Trial,
    TrialTerminatedError,
    condition_presets,
    get_condition,
)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


_ERROR_MAP: list[tuple[type, int, str]] = [
    (AlreadyRevealedError, 409, "already_revealed"),
    (TrialTerminatedError, 409, "trial_terminated"),
    (PlanningActiveError, 409, "planning_active"),
    (InvalidNodeError, 400, "invalid_node"),
    (InvalidPathError, 400, "invalid_path"),
]


def _to_api_error(exc: TaskError) -> ApiError:
    for etype, status, code in _ERROR_MAP:
        if isinstance(exc, etype):
            return ApiError(status, code, str(exc))
    return ApiError(400, "rule_violation", str(exc))


class CreateSessionRequest(BaseModel):
    condition: str | None = None
    participant_id: str | None = None


class ClickRequest(BaseModel):
    node: int


class MoveRequest(BaseModel):
    path: list[int]


@dataclass
class Session:
    session_id: str
    participant_id: str
    condition: Condition
    topology: TreeTopology
    trials: list[Trial]
    state: env.TrialState
    trial_index: int = 0
    total_score: int = 0
    records: list[TrialRecord] = field(default_factory=list)
    finished: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def n_trials(self) -> int:
        return len(self.trials)

    @property
    def done_with_trials(self) -> bool:
        return len(self.records) == self.n_trials

    def trial_payload(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "n_trials": self.n_trials,
            "click_cost": self.condition.click_cost,
        }

    def state_payload(self) -> dict:
        return {
            "session_id": self.session_id,
            "participant_id": self.participant_id,
            "condition": self.condition.label,
            "reward_set": list(self.condition.reward_set),
            "click_cost": self.condition.click_cost,
            "topology": self.topology.to_json(),
            "trial_index": self.trial_index,
            "n_trials": self.n_trials,
            "revealed": {str(n): v for n, v in self.state.revealed.items()},
            "clicks": list(self.state.clicks_made),
            "trial_cost": self.state.trial.condition.click_cost * len(self.state.clicks_made),
            "trial_score": self.state.score,
            "total_score": self.total_score,
            "terminated": self.state.terminated,
            "finished": self.finished,
            "done_with_trials": self.done_with_trials,
        }


def create_app(
    data_dir: Path | str | None = None,
    topology: TreeTopology | None = None,
    n_trials: int = env.DEFAULT_TRIALS_PER_SESSION,
    condition: str | None = None,
    seed: int = 0,
) -> FastAPI:
    """Build the service. ``condition`` pins every session to one condition;
    otherwise sessions rotate round-robin through the four presets."""
    topology = topology or env.default_topology()
    data_dir = Path(data_dir) if data_dir is not None else None
    if condition is not None:
        get_condition(condition)  # validate eagerly

    app = FastAPI(title="planning-amount experiment service")
    sessions: dict[str, Session] = {}
    seed_seq = np.random.SeedSequence(seed)
    assignment_counter = itertools.count()
    store_lock = threading.Lock()

    @app.exception_handler(ApiError)
    async def handle_api_error(_: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise ApiError(404, "unknown_session", f"no session {session_id}")
        return session

    @app.post("/session")
    def create_session(req: CreateSessionRequest) -> dict:
        with store_lock:
            index = next(assignment_counter)
            session_seed = seed_seq.spawn(1)[0]
        if req.condition is not None:
            try:
                cond = get_condition(req.condition)
            except KeyError as exc:
                raise ApiError(400, "unknown_condition", str(exc)) from exc
        elif condition is not None:
            cond = get_condition(condition)
        else:
            cond = condition_presets()[index % 4]
        rng = np.random.default_rng(session_seed)
        trials = [env.sample_trial(topology, cond, rng, t) for t in range(n_trials)]
        session_id = uuid.uuid4().hex[:12]
        session = Session(
            session_id=session_id,
            participant_id=req.participant_id or session_id,
            condition=cond,
            topology=topology,
            trials=trials,
            state=env.fresh_state(trials[0]),
        )
        with store_lock:
            sessions[session_id] = session
        return {
            "session_id": session_id,
            "participant_id": session.participant_id,
            "condition": cond.label,
            "reward_set": list(cond.reward_set),
            "click_cost": cond.click_cost,
            "topology": topology.to_json(),
            "trial": session.trial_payload(),
        }

    @app.post("/session/{session_id}/click")
    def click_node(session_id: str, req: ClickRequest) -> dict:
        session = get_session(session_id)
        with session.lock:
            if session.finished or session.done_with_trials:
                raise ApiError(409, "session_complete", "all trials are done")
            try:
                session.state, value = env.click(session.state, req.node)
            except TaskError as exc:
                raise _to_api_error(exc) from exc
            return {
                "node": req.node,
                "value": value,
                "running_cost": session.condition.click_cost
                * len(session.state.clicks_made),
                "trial_score": session.state.score,
                "total_score": session.total_score + session.state.score,
            }

    @app.post("/session/{session_id}/move")
    def move(session_id: str, req: MoveRequest) -> dict:
        session = get_session(session_id)
        with session.lock:
            if session.finished or session.done_with_trials:
                raise ApiError(409, "session_complete", "all trials are done")
            try:
                state = env.terminate_planning(session.state)
                state, score = env.act(state, req.path)
            except TaskError as exc:
                raise _to_api_error(exc) from exc
            session.state = state
            trial = session.trials[session.trial_index]
            session.records.append(
                TrialRecord(
                    trial_index=session.trial_index,
                    ground_truth=dict(trial.ground_truth),
                    clicks=state.clicks_made,
                    chosen_path=state.chosen_path,
                    score=score,
                )
            )
            session.total_score += score
            payload = {
                "node_values_on_path": {
                    str(n): trial.ground_truth[n] for n in state.chosen_path
                },
                "trial_score": score,
                "total_score": session.total_score,
            }
            if session.trial_index + 1 < session.n_trials:
                session.trial_index += 1
                session.state = env.fresh_state(session.trials[session.trial_index])
                payload["next_trial"] = session.trial_payload()
            else:
                payload["done"] = True
            return payload

    @app.get("/session/{session_id}/state")
    def get_state(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            return session.state_payload()

    @app.post("/session/{session_id}/finish")
    def finish(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            if not session.done_with_trials:
                raise ApiError(
                    409,
                    "session_incomplete",
                    f"{len(session.records)}/{session.n_trials} trials completed",
                )
            data = ParticipantData(
                participant_id=session.participant_id,
                condition=session.condition,
                topology=session.topology,
                records=tuple(session.records),
            )
            payload = {
                "participant_id": session.participant_id,
                "n_trials": session.n_trials,
                "total_score": session.total_score,
                "bonus_dollars": bonus_dollars(session.total_score),
            }
            if not session.finished:
                if data_dir is not None:
                    path = data_dir / f"session_{session.participant_id}.json"
                    save_session(path, data)
                    payload["session_file"] = str(path)
                session.finished = True
            else:
                payload["already_finished"] = True
            payload["session"] = session_to_json(data)
            return payload

    ui_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
