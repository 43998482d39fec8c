"""Live teleoperation sessions over WebSocket, plus the catalog endpoints.

One session per connection. A session holds the environment state, the loaded
quantile controller, and the online calibration state. Driving inputs advance
the environment with the predicted action but never touch calibration; in
supervised mode the operator reveals the intended action afterwards through a
label message, which advances calibration exactly once per step.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import conformal, netcore, regressor
from .envs import catalog

DEFAULT_ADDR = "127.0.0.1:8787"
MODES = ("frozen", "supervised")


class ProtocolError(Exception):
    """Client message violated the session protocol; session state unchanged."""


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return [float(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class Session:
    session_id: int
    scenario_id: str
    env: object
    model: netcore.Mlp
    mode: str
    monitor_cfg: conformal.MonitorConfig
    acqr: conformal.AcqrState
    state: np.ndarray
    pending: dict | None = None
    step_count: int = 0
    log: list = field(default_factory=list)

    def snapshot(self) -> dict:
        return {
            "scenario": self.scenario_id,
            "mode": self.mode,
            "state": _jsonable(self.state),
            "n_u": self.env.n_u,
            "n_a": self.env.n_a,
            "beta": self.monitor_cfg.beta,
            "alpha_t": self.acqr.alpha_t,
            "lambda": self.acqr.current_lambda(),
        }


def _predict(session: Session, low_input: np.ndarray):
    pred = regressor.qr_predict(session.model, session.env.norm_state(session.state), low_input)
    lam = session.acqr.current_lambda()
    deltas = conformal.delta_bounds(pred)
    interval = conformal.calibrated_interval(pred, deltas, lam, alpha_used=session.acqr.alpha_t)
    u = conformal.uncertainty_score(interval)
    return pred, interval, u


def _check_input(session: Session, low_input) -> np.ndarray:
    h = np.atleast_1d(np.asarray(low_input, dtype=float))
    if h.shape != (session.env.n_u,):
        raise ProtocolError(f"input must have length {session.env.n_u}")
    if not np.all(np.isfinite(h)) or np.any(np.abs(h) > 1.0):
        raise ProtocolError("input entries must be finite and within [-1, 1]")
    return h


def session_step(session: Session, low_input) -> dict:
    """Drive one step: predict, monitor, advance the environment state.

    Calibration state is untouched (the intended action is unknown at input
    time). In supervised mode the step becomes the single pending step that
    the next label message must resolve.
    """
    h = _check_input(session, low_input)
    if session.mode == "supervised" and session.pending is not None:
        raise ProtocolError("label the pending step before sending another input")
    pred, interval, u = _predict(session, h)
    session.state = session.env.step(session.state, pred.a_hat)
    session.step_count += 1
    event = {
        "type": "step",
        "state": _jsonable(session.state),
        "a_hat": _jsonable(pred.a_hat),
        "lower": _jsonable(interval.lower),
        "upper": _jsonable(interval.upper),
        "U": float(u),
        "flagged": conformal.monitor(u, session.monitor_cfg),
        "alpha_t": float(session.acqr.alpha_t),
        "lambda": float(interval.lam),
    }
    if session.mode == "supervised":
        session.pending = {"pred": pred, "step": session.step_count}
    return event


def session_label(session: Session, intended_action) -> dict:
    """Reveal the intended action for the pending step and advance calibration."""
    if session.mode != "supervised":
        raise ProtocolError("labels are only accepted in supervised mode")
    if session.pending is None:
        raise ProtocolError("no pending step to label")
    action = np.atleast_1d(np.asarray(intended_action, dtype=float))
    if action.shape != (session.env.n_a,):
        raise ProtocolError(f"label must have length {session.env.n_a}")
    if not np.all(np.isfinite(action)):
        raise ProtocolError("label entries must be finite")
    _, err, _ = conformal.acqr_step(session.acqr, session.pending["pred"], action)
    session.pending = None
    return {
        "type": "ack",
        "event": "label",
        "err": int(err),
        "alpha_t": float(session.acqr.alpha_t),
        "lambda": float(session.acqr.current_lambda()),
    }


def session_probe(session: Session, low_input) -> dict:
    """Read-only uncertainty query; never advances state or calibration."""
    h = _check_input(session, low_input)
    pred, _, u = _predict(session, h)
    return {"type": "probe_result", "U": float(u), "a_hat": _jsonable(pred.a_hat)}


class ModelRegistry:
    """Named quantile models, preloaded or discovered in a directory."""

    def __init__(self, models: dict | None = None, models_dir: str | None = None):
        self._models = dict(models or {})
        self._dir = models_dir

    def names(self) -> list[str]:
        names = set(self._models)
        if self._dir and os.path.isdir(self._dir):
            for entry in os.listdir(self._dir):
                if entry.endswith(".json"):
                    names.add(entry[:-5])
        return sorted(names)

    def load(self, name: str) -> netcore.Mlp:
        if name in self._models:
            return self._models[name]
        if self._dir:
            path = os.path.join(self._dir, name + ".json")
            if os.path.isfile(path):
                model, kind = netcore.load_model(path)
                if kind != "qr":
                    raise ProtocolError(f"model '{name}' is not a quantile controller")
                return model
        raise ProtocolError(f"unknown model '{name}'")


class Connection:
    """Per-connection protocol state machine; messages are handled in order."""

    def __init__(self, registry: ModelRegistry, log_dir: str | None = None):
        self.registry = registry
        self.log_dir = log_dir
        self.session: Session | None = None
        self.last_id: int | None = None
        self._session_counter = 0

    def _reset(self, msg: dict) -> Session:
        scenario_id = msg.get("scenario")
        entry = catalog.get_scenario(scenario_id)
        env = entry.env_factory()
        model = self.registry.load(msg.get("model", scenario_id))
        if model.n_in != env.n_s + env.n_u or model.n_a != env.n_a:
            raise ProtocolError(
                f"model dims ({model.n_in}->{model.n_a}) do not fit scenario "
                f"'{scenario_id}' ({env.n_s}+{env.n_u}->{env.n_a})")
        mode = msg.get("mode", "frozen")
        if mode not in MODES:
            raise ProtocolError(f"mode must be one of {MODES}")
        beta = float(msg.get("beta", entry.default_beta))
        alpha = float(msg.get("alpha", 0.1))
        gamma = float(msg.get("gamma", conformal.DEFAULT_GAMMA))
        seed = int(msg.get("seed", 0))
        self._session_counter += 1
        return Session(
            session_id=self._session_counter,
            scenario_id=scenario_id,
            env=env,
            model=model,
            mode=mode,
            monitor_cfg=conformal.MonitorConfig(beta=beta),
            acqr=conformal.AcqrState(alpha_target=alpha, gamma=gamma),
            state=env.start_state(seed),
        )

    def handle(self, msg: dict) -> dict:
        msg_id = msg.get("id")
        try:
            if not isinstance(msg_id, int):
                raise ProtocolError("message id must be an integer")
            if self.last_id is not None and msg_id <= self.last_id:
                raise ProtocolError(f"message id must increase (last was {self.last_id})")
            self.last_id = msg_id
            mtype = msg.get("type")
            if mtype == "reset":
                self.session = self._reset(msg)
                response = {"id": msg_id, "type": "ack", "event": "reset", **self.session.snapshot()}
            elif self.session is None:
                raise ProtocolError("send a reset message first")
            elif mtype == "input":
                response = {"id": msg_id, **session_step(self.session, msg.get("h"))}
            elif mtype == "label":
                response = {"id": msg_id, **session_label(self.session, msg.get("a"))}
            elif mtype == "probe":
                response = {"id": msg_id, **session_probe(self.session, msg.get("h"))}
            else:
                raise ProtocolError(f"unknown message type '{mtype}'")
        except ProtocolError as exc:
            response = {"id": msg_id if isinstance(msg_id, int) else -1,
                        "type": "error", "msg": str(exc)}
        except (TypeError, ValueError, KeyError) as exc:
            response = {"id": msg_id if isinstance(msg_id, int) else -1,
                        "type": "error", "msg": f"malformed message: {exc}"}
        if self.session is not None:
            self.session.log.append({"dir": "in", "msg": msg})
            self.session.log.append({"dir": "out", "msg": response})
        return response

    def dump_log(self) -> None:
        if not self.log_dir or self.session is None:
            return
        os.makedirs(self.log_dir, exist_ok=True)
        path = os.path.join(self.log_dir, f"session_{self.session.session_id}.jsonl")
        with open(path, "w") as fh:
            for entry in self.session.log:
                fh.write(json.dumps(entry, sort_keys=True, separators=(",", ":")))
                fh.write("\n")


def replay_messages(registry: ModelRegistry, messages: list[dict]) -> list[dict]:
    """Feed a recorded client message log through a fresh connection."""
    conn = Connection(registry)
    return [conn.handle(msg) for msg in messages]


def create_app(models: dict | None = None, models_dir: str | None = None,
               log_dir: str | None = None, frontend_dir: str | None = None) -> FastAPI:
    registry = ModelRegistry(models, models_dir)
    app = FastAPI(title="teleopd")

    @app.get("/scenarios")
    def scenarios() -> list:
        return catalog.describe_catalog()

    @app.get("/models")
    def model_names() -> list:
        return registry.names()

    @app.websocket("/ws")
    async def ws_session(websocket: WebSocket):
        await websocket.accept()
        conn = Connection(registry, log_dir=log_dir)
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await websocket.send_text(json.dumps(
                        {"id": -1, "type": "error", "msg": "frame is not valid JSON"}))
                    continue
                response = conn.handle(msg)
                await websocket.send_text(json.dumps(response, sort_keys=True))
        except WebSocketDisconnect:
            conn.dump_log()

    if frontend_dir and os.path.isdir(frontend_dir):
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="cockpit")

    return app


def resolve_addr(addr: str | None = None) -> tuple[str, int]:
    addr = addr or os.environ.get("TELEOPD_ADDR", DEFAULT_ADDR)
    host, _, port = addr.rpartition(":")
    return host or "127.0.0.1", int(port)


def serve(models_dir: str | None = None, log_dir: str | None = None,
          frontend_dir: str | None = None, addr: str | None = None) -> None:
    import uvicorn

    host, port = resolve_addr(addr)
    app = create_app(models_dir=models_dir, log_dir=log_dir, frontend_dir=frontend_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
