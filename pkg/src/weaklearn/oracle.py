"""Weak-query oracles, session lifecycle, and the wire protocol.

A session couples a streaming model with a budget of T one-bit questions.
Answers come either from a simulated oracle (hidden labels) or from a remote
human over a WebSocket; both paths drive the identical update code, so a
scripted client and an in-process run fed the same bits produce bit-identical
coefficients.
"""

import asyncio
import json
import time
import uuid
from dataclasses import dataclass, field

import numpy as np

from .active import (
    ActiveModel,
    WeakQuery,
    leastsquares_sgd_step,
    median_sgd_step,
    passive_classification_step,
    passive_regression_step,
    random_nontrivial_set,
)
from .core import ConstraintSet, SeededRng, constraint_contains
from .kernels import GaussianKernel, select_anchors

__all__ = [
    "Oracle",
    "SessionConfig",
    "SessionState",
    "SessionRunner",
    "simulated_answer",
    "run_session",
    "replay_log",
    "dumps_protocol",
    "create_app",
    "serve_sessions",
]


# ---------------------------------------------------------------------------
# Wire serialization: floats carry 17 significant digits so every 64-bit
# value round-trips exactly through JSON text.


def _emit(obj, out: list):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format(float(obj), ".17g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(str(k)))
            out.append(":")
            _emit(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        for i, v in enumerate(seq):
            if i:
                out.append(",")
            _emit(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_protocol(obj) -> str:
    out: list = []
    _emit(obj, out)
    return "".join(out)


# ---------------------------------------------------------------------------
# Oracles


@dataclass(frozen=True)
class Oracle:
    """kind 'simulated' answers from hidden labels; 'remote' marks sessions
    whose bits arrive over a channel."""

    kind: str
    truths: object = None

    def __post_init__(self):
        if self.kind not in ("simulated", "remote"):
            raise ValueError("oracle kind must be 'simulated' or 'remote'")
        if self.kind == "simulated" and self.truths is None:
            raise ValueError("simulated oracle needs hidden labels")

    def answer(self, index: int, query: WeakQuery) -> float:
        if self.kind != "simulated":
            raise ValueError("remote oracles answer over their channel")
        truths = self.truths
        if index >= len(truths):
            raise IndexError(f"no hidden label for sample {index}")
        return simulated_answer(truths[index], query)


def simulated_answer(y, query: WeakQuery) -> float:
    """Pure answer function: halfspace sign(<y-z,u>) with sign(0)=+1,
    membership 1{y in s}, shifted halfspace 1{<y,u> < threshold}."""
    if query.kind == "halfspace":
        yv = np.atleast_1d(np.asarray(y, dtype=float))
        inner = float((yv - query.z) @ query.u)
        return 1.0 if inner >= 0.0 else -1.0
    if query.kind == "membership":
        return 1.0 if constraint_contains(query.s, y) else 0.0
    yv = np.atleast_1d(np.asarray(y, dtype=float))
    return 1.0 if float(yv @ query.u) < query.threshold else 0.0


# ---------------------------------------------------------------------------
# Sessions


@dataclass
class SessionConfig:
    """Everything needed to rebuild a session's model and query stream."""

    step_kind: str = "median"  # median | passiveRegression | passiveClassification | leastSquares
    T: int = 100
    seed: int = 0
    m: int = 1
    sigma: float = 0.5
    anchor_count: int = 20
    schedule: tuple = ("decaying", 1.0)
    lam_reg: float = 0.0
    averaging: str = "runningMean"
    M: float = 1.0  # bound for the least-squares rule
    xs: object = None  # optional explicit (T, d) input stream

    def build_inputs(self) -> np.ndarray:
        if self.xs is not None:
            return np.atleast_2d(np.asarray(self.xs, dtype=float))
        return SeededRng(self.seed, stream=7).uniform(-1.0, 1.0, size=(self.T, 1))

    def build_model(self) -> ActiveModel:
        xs = self.build_inputs()
        kernel = GaussianKernel(self.sigma)
        p = min(self.anchor_count, xs.shape[0])
        anchors = select_anchors(kernel, xs, p, SeededRng(self.seed, stream=11))
        return ActiveModel(
            kernel,
            anchors,
            self.m,
            schedule=self.schedule,
            lam_reg=self.lam_reg,
            averaging=self.averaging,
        )


@dataclass
class SessionState:
    session_id: str
    T: int
    t: int = 0
    log: list = field(default_factory=list)  # (t, query payload, bit, timestamp)

    def check(self):
        assert self.t <= self.T and len(self.log) == self.t


_STEP_KINDS = ("median", "passiveRegression", "passiveClassification", "leastSquares")


class SessionRunner:
    """Owns one session: issues queries, applies answers, logs, resumes.

    Query directions come from per-step substreams of the session seed, so the
    t-th query is a pure function of (config, model state at t) — resuming an
    interrupted session replays identically.
    """

    def __init__(self, config: SessionConfig, session_id: str | None = None, log_path=None):
        if config.step_kind not in _STEP_KINDS:
            raise ValueError(f"unknown step kind {config.step_kind!r}")
        if config.T < 0:
            raise ValueError("budget must be >= 0")
        self.config = config
        self.model = config.build_model()
        self.xs = config.build_inputs()
        if self.xs.shape[0] < config.T:
            raise ValueError("input stream shorter than the budget")
        self.state = SessionState(session_id or uuid.uuid4().hex, config.T)
        self.log_path = log_path
        self._outstanding: dict | None = None

    # -- query construction (mirrors the draw order of the step functions) --

    def _step_rng(self, t: int) -> SeededRng:
        return SeededRng(self.config.seed, stream=13).substream(t)

    def current_query(self) -> dict | None:
        """The outstanding wire query, issuing a new one if none is pending.
        Returns None once the budget is exhausted."""
        if self._outstanding is not None:
            return self._outstanding
        t_next = self.state.t + 1
        if t_next > self.state.T:
            return None
        x = self.xs[t_next - 1]
        sub = self._step_rng(t_next)
        kind = self.config.step_kind
        payload: dict = {"type": "query", "t": t_next, "sessionId": self.state.session_id,
                         "x": list(x)}
        if kind == "median":
            u = sub.sphere(self.model.m)
            z = self.model.kx(x) @ self.model.a
            payload.update(kind="halfspace", z=list(z), u=list(u))
        elif kind == "passiveRegression":
            thr = float(sub.normal())
            payload.update(kind="halfspace", z=[thr], u=[1.0])
        elif kind == "passiveClassification":
            mask = random_nontrivial_set(self.model.m, sub)
            payload.update(kind="membership", set=[int(j) for j in np.flatnonzero(mask)])
        else:  # leastSquares
            u = sub.sphere(self.model.m)
            v = float(sub.uniform(0.0, 2.0 * self.config.M))
            f = self.model.kx(x) @ self.model.a
            payload.update(kind="shiftedHalfspace", u=list(u), threshold=float(f @ u) - v)
        self._outstanding = payload
        self._append_log_file({"record": "query", **payload})
        return payload

    def outstanding_t(self) -> int | None:
        return self._outstanding["t"] if self._outstanding is not None else None

    def query_object(self) -> WeakQuery | None:
        """The outstanding query as a WeakQuery (for simulated answering)."""
        q = self.current_query()
        if q is None:
            return None
        if q["kind"] == "halfspace":
            return WeakQuery("halfspace", z=np.array(q["z"]), u=np.array(q["u"]))
        if q["kind"] == "membership":
            return WeakQuery("membership", s=ConstraintSet.finite(tuple(q["set"])))
        return WeakQuery("shiftedHalfspace", u=np.array(q["u"]), threshold=q["threshold"])

    # -- answer handling --

    def submit_answer(self, t: int, bit: float) -> dict:
        """Apply one answer; returns the resulting 'state' message.  Raises
        ValueError('stale-answer') on a t mismatch and ValueError('bad-bit')
        on a bit outside the query's domain."""
        q = self.current_query()
        if q is None:
            raise ValueError("budget-exhausted")
        if int(t) != q["t"]:
            raise ValueError("stale-answer")
        bit = float(bit)
        domain = (-1.0, 1.0) if q["kind"] == "halfspace" else (0.0, 1.0)
        if bit not in domain:
            raise ValueError("bad-bit")
        x = self.xs[q["t"] - 1]
        sub = self._step_rng(q["t"])
        answer = lambda _query: bit
        kind = self.config.step_kind
        if kind == "median":
            median_sgd_step(self.model, x, answer, sub)
        elif kind == "passiveRegression":
            passive_regression_step(self.model, x, answer, sub)
        elif kind == "passiveClassification":
            passive_classification_step(self.model, x, answer, sub)
        else:
            leastsquares_sgd_step(self.model, x, self.config.M, answer, sub)
        self.state.t = q["t"]
        stamp = time.time()
        self.state.log.append((q["t"], q, bit, stamp))
        self.state.check()
        self._append_log_file({"record": "answer", "t": q["t"], "bit": bit, "timestamp": stamp})
        self._outstanding = None
        return self.state_message()

    def done(self) -> bool:
        return self.state.t >= self.state.T

    # -- reporting --

    def state_message(self) -> dict:
        bits = [entry[2] for entry in self.state.log[-25:]]
        if self.config.step_kind in ("median", "passiveRegression"):
            risk = abs(float(np.mean(bits))) if bits else 1.0
        else:
            risk = 1.0 - float(np.mean(bits)) if bits else 1.0
        return {
            "type": "state",
            "t": self.state.t,
            "sessionId": self.state.session_id,
            "riskEstimate": risk,
            "preview": self._preview(),
        }

    def _preview(self) -> list:
        if self.model.m == 1 and self.xs.shape[1] == 1:
            lo, hi = float(self.xs[:, 0].min()), float(self.xs[:, 0].max())
            grid = np.linspace(lo, hi, 41)
            return [[float(g), float(self.model.predict([g])[0])] for g in grid]
        x = self.xs[max(self.state.t - 1, 0)]
        scores = self.model.predict(x)
        return [[float(j), float(s)] for j, s in enumerate(scores)]

    def done_message(self) -> dict:
        return {"type": "done", "t": self.state.t, "sessionId": self.state.session_id}

    def _append_log_file(self, record: dict):
        if self.log_path is None:
            return
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(dumps_protocol(record) + "\n")


def run_session(config: SessionConfig, oracle: Oracle, log_path=None,
                runner: SessionRunner | None = None):
    """Drive a full (or resumed) session against a simulated oracle.
    Returns (model, SessionState)."""
    if runner is None:
        runner = SessionRunner(config, log_path=log_path)
    while not runner.done():
        q = runner.query_object()
        t = runner.outstanding_t()
        bit = oracle.answer(t - 1, q)
        runner.submit_answer(t, bit)
    return runner.model, runner.state


def replay_log(config: SessionConfig, records) -> ActiveModel:
    """Rebuild final coefficients purely from logged (query, answer) pairs.

    Applies the same per-kind update formulas using the logged directions,
    thresholds, and sets; no random draws are made."""
    model = config.build_model()
    for t, q, bit, _stamp in records:
        x = np.asarray(q["x"], dtype=float)
        kx = model.kx(x)
        model.t += 1
        g = model.gamma(model.t)
        kind = config.step_kind
        if kind == "median":
            u = np.asarray(q["u"], dtype=float)
            model._apply_update(g, (g * bit) * np.outer(kx, u))
        elif kind == "passiveRegression":
            thr = float(q["z"][0])
            f = float(kx @ model.a[:, 0])
            inside = (f >= thr) if bit > 0 else (f <= thr)
            if inside:
                data = np.zeros_like(model.a)
            else:
                direction = -1.0 if f < thr else 1.0
                data = (-g * direction) * kx[:, None]
            model._apply_update(g, data)
        elif kind == "passiveClassification":
            mask = np.zeros(model.m, dtype=bool)
            mask[list(q["set"])] = True
            if bit == 0.0:
                mask = ~mask
            g_vec = kx @ model.a
            y_star = int(np.argmax(np.where(mask, g_vec, -np.inf)))
            e = np.zeros(model.m)
            e[y_star] = 1.0
            residual = g_vec - e
            nrm = float(np.linalg.norm(residual))
            data = np.zeros_like(model.a) if nrm < 1e-12 else (-g) * np.outer(kx, residual / nrm)
            model._apply_update(g, data)
        else:
            u = np.asarray(q["u"], dtype=float)
            model._apply_update(g, (-g * bit) * np.outer(kx, u))
    return model


# ---------------------------------------------------------------------------
# WebSocket service


def create_app(config: SessionConfig, log_dir=None):
    """FastAPI app exposing GET /healthz and the per-connection session
    WebSocket at /session (reconnect with ?session=<id> to resume)."""
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect
    from fastapi.responses import PlainTextResponse

    app = FastAPI()
    sessions: dict[str, SessionRunner] = {}
    app.state.sessions = sessions
    lock = asyncio.Lock()

    @app.get("/healthz", response_class=PlainTextResponse)
    async def healthz():
        return "ok"

    @app.websocket("/session")
    async def session_socket(ws: WebSocket):
        await ws.accept()
        sid = ws.query_params.get("session")
        async with lock:
            if sid and sid in sessions:
                runner = sessions[sid]
            else:
                log_path = None
                runner = SessionRunner(config, session_id=sid)
                if log_dir is not None:
                    runner.log_path = f"{log_dir}/{runner.state.session_id}.jsonl"
                sessions[runner.state.session_id] = runner

        async def send(msg: dict):
            await ws.send_text(dumps_protocol(msg))

        try:
            if runner.done():
                await send(runner.done_message())
                return
            await send(runner.current_query())
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await send({"type": "error", "code": "malformed",
                                "message": "not valid JSON"})
                    continue
                if not isinstance(msg, dict) or msg.get("type") != "answer":
                    await send({"type": "error", "code": "unexpected-message",
                                "message": "expected an answer"})
                    continue
                try:
                    state = runner.submit_answer(msg.get("t", -1), msg.get("bit"))
                except (ValueError, TypeError) as exc:
                    code = str(exc) if str(exc) in ("stale-answer", "bad-bit",
                                                    "budget-exhausted") else "malformed"
                    await send({"type": "error", "code": code, "message": str(exc)})
                    if not runner.done():
                        await send(runner.current_query())  # re-issue
                    continue
                await send(state)
                if runner.done():
                    await send(runner.done_message())
                    return
                await send(runner.current_query())
        except WebSocketDisconnect:
            pass  # session stays in the registry; reconnect resumes it

    return app


def serve_sessions(bind: str | None, config: SessionConfig, log_dir=None):
    """Run the session service with uvicorn.  bind defaults to the
    WEAKLEARN_BIND environment variable, then 127.0.0.1:8765."""
    import os

    import uvicorn

    addr = bind or os.environ.get("WEAKLEARN_BIND") or "127.0.0.1:8765"
    host, _, port = addr.rpartition(":")
    app = create_app(config, log_dir=log_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
