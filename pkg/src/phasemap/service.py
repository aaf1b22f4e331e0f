"""HTTP job service: hosts instances, runs solver jobs, streams progress.

In-memory catalog with write-through persistence of documents when a
data directory is configured. Restart recovers instances and completed
solutions; jobs that were still in flight come back as failed with
reason "restart". Progress is exposed as an append-only event list per
job, polled with a cursor.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import Response

from . import io
from .model import FreezeSpec, Instance, SolverConfig, ValidationError, validate_instance
from .resample import ResamplePlan, to_log
from .solver import SolveCancelled, SolverPreconditionError, solve

TERMINAL_STATUSES = {"done", "failed", "cancelled"}
_PHASE_STATUS = {
    "solve": "running",
    "converged": "converged",
    "round": "rounding",
    "refine": "refining",
}
_EXPLICIT_FREEZE_KEYS = ("w_mask", "w_values", "h_mask", "h_values", "w_init", "h_init")
LOSS_TAIL = 50


class JobRecord:
    """Mutable job state; guarded by the store lock."""

    def __init__(self, job_id: str, instance_id: str, config: dict, freeze_doc: Optional[dict]):
        self.id = job_id
        self.instance_id = instance_id
        self.config = config
        self.freeze_doc = freeze_doc
        self.freeze: Optional[FreezeSpec] = None
        self.status = "queued"
        self.error: Optional[str] = None
        self.created_at = time.time()
        self.updated_at = self.created_at
        self.loss_trace: list = []
        self.events: list = []
        self.solution_doc: Optional[dict] = None
        self.cancel_event = threading.Event()
        self.parent_id: Optional[str] = None

    def public(self) -> dict:
        return {
            "id": self.id,
            "instance_id": self.instance_id,
            "status": self.status,
            "config": self.config,
            "error": self.error,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "iterations": max(0, len(self.loss_trace) - 1),
            "loss_trace_tail": self.loss_trace[-LOSS_TAIL:],
            "parent_id": self.parent_id,
        }

    def to_persist(self) -> dict:
        return {
            "id": self.id,
            "instance_id": self.instance_id,
            "config": self.config,
            "freeze": self.freeze_doc,
            "status": self.status,
            "error": self.error,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "loss_trace": self.loss_trace,
            "parent_id": self.parent_id,
        }


class Store:
    """Instances, jobs, and solutions, with optional disk write-through."""

    def __init__(self, data_dir: Optional[Path]):
        self.lock = threading.RLock()
        self.instances: dict = {}  # id -> (doc, Instance)
        self.jobs: dict = {}  # id -> JobRecord
        self.data_dir = Path(data_dir) if data_dir else None
        if self.data_dir:
            for sub in ("instances", "jobs", "solutions"):
                (self.data_dir / sub).mkdir(parents=True, exist_ok=True)
            self._recover()

    # -- persistence ----------------------------------------------------
    def _recover(self) -> None:
        for path in sorted((self.data_dir / "instances").glob("*.json")):
            doc = io.read_json(path)
            self.instances[path.stem] = (doc, validate_instance(doc))
        for path in sorted((self.data_dir / "jobs").glob("*.json")):
            rec = io.read_json(path)
            job = JobRecord(rec["id"], rec["instance_id"], rec["config"], rec.get("freeze"))
            job.created_at = rec.get("created_at", time.time())
            job.updated_at = rec.get("updated_at", job.created_at)
            job.loss_trace = list(rec.get("loss_trace", []))
            job.parent_id = rec.get("parent_id")
            status = rec.get("status", "queued")
            if status in TERMINAL_STATUSES:
                job.status = status
                job.error = rec.get("error")
                sol_path = self.data_dir / "solutions" / f"{job.id}.json"
                if status == "done" and sol_path.exists():
                    job.solution_doc = io.read_json(sol_path)
            else:
                job.status = "failed"
                job.error = "restart"
            self.jobs[job.id] = job

    def persist_instance(self, instance_id: str, doc: dict) -> None:
        if self.data_dir:
            io.write_json(self.data_dir / "instances" / f"{instance_id}.json", doc)

    def persist_job(self, job: JobRecord) -> None:
        if self.data_dir:
            io.write_json(self.data_dir / "jobs" / f"{job.id}.json", job.to_persist())

    def persist_solution(self, job: JobRecord) -> None:
        if self.data_dir and job.solution_doc is not None:
            io.write_json(
                self.data_dir / "solutions" / f"{job.id}.json", job.solution_doc
            )

    # -- catalog --------------------------------------------------------
    def add_instance(self, doc: dict) -> str:
        instance = validate_instance(doc)
        instance_id = uuid.uuid4().hex[:12]
        with self.lock:
            self.instances[instance_id] = (doc, instance)
        self.persist_instance(instance_id, doc)
        return instance_id

    def get_instance(self, instance_id: str):
        with self.lock:
            entry = self.instances.get(instance_id)
        if entry is None:
            raise HTTPException(404, f"unknown instance {instance_id}")
        return entry

    def get_job(self, job_id: str) -> JobRecord:
        with self.lock:
            job = self.jobs.get(job_id)
        if job is None:
            raise HTTPException(404, f"unknown job {job_id}")
        return job


def _seeded_inits(n_log: int, config: SolverConfig, j: int):
    """Replicate the solver's default initialization (W drawn before H)."""
    rng = np.random.default_rng(config.seed)
    w = 1.0 - rng.random((n_log, config.k))
    h = 1.0 - rng.random((config.m, config.k, j))
    return w, h


def expand_freeze(
    doc: Optional[dict],
    instance: Instance,
    config: SolverConfig,
    base_w_init: Optional[np.ndarray] = None,
    base_h_init: Optional[np.ndarray] = None,
) -> Optional[FreezeSpec]:
    """Turn a wire freeze payload into an explicit FreezeSpec.

    Besides the explicit mask/value arrays, the payload may carry
    ``basis_from_sample`` directives: the named sample's log-resampled
    pattern is pinned as (or used to initialize) one basis column. When
    initialization is involved, unspecified entries fall back to
    ``base_w_init``/``base_h_init`` (a parent solution) or to the
    seeded default the solver would draw.
    """
    doc = doc or {}
    explicit = {k: doc.get(k) for k in _EXPLICIT_FREEZE_KEYS}
    directives = doc.get("basis_from_sample") or []
    if not any(v is not None for v in explicit.values()) and not directives:
        if base_w_init is None:
            return None
        return FreezeSpec(w_init=base_w_init, h_init=base_h_init)

    plan = ResamplePlan.for_instance_grid(instance.q, config.oversample)
    n_log, j = len(plan.dst), instance.n_samples
    base = io.freeze_from_doc(explicit)

    w_mask = np.array(base.w_mask) if base.w_mask is not None else np.zeros((n_log, config.k), dtype=bool)
    w_values = np.array(base.w_values) if base.w_values is not None else np.zeros((n_log, config.k))
    h_mask = base.h_mask
    h_values = base.h_values
    w_init = np.array(base.w_init) if base.w_init is not None else None
    h_init = np.array(base.h_init) if base.h_init is not None else None

    by_id = {s.id: s for s in instance.samples}
    needs_init = any(not d.get("pin", True) for d in directives)
    if w_init is None and (needs_init or base_w_init is not None):
        w_init = np.array(base_w_init) if base_w_init is not None else None
    if h_init is None and base_h_init is not None:
        h_init = np.array(base_h_init)
    if needs_init and w_init is None:
        w_init, default_h = _seeded_inits(n_log, config, j)
        if h_init is None:
            h_init = default_h

    for d in directives:
        sample_id = d.get("sample_id")
        if sample_id not in by_id:
            raise ValidationError(f"unknown sample_id {sample_id!r}")
        basis = int(d.get("basis", -1))
        if not 0 <= basis < config.k:
            raise ValidationError(f"basis index {basis} out of range")
        pattern = to_log(by_id[sample_id].intensity, plan)
        if d.get("pin", True):
            w_mask[:, basis] = True
            w_values[:, basis] = pattern
        else:
            w_init[:, basis] = pattern

    has_pins = bool(np.any(w_mask))
    freeze = FreezeSpec(
        w_mask=w_mask if has_pins else None,
        w_values=w_values if has_pins else None,
        h_mask=h_mask,
        h_values=h_values,
        w_init=w_init,
        h_init=h_init,
    )
    freeze.validate_for(n_log, config.k, config.m, j)
    return freeze


def _merge_parent_pins(parent: Optional[FreezeSpec], child: Optional[FreezeSpec], shape_w, shape_h):
    """OR the parent's pins into the child's; child values win on overlap."""
    if parent is None or (parent.w_mask is None and parent.h_mask is None):
        return child
    child = child if child is not None else FreezeSpec()

    def merged(p_mask, p_vals, c_mask, c_vals, shape):
        if p_mask is None and c_mask is None:
            return None, None
        mask = np.zeros(shape, dtype=bool)
        vals = np.zeros(shape)
        if p_mask is not None:
            mask |= p_mask
            vals[p_mask] = p_vals[p_mask]
        if c_mask is not None:
            mask |= c_mask
            vals[c_mask] = c_vals[c_mask]
        return mask, vals

    w_mask, w_values = merged(parent.w_mask, parent.w_values, child.w_mask, child.w_values, shape_w)
    h_mask, h_values = merged(parent.h_mask, parent.h_values, child.h_mask, child.h_values, shape_h)
    return FreezeSpec(
        w_mask=w_mask,
        w_values=w_values,
        h_mask=h_mask,
        h_values=h_values,
        w_init=child.w_init,
        h_init=child.h_init,
    )


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception as exc:
        raise HTTPException(400, f"malformed JSON body: {exc}") from exc
    if not isinstance(body, dict):
        raise HTTPException(400, "request body must be a JSON object")
    return body


def create_app(data_dir=None, max_workers: int = 2, ui_dir=None) -> FastAPI:
    """Build the service application (one store and worker pool per app).

    ``ui_dir`` (a built frontend checkout) is mounted read-only at /ui.
    """
    store = Store(Path(data_dir) if data_dir else None)
    executor = ThreadPoolExecutor(max_workers=max_workers)

    @asynccontextmanager
    async def lifespan(_app):
        yield
        executor.shutdown(wait=False, cancel_futures=True)

    app = FastAPI(title="phasemap service", lifespan=lifespan)
    app.state.store = store

    def transition(job: JobRecord, status: str, error: Optional[str] = None) -> None:
        with store.lock:
            job.status = status
            job.error = error
            job.updated_at = time.time()
        store.persist_job(job)

    def run_job(job: JobRecord) -> None:
        with store.lock:
            if job.cancel_event.is_set() or job.status != "queued":
                if job.status == "queued":
                    job.status = "cancelled"
                    job.updated_at = time.time()
                store.persist_job(job)
                return
            job.status = "running"
            job.updated_at = time.time()
        store.persist_job(job)
        try:
            _, instance = store.get_instance(job.instance_id)
            config = SolverConfig.from_dict(job.config)

            def progress(rec) -> bool:
                status = _PHASE_STATUS[rec.phase]
                with store.lock:
                    job.status = status
                    job.updated_at = time.time()
                    if rec.phase != "converged":
                        job.loss_trace.append(rec.loss)
                    job.events.append(
                        {"iteration": rec.iteration, "loss": rec.loss, "status": status}
                    )
                return not job.cancel_event.is_set()

            solution = solve(instance, config, job.freeze, progress=progress)
            with store.lock:
                job.solution_doc = io.solution_to_doc(solution)
                job.events.append(
                    {
                        "iteration": solution.iterations,
                        "loss": float(solution.loss_trace[-1]),
                        "status": "done",
                    }
                )
            transition(job, "done")
            store.persist_solution(job)
        except SolveCancelled:
            with store.lock:
                last = job.loss_trace[-1] if job.loss_trace else None
                job.events.append(
                    {
                        "iteration": max(0, len(job.loss_trace) - 1),
                        "loss": last,
                        "status": "cancelled",
                    }
                )
            transition(job, "cancelled")
        except (ValidationError, SolverPreconditionError) as exc:
            transition(job, "failed", str(exc))
        except Exception as exc:  # pragma: no cover - defensive
            transition(job, "failed", f"internal error: {exc}")

    def submit_job(
        instance_id: str,
        config_doc: dict,
        freeze_doc: Optional[dict],
        freeze: Optional[FreezeSpec],
        parent_id: Optional[str] = None,
    ) -> str:
        job = JobRecord(uuid.uuid4().hex[:12], instance_id, config_doc, freeze_doc)
        job.freeze = freeze
        job.parent_id = parent_id
        with store.lock:
            store.jobs[job.id] = job
        store.persist_job(job)
        executor.submit(run_job, job)
        return job.id

    # -- endpoints ------------------------------------------------------
    @app.post("/api/instances")
    async def post_instance(request: Request):
        body = await _json_body(request)
        try:
            instance_id = store.add_instance(body)
        except ValidationError as exc:
            raise HTTPException(422, str(exc)) from exc
        return {"instance_id": instance_id}

    @app.get("/api/instances/{instance_id}")
    def get_instance(instance_id: str):
        doc, _ = store.get_instance(instance_id)
        return doc

    @app.post("/api/jobs")
    async def post_job(request: Request):
        body = await _json_body(request)
        instance_id = body.get("instance_id")
        if not isinstance(instance_id, str):
            raise HTTPException(400, "instance_id is required")
        _, instance = store.get_instance(instance_id)
        config_doc = body.get("config") or {}
        freeze_doc = body.get("freeze")
        try:
            config = SolverConfig.from_dict(config_doc)
            freeze = expand_freeze(freeze_doc, instance, config)
        except (ValidationError, KeyError, TypeError) as exc:
            raise HTTPException(422, f"invalid job request: {exc}") from exc
        job_id = submit_job(instance_id, config.to_dict(), freeze_doc, freeze)
        return {"job_id": job_id}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        job = store.get_job(job_id)
        with store.lock:
            return job.public()

    @app.get("/api/jobs/{job_id}/events")
    def get_events(job_id: str, cursor: int = 0):
        if cursor < 0:
            raise HTTPException(400, "cursor must be >= 0")
        job = store.get_job(job_id)
        with store.lock:
            events = list(job.events[cursor:])
            return {
                "events": events,
                "cursor": cursor + len(events),
                "status": job.status,
            }

    @app.get("/api/jobs/{job_id}/solution")
    def get_solution(job_id: str):
        job = store.get_job(job_id)
        with store.lock:
            if job.status != "done" or job.solution_doc is None:
                raise HTTPException(409, f"job {job_id} is {job.status}, not done")
            # canonical serialization: byte-stable across restarts
            body = json.dumps(job.solution_doc, sort_keys=True)
        return Response(content=body, media_type="application/json")

    @app.post("/api/jobs/{job_id}/cancel")
    def cancel_job(job_id: str):
        job = store.get_job(job_id)
        with store.lock:
            if job.status in TERMINAL_STATUSES:
                raise HTTPException(409, f"job {job_id} already {job.status}")
            job.cancel_event.set()
            if job.status == "queued":
                job.status = "cancelled"
                job.updated_at = time.time()
        store.persist_job(job)
        with store.lock:
            return {"status": job.status}

    @app.post("/api/jobs/{job_id}/refine")
    async def refine_job(job_id: str, request: Request):
        body = await _json_body(request)
        parent = store.get_job(job_id)
        with store.lock:
            if parent.status != "done" or parent.solution_doc is None:
                raise HTTPException(409, f"job {job_id} is {parent.status}, not done")
            parent_doc = parent.solution_doc
            parent_freeze = parent.freeze
            parent_config = dict(parent.config)
        overrides = body.get("config") or {}
        config_doc = {**parent_config, **overrides}
        for pinned_field in ("k", "m", "oversample"):
            if config_doc.get(pinned_field) != parent_config.get(pinned_field):
                raise HTTPException(
                    422, f"refine cannot change {pinned_field}"
                )
        _, instance = store.get_instance(parent.instance_id)
        parent_w = np.asarray(parent_doc["W"], dtype=np.float64)
        parent_h = np.asarray(parent_doc["H"], dtype=np.float64)
        try:
            config = SolverConfig.from_dict(config_doc)
            freeze = expand_freeze(
                body.get("freeze"), instance, config,
                base_w_init=parent_w, base_h_init=parent_h,
            )
            freeze = _merge_parent_pins(
                parent_freeze, freeze, parent_w.shape, parent_h.shape
            )
        except (ValidationError, KeyError, TypeError) as exc:
            raise HTTPException(422, f"invalid refine request: {exc}") from exc
        child_id = submit_job(
            parent.instance_id, config.to_dict(), body.get("freeze"), freeze,
            parent_id=job_id,
        )
        return {"job_id": child_id}

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
