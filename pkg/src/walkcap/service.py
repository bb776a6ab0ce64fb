"""HTTP service: walkable-area jobs with progress polling, capacity endpoint.

Jobs run on a bounded worker pool and are persisted to a disk store when
they reach a terminal state, so a restarted service re-serves completed
results. Progress is exposed for polling; the recorded sequence is
monotone because the engine's progress aggregator already serializes and
clamps deliveries.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path

import yaml
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import engine, geometry, osm, overpass
from .capacity import CapacityParams, CapacityParamError, assess
from .classify import ComputeOptions

DONE = "done"
FAILED = "failed"
QUEUED = "queued"
RUNNING = "running"


@dataclass
class ServiceConfig:
    job_dir: Path = Path("./walkcap-jobs")
    cache_dir: Path | None = None
    overpass_endpoint: str | None = None
    area_cap_km2: float = 50.0
    workers: int = 2
    compute_threads: int | None = None
    job_retention_s: float = 24 * 3600
    static_dir: Path | None = None
    host: str = "127.0.0.1"
    port: int = 8000

    @classmethod
    def load(cls, config_file: str | Path | None = None) -> "ServiceConfig":
        """Config file values, overridden by WALKCAP_* environment variables."""
        values: dict = {}
        if config_file:
            values.update(yaml.safe_load(Path(config_file).read_text()) or {})
        env = os.environ
        for key, cast in [("job_dir", Path), ("cache_dir", Path),
                          ("overpass_endpoint", str), ("area_cap_km2", float),
                          ("workers", int), ("compute_threads", int),
                          ("job_retention_s", float), ("static_dir", Path),
                          ("host", str), ("port", int)]:
            env_name = f"WALKCAP_{key.upper()}"
            if env_name in env:
                values[key] = cast(env[env_name])
            elif key in values and values[key] is not None:
                values[key] = cast(values[key])
        return cls(**values)


class JobStore:
    """Thread-safe job records, persisted to job_dir on terminal states."""

    def __init__(self, directory: Path, retention_s: float = 24 * 3600):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.retention_s = retention_s
        self._lock = threading.Lock()
        self._jobs: dict[str, dict] = {}
        self._rendered: dict[str, bytes] = {}
        # progress fractions in delivery order, for monotonicity checks
        self.progress_log: dict[str, list[float]] = {}

    def create(self, request_echo: dict) -> str:
        job_id = uuid.uuid4().hex
        with self._lock:
            self._jobs[job_id] = {
                "id": job_id,
                "state": QUEUED,
                "progress": 0.0,
                "phase": None,
                "created_at": round(time.time(), 3),
                "request": request_echo,
            }
            self.progress_log[job_id] = []
        return job_id

    def mark_running(self, job_id: str) -> None:
        with self._lock:
            self._jobs[job_id]["state"] = RUNNING

    def update_progress(self, job_id: str, fraction: float, phase: str) -> None:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None or job["state"] in (DONE, FAILED):
                return
            job["progress"] = fraction
            job["phase"] = phase
            self.progress_log[job_id].append(fraction)

    def mark_done(self, job_id: str, result_doc: dict) -> None:
        with self._lock:
            job = self._jobs[job_id]
            job.update(state=DONE, progress=1.0,
                       result=result_doc,
                       result_url=f"/api/v1/walkable/{job_id}/result")
            self._persist(job_id, job)

    def mark_failed(self, job_id: str, error: str) -> None:
        with self._lock:
            job = self._jobs[job_id]
            job.update(state=FAILED, error=error)
            self._persist(job_id, job)

    def _persist(self, job_id: str, job: dict) -> None:
        rendered = json.dumps(job, sort_keys=True, separators=(",", ":")).encode()
        self._rendered[job_id] = rendered
        path = self.directory / f"{job_id}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(rendered)
        tmp.replace(path)

    def get_rendered(self, job_id: str) -> bytes | None:
        """Status document bytes; terminal jobs come from the persisted render."""
        with self._lock:
            if job_id in self._rendered:
                return self._rendered[job_id]
            job = self._jobs.get(job_id)
            if job is not None:
                return json.dumps(job, sort_keys=True, separators=(",", ":")).encode()
        path = self.directory / f"{job_id}.json"
        try:
            rendered = path.read_bytes()
        except FileNotFoundError:
            return None
        with self._lock:
            self._rendered[job_id] = rendered
        return rendered

    def get(self, job_id: str) -> dict | None:
        rendered = self.get_rendered(job_id)
        return json.loads(rendered) if rendered is not None else None

    def purge_expired(self) -> None:
        cutoff = time.time() - self.retention_s
        with self._lock:
            stale = [job_id for job_id, job in self._jobs.items()
                     if job["created_at"] < cutoff and job["state"] in (DONE, FAILED)]
            for job_id in stale:
                self._jobs.pop(job_id, None)
                self._rendered.pop(job_id, None)
                self.progress_log.pop(job_id, None)
        for path in self.directory.glob("*.json"):
            try:
                if path.stat().st_mtime < cutoff:
                    path.unlink()
            except FileNotFoundError:
                pass


def _load_source_bytes(source: dict, boundary, config: ServiceConfig,
                       tracker: engine.PipelineProgress) -> bytes:
    tracker.report("fetch", 0.0)
    kind = source.get("type", "overpass")
    if kind == "file":
        data = Path(source["path"]).read_bytes()
    elif kind == "overpass":
        query = overpass.build_query(boundary)
        endpoint = source.get("endpoint") or config.overpass_endpoint
        cache = (overpass.DiskCache(config.cache_dir)
                 if config.cache_dir is not None else None)
        data = overpass.OverpassClient(endpoint=endpoint, cache=cache).fetch(query)
    else:
        raise ValueError(f"unknown source type {kind!r}")
    tracker.report("fetch", 1.0)
    return data


def _run_job(store: JobStore, job_id: str, boundary, options: ComputeOptions,
             source: dict, config: ServiceConfig) -> None:
    store.mark_running(job_id)
    sink = lambda fraction, phase: store.update_progress(job_id, fraction, phase)
    tracker = engine.PipelineProgress(sink)
    try:
        data = _load_source_bytes(source, boundary, config, tracker)
        elements = osm.parse_osm_bytes(data)
        assembled = osm.assemble(elements)
        result = engine.compute_walkable(
            boundary, assembled.features, options, sink,
            max_workers=config.compute_threads,
            extra_diagnostics={"assembly_skipped": assembled.skipped})
        store.mark_done(job_id, result.to_geojson())
    except Exception as exc:
        store.mark_failed(job_id, f"{type(exc).__name__}: {exc}")


def _parse_walkable_request(body) -> tuple[object, ComputeOptions, dict]:
    if not isinstance(body, dict):
        raise HTTPException(400, "request body must be a JSON object")
    if "boundary" not in body:
        raise HTTPException(400, "missing 'boundary' GeoJSON")
    try:
        boundary = geometry.geometry_from_geojson(body["boundary"])
    except geometry.GeometryError as exc:
        raise HTTPException(400, f"invalid boundary GeoJSON: {exc}")
    raw_options = body.get("options", {})
    if not isinstance(raw_options, dict):
        raise HTTPException(400, "'options' must be an object")
    known = {"remove_building_inner_areas", "roads_walkable", "grass_not_walkable"}
    unknown = set(raw_options) - known
    if unknown:
        raise HTTPException(400, f"unknown options: {sorted(unknown)}")
    for key, value in raw_options.items():
        if not isinstance(value, bool):
            raise HTTPException(400, f"option {key!r} must be a boolean")
    options = ComputeOptions(**raw_options)
    source = body.get("source", {"type": "overpass"})
    if not isinstance(source, dict) or source.get("type", "overpass") not in ("overpass", "file"):
        raise HTTPException(400, "source.type must be 'overpass' or 'file'")
    return boundary, options, source


class CorrectiveFactorModel(BaseModel):
    label: str = ""
    value: float = Field(ge=0.0, le=1.0)


class CapacityParamsModel(BaseModel):
    area_per_pedestrian_m2: float = Field(default=2.0, gt=0)
    rotation_factor: float = Field(default=2.5, gt=0)
    corrective_factors: list[CorrectiveFactorModel] | None = None
    management_capacity: float = Field(default=0.7775, ge=0.0, le=1.0)


class CapacityRequest(BaseModel):
    walkable_area_m2: float = Field(ge=0)
    params: CapacityParamsModel = CapacityParamsModel()


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig.load()
    store = JobStore(config.job_dir, config.job_retention_s)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.executor = ThreadPoolExecutor(max_workers=config.workers)
        yield
        app.state.executor.shutdown(wait=False, cancel_futures=True)

    app = FastAPI(title="walkcap", lifespan=lifespan)
    app.state.config = config
    app.state.store = store

    @app.post("/api/v1/walkable", status_code=202)
    async def submit_walkable(request: Request):
        try:
            body = await request.json()
        except Exception:
            raise HTTPException(400, "request body is not valid JSON")
        boundary, options, source = _parse_walkable_request(body)
        frame = geometry.make_local_frame(boundary)
        area_km2 = geometry.area_m2(boundary, frame) / 1e6
        if area_km2 > config.area_cap_km2:
            raise HTTPException(
                413, f"boundary area {area_km2:.1f} km2 exceeds the "
                     f"{config.area_cap_km2:.1f} km2 cap")
        store.purge_expired()
        job_id = store.create({
            "boundary": geometry.geometry_to_geojson(boundary),
            "options": {
                "remove_building_inner_areas": options.remove_building_inner_areas,
                "roads_walkable": options.roads_walkable,
                "grass_not_walkable": options.grass_not_walkable,
            },
            "source": source,
        })
        app.state.executor.submit(_run_job, store, job_id, boundary, options,
                                  source, config)
        return JSONResponse({"id": job_id,
                             "status_url": f"/api/v1/walkable/{job_id}"},
                            status_code=202)

    @app.get("/api/v1/walkable/{job_id}")
    async def job_status(job_id: str):
        rendered = store.get_rendered(job_id)
        if rendered is None:
            raise HTTPException(404, f"unknown job {job_id!r}")
        return Response(content=rendered, media_type="application/json")

    @app.get("/api/v1/walkable/{job_id}/result")
    async def job_result(job_id: str):
        job = store.get(job_id)
        if job is None:
            raise HTTPException(404, f"unknown job {job_id!r}")
        if job["state"] != DONE:
            raise HTTPException(409, f"job is {job['state']}, not done")
        return JSONResponse(job["result"])

    @app.post("/api/v1/capacity")
    async def capacity_endpoint(request: CapacityRequest):
        factors = request.params.corrective_factors
        try:
            params = CapacityParams(
                area_per_pedestrian_m2=request.params.area_per_pedestrian_m2,
                rotation_factor=request.params.rotation_factor,
                corrective_factors=tuple((f.label, f.value) for f in factors)
                if factors is not None else CapacityParams().corrective_factors,
                management_capacity=request.params.management_capacity,
            )
            report = assess(request.walkable_area_m2, params)
        except CapacityParamError as exc:
            raise HTTPException(422, {"field": exc.field_name, "message": str(exc)})
        return report.to_dict()

    if config.static_dir is not None and Path(config.static_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.static_dir, html=True),
                  name="ui")

    return app


def serve() -> None:
    """Console entry point: run the service under uvicorn."""
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(
        description="Serve the walkable-area and carrying-capacity API")
    parser.add_argument("--config", help="YAML config file (WALKCAP_* env vars override)")
    parser.add_argument("--host")
    parser.add_argument("--port", type=int)
    args = parser.parse_args()
    config = ServiceConfig.load(args.config)
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    uvicorn.run(create_app(config), host=config.host, port=config.port)
