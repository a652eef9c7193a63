"""HTTP/JSON facade over workspace and pipeline operations.

State lives in an in-process registry keyed by workspace id; every mutation
bumps a monotonic revision and (when a data directory is configured)
rewrites the canonical workspace file.  All computation goes through
``pipeline`` so responses match CLI output bit for bit.
"""

from __future__ import annotations

import dataclasses
import os
import threading
from pathlib import Path

from fastapi import Body, FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response

from . import pipeline
from .dmp import Trajectory
from .errors import CdmpError, ConflictError, DuplicateIdError, NotFoundError
from .solver import SolveOptions
from .workspace import (
    WORKSPACE_SUFFIX,
    Workspace,
    chain_doc,
    dmp_doc,
    dumps_canonical,
    fit_options_doc,
    fit_options_from_doc,
    load_workspace,
    pose_from_doc,
    report_doc,
    workspace_from_doc,
    workspace_to_doc,
)

_STATUS_BY_CODE = {
    "not_found": 404,
    "conflict": 409,
    "duplicate_id": 409,
    "time_budget": 408,
    "bad_request": 400,
}

_SOLVE_FIELDS = (
    "dt",
    "horizon",
    "collocation_dt",
    "max_outer_iterations",
    "max_inner_iterations",
    "penalty_init",
    "penalty_growth",
    "feasibility_tol",
    "gradient_tol",
    "time_budget",
)


class BadRequestError(CdmpError):
    code = "bad_request"


@dataclasses.dataclass
class _Entry:
    ws: Workspace
    revision: int
    lock: threading.Lock = dataclasses.field(default_factory=threading.Lock)


def _traj_doc(traj: Trajectory) -> dict:
    return {
        "dt": traj.dt,
        "tau": traj.tau,
        "frame": traj.frame,
        "times": traj.times.tolist(),
        "positions": traj.positions.tolist(),
        "velocities": traj.velocities().tolist(),
    }


def _annotated_doc(result: pipeline.RolloutResult) -> dict:
    doc = _traj_doc(result.trajectory)
    if result.constraints:
        doc["min_sdf"] = result.min_sdf.tolist()
        doc["violating_region"] = list(result.violating)
    return doc


def _require(payload: dict, key: str):
    value = payload.get(key)
    if value is None:
        raise BadRequestError(f"missing required field {key!r}")
    return value


def _merge_solve(base: SolveOptions, body: dict | None, budget_default: float | None) -> SolveOptions:
    body = body or {}
    unknown = set(body) - set(_SOLVE_FIELDS)
    if unknown:
        raise BadRequestError(f"unknown solve option(s): {sorted(unknown)}")
    kwargs = {k: body[k] for k in _SOLVE_FIELDS if body.get(k) is not None}
    opts = dataclasses.replace(base, **kwargs) if kwargs else base
    if "time_budget" not in kwargs and budget_default is not None:
        opts = dataclasses.replace(opts, time_budget=float(budget_default))
    return opts


def create_app(data_dir: str | Path | None = None, budget_secs: float | None = None) -> FastAPI:
    app = FastAPI(title="cdmp service", docs_url=None, redoc_url=None)
    # the browser workbench is served from a separate origin
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    registry: dict[str, _Entry] = {}
    registry_lock = threading.Lock()
    store = Path(data_dir) if data_dir is not None else None

    if store is not None:
        store.mkdir(parents=True, exist_ok=True)
        for path in sorted(store.glob(f"*{WORKSPACE_SUFFIX}")):
            ws = load_workspace(path)
            registry[ws.id] = _Entry(ws=ws, revision=1)

    def persist(ws: Workspace) -> None:
        if store is None:
            return
        path = store / f"{ws.id}{WORKSPACE_SUFFIX}"
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(dumps_canonical(workspace_to_doc(ws)), encoding="utf-8")
        os.replace(tmp, path)

    def entry_for(wid: str) -> _Entry:
        with registry_lock:
            entry = registry.get(wid)
        if entry is None:
            raise NotFoundError(f"no workspace {wid!r}")
        return entry

    def commit(entry: _Entry, expected_revision, mutate) -> tuple[Workspace, int]:
        """Apply ``mutate(ws) -> ws`` under the workspace lock with a
        revision check-and-set."""
        with entry.lock:
            if expected_revision is not None and int(expected_revision) != entry.revision:
                raise ConflictError(
                    f"revision {expected_revision} is stale (current {entry.revision})"
                )
            new_ws = mutate(entry.ws)
            entry.ws = new_ws
            entry.revision += 1
            persist(new_ws)
            return new_ws, entry.revision

    @app.exception_handler(CdmpError)
    async def _domain_error(_req: Request, exc: CdmpError):
        status = _STATUS_BY_CODE.get(exc.code, 422)
        return JSONResponse(
            status_code=status, content={"code": exc.code, "message": str(exc)}
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={
                "code": "bad_request",
                "message": "request payload failed validation",
                "details": exc.errors(),
            },
        )

    @app.post("/workspaces")
    def create_workspace(payload: dict = Body(...)):
        if "workspace" in payload:
            ws = workspace_from_doc(payload["workspace"])
        elif "id" in payload:
            ws = Workspace(id=str(payload["id"]))
        else:
            raise BadRequestError("body needs either 'id' or 'workspace'")
        with registry_lock:
            if ws.id in registry:
                raise DuplicateIdError(f"workspace {ws.id!r} already exists")
            registry[ws.id] = _Entry(ws=ws, revision=1)
        persist(ws)
        return {"id": ws.id, "revision": 1}

    @app.get("/workspaces/{wid}")
    def get_workspace(wid: str):
        entry = entry_for(wid)
        with entry.lock:
            return {"revision": entry.revision, "workspace": workspace_to_doc(entry.ws)}

    @app.put("/workspaces/{wid}")
    def put_workspace(wid: str, payload: dict = Body(...)):
        entry = entry_for(wid)
        doc = _require(payload, "workspace")
        revision = _require(payload, "revision")
        ws = workspace_from_doc(doc)
        if ws.id != wid:
            raise BadRequestError(f"workspace id {ws.id!r} does not match URL {wid!r}")
        _, new_rev = commit(entry, revision, lambda _old: ws)
        return {"revision": new_rev}

    def _collection_routes(name: str):
        @app.get(f"/workspaces/{{wid}}/{name}", name=f"get_{name}")
        def get_collection(wid: str):
            entry = entry_for(wid)
            with entry.lock:
                doc = workspace_to_doc(entry.ws)
                return {"revision": entry.revision, name: doc[name]}

        @app.put(f"/workspaces/{{wid}}/{name}", name=f"put_{name}")
        def put_collection(wid: str, payload: dict = Body(...)):
            entry = entry_for(wid)
            revision = _require(payload, "revision")
            if name not in payload:
                raise BadRequestError(f"missing required field {name!r}")

            def mutate(ws: Workspace) -> Workspace:
                doc = workspace_to_doc(ws)
                doc[name] = payload[name]
                return workspace_from_doc(doc)

            _, new_rev = commit(entry, revision, mutate)
            return {"revision": new_rev}

    for _name in ("demonstrations", "constraints", "objects", "keypoints"):
        _collection_routes(_name)

    def _fit_doc_defaults(ws: Workspace) -> dict:
        return fit_options_doc(ws.default_params.fit)

    @app.post("/workspaces/{wid}/fit")
    def fit(wid: str, payload: dict = Body(...)):
        entry = entry_for(wid)
        demo_id = str(_require(payload, "demo_id"))
        with entry.lock:
            ws, revision = entry.ws, entry.revision
        overrides = {k: v for k, v in payload.items() if k not in ("demo_id", "revision")}
        unknown = set(overrides) - {"n_basis", "gains", "gate_forcing", "smooth_window"}
        if unknown:
            raise BadRequestError(f"unknown fit option(s): {sorted(unknown)}")
        opts = fit_options_from_doc({**_fit_doc_defaults(ws), **overrides})
        summary = pipeline.fit_summary(ws, demo_id, fit_opts=opts)
        return {
            "revision": revision,
            "demo_id": demo_id,
            "rmse": summary.rmse,
            "dmp": dmp_doc(summary.dmp),
            "rollout": _traj_doc(summary.trajectory),
        }

    @app.post("/workspaces/{wid}/solve")
    def solve(wid: str, payload: dict = Body(...)):
        entry = entry_for(wid)
        demo_id = str(_require(payload, "demo_id"))
        revision = payload.get("revision")
        with entry.lock:
            ws = entry.ws
            read_revision = entry.revision
        if revision is not None and int(revision) != read_revision:
            raise ConflictError(f"revision {revision} is stale (current {read_revision})")
        fit_body = payload.get("fit")
        fit_opts = None
        if fit_body is not None:
            fit_opts = fit_options_from_doc(
                {**_fit_doc_defaults(ws), **fit_body}
            )
        solve_opts = _merge_solve(ws.default_params.solve, payload.get("solve"), budget_secs)
        _, chain = pipeline.solve_demo(
            ws,
            demo_id,
            use_keypoints=bool(payload.get("segment", False)),
            chain_id=payload.get("chain_id"),
            fit_opts=fit_opts,
            solve_opts=solve_opts,
        )
        committed, new_rev = commit(
            entry,
            read_revision if revision is not None else None,
            lambda current: current.upsert_chain(chain),
        )
        result = pipeline.what_if_rollout(committed, chain.id)
        return {
            "revision": new_rev,
            "chain_id": chain.id,
            "chain": chain_doc(chain),
            "reports": [report_doc(seg.cdmp.report) for seg in chain.segments],
            "rollout": _annotated_doc(result),
        }

    @app.post("/workspaces/{wid}/rollout")
    def what_if(wid: str, payload: dict = Body(...)):
        entry = entry_for(wid)
        chain_id = str(_require(payload, "chain_id"))
        with entry.lock:
            ws, revision = entry.ws, entry.revision
        try:
            poses = {
                str(obj_id): pose_from_doc(doc)
                for obj_id, doc in (payload.get("object_poses") or {}).items()
            }
        except (KeyError, TypeError, ValueError, AttributeError) as err:
            raise BadRequestError(
                f"object_poses values must be {{rotation, translation}} docs: {err!r}"
            )
        overrides_doc = payload.get("goal_overrides") or {}
        try:
            overrides = {int(k): v for k, v in overrides_doc.items()}
        except (TypeError, ValueError) as err:
            raise BadRequestError(f"goal_overrides keys must be segment indices: {err}")
        result = pipeline.what_if_rollout(
            ws,
            chain_id,
            start=payload.get("start"),
            object_poses=poses or None,
            goal_overrides=overrides or None,
            constraints_follow_object=tuple(payload.get("constraints_follow_object") or ()),
            dt=payload.get("dt"),
        )
        return {"revision": revision, "rollout": _annotated_doc(result)}

    @app.get("/workspaces/{wid}/export/{chain_id}.csv")
    def export_csv(wid: str, chain_id: str):
        entry = entry_for(wid)
        with entry.lock:
            ws = entry.ws
        text = pipeline.chain_csv(ws, chain_id)
        return Response(content=text, media_type="text/csv")

    return app


def run_service(
    listen: str = "127.0.0.1:8823",
    budget_secs: float | None = None,
    data_dir: str | None = None,
) -> None:
    """Blocking uvicorn runner used by the CLI ``serve`` subcommand."""
    import uvicorn

    host, _, port_text = listen.rpartition(":")
    app = create_app(data_dir=data_dir, budget_secs=budget_secs)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port_text), log_level="warning")
