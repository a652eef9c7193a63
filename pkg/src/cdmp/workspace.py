"""Persistent scene model with canonical, bit-exact file serialization.

A workspace is an immutable value holding everything a teaching session
produces: raw demonstrations, constraint regions, scene objects, keypoints,
and fitted skill chains.  Mutation helpers return new values, so callers
get cheap undo and safe sharing for free.

File format: a single JSON document (extension ``.cdmpws.json``) with
``schema_version`` first.  Serialization is canonical — collections are
emitted sorted by id, keys in fixed order, floats with 17 significant
digits — so saving the same value always yields byte-identical files and
every float round-trips exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .common import check_identifier, format_float
from .dmp import (
    BasisSet,
    CanonicalSystem,
    Demonstration,
    Dmp,
    DmpDim,
    FitOptions,
    Gains,
    OrientationTrack,
)
from .errors import (
    DanglingReferenceError,
    DuplicateIdError,
    InvalidGeometryError,
    MalformedFileError,
    NotFoundError,
    UnknownSchemaVersionError,
)
from .geometry import Box, ConstraintRegion, Pose, Sphere, UnitQuat
from .skills import Keypoint, SceneObject, SkillChain, SkillSegment, frame_object_id, validate_keypoints
from .solver import Cdmp, SolveOptions, SolveReport

SCHEMA_VERSION = 1
WORKSPACE_SUFFIX = ".cdmpws.json"


@dataclass(frozen=True)
class DefaultParams:
    fit: FitOptions = field(default_factory=FitOptions)
    solve: SolveOptions = field(default_factory=SolveOptions)


@dataclass(frozen=True, eq=False)
class Workspace:
    id: str
    demonstrations: dict[str, Demonstration] = field(default_factory=dict)
    constraints: tuple[ConstraintRegion, ...] = ()
    objects: dict[str, SceneObject] = field(default_factory=dict)
    keypoints: dict[str, tuple[Keypoint, ...]] = field(default_factory=dict)
    chains: dict[str, SkillChain] = field(default_factory=dict)
    default_params: DefaultParams = field(default_factory=DefaultParams)

    def __post_init__(self) -> None:
        check_identifier(self.id, "workspace id")
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(
            self,
            "keypoints",
            {k: tuple(v) for k, v in self.keypoints.items()},
        )
        validate_workspace(self)

    # Value equality: structural comparison of the serialized form covers
    # every nested array exactly and keeps this class free of bespoke logic.
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Workspace):
            return NotImplemented
        return workspace_to_doc(self) == workspace_to_doc(other)

    __hash__ = None  # type: ignore[assignment]

    # -- queries ----------------------------------------------------------

    def demonstration(self, demo_id: str) -> Demonstration:
        try:
            return self.demonstrations[demo_id]
        except KeyError:
            raise NotFoundError(f"no demonstration {demo_id!r}") from None

    def chain(self, chain_id: str) -> SkillChain:
        try:
            return self.chains[chain_id]
        except KeyError:
            raise NotFoundError(f"no chain {chain_id!r}") from None

    def object(self, object_id: str) -> SceneObject:
        try:
            return self.objects[object_id]
        except KeyError:
            raise NotFoundError(f"no object {object_id!r}") from None

    # -- mutations (each returns a new value) ------------------------------

    def add_demonstration(self, demo: Demonstration, update: bool = False) -> "Workspace":
        if not update and demo.id in self.demonstrations:
            raise DuplicateIdError(f"demonstration {demo.id!r} already exists")
        demos = dict(self.demonstrations)
        demos[demo.id] = demo
        return replace(self, demonstrations=demos)

    def remove_demonstration(
        self, demo_id: str, cascade: bool = False
    ) -> tuple["Workspace", list[str]]:
        if demo_id not in self.demonstrations:
            raise NotFoundError(f"no demonstration {demo_id!r}")
        removed = [f"demonstration:{demo_id}"]
        kps = dict(self.keypoints)
        if demo_id in kps:
            if not cascade:
                raise DanglingReferenceError(
                    f"demonstration {demo_id!r} has keypoints; remove with cascade"
                )
            del kps[demo_id]
            removed.append(f"keypoints:{demo_id}")
        demos = dict(self.demonstrations)
        del demos[demo_id]
        return replace(self, demonstrations=demos, keypoints=kps), removed

    def upsert_constraint(self, region: ConstraintRegion) -> "Workspace":
        regions = list(self.constraints)
        for i, existing in enumerate(regions):
            if existing.id == region.id:
                regions[i] = region
                return replace(self, constraints=tuple(regions))
        regions.append(region)
        return replace(self, constraints=tuple(regions))

    def remove_constraint(self, region_id: str) -> tuple["Workspace", list[str]]:
        regions = [r for r in self.constraints if r.id != region_id]
        if len(regions) == len(self.constraints):
            raise NotFoundError(f"no constraint {region_id!r}")
        return replace(self, constraints=tuple(regions)), [f"constraint:{region_id}"]

    def upsert_object(self, obj: SceneObject) -> "Workspace":
        objects = dict(self.objects)
        objects[obj.id] = obj
        return replace(self, objects=objects)

    def remove_object(
        self, object_id: str, cascade: bool = False
    ) -> tuple["Workspace", list[str]]:
        if object_id not in self.objects:
            raise NotFoundError(f"no object {object_id!r}")
        dependents = [
            chain.id
            for chain in self.chains.values()
            if any(frame_object_id(s.frame) == object_id for s in chain.segments)
        ]
        removed = [f"object:{object_id}"]
        chains = dict(self.chains)
        if dependents:
            if not cascade:
                raise DanglingReferenceError(
                    f"object {object_id!r} is referenced by chain(s) "
                    f"{sorted(dependents)}; remove with cascade"
                )
            for cid in dependents:
                del chains[cid]
                removed.append(f"chain:{cid}")
        objects = dict(self.objects)
        del objects[object_id]
        return replace(self, objects=objects, chains=chains), removed

    def set_keypoints(self, demo_id: str, keypoints) -> "Workspace":
        demo = self.demonstration(demo_id)
        kps = tuple(validate_keypoints(demo, keypoints))
        mapping = dict(self.keypoints)
        if kps:
            mapping[demo_id] = kps
        else:
            mapping.pop(demo_id, None)
        return replace(self, keypoints=mapping)

    def upsert_chain(self, chain: SkillChain) -> "Workspace":
        chains = dict(self.chains)
        chains[chain.id] = chain
        return replace(self, chains=chains)

    def remove_chain(self, chain_id: str) -> tuple["Workspace", list[str]]:
        if chain_id not in self.chains:
            raise NotFoundError(f"no chain {chain_id!r}")
        chains = dict(self.chains)
        del chains[chain_id]
        return replace(self, chains=chains), [f"chain:{chain_id}"]


def validate_workspace(ws: Workspace) -> None:
    """Check referential integrity; raises naming the offending id."""
    seen: set[str] = set()
    for region in ws.constraints:
        if region.id in seen:
            raise DuplicateIdError(f"duplicate constraint id {region.id!r}")
        seen.add(region.id)
    for key, demo in ws.demonstrations.items():
        if key != demo.id:
            raise InvalidGeometryError(
                f"demonstration key {key!r} does not match id {demo.id!r}"
            )
    for key, obj in ws.objects.items():
        if key != obj.id:
            raise InvalidGeometryError(f"object key {key!r} does not match id {obj.id!r}")
    for key, chain in ws.chains.items():
        if key != chain.id:
            raise InvalidGeometryError(f"chain key {key!r} does not match id {chain.id!r}")
    for demo_id, kps in ws.keypoints.items():
        if demo_id not in ws.demonstrations:
            raise DanglingReferenceError(
                f"keypoints reference unknown demonstration {demo_id!r}"
            )
        validate_keypoints(ws.demonstrations[demo_id], kps)
    for chain in ws.chains.values():
        for seg in chain.segments:
            obj_id = frame_object_id(seg.frame)
            if obj_id is not None and obj_id not in ws.objects:
                raise DanglingReferenceError(
                    f"chain {chain.id!r} references unknown object {obj_id!r}"
                )


# ---------------------------------------------------------------------------
# document building (python values -> plain JSON-ready structures)


def vec_doc(arr) -> list[float]:
    return [float(v) for v in np.asarray(arr).ravel()]


def quat_doc(q: UnitQuat) -> list[float]:
    return [q.w, q.x, q.y, q.z]


def pose_doc(p: Pose) -> dict:
    return {"rotation": quat_doc(p.rotation), "translation": vec_doc(p.translation)}


def pose_from_doc(doc) -> Pose:
    rot = doc["rotation"]
    return Pose(UnitQuat(rot[0], rot[1], rot[2], rot[3]), doc["translation"])


def region_doc(region: ConstraintRegion) -> dict:
    if isinstance(region.shape, Sphere):
        return {
            "id": region.id,
            "type": "sphere",
            "margin": region.margin,
            "center": vec_doc(region.shape.center),
            "radius": region.shape.radius,
        }
    return {
        "id": region.id,
        "type": "box",
        "margin": region.margin,
        "pose": pose_doc(region.shape.pose),
        "half_extents": vec_doc(region.shape.half_extents),
    }


def region_from_doc(doc) -> ConstraintRegion:
    kind = doc.get("type")
    if kind == "sphere":
        shape: Sphere | Box = Sphere(doc["center"], float(doc["radius"]))
    elif kind == "box":
        shape = Box(pose_from_doc(doc["pose"]), doc["half_extents"])
    else:
        raise MalformedFileError(f"unknown constraint type {kind!r}")
    return ConstraintRegion(doc["id"], shape, float(doc["margin"]))


def demo_doc(demo: Demonstration) -> dict:
    if demo.orientations is None:
        samples = [
            [float(t), float(p[0]), float(p[1]), float(p[2])]
            for t, p in zip(demo.times, demo.positions)
        ]
    else:
        samples = [
            [float(t), float(p[0]), float(p[1]), float(p[2]),
             float(q[0]), float(q[1]), float(q[2]), float(q[3])]
            for t, p, q in zip(demo.times, demo.positions, demo.orientations)
        ]
    return {"id": demo.id, "frame": demo.frame, "samples": samples}


def demo_from_doc(doc) -> Demonstration:
    samples = doc["samples"]
    if not samples:
        raise MalformedFileError("demonstration has no samples")
    widths = {len(row) for row in samples}
    if widths == {4}:
        orientations = None
    elif widths == {8}:
        orientations = [row[4:8] for row in samples]
    else:
        raise MalformedFileError(
            "demonstration rows must all be [t,x,y,z] or [t,x,y,z,qw,qx,qy,qz]"
        )
    times = [row[0] for row in samples]
    positions = [row[1:4] for row in samples]
    return Demonstration(doc["id"], doc["frame"], times, positions, orientations)


def object_doc(obj: SceneObject) -> dict:
    return {
        "id": obj.id,
        "pose": pose_doc(obj.pose),
        "display_extent": vec_doc(obj.display_extent),
    }


def object_from_doc(doc) -> SceneObject:
    return SceneObject(doc["id"], pose_from_doc(doc["pose"]), doc["display_extent"])


def keypoint_doc(kp: Keypoint) -> dict:
    return {"time": kp.time, "label": kp.label}


def dmp_doc(dmp: Dmp) -> dict:
    doc = {
        "canonical": {"alpha_s": dmp.canonical.alpha_s, "tau": dmp.canonical.tau},
        "basis": {
            "centers": vec_doc(dmp.basis.centers),
            "widths": vec_doc(dmp.basis.widths),
        },
        "dims": [
            {
                "alpha_z": d.alpha_z,
                "beta_z": d.beta_z,
                "y0": d.y0,
                "g": d.g,
                "z0": d.z0,
                "w": vec_doc(d.w),
            }
            for d in dmp.dims
        ],
        "duration": dmp.duration,
        "gate_forcing": dmp.gate_forcing,
        "orientation_track": None,
    }
    if dmp.orientation_track is not None:
        doc["orientation_track"] = {
            "fractions": vec_doc(dmp.orientation_track.fractions),
            "quats": [vec_doc(q) for q in dmp.orientation_track.quats],
        }
    return doc


def dmp_from_doc(doc) -> Dmp:
    dims = tuple(
        DmpDim(
            alpha_z=float(d["alpha_z"]),
            beta_z=float(d["beta_z"]),
            w=d["w"],
            y0=float(d["y0"]),
            g=float(d["g"]),
            z0=float(d["z0"]),
        )
        for d in doc["dims"]
    )
    track = None
    if doc.get("orientation_track") is not None:
        tdoc = doc["orientation_track"]
        track = OrientationTrack(tdoc["fractions"], tdoc["quats"])
    return Dmp(
        canonical=CanonicalSystem(
            float(doc["canonical"]["alpha_s"]), float(doc["canonical"]["tau"])
        ),
        basis=BasisSet(doc["basis"]["centers"], doc["basis"]["widths"]),
        dims=dims,  # type: ignore[arg-type]
        duration=float(doc["duration"]),
        gate_forcing=bool(doc["gate_forcing"]),
        orientation_track=track,
    )


def report_doc(report: SolveReport) -> dict:
    return {
        "converged": report.converged,
        "iterations": report.iterations,
        "objective": report.objective,
        "max_violation": report.max_violation,
        "fine_check_violation": report.fine_check_violation,
        # wall-clock time is the one nondeterministic field; persisting it would
        # make otherwise identical artifacts differ between runs
        "wall_time": 0.0,
        "notes": list(report.notes),
        "violation_history": list(report.violation_history),
    }


def report_from_doc(doc) -> SolveReport:
    return SolveReport(
        converged=bool(doc["converged"]),
        iterations=int(doc["iterations"]),
        objective=float(doc["objective"]),
        max_violation=float(doc["max_violation"]),
        fine_check_violation=float(doc["fine_check_violation"]),
        wall_time=float(doc["wall_time"]),
        notes=tuple(doc.get("notes", [])),
        violation_history=tuple(doc.get("violation_history", [])),
    )


def cdmp_doc(cdmp: Cdmp) -> dict:
    return {
        "dmp": dmp_doc(cdmp.dmp),
        "zeta": [vec_doc(row) for row in cdmp.zeta],
        "constraints": [region_doc(r) for r in cdmp.constraints],
        "report": report_doc(cdmp.report),
        "dt": cdmp.dt,
        "horizon": cdmp.horizon,
    }


def cdmp_from_doc(doc) -> Cdmp:
    return Cdmp(
        dmp=dmp_from_doc(doc["dmp"]),
        zeta=doc["zeta"],
        constraints=tuple(region_from_doc(r) for r in doc["constraints"]),
        report=report_from_doc(doc["report"]),
        dt=float(doc["dt"]),
        horizon=float(doc["horizon"]),
    )


def chain_doc(chain: SkillChain) -> dict:
    return {
        "id": chain.id,
        "segments": [
            {
                "frame": seg.frame,
                "start_in_frame": vec_doc(seg.start_in_frame),
                "goal_in_frame": vec_doc(seg.goal_in_frame),
                "cdmp": cdmp_doc(seg.cdmp),
            }
            for seg in chain.segments
        ],
    }


def chain_from_doc(doc) -> SkillChain:
    segments = tuple(
        SkillSegment(
            cdmp=cdmp_from_doc(s["cdmp"]),
            frame=s["frame"],
            start_in_frame=s["start_in_frame"],
            goal_in_frame=s["goal_in_frame"],
        )
        for s in doc["segments"]
    )
    return SkillChain(doc["id"], segments)


def fit_options_doc(opts: FitOptions) -> dict:
    return {
        "n_basis": opts.n_basis,
        "gains": {
            "alpha_z": opts.gains.alpha_z,
            "beta_z": opts.gains.beta_z,
            "alpha_s": opts.gains.alpha_s,
        },
        "gate_forcing": opts.gate_forcing,
        "smooth_window": opts.smooth_window,
    }


def fit_options_from_doc(doc) -> FitOptions:
    gains = doc.get("gains", {})
    return FitOptions(
        n_basis=int(doc.get("n_basis", 30)),
        gains=Gains(
            alpha_z=float(gains.get("alpha_z", 25.0)),
            beta_z=float(gains.get("beta_z", 6.25)),
            alpha_s=float(gains.get("alpha_s", 4.6052)),
        ),
        gate_forcing=bool(doc.get("gate_forcing", True)),
        smooth_window=int(doc.get("smooth_window", 5)),
    )


def solve_options_doc(opts: SolveOptions) -> dict:
    return {
        "dt": opts.dt,
        "horizon": opts.horizon,
        "collocation_dt": opts.collocation_dt,
        "max_outer_iterations": opts.max_outer_iterations,
        "max_inner_iterations": opts.max_inner_iterations,
        "penalty_init": opts.penalty_init,
        "penalty_growth": opts.penalty_growth,
        "feasibility_tol": opts.feasibility_tol,
        "gradient_tol": opts.gradient_tol,
        "time_budget": opts.time_budget,
    }


def solve_options_from_doc(doc) -> SolveOptions:
    def opt_float(key):
        value = doc.get(key)
        return None if value is None else float(value)

    return SolveOptions(
        dt=float(doc.get("dt", 0.01)),
        horizon=opt_float("horizon"),
        collocation_dt=opt_float("collocation_dt"),
        max_outer_iterations=int(doc.get("max_outer_iterations", 30)),
        max_inner_iterations=int(doc.get("max_inner_iterations", 200)),
        penalty_init=float(doc.get("penalty_init", 10.0)),
        penalty_growth=float(doc.get("penalty_growth", 5.0)),
        feasibility_tol=float(doc.get("feasibility_tol", 1e-4)),
        gradient_tol=float(doc.get("gradient_tol", 1e-6)),
        time_budget=float(doc.get("time_budget", 10.0)),
    )


def workspace_to_doc(ws: Workspace) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "id": ws.id,
        "demonstrations": {
            k: demo_doc(ws.demonstrations[k]) for k in sorted(ws.demonstrations)
        },
        "constraints": [region_doc(r) for r in ws.constraints],
        "objects": {k: object_doc(ws.objects[k]) for k in sorted(ws.objects)},
        "keypoints": {
            k: [keypoint_doc(kp) for kp in ws.keypoints[k]] for k in sorted(ws.keypoints)
        },
        "chains": {k: chain_doc(ws.chains[k]) for k in sorted(ws.chains)},
        "default_params": {
            "fit": fit_options_doc(ws.default_params.fit),
            "solve": solve_options_doc(ws.default_params.solve),
        },
    }


def workspace_from_doc(doc) -> Workspace:
    if not isinstance(doc, dict):
        raise MalformedFileError("workspace document must be a JSON object")
    version = doc.get("schema_version")
    if not isinstance(version, int):
        raise MalformedFileError("missing integer schema_version")
    if version > SCHEMA_VERSION:
        raise UnknownSchemaVersionError(
            f"file has schema_version {version}; this build reads <= {SCHEMA_VERSION}"
        )
    try:
        params = doc.get("default_params", {})
        ws = Workspace(
            id=doc["id"],
            demonstrations={
                k: demo_from_doc(v) for k, v in doc.get("demonstrations", {}).items()
            },
            constraints=tuple(region_from_doc(r) for r in doc.get("constraints", [])),
            objects={k: object_from_doc(v) for k, v in doc.get("objects", {}).items()},
            keypoints={
                k: tuple(Keypoint(float(e["time"]), e.get("label", "")) for e in v)
                for k, v in doc.get("keypoints", {}).items()
            },
            chains={k: chain_from_doc(v) for k, v in doc.get("chains", {}).items()},
            default_params=DefaultParams(
                fit=fit_options_from_doc(params.get("fit", {})),
                solve=solve_options_from_doc(params.get("solve", {})),
            ),
        )
    except (KeyError, TypeError, IndexError) as err:
        raise MalformedFileError(f"workspace document is malformed: {err!r}") from err
    return ws


# ---------------------------------------------------------------------------
# canonical JSON text


def dumps_canonical(doc) -> str:
    """Serialize a document with stable layout and 17-digit floats.

    Lists whose items are all scalars are emitted on one line; nested
    lists/objects get one item per line.  Key order follows insertion
    order, which the doc builders above fix canonically.
    """
    return _emit(doc, 0) + "\n"


def _emit(value, indent: int) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=True)
    pad = " " * (indent + 2)
    close_pad = " " * indent
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(_is_scalar(item) for item in value):
            return "[" + ", ".join(_emit(item, 0) for item in value) + "]"
        rows = [pad + _emit(item, indent + 2) for item in value]
        return "[\n" + ",\n".join(rows) + "\n" + close_pad + "]"
    if isinstance(value, dict):
        if not value:
            return "{}"
        rows = []
        for key, item in value.items():
            if not isinstance(key, str):
                raise MalformedFileError(f"document keys must be strings, got {key!r}")
            rows.append(pad + json.dumps(key, ensure_ascii=True) + ": " + _emit(item, indent + 2))
        return "{\n" + ",\n".join(rows) + "\n" + close_pad + "}"
    raise MalformedFileError(f"cannot serialize value of type {type(value).__name__}")


def _is_scalar(value) -> bool:
    return value is None or isinstance(
        value, (bool, int, float, str, np.integer, np.floating)
    )


def save_workspace(ws: Workspace, path) -> None:
    Path(path).write_text(dumps_canonical(workspace_to_doc(ws)), encoding="utf-8")


def load_workspace(path) -> Workspace:
    p = Path(path)
    if not p.exists():
        raise NotFoundError(f"workspace file {p} does not exist")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise MalformedFileError(f"{p} is not valid JSON: {err}") from err
    return workspace_from_doc(doc)
