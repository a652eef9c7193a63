"""Batch front end: synthesize demos, fit, solve, roll out, verify, serve.

Every subcommand delegates to ``pipeline`` so its numbers match the HTTP
service exactly.  The workspace file is the single source of truth; any
in-place mutation first writes a ``.bak`` sibling.
"""

from __future__ import annotations

import argparse
import os
import shutil
import sys
from pathlib import Path

import numpy as np

from . import pipeline, synth
from .common import format_float
from .errors import CdmpError
from .geometry import Pose, UnitQuat
from .skills import Keypoint, SceneObject
from .solver import SolveOptions
from .synth import SYNTH_KINDS
from .workspace import (
    Workspace,
    load_workspace,
    save_workspace,
)

DEFAULT_LISTEN = "127.0.0.1:8823"


def _load(path: str) -> Workspace:
    return load_workspace(Path(path))


def _write_with_backup(ws: Workspace, path: str) -> None:
    target = Path(path)
    if target.exists():
        shutil.copy2(target, target.with_name(target.name + ".bak"))
    save_workspace(ws, target)


def _cmd_demo_synth(args) -> int:
    target = Path(args.out)
    if target.exists():
        ws = _load(args.out)
    else:
        stem = target.name.split(".", 1)[0] or "workspace"
        ws = Workspace(id=stem)
    demo = synth.make_demo(args.kind, duration=args.duration, dt=args.dt)
    ws = ws.add_demonstration(demo, update=True)
    if args.kind == "peg-insert":
        hole_center = demo.positions[-1]
        ws = ws.upsert_object(
            SceneObject(
                "hole",
                Pose(UnitQuat.identity(), np.array(hole_center)),
                display_extent=(0.05, 0.05, 0.02),
            )
        )
        corner = synth.peg_corner_time(demo.duration)
        ws = ws.set_keypoints(demo.id, [Keypoint(corner, "corner")])
    _write_with_backup(ws, args.out)
    print(f"demo={demo.id} kind={args.kind} samples={len(demo.times)} -> {args.out}")
    return 0


def _cmd_fit(args) -> int:
    ws = _load(args.workspace)
    opts = pipeline.merge_fit_options(
        ws.default_params.fit,
        n_basis=args.n,
        gate_forcing=False if args.no_gate else None,
        smooth_window=args.smooth_window,
    )
    summary = pipeline.fit_summary(ws, args.demo, fit_opts=opts)
    gate = "off" if not opts.gate_forcing else "on"
    print(
        f"demo={args.demo} n={opts.n_basis} gate={gate} "
        f"rmse_m={format_float(summary.rmse)}"
    )
    return 0


def _solve_options_from_args(ws: Workspace, args) -> SolveOptions:
    return pipeline.merge_solve_options(
        ws.default_params.solve,
        dt=args.dt,
        horizon=args.horizon,
        collocation_dt=args.collocation_dt,
        max_outer_iterations=args.max_outer,
        max_inner_iterations=args.max_inner,
        penalty_init=args.penalty_init,
        penalty_growth=args.penalty_growth,
        feasibility_tol=args.feasibility_tol,
        gradient_tol=args.gradient_tol,
        time_budget=args.time_budget,
    )


def _cmd_solve(args) -> int:
    ws = _load(args.workspace)
    fit_opts = pipeline.merge_fit_options(
        ws.default_params.fit,
        n_basis=args.n,
        gate_forcing=False if args.no_gate else None,
    )
    solve_opts = _solve_options_from_args(ws, args)
    ws, chain = pipeline.solve_demo(
        ws,
        args.demo,
        use_keypoints=args.segment_keypoints,
        chain_id=args.chain,
        fit_opts=fit_opts,
        solve_opts=solve_opts,
    )
    _write_with_backup(ws, args.workspace)
    for i, seg in enumerate(chain.segments):
        rep = seg.cdmp.report
        print(
            f"segment={i} frame={seg.frame} converged={str(rep.converged).lower()} "
            f"iterations={rep.iterations} objective={format_float(rep.objective)} "
            f"max_violation={format_float(rep.max_violation)} "
            f"fine_check={format_float(rep.fine_check_violation)}"
        )
        for note in rep.notes:
            print(f"  note: {note}")
    print(f"chain={chain.id} segments={len(chain.segments)} -> {args.workspace}")
    return 0


def _cmd_rollout(args) -> int:
    ws = _load(args.workspace)
    object_poses = None
    if args.move_object is not None:
        obj_id = args.move_object[0]
        delta = np.array([float(v) for v in args.move_object[1:]])
        teach = ws.object(obj_id).pose
        object_poses = {obj_id: Pose(teach.rotation, teach.translation + delta)}
    follow = tuple(args.constraints_follow_object or ())
    text = pipeline.chain_csv(
        ws,
        args.chain,
        start=args.start,
        object_poses=object_poses,
        constraints_follow_object=follow,
        dt=args.dt,
    )
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"chain={args.chain} rows={len(text.splitlines()) - 1} -> {args.out}")
    return 0


def _cmd_verify(args) -> int:
    ws = _load(args.workspace)
    result = pipeline.verify_chain(ws, args.chain, args.fine_dt)
    if result.constraints:
        worst = max(0.0, -float(result.min_sdf.min()))
    else:
        worst = 0.0
    ok = worst <= args.tolerance
    print(
        f"chain={args.chain} fine_dt={format_float(args.fine_dt)} "
        f"violation_m={format_float(worst)} tolerance_m={format_float(args.tolerance)} "
        f"result={'pass' if ok else 'fail'}"
    )
    return 0 if ok else 1


def _cmd_serve(args) -> int:
    from .service import run_service

    listen = args.listen or os.environ.get("CDMP_LISTEN") or DEFAULT_LISTEN
    budget_env = os.environ.get("CDMP_BUDGET_SECS")
    budget = args.budget_secs if args.budget_secs is not None else (
        float(budget_env) if budget_env else None
    )
    data_dir = args.data_dir or os.environ.get("CDMP_DATA_DIR") or None
    run_service(listen=listen, budget_secs=budget, data_dir=data_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdmp",
        description="Teach-by-demonstration trajectories with obstacle-aware refinement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo-synth", help="write a synthetic demonstration workspace")
    p.add_argument("--kind", choices=SYNTH_KINDS, required=True)
    p.add_argument("--duration", type=float, default=2.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--out", required=True, metavar="FILE")
    p.set_defaults(func=_cmd_demo_synth)

    p = sub.add_parser("fit", help="fit a demonstration and print reproduction RMSE")
    p.add_argument("--workspace", required=True, metavar="FILE")
    p.add_argument("--demo", required=True, metavar="ID")
    p.add_argument("--n", type=int, default=None, help="basis function count")
    p.add_argument("--no-gate", action="store_true", help="disable phase-gated forcing")
    p.add_argument("--smooth-window", type=int, default=None)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("solve", help="fit + solve into a stored skill chain")
    p.add_argument("--workspace", required=True, metavar="FILE")
    p.add_argument("--demo", required=True, metavar="ID")
    p.add_argument("--chain", default=None, metavar="ID", help="chain id (default: demo id)")
    p.add_argument("--segment-keypoints", action="store_true",
                   help="split the demo at its stored keypoints")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--no-gate", action="store_true")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--collocation-dt", type=float, default=None)
    p.add_argument("--max-outer", type=int, default=None)
    p.add_argument("--max-inner", type=int, default=None)
    p.add_argument("--penalty-init", type=float, default=None)
    p.add_argument("--penalty-growth", type=float, default=None)
    p.add_argument("--feasibility-tol", type=float, default=None)
    p.add_argument("--gradient-tol", type=float, default=None)
    p.add_argument("--time-budget", type=float, default=None)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("rollout", help="what-if rollout of a stored chain to CSV")
    p.add_argument("--workspace", required=True, metavar="FILE")
    p.add_argument("--chain", required=True, metavar="ID")
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--move-object", nargs=4, metavar=("ID", "DX", "DY", "DZ"),
                   default=None, help="translate an object before rolling out")
    p.add_argument("--constraints-follow-object", action="append", metavar="ID",
                   help="drag constraint regions along with this object's move")
    p.add_argument("--start", nargs=3, type=float, default=None, metavar=("X", "Y", "Z"))
    p.add_argument("--dt", type=float, default=None)
    p.set_defaults(func=_cmd_rollout)

    p = sub.add_parser("verify", help="fine-grid safety check of a stored chain")
    p.add_argument("--workspace", required=True, metavar="FILE")
    p.add_argument("--chain", required=True, metavar="ID")
    p.add_argument("--fine-dt", type=float, default=0.001)
    p.add_argument("--tolerance", type=float, default=1e-4, metavar="METERS")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--listen", default=None, metavar="HOST:PORT")
    p.add_argument("--budget-secs", type=float, default=None)
    p.add_argument("--data-dir", default=None, metavar="DIR")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CdmpError as err:
        print(f"error[{err.code}]: {err}", file=sys.stderr)
        return 1
    except FileNotFoundError as err:
        print(f"error[not_found]: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
