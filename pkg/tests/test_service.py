"""HTTP facade: status codes, revision protocol, and CLI parity."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from cdmp import Workspace, save_workspace
from cdmp.cli import main as cli_main
from cdmp.service import create_app
from cdmp.workspace import WORKSPACE_SUFFIX, region_doc, workspace_to_doc
from cdmp.synth import line_demo

from conftest import sphere_at


def base_workspace():
    ws = Workspace(id="bench")
    ws = ws.add_demonstration(line_demo())
    return ws.upsert_constraint(sphere_at("ball", (0.5, 0.0, 0.0), 0.15, margin=0.02))


@pytest.fixture()
def client(tmp_path):
    app = create_app(data_dir=tmp_path / "store")
    with TestClient(app) as c:
        yield c


@pytest.fixture()
def seeded(client):
    doc = workspace_to_doc(base_workspace())
    resp = client.post("/workspaces", json={"workspace": doc})
    assert resp.status_code == 200
    assert resp.json() == {"id": "bench", "revision": 1}
    return client


# ---------------------------------------------------------------------------
# lifecycle and status codes


def test_create_then_read_round_trips(seeded):
    got = seeded.get("/workspaces/bench")
    assert got.status_code == 200
    body = got.json()
    assert body["revision"] == 1
    assert body["workspace"] == workspace_to_doc(base_workspace())
    again = seeded.get("/workspaces/bench")
    assert again.json() == body  # reads are idempotent


def test_create_duplicate_conflicts(seeded):
    resp = seeded.post("/workspaces", json={"id": "bench"})
    assert resp.status_code == 409
    assert resp.json()["code"] == "duplicate_id"


def test_missing_workspace_is_404(client):
    resp = client.get("/workspaces/ghost")
    assert resp.status_code == 404
    assert resp.json()["code"] == "not_found"


def test_cross_origin_browser_clients_are_allowed(seeded):
    # the workbench page is served from a different origin than the API
    preflight = seeded.options(
        "/workspaces/bench/solve",
        headers={
            "Origin": "http://127.0.0.1:8000",
            "Access-Control-Request-Method": "POST",
            "Access-Control-Request-Headers": "content-type",
        },
    )
    assert preflight.status_code == 200
    assert preflight.headers["access-control-allow-origin"] == "*"
    got = seeded.get("/workspaces/bench", headers={"Origin": "http://127.0.0.1:8000"})
    assert got.headers["access-control-allow-origin"] == "*"


def test_create_needs_id_or_document(client):
    resp = client.post("/workspaces", json={"something": 1})
    assert resp.status_code == 400
    assert resp.json()["code"] == "bad_request"


def test_non_object_body_is_rejected(client):
    resp = client.post("/workspaces", json=[1, 2, 3])
    assert resp.status_code == 400
    assert resp.json()["code"] == "bad_request"


def test_put_workspace_revision_check(seeded):
    doc = workspace_to_doc(base_workspace())
    ok = seeded.put("/workspaces/bench", json={"workspace": doc, "revision": 1})
    assert ok.status_code == 200
    assert ok.json() == {"revision": 2}
    stale = seeded.put("/workspaces/bench", json={"workspace": doc, "revision": 1})
    assert stale.status_code == 409
    assert stale.json()["code"] == "conflict"
    assert seeded.get("/workspaces/bench").json()["revision"] == 2


def test_put_workspace_id_must_match_url(seeded):
    doc = workspace_to_doc(Workspace(id="other"))
    resp = seeded.put("/workspaces/bench", json={"workspace": doc, "revision": 1})
    assert resp.status_code == 400


def test_collection_put_bumps_revision(seeded):
    wider = region_doc(sphere_at("ball", (0.5, 0.0, 0.0), 0.2, margin=0.02))
    resp = seeded.put(
        "/workspaces/bench/constraints",
        json={"revision": 1, "constraints": [wider]},
    )
    assert resp.status_code == 200
    assert resp.json() == {"revision": 2}
    got = seeded.get("/workspaces/bench/constraints")
    assert got.json()["revision"] == 2
    assert got.json()["constraints"] == [wider]


def test_collection_put_rejects_invalid_geometry(seeded):
    bad = {"id": "ball", "type": "sphere", "margin": 0.0, "center": [0, 0, 0], "radius": -1}
    resp = seeded.put(
        "/workspaces/bench/constraints", json={"revision": 1, "constraints": [bad]}
    )
    assert resp.status_code == 422
    assert resp.json()["code"] == "invalid_geometry"
    # the failed write must not consume the revision
    assert seeded.get("/workspaces/bench").json()["revision"] == 1


def test_fit_endpoint_reports_reproduction_error(seeded):
    resp = seeded.post("/workspaces/bench/fit", json={"demo_id": "line"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["revision"] == 1
    assert body["rmse"] < 0.02
    assert len(body["dmp"]["dims"]) == 3
    assert len(body["dmp"]["dims"][0]["w"]) == 30
    assert len(body["rollout"]["times"]) == 201


def test_fit_unknown_option_is_400(seeded):
    resp = seeded.post("/workspaces/bench/fit", json={"demo_id": "line", "bogus": 1})
    assert resp.status_code == 400
    assert "bogus" in resp.json()["message"]


def test_fit_unknown_demo_is_404(seeded):
    resp = seeded.post("/workspaces/bench/fit", json={"demo_id": "ghost"})
    assert resp.status_code == 404


def test_solve_rejects_unknown_options(seeded):
    resp = seeded.post(
        "/workspaces/bench/solve",
        json={"demo_id": "line", "solve": {"penalty_flavor": "mild"}},
    )
    assert resp.status_code == 400
    assert "penalty_flavor" in resp.json()["message"]


def test_solve_degenerate_problem_is_422(seeded):
    trap = region_doc(sphere_at("trap", (1.0, 0.0, 0.0), 0.1, margin=0.02))
    assert (
        seeded.put(
            "/workspaces/bench/constraints", json={"revision": 1, "constraints": [trap]}
        ).status_code
        == 200
    )
    resp = seeded.post("/workspaces/bench/solve", json={"demo_id": "line"})
    assert resp.status_code == 422
    assert resp.json()["code"] == "degenerate_problem"


def test_solve_stale_revision_is_409(seeded):
    resp = seeded.post("/workspaces/bench/solve", json={"demo_id": "line", "revision": 7})
    assert resp.status_code == 409


# ---------------------------------------------------------------------------
# solve + what-if behavior


def test_solve_stores_chain_and_reports(seeded):
    resp = seeded.post("/workspaces/bench/solve", json={"demo_id": "line"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["chain_id"] == "line"
    assert body["revision"] == 2
    assert len(body["reports"]) == 1
    report = body["reports"][0]
    assert report["converged"] is True
    assert report["max_violation"] <= 1e-4
    assert report["wall_time"] == 0.0
    roll = body["rollout"]
    assert "min_sdf" in roll and "violating_region" in roll
    assert min(roll["min_sdf"]) > -1e-3
    assert seeded.get("/workspaces/bench").json()["revision"] == 2


def test_what_if_rollout_does_not_mutate(seeded):
    assert seeded.post("/workspaces/bench/solve", json={"demo_id": "line"}).status_code == 200
    before = seeded.get("/workspaces/bench").json()
    resp = seeded.post(
        "/workspaces/bench/rollout",
        json={"chain_id": "line", "start": [0.0, 0.1, 0.0]},
    )
    assert resp.status_code == 200
    assert resp.json()["revision"] == before["revision"]
    after = seeded.get("/workspaces/bench").json()
    assert after == before
    first = resp.json()["rollout"]["positions"][0]
    assert np.allclose(first, [0.0, 0.1, 0.0], atol=1e-12)


def test_what_if_unknown_chain_or_object_is_404(seeded):
    resp = seeded.post("/workspaces/bench/rollout", json={"chain_id": "ghost"})
    assert resp.status_code == 404
    assert seeded.post("/workspaces/bench/solve", json={"demo_id": "line"}).status_code == 200
    resp = seeded.post(
        "/workspaces/bench/rollout",
        json={
            "chain_id": "line",
            "object_poses": {
                "ghost": {"rotation": [1, 0, 0, 0], "translation": [0, 0, 0]}
            },
        },
    )
    assert resp.status_code == 404


def test_what_if_malformed_pose_is_400(seeded):
    assert seeded.post("/workspaces/bench/solve", json={"demo_id": "line"}).status_code == 200
    resp = seeded.post(
        "/workspaces/bench/rollout",
        json={
            "chain_id": "line",
            "object_poses": {"ball": {"orientation": [1, 0, 0, 0], "position": [0, 0, 0]}},
        },
    )
    assert resp.status_code == 400
    assert resp.json()["code"] == "bad_request"
    assert "rotation" in resp.json()["message"]


def test_budget_default_flows_into_solver(tmp_path):
    app = create_app(data_dir=tmp_path / "store", budget_secs=1e-9)
    with TestClient(app) as client:
        doc = workspace_to_doc(base_workspace())
        assert client.post("/workspaces", json={"workspace": doc}).status_code == 200
        resp = client.post("/workspaces/bench/solve", json={"demo_id": "line"})
        assert resp.status_code == 200
        report = resp.json()["reports"][0]
        assert report["converged"] is False
        assert "time budget exhausted" in report["notes"]


def test_store_preloads_existing_files(tmp_path):
    store = tmp_path / "store"
    store.mkdir()
    save_workspace(base_workspace(), store / f"bench{WORKSPACE_SUFFIX}")
    app = create_app(data_dir=store)
    with TestClient(app) as client:
        got = client.get("/workspaces/bench")
        assert got.status_code == 200
        assert got.json()["revision"] == 1
        assert got.json()["workspace"] == workspace_to_doc(base_workspace())


# ---------------------------------------------------------------------------
# parity with the CLI


def test_service_matches_cli_bit_for_bit(tmp_path, capsys):
    cli_dir = tmp_path / "cli"
    cli_dir.mkdir()
    cli_file = cli_dir / f"bench{WORKSPACE_SUFFIX}"
    save_workspace(base_workspace(), cli_file)
    assert cli_main(["solve", "--workspace", str(cli_file), "--demo", "line"]) == 0
    csv_file = cli_dir / "line.csv"
    assert cli_main(
        ["rollout", "--workspace", str(cli_file), "--chain", "line", "--out", str(csv_file)]
    ) == 0
    capsys.readouterr()

    svc_dir = tmp_path / "svc"
    svc_dir.mkdir()
    save_workspace(base_workspace(), svc_dir / f"bench{WORKSPACE_SUFFIX}")
    app = create_app(data_dir=svc_dir)
    with TestClient(app) as client:
        assert client.post("/workspaces/bench/solve", json={"demo_id": "line"}).status_code == 200
        exported = client.get("/workspaces/bench/export/line.csv")
        assert exported.status_code == 200
        assert exported.headers["content-type"].startswith("text/csv")

    assert exported.text == csv_file.read_text(encoding="utf-8")
    assert (svc_dir / f"bench{WORKSPACE_SUFFIX}").read_bytes() == cli_file.read_bytes()


def test_csv_columns_empty_without_constraints(tmp_path):
    app = create_app(data_dir=tmp_path / "store")
    with TestClient(app) as client:
        ws = Workspace(id="plain").add_demonstration(line_demo())
        assert client.post("/workspaces", json={"workspace": workspace_to_doc(ws)}).status_code == 200
        assert client.post("/workspaces/plain/solve", json={"demo_id": "line"}).status_code == 200
        text = client.get("/workspaces/plain/export/line.csv").text
    lines = text.strip().split("\n")
    assert lines[0] == "t,x,y,z,vx,vy,vz,min_sdf,violating_region"
    assert all(line.endswith(",,") for line in lines[1:])
    assert len(lines) == 1 + 251  # 2.5 s horizon at 10 ms + the t=0 row
