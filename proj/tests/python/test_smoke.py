import json
import math
import pathlib

import pytest

import roomgraph

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "fixtures"


def load(path):
    return json.loads(path.read_text())


@pytest.fixture
def bedroom():
    return load(FIXTURES / "graphs" / "bedroom.json")


def test_solve_and_verify(bedroom):
    assert roomgraph.validate_graph(bedroom) == []
    layout = roomgraph.solve_layout(bedroom, {"seed": 3})
    assert layout["status"] == "solved"
    assert roomgraph.verify_layout(bedroom, layout) == []
    again = roomgraph.solve_layout(bedroom, {"seed": 3})
    assert json.dumps(layout, sort_keys=True) == json.dumps(again, sort_keys=True)
    svg = roomgraph.render_floor_plan(bedroom, layout)
    assert svg.startswith("<svg") and svg.count('class="object"') == len(layout["placements"])


def test_cycle_is_reported(bedroom):
    doc = json.loads(json.dumps(bedroom))
    objs = doc["objects"]
    a, b = objs[0]["new_object_id"], objs[1]["new_object_id"]
    objs[0]["scene_graph"] = [{"parent": b, "preposition": "on", "adjacency": "adjacent"}]
    objs[1]["scene_graph"] = [{"parent": a, "preposition": "on", "adjacency": "adjacent"}]
    assert any("cycle" in m.lower() for m in roomgraph.validate_graph(doc))
    with pytest.raises(roomgraph.RoomgraphError) as err:
        roomgraph.solve_layout(doc)
    assert roomgraph.error_code(err.value) == "CyclicGraph"


def test_corrector_leaves_clean_graph_clean(bedroom):
    assert roomgraph.detect_violations(bedroom) == []
    assert roomgraph.detect_violations(roomgraph.correct_graph(bedroom)) == []


def manifest(boxes):
    objects = []
    for k, (lo, hi) in enumerate(boxes, 1):
        center = [(x + y) / 2 for x, y in zip(lo, hi)]
        size = [y - x for x, y in zip(lo, hi)]
        objects.append({"id": f"box_{k}", "name": "box", "style_material": "plain", "asset_id": "placeholder",
                        "position": center, "rotation": 0, "scale": [1, 1, 1], "size": size,
                        "bbox": {"min": lo, "max": hi}})
    return {"format": "roomgraph.manifest", "version": 1,
            "room": {"width": 6.0, "depth": 5.0, "height": 3.0}, "objects": objects, "views": [],
            "metadata": {"seed": 0, "config_hash": ""}}


def test_metrics_hand_values():
    # Two scenes, one with a box through the east wall: OOB 50%.
    # Scene one has two unit cubes overlapping by half: 0.5 m^3, mean 0.25.
    inside = manifest([([0, 0, 0], [1, 1, 1]), ([0.5, 0, 0], [1.5, 1, 1])])
    outside = manifest([([5.5, 0, 0], [6.5, 1, 1])])
    m = roomgraph.compute_metrics([("in", inside), ("out", outside), ("bad", {"room": 3})])
    assert m["n_scenes"] == 2
    assert m["nobj"] == 1.5
    assert m["oob_rate"] == 50.0
    assert math.isclose(m["bbl"], 0.25, abs_tol=1e-12)
    assert [e["scene"] for e in m["excluded"]] == ["bad"]


def test_bradley_terry_two_items():
    r = roomgraph.bradley_terry(["a", "b"], [[0, 75], [25, 0]])
    assert r["converged"]
    assert math.isclose(r["strength"][0], 0.75, abs_tol=1e-9)
    with pytest.raises(roomgraph.RoomgraphError):
        roomgraph.bradley_terry(["a", "b", "c"], [[0, 1, 0], [1, 0, 0], [0, 0, 0]])


def test_search_orders_three_records():
    table = load(FIXTURES / "assets" / "embeddings.json")
    hits = roomgraph.search(FIXTURES / "assets" / "three.rgai", table["walnut desk"], 3)
    assert [h[0] for h in hits] == ["desk_walnut_01", "desk_pine_02", "chair_office_01"]
    assert hits[0][1] >= hits[1][1] >= hits[2][1]


def test_design_and_replay(tmp_path):
    req = load(FIXTURES / "requests" / "study.json")
    room = [req["room"]["width"], req["room"]["depth"], req["room"]["height"]]
    config = FIXTURES / "run.ini"
    bundle, status, code = roomgraph.design(config, "study", req["prompt"], room, req["n"], tmp_path)
    assert (status, code) == ("solved", 0)
    v2 = roomgraph.replay(bundle, "solve_layout", {"seed": 7}, config)
    before, after = roomgraph.bundle_checksums(bundle), roomgraph.bundle_checksums(v2)
    assert before["graph.json"] == after["graph.json"]
    assert before["layout.json"] != after["layout.json"]
