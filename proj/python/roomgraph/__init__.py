"""Text to scene graph to collision-free room layout.

Thin Python layer over the C++ core. Documents travel as dicts and are
serialized to JSON at the boundary.
"""

import json

from . import _core

__all__ = [
    "RoomgraphError",
    "error_code",
    "validate_graph",
    "detect_violations",
    "correct_graph",
    "solve_layout",
    "verify_layout",
    "render_floor_plan",
    "compute_metrics",
    "bradley_terry",
    "search",
    "design",
    "replay",
    "evaluate",
    "bundle_checksums",
]

RoomgraphError = _core.RoomgraphError


def error_code(exc):
    """Error code name from a RoomgraphError, e.g. "CyclicGraph"."""
    return str(exc).split(":", 1)[0]


def _dump(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def validate_graph(document):
    return _core.validate_graph(_dump(document))


def detect_violations(document):
    return json.loads(_core.detect_violations(_dump(document)))


def correct_graph(document):
    return json.loads(_core.correct_graph(_dump(document)))


def solve_layout(document, solver=None):
    return json.loads(_core.solve_layout(_dump(document), _dump(solver) if solver else ""))


def verify_layout(document, layout, solver=None):
    return _core.verify_layout(_dump(document), _dump(layout), _dump(solver) if solver else "")


def render_floor_plan(document, layout):
    return _core.render_floor_plan(_dump(document), _dump(layout))


def compute_metrics(scenes):
    """scenes: mapping or list of (name, manifest) pairs."""
    items = scenes.items() if isinstance(scenes, dict) else scenes
    return json.loads(_core.compute_metrics([(name, _dump(m)) for name, m in items]))


def bradley_terry(items, wins):
    return _core.bradley_terry(list(items), [list(map(float, row)) for row in wins])


def search(index_path, query, k=5):
    return _core.search(str(index_path), list(map(float, query)), k)


def design(config, design_id, prompt, room, n=10, output_root=""):
    """Returns (bundle_dir, status, exit_code)."""
    return _core.design(str(config), design_id, prompt, list(room), n, str(output_root))


def replay(bundle, stage, overrides=None, config=""):
    return _core.replay(str(bundle), stage, _dump(overrides or {}), str(config))


def bundle_checksums(bundle):
    return _core.bundle_checksums(str(bundle))


def evaluate(config, inputs):
    """Metrics over bundle directories or manifests; rates renders/*.png when
    the config enables the evaluator."""
    return json.loads(_core.evaluate(str(config), [str(p) for p in inputs]))
