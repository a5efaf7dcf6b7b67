"""Smoke test for the htest extension module.

Builds the extension with cargo unless HTEST_SKIP_BUILD is set, loads it
from the build directory and exercises the main entry points.
"""

import importlib.util
import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    if not os.environ.get("HTEST_SKIP_BUILD"):
        subprocess.run(["cargo", "build", "--release", "-p", "htest-py"], cwd=ROOT, check=True)
    lib = ROOT / "target" / "release" / "libhtest.so"
    tmp = Path(tempfile.mkdtemp())
    target = tmp / "htest.so"
    shutil.copy(lib, target)
    spec = importlib.util.spec_from_file_location("htest", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    h = load_module()

    tri = h.Graph.builtin("triangle")
    assert (tri.n, tri.edge_count) == (3, 3)
    g = h.Graph.from_text("4 3\n0 1\n1 2\n2 3\n")
    assert g.edges() == [(0, 1), (1, 2), (2, 3)]
    assert not h.contains_copy(g, tri)
    assert h.find_copy(h.Graph.complete(4), tri) == [0, 1, 2]
    assert h.degeneracy(g)[0] == 1
    assert h.treedepth(g)[0] == 3

    host, copies = h.gen_p5_family(50)
    assert host.n == 103 and len(copies) == 50
    p5 = h.Graph.builtin("p5")
    verdict = h.test_h_freeness(host, p5, 0.1, 5, seed=7)
    assert verdict["decision"] in ("accept", "reject")
    assert verdict["log"]["neighbor_queries"] == 5 * 62

    report = h.estimate_rejection(host, p5, 0.1, 3, 200, seed=1)
    assert report["trials"] == 200 and report["rejection_rate"] > 0.5

    tree = h.Graph(5, [(0, 1), (0, 2), (0, 3), (3, 4)])
    free = h.estimate_rejection(tree, tri, 0.1, 5, 100, seed=2)
    assert free["rejections"] == 0

    stages = h.reduce_to_layered(host, p5, 0.1, seed=3)
    assert all(s["holds"] for s in stages["stages"])
    assert len(stages["layers"]) == 5

    try:
        h.Graph(2, [(0, 5)])
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range edge accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    sys.exit(main())
