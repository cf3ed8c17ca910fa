import os
from pathlib import Path

import numpy as np
import pytest

from vrwalk.graph import from_edges, parse_edge_list

DATA_DIR = Path(os.environ.get("VRWALK_DATA", Path(__file__).resolve().parents[1] / "data"))


def toy_graph(edges, directed=False):
    ids = sorted({int(t) for e in edges for t in e})
    pos = {v: i for i, v in enumerate(ids)}
    arr = np.array([(pos[u], pos[v]) for u, v in edges])
    return from_edges(arr, [str(v) for v in ids], directed=directed)


def random_connected_graph(n, extra, seed):
    """Random tree on n nodes plus ``extra`` random chords."""
    rng = np.random.default_rng(seed)
    parents = [int(rng.integers(i)) for i in range(1, n)]
    edges = [(i, p) for i, p in zip(range(1, n), parents)]
    edges += [tuple(rng.integers(n, size=2)) for _ in range(extra)]
    return from_edges(np.array(edges), [str(i) for i in range(n)])


@pytest.fixture
def triangle():
    return parse_edge_list(["0 1", "1 2", "2 0"])


@pytest.fixture
def five_node_graph():
    # five-node toy graph: 1-3, 1-5, 3-4, 4-2, 4-5
    return parse_edge_list(["1 3", "1 5", "3 4", "4 2", "4 5"])


# one line per acceptance criterion, printed at the end of the run
_ACCEPTANCE: dict[str, tuple[str, str]] = {}


@pytest.fixture
def acceptance(request):
    """``record(ok, detail)`` stores PASS/FAIL; ``record.blocked(detail)`` stores BLOCKED."""
    key = request.node.name

    def record(ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE[key] = ("PASS" if ok else "FAIL", detail)
        return ok

    def blocked(detail: str) -> None:
        _ACCEPTANCE[key] = ("BLOCKED", detail)
        pytest.skip(f"BLOCKED: {detail}")

    record.blocked = blocked
    return record


def pytest_runtest_logreport(report):
    # a criterion that crashed before recording still gets a FAIL line
    if report.when == "call" and report.failed and "test_acceptance" in report.nodeid:
        key = report.nodeid.split("::")[-1]
        _ACCEPTANCE.setdefault(key, ("FAIL", "error before result was recorded"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"{key}: {status}  {detail}")
