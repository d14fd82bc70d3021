import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from memadvisor.ingest import ProfileSet, RunProfile, StageRecord  # noqa: E402

MB = 1 << 20

# five runs at 10..50 MB whose largest stage shuffles exactly twice the input
WORKED_INPUTS_MB = [10, 20, 30, 40, 50]
WORKED_SHUFFLES_MB = [20, 40, 60, 80, 100]


def make_run(workload_id, input_bytes, shuffles, cached=False):
    """shuffles: list of (read, write) per stage."""
    stages = tuple(StageRecord(i, r, w) for i, (r, w) in enumerate(shuffles))
    return RunProfile(workload_id, input_bytes, stages, cached)


def make_set(workload_id, points, cached=False):
    """points: list of (input_bytes, [(read, write), ...])."""
    return ProfileSet.from_runs(make_run(workload_id, i, st, cached) for i, st in points)


def worked_lines():
    lines = []
    for i, s in zip(WORKED_INPUTS_MB, WORKED_SHUFFLES_MB):
        rec = {
            "workload_id": "WL",
            "input_bytes": i * MB,
            "cached_input": True,
            "stages": [
                {"stage_index": 0, "shuffle_read_bytes": 0, "shuffle_write_bytes": 0},
                {"stage_index": 1, "shuffle_read_bytes": 0, "shuffle_write_bytes": s * MB // 2},
                {"stage_index": 2, "shuffle_read_bytes": s * MB // 2, "shuffle_write_bytes": s * MB // 2},
                {"stage_index": 3, "shuffle_read_bytes": s * MB // 2, "shuffle_write_bytes": 0},
            ],
        }
        lines.append(json.dumps(rec))
    return lines


@pytest.fixture
def worked_profile_text():
    return "# profiling runs of WL\n" + "\n".join(worked_lines()) + "\n"


@pytest.fixture
def worked_profile_path(tmp_path, worked_profile_text):
    p = tmp_path / "wl.jsonl"
    p.write_text(worked_profile_text)
    return p


# --- acceptance summary -------------------------------------------------------

ACCEPTANCE_LINES = {}
_OUTCOMES = {}


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for one acceptance criterion."""

    class Recorder:
        def __init__(self):
            self.detail = ""

        def note(self, text):
            self.detail = text

    rec = Recorder()
    yield rec
    ACCEPTANCE_LINES[request.node.name] = rec


def pytest_runtest_logreport(report):
    if report.when == "call":
        _OUTCOMES[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_LINES):
        rec = ACCEPTANCE_LINES[name]
        status = "PASS" if _OUTCOMES.get(name) == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {rec.detail}")
