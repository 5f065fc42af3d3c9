import json

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def hand_frame(**pts):
    """21x3 frame with a fixed non-degenerate palm; keyword ``pK=(x, y, z)`` overrides point K."""
    base = np.zeros((21, 3))
    base[:, 0] = np.arange(21) * 3.0
    base[:, 1] = np.arange(21) % 5
    base[1] = (0.0, 0.0, 0.0)
    base[9] = (0.0, 10.0, 0.0)
    for key, value in pts.items():
        base[int(key[1:])] = value
    return base


def jsonl_text(frames, meta, times=None):
    lines = [json.dumps({"meta": meta})]
    for i, f in enumerate(frames):
        obj = {"frame": i, "landmarks": np.asarray(f).tolist()}
        if times is not None:
            obj["t"] = times[i]
        lines.append(json.dumps(obj))
    return "\n".join(lines) + "\n"


@pytest.fixture
def meta():
    return {"movement": "finger_tapping", "side": "right", "fps": 30.0, "subject_id": "s1"}


# acceptance criteria report one line each at the end of the run
ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
