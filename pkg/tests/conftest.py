import json
import math
import sys

import numpy as np
import pytest
from hypothesis import settings

from beamwatch.core import Mask

from oracles import FROZEN

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

RES = (64, 48)  # (width, height)


@pytest.fixture(scope="session")
def frozen():
    return json.loads(FROZEN.read_text())


def pix(mask: Mask) -> set:
    return {(int(r), int(c)) for r, c in mask.foreground_points()}


def from_set(points, resolution=RES) -> Mask:
    return Mask.from_points(resolution, sorted(points))


def random_mask(rng: np.random.Generator, resolution=RES, density=0.3) -> Mask:
    w, h = resolution
    return Mask.from_array(rng.random((h, w)) < density)


def close(a, b, rel=1e-9):
    return math.isclose(a, b, rel_tol=rel, abs_tol=1e-12)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
