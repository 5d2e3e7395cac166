import numpy as np
import pytest

from boxlevelset.scenes import SceneSpec, Shape, generate_scene


def disk_spec(noise=0.0, seed=0):
    return SceneSpec(64, 64, [Shape("disk", (32, 32), (10,), 0.9)], 0.1, noise, seed)


def rectangle_spec():
    return SceneSpec(64, 64, [Shape("rectangle", (30, 34), (12, 7), 0.9)], 0.1, 0.0, 0)


def overlap_spec():
    return SceneSpec(
        64, 64,
        [Shape("disk", (26, 30), (10,), 0.9), Shape("disk", (40, 36), (10,), 0.6)],
        0.1, 0.02, 5,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def disk_scene():
    return generate_scene(disk_spec())


@pytest.fixture(scope="session")
def noisy_disk_scene():
    return generate_scene(disk_spec(noise=0.1, seed=7))


@pytest.fixture(scope="session")
def rectangle_scene():
    return generate_scene(rectangle_spec())


@pytest.fixture(scope="session")
def overlap_scene():
    return generate_scene(overlap_spec())


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
