import numpy as np
import pytest

from faceveil.landmarks import SCHEMA_V1, FixtureLandmarkBackend, LandmarkSet
from faceveil.synthface import (FacePose, identity_params, make_clip,
                                make_template_bank, speaking_pose_track)


_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].split("[")[0]
    if report.when == "call":
        _ACCEPTANCE_RESULTS[name] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and not report.passed:
        _ACCEPTANCE_RESULTS[name] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in _ACCEPTANCE_RESULTS.items():
        terminalreporter.write_line(f"{name}: {verdict}")


@pytest.fixture(scope="session")
def template_bank():
    return make_template_bank(8)


@pytest.fixture(scope="session")
def talking_clip():
    """20-frame 256px clip of identity 1 with its exact landmark track."""
    poses = speaking_pose_track(20, rng_seed=3)
    return make_clip(identity_params(1), poses, "caseA", size=(256, 256))


@pytest.fixture()
def fixture_backend(talking_clip):
    clip, track = talking_clip
    backend = FixtureLandmarkBackend()
    for i in range(clip.frame_count):
        backend.register(clip.frame(i), track[i])
    return backend


def register_clip(backend, clip, track):
    for i in range(clip.frame_count):
        backend.register(clip.frame(i), track[i])


def landmarks_with(frame_size=(480, 640), **named_points) -> LandmarkSet:
    """A valid 23-point set with selected points pinned to given coords.

    Unpinned points spread over a face-like grid so the set is never
    degenerate.
    """
    h, w = frame_size
    base = {}
    cols = 5
    for i, name in enumerate(SCHEMA_V1):
        base[name] = (60.0 + 40.0 * (i % cols), 60.0 + 40.0 * (i // cols))
    base.update(named_points)
    pts = np.array([base[name] for name in SCHEMA_V1], dtype=np.float64)
    return LandmarkSet(pts, frame_size)
