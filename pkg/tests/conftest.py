import functools

import numpy as np
import pytest

from thermopose import synth
from thermopose.skeleton import frame_from_matrix


@functools.lru_cache(maxsize=None)
def corpus_clips(seed: int):
    return tuple(synth.corpus(seed))


def clip_named(seed: int, name: str):
    return next(c for c in corpus_clips(seed) if c.name == name)


@pytest.fixture(scope="session")
def corpus0():
    return corpus_clips(0)


def blank_matrix():
    return np.zeros((18, 3))


def make_frame(points: dict, frame_index: int = 0, fps: float = 30.0, conf: float = 0.9):
    """Frame with only ``points`` ({index: (x, y)}) valid."""
    m = blank_matrix()
    for i, (x, y) in points.items():
        m[i] = (x, y, conf)
    return frame_from_matrix(m, frame_index, fps)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
