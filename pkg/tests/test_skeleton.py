import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from thermopose import synth
from thermopose.rules import PoseCategory
from thermopose.skeleton import (
    FormatError, FrameWindow, Keypoint, frame_from_matrix, required_valid, stack_frames, valid,
    window_capacity,
)

from conftest import make_frame

conf = st.floats(0.0, 1.0, allow_nan=False)


def test_all_zero_matrix_is_all_invalid():
    f = frame_from_matrix(np.zeros((18, 3)), 0, 30.0)
    assert f.timestamp == 0.0
    assert not any(valid(f, i, 0.5) for i in range(18))


def test_two_valid_rows_and_timestamp():
    m = np.zeros((18, 3))
    m[7] = (300, 380, 0.9)
    m[6] = (300, 300, 0.9)
    f = frame_from_matrix(m, 30, 30.0)
    assert f.timestamp == 1.0
    assert [i for i in range(18) if valid(f, i)] == [6, 7]
    assert f.keypoints[7] == Keypoint(300.0, 380.0, 0.9)


def test_synth_matrix_round_trip():
    frames = synth.generate(synth.SynthScript(synth.NEUTRAL))
    for f in frames[:10]:
        again = frame_from_matrix(f.matrix, f.frame_index, 30.0)
        assert again == f
        assert again.matrix.tobytes() == f.matrix.tobytes()


@pytest.mark.parametrize("shape", [(17, 3), (18, 2), (19, 3), (54,)])
def test_dimension_mismatch(shape):
    with pytest.raises(FormatError, match="18x3"):
        frame_from_matrix(np.zeros(shape), 0, 30.0)


@pytest.mark.parametrize("row, value", [(3, (math.nan, 0, 1)), (5, (0, math.inf, 1)),
                                        (9, (0, 0, 1.5)), (12, (0, 0, -0.1))])
def test_bad_row_is_named(row, value):
    m = np.zeros((18, 3))
    m[row] = value
    with pytest.raises(ValueError, match=f"row {row}"):
        frame_from_matrix(m, 0, 30.0)


def test_matrix_is_read_only():
    f = frame_from_matrix(np.zeros((18, 3)), 0, 30.0)
    with pytest.raises(ValueError):
        f.matrix[0, 0] = 1.0


@pytest.mark.parametrize("c, expected", [(0.5, True), (0.49, False), (1.0, True)])
def test_valid_boundary(c, expected):
    m = np.zeros((18, 3))
    m[4, 2] = c
    assert valid(frame_from_matrix(m, 0, 30.0), 4, 0.5) is expected


def test_valid_index_out_of_range():
    f = frame_from_matrix(np.zeros((18, 3)), 0, 30.0)
    with pytest.raises(IndexError):
        valid(f, 18)


def test_required_valid():
    m = np.full((18, 3), 0.9)
    f = frame_from_matrix(m, 0, 30.0)
    assert required_valid(f, {6, 7})
    m[7, 2] = 0.2
    assert not required_valid(frame_from_matrix(m, 0, 30.0), {6, 7})
    with pytest.raises(ValueError):
        required_valid(f, set())


def test_required_valid_on_occluded_wiping_clip():
    frames = synth.generate(synth.SynthScript(PoseCategory.WipingSweat))
    occluded = synth.drop_confidence(synth.drop_confidence(frames, 16, 0.1), 17, 0.1)
    scratch_ears = {7, 16}
    wiping = synth.required_keypoints(synth.SynthScript(PoseCategory.WipingSweat))
    for f in occluded:
        assert not required_valid(f, scratch_ears)
        assert required_valid(f, wiping)


@given(conf, conf, conf)
def test_valid_monotone_in_epsilon(c, e1, e2):
    lo, hi = min(e1, e2), max(e1, e2)
    m = np.zeros((18, 3))
    m[0, 2] = c
    f = frame_from_matrix(m, 0, 30.0)
    if valid(f, 0, hi):
        assert valid(f, 0, lo)


@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), conf),
                min_size=18, max_size=18))
def test_matrix_round_trip_property(rows):
    f = frame_from_matrix(rows, 3, 25.0)
    g = frame_from_matrix(np.array([[k.x, k.y, k.confidence] for k in f.keypoints]), 3, 25.0)
    assert g.matrix.tobytes() == f.matrix.tobytes()


@given(st.floats(0.1, 5.0), st.floats(1.0, 120.0), st.lists(st.integers(1, 4), max_size=200))
def test_window_capacity_and_order(seconds, fps, steps):
    w = FrameWindow(seconds, fps)
    idx = 0
    for s in steps:
        idx += s
        w.push(make_frame({}, idx, fps))
        assert len(w) <= math.ceil(seconds * fps - 1e-9)
        got = [f.frame_index for f in w]
        assert got == sorted(got)
        assert got[-1] == idx


def test_window_capacity_value():
    assert window_capacity(2.0, 30.0) == 60
    assert window_capacity(2.0, 24.0) == 48
    assert FrameWindow(2.0, 29.97).capacity == 60


def test_window_rejects_out_of_order_and_mixed_people():
    w = FrameWindow(1.0, 10.0)
    w.push(make_frame({}, 5))
    with pytest.raises(ValueError):
        w.push(make_frame({}, 5))
    other = frame_from_matrix(np.zeros((18, 3)), 6, 10.0, person_id=1)
    with pytest.raises(ValueError):
        w.push(other)


def test_window_drops_frames_behind_a_gap():
    w = FrameWindow(1.0, 10.0)
    w.extend(make_frame({}, i, 10.0) for i in range(5))
    w.push(make_frame({}, 12, 10.0))
    assert [f.frame_index for f in w] == [3, 4, 12]
    w.push(make_frame({}, 30, 10.0))
    assert [f.frame_index for f in w] == [30]


def test_stack_frames_shape():
    frames = [make_frame({7: (1, 2)}, i) for i in range(4)]
    assert stack_frames(frames).shape == (4, 18, 3)
    assert stack_frames([]).shape == (0, 18, 3)
