import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermopose import synth
from thermopose.ingest import (
    FormatError, OpenPoseDocument, ParseError, PersonRecord, RoiGate, StreamSmoother,
    document_from_frames, load_sequence, parse_openpose_json, read_csv, read_input,
    read_json_dir, roi_filter, serialize_openpose_json, smooth, write_csv, write_json_dir,
    write_jsonl,
)
from thermopose.rules import PoseCategory
from thermopose.skeleton import ConfigError, frame_from_matrix

from conftest import make_frame


def person(values):
    return {"pose_keypoints_2d": list(values)}


def test_empty_people():
    doc = parse_openpose_json(b'{"version":1.3,"people":[]}')
    assert doc.people == () and doc.version == 1.3


def test_one_person_zeros_and_unknown_fields_ignored():
    raw = {"version": 1.3, "extra": {"a": 1},
           "people": [{"pose_keypoints_2d": [0] * 54, "face_keypoints_2d": [1, 2]}]}
    doc = parse_openpose_json(json.dumps(raw).encode())
    assert len(doc.people) == 1
    assert np.all(doc.people[0].matrix() == 0)


def test_synth_triple_survives_exactly():
    m = np.zeros((18, 3))
    m[7] = (300.0, 380.0, 0.9)
    f = frame_from_matrix(m, 0, 30.0)
    text = serialize_openpose_json(document_from_frames([f]))
    got = parse_openpose_json(text.encode()).people[0].matrix()
    assert tuple(got[7]) == (300.0, 380.0, 0.9)


def test_malformed_json_reports_byte_offset():
    text = '{"people": [é, 1]}'.encode()
    with pytest.raises(ParseError) as e:
        parse_openpose_json(text)
    assert e.value.offset == text.index("é".encode())
    assert str(e.value.offset) in str(e.value)


@pytest.mark.parametrize("n", [53, 55, 0])
def test_wrong_length_rejected(n):
    raw = {"people": [person([0] * 54), person([1.0] * n)]}
    with pytest.raises(FormatError, match=rf"person 1.*{n} values"):
        parse_openpose_json(json.dumps(raw))


def test_non_numeric_value_rejected():
    vals = [0] * 54
    vals[10] = "x"
    with pytest.raises(FormatError):
        parse_openpose_json(json.dumps({"people": [person(vals)]}))


def _doc(n_people):
    return OpenPoseDocument(1.3, tuple(PersonRecord((0.0,) * 54) for _ in range(n_people)))


def test_load_sequence_positional_identity():
    seqs = load_sequence([_doc(1)] * 3, 30.0)
    assert [f.frame_index for f in seqs[0]] == [0, 1, 2]
    seqs = load_sequence([_doc(2), _doc(1)], 30.0)
    assert len(seqs[0]) == 2 and len(seqs[1]) == 1
    assert seqs[1][0].person_id == 1


def test_load_sequence_rejects_bad_fps():
    with pytest.raises(ConfigError):
        load_sequence([], 0.0)


def test_walking_clip_timestamps():
    frames = synth.generate(synth.SynthScript(PoseCategory.Walking, duration=3.0))
    buf = io.StringIO()
    write_jsonl([document_from_frames([f]) for f in frames], buf)
    buf.seek(0)
    seq = load_sequence(buf, 30.0)[0]
    assert len(seq) == 90
    assert seq[0].timestamp == 0.0
    assert seq[-1].timestamp == pytest.approx(2.9667, abs=1e-4)
    assert all(a == b for a, b in zip(seq, frames))


@given(st.lists(st.integers(0, 3), max_size=12))
def test_load_sequence_preserves_count(people_counts):
    seqs = load_sequence([_doc(n) for n in people_counts], 30.0)
    assert sum(len(s) for s in seqs.values()) == sum(people_counts)


finite = st.floats(-1e5, 1e5, allow_nan=False)


@settings(max_examples=50)
@given(st.lists(st.lists(st.tuples(finite, finite, st.floats(0, 1)), min_size=18, max_size=18),
                min_size=0, max_size=3))
def test_parse_serialize_fixed_point(people):
    doc = OpenPoseDocument(1.3, tuple(PersonRecord(tuple(v for row in p for v in row)) for p in people))
    once = parse_openpose_json(serialize_openpose_json(doc))
    twice = parse_openpose_json(serialize_openpose_json(once))
    assert once == doc == twice


def test_json_dir_and_csv_round_trip(tmp_path):
    frames = synth.generate(synth.SynthScript(PoseCategory.FoldedArm, duration=1.0))
    write_json_dir([document_from_frames([f]) for f in frames], tmp_path / "clip")
    assert len(read_json_dir(tmp_path / "clip")) == len(frames)
    assert read_input(tmp_path / "clip", 30.0)[0] == frames
    with open(tmp_path / "clip.csv", "w", newline="") as fh:
        write_csv({0: frames}, fh)
    assert read_input(tmp_path / "clip.csv", 30.0)[0] == frames


def test_csv_rejects_bad_header_and_order():
    with pytest.raises(FormatError):
        read_csv(io.StringIO("a,b,c\n1,2,3\n"), 30.0)
    frames = [make_frame({7: (1, 2)}, i) for i in (1, 0)]
    buf = io.StringIO()
    write_csv({0: frames[:1]}, buf)
    body = buf.getvalue()
    row = body.splitlines()[1].replace("1,0,", "0,0,", 1)
    with pytest.raises(FormatError, match="not increasing"):
        read_csv(io.StringIO(body + row + "\n"), 30.0)


def test_stdin_format_sniffing():
    frames = [make_frame({7: (1, 2)}, i) for i in range(3)]
    buf = io.StringIO()
    write_jsonl([document_from_frames([f]) for f in frames], buf)
    assert read_input("-", 30.0, stream=io.StringIO(buf.getvalue()))[0] == frames
    buf = io.StringIO()
    write_csv({0: frames}, buf)
    assert read_input("-", 30.0, stream=io.StringIO(buf.getvalue()))[0] == frames


# ---------------------------------------------------------------------------
# smoothing

def _neutral(jit=0.0, seed=0):
    return synth.generate(synth.SynthScript(synth.NEUTRAL, jitter=jit, seed=seed))


def test_smooth_radius_zero_is_identity():
    frames = _neutral(0.5)
    assert smooth(frames, 0) == frames


def test_smooth_constant_sequence_unchanged():
    f = _neutral()[0]
    seq = [frame_from_matrix(f.matrix, i, 30.0) for i in range(10)]
    for r in (1, 2, 5):
        assert smooth(seq, r) == seq


def test_smoothing_reduces_jitter():
    clean = _neutral()
    noisy = synth.jitter(clean, 3.0, seed=1)
    smoothed = smooth(noisy, 2)
    c = np.stack([f.matrix[:, :2] for f in clean])
    dev_noisy = np.abs(np.stack([f.matrix[:, :2] for f in noisy]) - c).mean(axis=(0, 2))
    dev_smooth = np.abs(np.stack([f.matrix[:, :2] for f in smoothed]) - c).mean(axis=(0, 2))
    assert np.all(dev_smooth < dev_noisy)


def _random_track(draw_seed, n=20):
    rng = np.random.default_rng(draw_seed)
    m = np.zeros((n, 18, 3))
    m[..., :2] = rng.uniform(0, 1000, (n, 18, 2))
    m[..., 2] = rng.choice([0.0, 0.3, 0.5, 0.8, 1.0], (n, 18))
    keep = np.sort(rng.choice(np.arange(n + 5), n, replace=False))
    return [frame_from_matrix(m[i], int(k), 30.0) for i, k in enumerate(keep)]


@given(st.integers(0, 10 ** 6), st.integers(0, 4), finite, finite)
def test_smooth_commutes_with_translation(seed, radius, tx, ty):
    seq = _random_track(seed)
    shifted = synth.transform(seq, 1.0, (tx, ty))
    a = np.stack([f.matrix for f in smooth(shifted, radius)])
    b = np.stack([f.matrix for f in synth.transform(smooth(seq, radius), 1.0, (tx, ty))])
    assert np.array_equal(a[..., 2], b[..., 2])
    np.testing.assert_allclose(a[..., :2], b[..., :2], rtol=0, atol=1e-9)


@given(st.integers(0, 10 ** 6), st.integers(0, 4))
def test_smooth_keeps_confidences_and_invalid_points(seed, radius):
    seq = _random_track(seed)
    out = smooth(seq, radius)
    for f, g in zip(seq, out):
        assert np.array_equal(f.matrix[:, 2], g.matrix[:, 2])
        bad = f.matrix[:, 2] < 0.5
        assert np.array_equal(f.matrix[bad], g.matrix[bad])
        assert g.frame_index == f.frame_index


@given(st.integers(0, 10 ** 6), st.integers(0, 4))
def test_stream_smoother_matches_batch(seed, radius):
    seq = _random_track(seed)
    s = StreamSmoother(radius)
    out = [g for f in seq for g in s.push(f)] + s.flush()
    assert out == smooth(seq, radius)


def test_smooth_rejects_negative_radius():
    with pytest.raises(ValueError):
        smooth(_neutral(), -1)


# ---------------------------------------------------------------------------
# ROI

FULL_HD = (0, 0, 1920, 1080)


def test_roi_neck_inside():
    assert roi_filter(make_frame({1: (500, 400)}), RoiGate(*FULL_HD))
    assert roi_filter(make_frame({1: (1920, 1080)}), RoiGate(*FULL_HD))  # edges inclusive
    assert not roi_filter(make_frame({1: (500, 400)}, conf=0.1), RoiGate(*FULL_HD))


def test_roi_all_valid_inside_with_translated_clip():
    gate = RoiGate(0, 0, 1280, 1000, mode="require_all_valid_inside")
    frames = synth.generate(synth.SynthScript(synth.NEUTRAL, origin=(640, 500), jitter=0))
    assert all(roi_filter(f, gate) for f in frames)
    wrist_x = max(f.matrix[7, 0] for f in frames)
    moved = synth.transform(frames, 1.0, (1280 - wrist_x + 1.0, 0.0))
    assert not any(roi_filter(f, gate) for f in moved)
    assert all(roi_filter(f, RoiGate(0, 0, 1280, 1000)) for f in moved)  # neck still inside


def test_roi_gate_validation():
    with pytest.raises(ConfigError):
        RoiGate(10, 0, 5, 5)
    with pytest.raises(ConfigError):
        RoiGate(0, 0, 5, 5, mode="bogus")
