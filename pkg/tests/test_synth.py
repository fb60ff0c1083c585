"""Generator contracts. Pose predicates here use plain coordinate arithmetic so
that a bug in the rule engine cannot hide behind shared code."""


import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermopose import synth
from thermopose.ingest import read_input
from thermopose.rules import PoseCategory as P
from thermopose.stream import classify_frames

from conftest import corpus_clips

MARGIN = 1.25
FPS = 30.0
WIN = 60


def coords(frames, side="left"):
    """(T, 18, 2) pixel coordinates, mirrored back so the left arm acts."""
    xy = np.stack([f.matrix[:, :2] for f in frames])
    if side == "right":
        xy = xy[:, synth.MIRROR].copy()
        xy[..., 0] *= -1.0
    return xy


def dist(a, b):
    return np.hypot(a[..., 0] - b[..., 0], a[..., 1] - b[..., 1])


def forearm(xy):
    return dist(xy[:, 7], xy[:, 6])


def windows(values):
    """Per 2 s window reductions helper: sliding view of the last axis."""
    return np.lib.stride_tricks.sliding_window_view(values, WIN, axis=0)


def angle(xy, a, v, c):
    u, w = xy[:, a] - xy[:, v], xy[:, c] - xy[:, v]
    cos = (u * w).sum(-1) / (np.linalg.norm(u, axis=-1) * np.linalg.norm(w, axis=-1))
    return np.degrees(np.arccos(np.clip(cos, -1, 1)))


def lateral_speed(xy, k):
    return np.abs(np.diff(xy[:, k, 0])) * FPS


def shank_tilt(xy, knee, ankle):
    d = xy[:, ankle] - xy[:, knee]
    return np.degrees(np.arctan2(d[:, 0], d[:, 1]))


def check_oracle(script):
    """Assert the category's defining predicate with the required margin."""
    xy = coords(synth.generate(script), script.side)
    ls = forearm(xy)
    L = ls[0]
    np.testing.assert_allclose(ls, L, rtol=1e-9)
    cat = script.category
    if cat is P.WipingSweat:
        forehead = (xy[:, 14] + xy[:, 15]) / 2
        assert np.all(dist(xy[:, 7], forehead) <= L / (1.8 * MARGIN))
        assert windows(lateral_speed(xy, 7) / L).mean(-1).min() >= 1.5 * MARGIN
    elif cat is P.FanningWithHands:
        ang = angle(xy, 5, 6, 7)
        assert ang.min() <= 80 - 10 and ang.max() >= 120 + 10    # 25% of the band width
        flexed = ang <= 80
        assert np.all(xy[flexed, 7, 1] < xy[flexed, 6, 1])
    elif cat is P.ShakingTShirt:
        chest = (xy[:, 1] + (xy[:, 8] + xy[:, 11]) / 2) / 2
        assert np.all(dist(xy[:, 7], chest) <= L / (1.8 * MARGIN))
        ang = angle(xy, 5, 6, 7)
        assert ang.min() <= 80 - 10 and ang.max() >= 120 + 10
    elif cat is P.ScratchHead:
        if script.variant == "top":
            target = xy[:, 0] - np.array([0.0, L])
        elif script.variant == "temple":
            target = (xy[:, 14] + xy[:, 15]) / 2
        else:
            target = xy[:, 17]
        assert np.all(dist(xy[:, 7], target) <= L / (1.8 * MARGIN))
        assert windows(lateral_speed(xy, 7) / L).mean(-1).max() <= 1.5 / MARGIN
    elif cat is P.RollUpSleeves:
        mid = (xy[:, 3] + xy[:, 4]) / 2
        assert np.all(dist(xy[:, 7], mid) <= L / (0.9 * MARGIN))
        axis = xy[:, 4] - xy[:, 3]
        proj = ((xy[:, 7] - xy[:, 3]) * axis).sum(-1) / np.linalg.norm(axis, axis=-1)
        w = windows(proj / L)
        assert (w.max(-1) - w.min(-1)).min() >= 0.5 * MARGIN
    elif cat is P.Walking:
        hip = (xy[:, 8] + xy[:, 11]) / 2
        w = windows(hip[:, 0] / L)
        assert (w.max(-1) - w.min(-1)).min() >= MARGIN / 2.0
        sep = windows(np.abs(xy[:, 10, 0] - xy[:, 13, 0]) / L)
        assert sep.max(-1).min() >= MARGIN / 1.8
        for knee, ankle in ((9, 10), (12, 13)):
            t = windows(shank_tilt(xy, knee, ankle))
            assert (t.max(-1) - t.min(-1)).min() >= 30 * MARGIN
    elif cat is P.StampingFeet:
        hip = (xy[:, 8] + xy[:, 11]) / 2
        w = windows(hip[:, 0] / L)
        assert (w.max(-1) - w.min(-1)).max() <= 1.0 / (2.0 * MARGIN)
        for knee, ankle in ((9, 10), (12, 13)):
            t = windows(shank_tilt(xy, knee, ankle))
            assert (t.max(-1) - t.min(-1)).min() >= 30 * MARGIN
    elif cat is P.ShoulderShaking:
        y = windows((xy[:, 2, 1] + xy[:, 5, 1]) / 2 / L)
        assert (y.max(-1) - y.min(-1)).min() >= MARGIN / 1.5
        centred = y - y.mean(-1, keepdims=True)
        crossings = (np.diff(np.sign(centred), axis=-1) != 0).sum(-1)
        assert crossings.min() >= 2 * 2 * MARGIN   # >= 2.5 full cycles per window
    elif cat is P.FoldedArm:
        assert np.all(dist(xy[:, 7], xy[:, 3]) <= L / (2.0 * MARGIN))
        assert np.all(dist(xy[:, 4], xy[:, 6]) <= L / (2.0 * MARGIN))
        lo = np.minimum(xy[:, 2, 0], xy[:, 5, 0])
        hi = np.maximum(xy[:, 2, 0], xy[:, 5, 0])
        for k in (4, 7):
            assert np.all((lo < xy[:, k, 0]) & (xy[:, k, 0] < hi))
    elif cat is P.LegCross:
        assert np.all(dist(xy[:, 13], xy[:, 9]) <= L / (1.0 * MARGIN))
    elif cat is P.WarmHandsWithBreath:
        settled = int(script.param("approach") * script.fps)
        for k in (4, 7):
            assert np.all(dist(xy[settled:, k], xy[settled:, 0]) <= L / (3.0 * MARGIN))
    elif cat is P.HandsAroundNeck:
        for k in (4, 7):
            assert np.all(dist(xy[:, k], xy[:, 1]) <= L / (3.0 * MARGIN))
            assert np.all(dist(xy[:, k], xy[:, 1]) < dist(xy[:, k], xy[:, 0]))
    else:
        head = [0, 1, 14, 15, 16, 17]
        for k in (4, 7):
            assert np.all(dist(xy[:, k, None], xy[:, head]) > L)


CATEGORIES = list(synth.DEFAULTS)


@pytest.mark.parametrize("category", CATEGORIES, ids=synth._label)
def test_default_scripts_satisfy_their_predicate(category):
    posture = "seated" if category is P.LegCross else "standing"
    check_oracle(synth.SynthScript(category, jitter=0.0, posture=posture))


@pytest.mark.parametrize("variant", ["ear", "top", "temple"])
def test_scratch_variants(variant):
    check_oracle(synth.SynthScript(P.ScratchHead, jitter=0.0, variant=variant))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(CATEGORIES), st.integers(0, 10 ** 6))
def test_random_scripts_satisfy_their_predicate(category, seed):
    check_oracle(synth.random_script(category, seed, jitter=0.0))


def test_folded_arm_distance_in_pixels():
    frames = synth.generate(synth.SynthScript(P.FoldedArm, scale=80.0))
    xy = coords(frames)
    # 0.5 px jitter on both points can add at most sqrt(2) px
    assert np.all(dist(xy[:, 7], xy[:, 3]) <= 80 / 2.5 + 1.5)
    assert np.all(dist(xy[:, 4], xy[:, 6]) <= 80 / 2.5 + 1.5)


def test_neutral_is_none():
    frames = synth.generate(synth.SynthScript(synth.NEUTRAL, duration=2.0))
    assert len(frames) == 60
    res = classify_frames(frames, FPS)
    assert res.records == [] and set(res.labels) == {P.None_}


def test_generate_is_deterministic():
    a = synth.generate(synth.random_script(P.Walking, 3))
    b = synth.generate(synth.random_script(P.Walking, 3))
    assert b"".join(f.matrix.tobytes() for f in a) == b"".join(f.matrix.tobytes() for f in b)
    c = synth.generate(synth.random_script(P.Walking, 4))
    assert not np.array_equal(a[0].matrix, c[0].matrix)


@given(st.sampled_from(CATEGORIES), st.floats(0.1, 10.0))
def test_scale_scales_displacements(category, s):
    base = synth.random_script(category, 0, jitter=0.0)
    big = synth.SynthScript(**{**base.__dict__, "scale": base.scale * s})
    o = np.asarray(base.origin)
    d0 = coords(synth.generate(base)) - o
    d1 = coords(synth.generate(big)) - o
    np.testing.assert_allclose(d1, s * d0, rtol=1e-9, atol=1e-9 * base.scale * s)


def test_script_validation():
    with pytest.raises(ValueError):
        synth.SynthScript(P.None_)
    with pytest.raises(ValueError):
        synth.SynthScript(P.Walking, posture="seated")
    with pytest.raises(ValueError):
        synth.SynthScript(P.LegCross)
    with pytest.raises(ValueError):
        synth.SynthScript(P.FanningWithHands, params={"x": 1})
    with pytest.raises(ValueError):
        synth.SynthScript(P.Walking, duration=0)


# ---------------------------------------------------------------------------
# perturbations

def test_drop_confidence():
    frames = synth.generate(synth.SynthScript(P.FoldedArm, duration=1.0))
    out = synth.perturb(frames, "drop_confidence", index=7, value=0.2)
    for f, g in zip(frames, out):
        assert g.confidence(7) == 0.2
        keep = np.ones(18, bool)
        keep[7] = False
        assert np.array_equal(f.matrix[keep], g.matrix[keep])
        assert np.array_equal(f.matrix[7, :2], g.matrix[7, :2])


def test_jitter_then_smooth_is_closer_to_clean():
    from thermopose.ingest import smooth
    clean = synth.generate(synth.SynthScript(synth.NEUTRAL, jitter=0.0))
    noisy = synth.perturb(clean, "jitter", half_width=3.0, seed=1)
    c = coords(clean)
    assert np.abs(coords(smooth(noisy, 2)) - c).mean() <= np.abs(coords(noisy) - c).mean()
    assert all(np.array_equal(f.matrix[:, 2], g.matrix[:, 2]) for f, g in zip(clean, noisy))


def test_occlusion_delays_warm_hands_onset():
    frames = synth.generate(synth.SynthScript(P.WarmHandsWithBreath))
    clean = classify_frames(frames, FPS).records
    assert [r.category for r in clean] == ["WarmHandsWithBreath"]
    assert clean[0].onset_frame <= 20
    occluded = synth.perturb(frames, "occlude_span", index=0, first=10, last=20)
    assert all(f.confidence(0) == 0 for f in occluded[10:21])
    assert occluded[:10] == frames[:10] and occluded[21:] == frames[21:]
    recs = classify_frames(occluded, FPS).records
    assert [r.category for r in recs] == ["WarmHandsWithBreath"]
    assert recs[0].onset_frame > 20


def test_transform():
    frames = synth.generate(synth.SynthScript(P.FoldedArm, duration=0.5))
    out = synth.transform(frames, 2.0, (10.0, -5.0))
    np.testing.assert_allclose(coords(out), coords(frames) * 2 + [10.0, -5.0])
    with pytest.raises(ValueError):
        synth.transform(frames, 0.0)


# ---------------------------------------------------------------------------
# corpus

def test_corpus_cardinality(corpus0):
    assert len(corpus0) == 17
    positives = [c for c in corpus0 if not c.confuser and c.expected is not P.None_]
    assert sorted(c.expected.value for c in positives) == sorted(p.value for p in P if p is not P.None_)
    assert sum(c.confuser for c in corpus0) == 4
    assert sum(c.expected is P.None_ for c in corpus0) == 1


def test_corpus_deterministic():
    a, b = synth.corpus(5), synth.corpus(5)
    for x, y in zip(a, b):
        assert x.name == y.name and x.frames == y.frames


def test_corpus_confusers_stay_apart():
    for seed in range(3):
        for c in corpus_clips(seed):
            got = {r.category for r in classify_frames(c.frames, FPS).records}
            expected = set() if c.expected is P.None_ else {c.expected.value}
            assert got == expected, (seed, c.name, got)


def test_write_clip_formats(tmp_path):
    frames = synth.generate(synth.SynthScript(P.LegCross, posture="seated", duration=0.5))
    synth.write_clip(frames, tmp_path / "d", "json")
    synth.write_clip(frames, tmp_path / "c.csv", "csv")
    assert read_input(tmp_path / "d", FPS)[0] == frames
    assert read_input(tmp_path / "c.csv", FPS)[0] == frames
    with pytest.raises(ValueError):
        synth.write_clip(frames, tmp_path / "x", "xml")
