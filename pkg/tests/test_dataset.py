import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lapaction.actions import ActionLabel
from lapaction.dataset import (
    AnnotatedInterval,
    Clip,
    VideoManifest,
    build_one_vs_rest,
    clip_from_json,
    clip_to_json,
    extract_clips,
    load_manifest,
)
from lapaction.errors import (
    EmptyClassError,
    FrameStoreError,
    IntervalOverlapError,
    ManifestError,
    ParameterError,
    UnassignedVideoError,
)

from conftest import make_clips


def write_manifest(tmp_path, intervals, frame_count=400, frame_dir="frames", video_id="vid1"):
    (tmp_path / frame_dir).mkdir(exist_ok=True)
    path = tmp_path / f"{video_id}.json"
    path.write_text(
        json.dumps(
            {
                "video_id": video_id,
                "fps": 25,
                "frame_count": frame_count,
                "frame_dir": frame_dir,
                "intervals": [
                    {"label": lbl, "start_frame": a, "end_frame": b} for lbl, a, b in intervals
                ],
            }
        )
    )
    return path


def test_load_manifest_round_trip(tmp_path):
    path = write_manifest(tmp_path, [("needle_pulling", 0, 150), ("other", 150, 400)])
    manifest = load_manifest(path)
    assert manifest.video_id == "vid1"
    assert manifest.frame_count == 400
    assert len(manifest.intervals) == 2
    assert manifest.intervals[0].label is ActionLabel.NEEDLE_PULLING
    assert manifest.intervals[1].length == 250


def test_load_manifest_overlap_cites_frames(tmp_path):
    path = write_manifest(tmp_path, [("suction", 0, 100), ("other", 50, 200)])
    with pytest.raises(IntervalOverlapError, match="50-100"):
        load_manifest(path)


def test_load_manifest_interval_beyond_frame_count(tmp_path):
    path = write_manifest(tmp_path, [("suction", 0, 500)], frame_count=400)
    with pytest.raises(ManifestError, match="beyond frame_count"):
        load_manifest(path)


def test_load_manifest_missing_frame_dir(tmp_path):
    path = write_manifest(tmp_path, [("suction", 0, 100)])
    (tmp_path / "frames").rmdir()
    with pytest.raises(FrameStoreError, match="frame_dir"):
        load_manifest(path)


@pytest.mark.parametrize(
    "field,value,message",
    [
        ("fps", -1, "fps"),
        ("frame_count", -5, "frame_count"),
        ("intervals", [{"label": "sewing", "start_frame": 0, "end_frame": 10}], "sewing"),
    ],
)
def test_load_manifest_malformed_fields(tmp_path, field, value, message):
    path = write_manifest(tmp_path, [("suction", 0, 100)])
    raw = json.loads(path.read_text())
    raw[field] = value
    path.write_text(json.dumps(raw))
    with pytest.raises(ManifestError, match=message):
        load_manifest(path)


def _manifest(intervals, frame_count=10_000, video_id="vid1"):
    return VideoManifest(
        video_id=video_id,
        fps=25.0,
        frame_count=frame_count,
        frame_dir="unused",
        intervals=tuple(AnnotatedInterval(lbl, a, b) for lbl, a, b in intervals),
    )


def test_extract_exact_tiling():
    clips = extract_clips(_manifest([(ActionLabel.NEEDLE_PULLING, 0, 150)]), clip_len=50)
    assert [c.start_frame for c in clips] == [0, 50, 100]
    assert all(c.label is ActionLabel.NEEDLE_PULLING and c.length == 50 for c in clips)


def test_extract_interval_shorter_than_clip():
    assert extract_clips(_manifest([(ActionLabel.KNOT_PUSHING, 0, 40)]), clip_len=50) == []


def test_extract_remainder_dropped():
    # Oracle: enumerate valid placements directly.
    starts = []
    s = 100
    while s + 50 <= 230:
        starts.append(s)
        s += 50
    assert starts == [100, 150]
    clips = extract_clips(_manifest([(ActionLabel.OTHER, 100, 230)]), clip_len=50)
    assert [c.start_frame for c in clips] == starts


def test_extract_rejects_bad_clip_len():
    manifest = _manifest([(ActionLabel.OTHER, 0, 100)])
    with pytest.raises(ParameterError):
        extract_clips(manifest, clip_len=20)
    with pytest.raises(ParameterError):
        extract_clips(manifest, clip_len=80)


LABELS = list(ActionLabel)


@st.composite
def random_manifests(draw):
    n = draw(st.integers(1, 8))
    cursor = 0
    intervals = []
    for _ in range(n):
        gap = draw(st.integers(0, 30))
        length = draw(st.integers(1, 260))
        label = draw(st.sampled_from(LABELS))
        intervals.append((label, cursor + gap, cursor + gap + length))
        cursor += gap + length
    return _manifest(intervals, frame_count=cursor)


@settings(max_examples=150, deadline=None)
@given(random_manifests(), st.integers(50, 75))
def test_extract_count_matches_bruteforce(manifest, clip_len):
    clips = extract_clips(manifest, clip_len=clip_len)
    expected = sum(iv.length // clip_len for iv in manifest.intervals)
    assert len(clips) == expected


@settings(max_examples=100, deadline=None)
@given(random_manifests(), st.integers(50, 75))
def test_extract_clips_disjoint_and_inside_intervals(manifest, clip_len):
    clips = extract_clips(manifest, clip_len=clip_len)
    spans = sorted((c.start_frame, c.end_frame) for c in clips)
    for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
        assert a1 <= b0  # pairwise disjoint
    for clip in clips:
        homes = [
            iv
            for iv in manifest.intervals
            if iv.start_frame <= clip.start_frame and clip.end_frame <= iv.end_frame
        ]
        assert len(homes) == 1
        assert homes[0].label is clip.label


def paper_scale_clips():
    target = make_clips("v1", ActionLabel.SUCTION, range(0, 30 * 50, 50))
    rest = make_clips("v2", ActionLabel.OTHER, range(0, 190 * 50, 50))
    test = make_clips("v9", ActionLabel.SUCTION, [0, 50]) + make_clips(
        "v9", ActionLabel.OTHER, [100, 150]
    )
    return target + rest + test


def test_one_vs_rest_stratified_counts():
    dataset = build_one_vs_rest(
        paper_scale_clips(),
        ActionLabel.SUCTION,
        train_videos={"v1", "v2"},
        test_videos={"v9"},
        validation_fraction=0.2,
        rng_seed=7,
    )
    counts = dataset.counts()
    # Counting oracle: round(0.2 * 30) = 6 and round(0.2 * 190) = 38 held out.
    assert counts["validation"] == {"target": 6, "rest": 38}
    assert counts["train"] == {"target": 24, "rest": 152}
    assert counts["test"] == {"target": 2, "rest": 2}


def test_one_vs_rest_deterministic_and_video_disjoint():
    kwargs = dict(
        target=ActionLabel.SUCTION,
        train_videos={"v1", "v2"},
        test_videos={"v9"},
        validation_fraction=0.2,
        rng_seed=123,
    )
    a = build_one_vs_rest(paper_scale_clips(), **kwargs)
    b = build_one_vs_rest(paper_scale_clips(), **kwargs)
    assert a.split == b.split
    test_videos = {cid.split("_")[0] for cid, s in a.split.items() if s == "test"}
    other_videos = {cid.split("_")[0] for cid, s in a.split.items() if s != "test"}
    assert not test_videos & other_videos


def test_one_vs_rest_empty_target_class():
    clips = make_clips("v1", ActionLabel.OTHER, [0, 50])
    with pytest.raises(EmptyClassError):
        build_one_vs_rest(clips, ActionLabel.SUCTION, {"v1"}, set(), 0.2, 0)


def test_one_vs_rest_all_clips_in_test_videos():
    clips = make_clips("v9", ActionLabel.SUCTION, [0]) + make_clips("v9", ActionLabel.OTHER, [50])
    with pytest.raises(EmptyClassError):
        build_one_vs_rest(clips, ActionLabel.SUCTION, {"v1"}, {"v9"}, 0.2, 0)


def test_one_vs_rest_unassigned_video():
    clips = make_clips("vX", ActionLabel.SUCTION, [0])
    with pytest.raises(UnassignedVideoError):
        build_one_vs_rest(clips, ActionLabel.SUCTION, {"v1"}, {"v9"}, 0.2, 0)


def test_one_vs_rest_rejects_bad_arguments():
    clips = make_clips("v1", ActionLabel.SUCTION, [0])
    with pytest.raises(ParameterError):
        build_one_vs_rest(clips, ActionLabel.OTHER, {"v1"}, set(), 0.2, 0)
    with pytest.raises(ParameterError):
        build_one_vs_rest(clips, ActionLabel.SUCTION, {"v1"}, {"v1"}, 0.2, 0)
    with pytest.raises(ParameterError):
        build_one_vs_rest(clips, ActionLabel.SUCTION, {"v1"}, set(), 0.9, 0)


def test_clip_json_round_trip():
    clip = Clip("v1", ActionLabel.SUCTION, 100, 50)
    assert clip_from_json(clip_to_json(clip)) == clip
