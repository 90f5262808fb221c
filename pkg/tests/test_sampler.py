import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lapaction.actions import ActionLabel
from lapaction.dataset import Clip
from lapaction.errors import ClipTooShortError, ParameterError
from lapaction.sampler import SamplerConfig, load_sequence, sample_indices, segment_bounds

from conftest import write_random_store


def test_identity_when_clip_equals_sequence_length():
    for mode in ("random", "center"):
        idx = sample_indices(20, SamplerConfig(mode=mode, rng_seed=4))
        assert idx.tolist() == list(range(20))


def test_random_indices_stay_in_exact_thirds():
    idx = sample_indices(60, SamplerConfig(mode="random", rng_seed=17))
    for i, v in enumerate(idx):
        assert 3 * i <= v < 3 * (i + 1)


def test_center_mode_n75_matches_floor_formula():
    # Oracle: enumerate boundaries with the floor formula directly.
    bounds = [(int(np.floor(3.75 * i)), int(np.floor(3.75 * (i + 1)))) for i in range(20)]
    assert segment_bounds(75, 20) == bounds
    sizes = [hi - lo for lo, hi in bounds]
    assert set(sizes) == {3, 4} and sum(sizes) == 75
    idx = sample_indices(75, SamplerConfig(mode="center"))
    assert idx.tolist() == [(lo + hi - 1) // 2 for lo, hi in bounds]


def test_clip_too_short():
    with pytest.raises(ClipTooShortError):
        sample_indices(19, SamplerConfig())


def test_center_mode_is_seed_independent():
    a = sample_indices(57, SamplerConfig(mode="center", rng_seed=1))
    b = sample_indices(57, SamplerConfig(mode="center", rng_seed=999))
    assert np.array_equal(a, b)


def test_random_mode_deterministic_given_seed():
    a = sample_indices(57, SamplerConfig(mode="random", rng_seed=21))
    b = sample_indices(57, SamplerConfig(mode="random", rng_seed=21))
    assert np.array_equal(a, b)


def test_randomized_invariants_bulk():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        n = int(rng.integers(20, 201))
        seed = int(rng.integers(0, 2**32))
        idx = sample_indices(n, SamplerConfig(mode="random", rng_seed=seed))
        assert len(idx) == 20
        assert np.all(np.diff(idx) > 0)
        for i, v in enumerate(idx):
            assert i * n // 20 <= v < (i + 1) * n // 20


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 64), st.integers(0, 400))
def test_segments_partition_the_clip(seq_len, extra):
    n = seq_len + extra
    bounds = segment_bounds(n, seq_len)
    assert bounds[0][0] == 0
    assert bounds[-1][1] == n
    for (a0, a1), (b0, b1) in zip(bounds, bounds[1:]):
        assert a1 == b0
    assert all(hi > lo for lo, hi in bounds)  # non-empty when n >= seq_len


def test_segment_coverage_over_many_seeds():
    # Size-4 segments: 1000 resamples make a missed index essentially impossible.
    n, s = 80, 20
    seen = {i: set() for i in range(s)}
    for seed in range(1000):
        idx = sample_indices(n, SamplerConfig(mode="random", rng_seed=seed))
        for i, v in enumerate(idx):
            seen[i].add(int(v))
    for i, (lo, hi) in enumerate(segment_bounds(n, s)):
        assert seen[i] == set(range(lo, hi))


def test_load_sequence_shape_and_provenance(tmp_path):
    manifest, stores = write_random_store(tmp_path, "v1", n_frames=60, size=16)
    clip = Clip("v1", ActionLabel.OTHER, 5, 50)
    idx = sample_indices(50, SamplerConfig(mode="random", rng_seed=2))
    seq = load_sequence(clip, idx, stores)
    assert seq.frames.shape == (20, 16, 16, 3)
    assert seq.frames.min() >= 0.0 and seq.frames.max() <= 1.0
    assert np.array_equal(seq.source_indices, idx)
    assert seq.clip == clip
    again = load_sequence(clip, sample_indices(50, SamplerConfig(mode="random", rng_seed=2)), stores)
    assert np.array_equal(again.source_indices, seq.source_indices)


def test_load_sequence_rejects_out_of_range(tmp_path):
    manifest, stores = write_random_store(tmp_path, "v1", n_frames=60, size=16)
    clip = Clip("v1", ActionLabel.OTHER, 0, 50)
    with pytest.raises(ParameterError):
        load_sequence(clip, [0, 50], stores)


def test_sampler_config_validation():
    with pytest.raises(ParameterError):
        SamplerConfig(sequence_length=0)
    with pytest.raises(ParameterError):
        SamplerConfig(mode="stride")
