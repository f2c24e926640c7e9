"""
Unit tests for the recording container, the DEAP converter and synthetic data.
"""

import json
import pickle

import pytest
import numpy as np

from src.data.deap import convert_deap, read_subject, subject_files
from src.data.recordings import (
    MANIFEST_NAME,
    Recording,
    RecordingSet,
    load_recordings,
    save_recordings,
)
from src.data.synth import (
    ACTIVE_AMPLITUDE,
    ACTIVE_BANDS_PER_GROUP,
    NUM_GROUPS,
    default_profiles,
    synth_dataset,
)
from src.dsp.bands import NUM_BANDS, band_by_name
from src.dsp.fir import apply_fir, design_bandpass
from src.errors import ConfigurationError, RecordingLoadError, UsageError
from src.graph.electrodes import DEAP_CHANNELS


def make_recording(subject=1, video_id=0, num_samples=7680, seed=0, baseline=False):
    rng = np.random.default_rng(seed)
    samples = rng.normal(size=(32, num_samples)).astype(np.float32)
    base = rng.normal(size=(32, 384)).astype(np.float32) if baseline else None
    return Recording(subject=subject, video_id=video_id, samples=samples, baseline=base)


def rewrite_manifest(directory, **changes):
    path = directory / MANIFEST_NAME
    manifest = json.loads(path.read_text())
    manifest.update(changes)
    path.write_text(json.dumps(manifest))
    return manifest


class TestRecordingContainer:
    """Test writing and reading recording containers."""

    def test_round_trip(self, tmp_path):
        """Test one 32 x 7680 trial loads back exactly."""
        original = make_recording(baseline=True)
        save_recordings([original], tmp_path)
        loaded = load_recordings(tmp_path)
        assert len(loaded) == 1
        assert loaded.fs == 128.0
        assert loaded.channels == DEAP_CHANNELS
        np.testing.assert_array_equal(loaded[0].samples, original.samples)
        np.testing.assert_array_equal(loaded[0].baseline, original.baseline)
        assert loaded[0].duration_s == 60.0

    def test_manifest_path_accepted(self, tmp_path):
        """Test the manifest file itself can be passed."""
        save_recordings([make_recording()], tmp_path)
        assert len(load_recordings(tmp_path / MANIFEST_NAME)) == 1

    def test_sample_count_mismatch_names_trial(self, tmp_path):
        """Test a short file is reported with its trial index."""
        save_recordings([make_recording(), make_recording(num_samples=7000)], tmp_path)
        manifest = json.loads((tmp_path / MANIFEST_NAME).read_text())
        manifest["trials"][1]["num_samples"] = 7680
        (tmp_path / MANIFEST_NAME).write_text(json.dumps(manifest))
        with pytest.raises(RecordingLoadError, match="Trial 1"):
            load_recordings(tmp_path)

    def test_missing_trial_file(self, tmp_path):
        """Test a missing raw file is reported with its trial index."""
        save_recordings([make_recording(num_samples=256)], tmp_path)
        for f in tmp_path.glob("*.f32"):
            f.unlink()
        with pytest.raises(RecordingLoadError, match="Trial 0"):
            load_recordings(tmp_path)

    def test_missing_manifest(self, tmp_path):
        """Test an empty directory raises RecordingLoadError."""
        with pytest.raises(RecordingLoadError):
            load_recordings(tmp_path)

    def test_unknown_channel(self, tmp_path):
        """Test unknown electrode names are rejected."""
        save_recordings([make_recording(num_samples=256)], tmp_path)
        rewrite_manifest(tmp_path, channels=["Xx"] + list(DEAP_CHANNELS[1:]))
        with pytest.raises(RecordingLoadError, match="Xx"):
            load_recordings(tmp_path)

    def test_label_out_of_range(self, tmp_path):
        """Test video ids outside [0, 40) are rejected."""
        save_recordings([make_recording(video_id=40, num_samples=256)], tmp_path)
        with pytest.raises(RecordingLoadError, match="video_id"):
            load_recordings(tmp_path)

    def test_channels_reordered(self, tmp_path):
        """Test a permuted channel list is mapped to the standard order."""
        original = make_recording(num_samples=256)
        reversed_channels = list(reversed(DEAP_CHANNELS))
        stored = Recording(subject=1, video_id=0, samples=original.samples[::-1])
        save_recordings([stored], tmp_path, channels=reversed_channels)
        loaded = load_recordings(tmp_path)
        np.testing.assert_array_equal(loaded[0].samples, original.samples)

    def test_refuses_overwrite(self, tmp_path):
        """Test an existing manifest is not replaced silently."""
        save_recordings([make_recording(num_samples=256)], tmp_path)
        with pytest.raises(UsageError):
            save_recordings([make_recording(num_samples=256)], tmp_path)
        save_recordings([make_recording(num_samples=128)], tmp_path, overwrite=True)
        assert load_recordings(tmp_path)[0].num_samples == 128


class TestRecordingSet:
    """Test recording set helpers."""

    def test_subjects_and_classes(self):
        """Test subject order and class count."""
        recordings = RecordingSet(
            recordings=[
                make_recording(subject=3, video_id=1, num_samples=8),
                make_recording(subject=1, video_id=4, num_samples=8),
                make_recording(subject=3, video_id=2, num_samples=8),
            ]
        )
        assert recordings.subjects == [3, 1]
        assert recordings.num_classes == 5
        selected = recordings.select_subjects([3])
        assert [r.video_id for r in selected] == [1, 2]


def write_deap_subject(path, trials=2, samples=384 + 256, seed=0):
    data = np.random.default_rng(seed).normal(size=(trials, 40, samples))
    with open(path, "wb") as f:
        pickle.dump({"data": data, "labels": np.zeros((trials, 4))}, f)
    return data


class TestDeapConverter:
    """Test conversion of pickled subject files."""

    def test_convert(self, tmp_path):
        """Test EEG channels, baseline and trial labels survive conversion."""
        source = tmp_path / "deap"
        source.mkdir()
        data = write_deap_subject(source / "s01.dat")
        convert_deap(source, tmp_path / "out")
        loaded = load_recordings(tmp_path / "out")
        assert len(loaded) == 2
        assert [r.video_id for r in loaded] == [0, 1]
        assert loaded[1].samples.shape == (32, 256)
        np.testing.assert_array_equal(
            loaded[1].samples, data[1, :32, 384:].astype(np.float32)
        )
        np.testing.assert_array_equal(
            loaded[0].baseline, data[0, :32, :384].astype(np.float32)
        )

    def test_subject_selection(self, tmp_path):
        """Test only the requested subjects are converted."""
        source = tmp_path / "deap"
        source.mkdir()
        write_deap_subject(source / "s01.dat", seed=1)
        write_deap_subject(source / "s10.dat", seed=2)
        write_deap_subject(source / "s02.dat", seed=3)
        assert [p.name for p in subject_files(source)] == ["s01.dat", "s02.dat", "s10.dat"]
        convert_deap(source, tmp_path / "out", subjects=[2])
        assert load_recordings(tmp_path / "out").subjects == [2]

    def test_empty_directory(self, tmp_path):
        """Test a directory without subject files is rejected."""
        with pytest.raises(RecordingLoadError):
            convert_deap(tmp_path, tmp_path / "out")

    def test_corrupt_file(self, tmp_path):
        """Test an unreadable pickle raises RecordingLoadError."""
        path = tmp_path / "s01.dat"
        path.write_bytes(b"not a pickle")
        with pytest.raises(RecordingLoadError):
            read_subject(path)

    def test_wrong_shape(self, tmp_path):
        """Test arrays with too few channels are rejected."""
        path = tmp_path / "s01.dat"
        with open(path, "wb") as f:
            pickle.dump({"data": np.zeros((2, 10, 500))}, f)
        with pytest.raises(RecordingLoadError):
            read_subject(path)


class TestSynthDataset:
    """Test the synthetic recording generator."""

    def test_shape_contract(self):
        """Test 8 classes x 5 trials give 40 recordings of 32 x 7680."""
        recordings = synth_dataset(8, 5, seed=0)
        assert len(recordings) == 40
        assert all(r.samples.shape == (32, 7680) for r in recordings)
        assert [r.video_id for r in recordings] == [c for c in range(8) for _ in range(5)]
        assert recordings[0].baseline.shape == (32, 384)

    def test_deterministic(self):
        """Test the same seed gives bitwise-identical recordings."""
        first = synth_dataset(2, 2, seed=3, duration_s=5.0)
        second = synth_dataset(2, 2, seed=3, duration_s=5.0)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.samples, b.samples)
            np.testing.assert_array_equal(a.baseline, b.baseline)
        other = synth_dataset(2, 2, seed=4, duration_s=5.0)
        assert not np.array_equal(first[0].samples, other[0].samples)

    def test_gamma_amplitude_contrast(self):
        """Test a gamma oscillation on electrodes 0-7 raises their gamma power 3x."""
        profiles = np.zeros((2, NUM_GROUPS, NUM_BANDS))
        alpha = 2
        gamma = NUM_BANDS - 1
        profiles[:, :, alpha] = ACTIVE_AMPLITUDE
        profiles[0, 0, gamma] = 2 * ACTIVE_AMPLITUDE
        recordings = synth_dataset(2, 3, seed=5, duration_s=20.0, profiles=profiles)
        fir = design_bandpass(band_by_name("gamma"), 128.0)

        def gamma_power(label):
            trials = [r.samples[:8].astype(np.float64) for r in recordings if r.video_id == label]
            return np.mean([np.mean(apply_fir(x, fir) ** 2) for x in trials])

        assert gamma_power(0) >= 3.0 * gamma_power(1)

    def test_default_profiles(self):
        """Test profiles are distinct and activate two bands per group."""
        profiles = default_profiles(40, seed=0)
        assert profiles.shape == (40, NUM_GROUPS, NUM_BANDS)
        assert len({p.tobytes() for p in profiles}) == 40
        np.testing.assert_array_equal(
            (profiles == ACTIVE_AMPLITUDE).sum(axis=2), ACTIVE_BANDS_PER_GROUP
        )

    @pytest.mark.parametrize("num_classes,trials", [(1, 2), (41, 1), (4, 0)])
    def test_invalid_counts(self, num_classes, trials):
        """Test class and trial counts outside the supported range."""
        with pytest.raises(ConfigurationError):
            synth_dataset(num_classes, trials, duration_s=4.0)

    def test_profile_shape(self):
        """Test a profile table of the wrong shape is rejected."""
        with pytest.raises(ConfigurationError):
            synth_dataset(2, 1, duration_s=4.0, profiles=np.zeros((2, 3, NUM_BANDS)))
