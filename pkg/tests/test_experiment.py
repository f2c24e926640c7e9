"""
Tests for the experiment pipeline on small synthetic datasets.
"""

import itertools

import pytest
import numpy as np

from src.core.config import ExperimentConfig
from src.core.experiment import (
    CHECKPOINT_NAME,
    FEATURES_NAME,
    METRICS_NAME,
    build_graph_artifact,
    evaluate_checkpoint,
    extract_features_artifact,
    grid_configs,
    load_dataset,
    load_partitions,
    parse_coefficient_files,
    run_experiment,
    run_gradcheck,
    run_grid,
    run_knn,
    run_networks,
    stage,
)
from src.core.report import KNN_LABEL
from src.data.recordings import save_recordings
from src.data.synth import iter_synth_recordings
from src.errors import ConfigurationError, StageError, UsageError
from src.nn.checkpoint import load_checkpoint
from src.utils.json_writer import load_json, load_jsonl

SMALL_NETWORK = "GC4M3 - P2 - FC4"


def write_dataset(directory, classes=4, trials=2, duration_s=6.0, subjects=(1,)):
    recordings = itertools.chain.from_iterable(
        iter_synth_recordings(classes, trials, seed=s, duration_s=duration_s, subject=s)
        for s in subjects
    )
    save_recordings(recordings, directory)
    return directory


def fast_config(dataset, out, **changes):
    settings = dict(
        dataset=str(dataset),
        out_dir=str(out),
        network=SMALL_NETWORK,
        epochs=2,
        batch_size=8,
        coarsen_levels=2,
    )
    settings.update(changes)
    return ExperimentConfig(**settings)


class TestStage:
    """Test stage labelling of failures."""

    def test_wraps_errors(self):
        """Test exceptions are re-raised as StageError with the stage name."""
        with pytest.raises(StageError) as excinfo:
            with stage("train"):
                raise ValueError("bad batch")
        assert excinfo.value.stage == "train"
        assert isinstance(excinfo.value.cause, ValueError)
        assert str(excinfo.value) == "[train] bad batch"

    def test_keeps_inner_stage(self):
        """Test nested stages keep the innermost label."""
        with pytest.raises(StageError) as excinfo:
            with stage("outer"):
                with stage("inner"):
                    raise RuntimeError("x")
        assert excinfo.value.stage == "inner"


class TestDataPreparation:
    """Test loading, feature extraction and splitting."""

    def test_no_dataset(self):
        """Test a missing dataset setting raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            load_dataset(ExperimentConfig())

    def test_missing_container(self, tmp_path):
        """Test an unreadable container fails in the load stage."""
        with pytest.raises(StageError) as excinfo:
            load_partitions(fast_config(tmp_path / "absent", tmp_path / "out"))
        assert excinfo.value.stage == "load"

    def test_unknown_subject(self, tmp_path):
        """Test selecting absent subjects raises ConfigurationError."""
        data = write_dataset(tmp_path / "data")
        with pytest.raises(ConfigurationError):
            load_dataset(fast_config(data, tmp_path / "out", subjects=(7,)))

    def test_pooled_partition(self, tmp_path):
        """Test pooled mode gives one normalized partition."""
        data = write_dataset(tmp_path / "data")
        (part,) = load_partitions(fast_config(data, tmp_path / "out"))
        assert len(part.features) == 32
        assert part.split.train.size + part.split.test.size == 32
        assert part.train_x.shape == (part.split.train.size, 256)
        np.testing.assert_allclose(part.train_x.mean(axis=0), 0.0, atol=1e-9)
        assert part.num_classes == 4
        assert part.correlation is None
        assert part.subject is None

    def test_correlation_graphs(self, tmp_path):
        """Test corr graphs are prepared per band."""
        data = write_dataset(tmp_path / "data")
        (part,) = load_partitions(fast_config(data, tmp_path / "out", graph_method="corr"))
        assert len(part.correlation) == 8

    def test_per_subject_partitions(self, tmp_path):
        """Test one partition per subject."""
        data = write_dataset(tmp_path / "data", subjects=(1, 2))
        parts = load_partitions(fast_config(data, tmp_path / "out", per_subject=True))
        assert [p.subject for p in parts] == [1, 2]
        assert all(len(p.features) == 32 for p in parts)
        assert all(np.all(p.features.subjects == p.subject) for p in parts)

    def test_trial_split(self, tmp_path):
        """Test trial mode keeps every recording on one side."""
        data = write_dataset(tmp_path / "data")
        (part,) = load_partitions(fast_config(data, tmp_path / "out", split_mode="trial"))
        train = set(part.features.recording_indices[part.split.train].tolist())
        test = set(part.features.recording_indices[part.split.test].tolist())
        assert train and test
        assert not train & test

    def test_coefficient_option(self, tmp_path):
        """Test band=path pairs and coefficient directories."""
        files = parse_coefficient_files("alpha=a.txt, gamma = g.txt")
        assert {name: path.name for name, path in files.items()} == {
            "alpha": "a.txt", "gamma": "g.txt",
        }
        (tmp_path / "theta.txt").write_text("0.5\n0.5\n")
        assert list(parse_coefficient_files(str(tmp_path))) == ["theta"]
        assert parse_coefficient_files(None) == {}
        with pytest.raises(ConfigurationError):
            parse_coefficient_files("alpha")


class TestRunExperiment:
    """Test single experiment runs and their artifacts."""

    def test_artifacts(self, tmp_path):
        """Test checkpoint, metrics and report are written."""
        data = write_dataset(tmp_path / "data")
        out = tmp_path / "run"
        row = run_experiment(fast_config(data, out))
        assert 0.0 <= row.accuracy <= 100.0
        assert row.network == SMALL_NETWORK
        assert row.runs == 1
        assert row.graph == "dist" and row.density == "k=4"

        checkpoint = load_checkpoint(out / CHECKPOINT_NAME)
        assert checkpoint.spec == SMALL_NETWORK
        assert checkpoint.epoch == 2
        assert checkpoint.header["graph_method"] == "dist"
        assert checkpoint.header["feature_kind"] == "entropy"
        assert [r["epoch"] for r in load_jsonl(out / METRICS_NAME)] == [0, 1]
        report = load_json(out / "report.json")
        assert report["rows"][0]["accuracy"] == row.accuracy
        assert (out / "report.txt").exists()

    def test_refuses_overwrite(self, tmp_path):
        """Test a second run into the same directory needs overwrite."""
        data = write_dataset(tmp_path / "data")
        config = fast_config(data, tmp_path / "run", epochs=1)
        run_experiment(config)
        with pytest.raises(UsageError):
            run_experiment(config)
        run_experiment(config.with_overrides(overwrite=True))
        assert len(load_jsonl(tmp_path / "run" / METRICS_NAME)) == 1

    def test_deterministic_checkpoints(self, tmp_path):
        """Test identical configs give bitwise-identical checkpoints."""
        data = write_dataset(tmp_path / "data")
        first = run_experiment(fast_config(data, tmp_path / "a"))
        second = run_experiment(fast_config(data, tmp_path / "b"))
        assert first.accuracy == second.accuracy
        a = (tmp_path / "a" / CHECKPOINT_NAME).read_bytes()
        b = (tmp_path / "b" / CHECKPOINT_NAME).read_bytes()
        assert a == b

    def test_repeats(self, tmp_path):
        """Test repeats train into separate directories with consecutive seeds."""
        data = write_dataset(tmp_path / "data")
        out = tmp_path / "run"
        row = run_experiment(fast_config(data, out, repeats=2, epochs=1))
        assert row.runs == 2
        assert load_checkpoint(out / "repeat_0" / CHECKPOINT_NAME).seed == 0
        assert load_checkpoint(out / "repeat_1" / CHECKPOINT_NAME).seed == 1

    def test_per_subject(self, tmp_path):
        """Test per-subject runs write one directory per subject."""
        data = write_dataset(tmp_path / "data", subjects=(1, 2))
        out = tmp_path / "run"
        row = run_experiment(fast_config(data, out, per_subject=True, epochs=1))
        assert row.runs == 2
        assert load_checkpoint(out / "subject_02" / CHECKPOINT_NAME).header["subject"] == 2

    def test_graph_dump(self, tmp_path):
        """Test the merged graph and its levels are dumped on request."""
        data = write_dataset(tmp_path / "data")
        out = tmp_path / "run"
        run_experiment(fast_config(data, out, dump_graph="", epochs=1))
        assert (out / "graph.txt").read_text().startswith("256 ")
        assert (out / "graph.level2.txt").exists()

    def test_evaluate_checkpoint(self, tmp_path):
        """Test re-evaluation reproduces the training-time accuracy."""
        data = write_dataset(tmp_path / "data")
        config = fast_config(data, tmp_path / "run")
        row = run_experiment(config)
        again = evaluate_checkpoint(config, tmp_path / "run" / CHECKPOINT_NAME)
        assert again.accuracy == row.accuracy
        assert again.network == SMALL_NETWORK

    def test_knn_row(self, tmp_path):
        """Test the baseline row."""
        data = write_dataset(tmp_path / "data")
        row = run_knn(fast_config(data, tmp_path / "out"))
        assert row.graph == KNN_LABEL
        assert row.inter_band is None
        assert row.density == "k=5"
        assert 0.0 <= row.accuracy <= 100.0


class TestGrid:
    """Test the accuracy grid."""

    def test_cell_order(self, tmp_path):
        """Test cells follow method, inter-band, density, feature order."""
        base = ExperimentConfig(out_dir=str(tmp_path))
        configs = grid_configs(base, methods=("dist", "rand"), densities={"dist": (4, 8)})
        assert len(configs) == 20
        first = configs[0]
        assert (first.graph_method, first.inter_band, first.k, first.feature_kind) == (
            "dist", False, 4, "power",
        )
        assert first.out_dir.endswith("dist_k4_intra_power")
        last = configs[-1]
        assert (last.graph_method, last.inter_band, last.p, last.feature_kind) == (
            "rand", True, 0.7, "entropy",
        )
        assert len({c.out_dir for c in configs}) == len(configs)

    def test_unknown_method(self):
        """Test an unknown graph method raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            grid_configs(ExperimentConfig(), methods=("knn",))

    def test_small_grid(self, tmp_path):
        """Test grid rows, baseline rows and the report."""
        data = write_dataset(tmp_path / "data")
        base = fast_config(data, tmp_path / "grid", epochs=1)
        rows = run_grid(
            base,
            methods=("dist", "rand"),
            densities={"dist": (4,), "rand": (0.5,)},
            inter_bands=(True,),
            features=("power",),
        )
        assert [(r.graph, r.density) for r in rows] == [
            ("dist", "k=4"), ("rand", "p=0.5"), (KNN_LABEL, "k=5"),
        ]
        assert not any(r.failed for r in rows)
        assert (tmp_path / "grid" / "report.txt").exists()
        assert (tmp_path / "grid" / "cells" / "rand_p0.5_inter_power" / CHECKPOINT_NAME).exists()

    def test_failed_cells_continue(self, tmp_path):
        """Test failing cells become error rows and the grid finishes."""
        data = write_dataset(tmp_path / "data")
        base = fast_config(
            data, tmp_path / "grid", epochs=1, coarsen_levels=1,
            network="GC4M3 - P2 - GC4M2 - P2 - FC4",
        )
        rows = run_grid(
            base, methods=("dist",), densities={"dist": (4,)}, inter_bands=(False, True),
            features=("power",),
        )
        cells = [r for r in rows if r.graph != KNN_LABEL]
        assert len(cells) == 2
        assert all(r.failed and r.accuracy is None for r in cells)
        assert all("[coarsen]" in r.error for r in cells)
        assert rows[-1].graph == KNN_LABEL and not rows[-1].failed
        assert "! dist" in (tmp_path / "grid" / "report.txt").read_text()

    def test_networks(self, tmp_path):
        """Test the network comparison trains every requested network."""
        data = write_dataset(tmp_path / "data")
        base = fast_config(data, tmp_path / "nets", epochs=1, coarsen_levels=0)
        rows = run_networks(base, networks=("GC4M2 - P2 - FC4", "GC2M2 - FC4"))
        assert [name for name, _ in rows] == ["GC4M2 - P2 - FC4", "GC2M2 - FC4"]
        assert all(not row.failed and row.num_parameters > 0 for _, row in rows)
        assert (tmp_path / "nets" / "networks.txt").exists()


class TestArtifacts:
    """Test the feature and graph commands."""

    def test_features_artifact(self, tmp_path):
        """Test features.npz is written once."""
        data = write_dataset(tmp_path / "data")
        config = fast_config(data, tmp_path / "out", feature_kind="power")
        features, path = extract_features_artifact(config)
        assert path.name == FEATURES_NAME
        assert features.features.shape == (32, 256)
        with pytest.raises(StageError) as excinfo:
            extract_features_artifact(config)
        assert excinfo.value.stage == "artifacts"

    def test_graph_artifact(self, tmp_path):
        """Test the distance graph is dumped with every coarsening level."""
        config = ExperimentConfig(out_dir=str(tmp_path), coarsen_levels=3)
        graph, hierarchy = build_graph_artifact(config)
        assert graph.n == 256
        assert hierarchy.num_levels == 3
        assert (tmp_path / "graph.txt").exists()
        for level in range(4):
            assert (tmp_path / f"graph.level{level}.txt").exists()


class TestRunGradcheck:
    """Test the gradient check command."""

    def test_passes(self):
        """Test a small network passes at the default tolerance."""
        config = ExperimentConfig(network="GC4M3 - P2 - FC3")
        report = run_gradcheck(config, num_vertices=12)
        assert report.passed, report.errors

    def test_sabotage_detected(self):
        """Test a corrupted gradient fails the check."""

        def sabotage(gradients):
            gradients["fc.weight"] *= 1.5

        config = ExperimentConfig(network="GC4M3 - P2 - FC3")
        report = run_gradcheck(config, num_vertices=12, gradient_hook=sabotage)
        assert not report.passed
        assert report.worst_tensor == "fc.weight"


@pytest.mark.slow
class TestSyntheticEndToEnd:
    """Test end-to-end accuracy on the default synthetic dataset."""

    def test_gcnn_beats_knn(self, tmp_path):
        """Test 8 classes x 8 trials reach 90% and beat the k-NN baseline."""
        data = write_dataset(tmp_path / "data", classes=8, trials=8, duration_s=60.0)
        config = ExperimentConfig(
            dataset=str(data),
            out_dir=str(tmp_path / "run"),
            network="GC16M8 - GC16M8 - P2 - GC32M5 - GC32M5 - P2 - FC8",
            graph_method="dist",
            k=4,
            inter_band=True,
            feature_kind="entropy",
            epochs=30,
        )
        partitions = load_partitions(config)
        row = run_experiment(config, partitions)
        knn = run_knn(config, partitions)
        assert row.accuracy >= 90.0
        assert knn.accuracy >= 60.0
        assert row.accuracy >= knn.accuracy

        again = run_experiment(config.with_overrides(out_dir=str(tmp_path / "again")), partitions)
        assert again.accuracy == row.accuracy
        assert (tmp_path / "run" / CHECKPOINT_NAME).read_bytes() == (
            tmp_path / "again" / CHECKPOINT_NAME
        ).read_bytes()
