"""
Experiment pipeline: load, segment, extract features, split, build the
graph, coarsen, train, evaluate and write artifacts.

Every stage failure is re-raised as StageError carrying the stage label.
"""

from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union
import logging
import time

import numpy as np

from src.core.config import ExperimentConfig
from src.core.report import (
    KNN_LABEL,
    ReportRow,
    render_network_table,
    render_results_table,
    save_report,
)
from src.data.features import FeatureSet, build_feature_set, correlation_graphs
from src.data.normalize import NormalizationStats, zscore_normalize
from src.data.recordings import RecordingSet, load_recordings
from src.data.split import SplitIndices, split
from src.dsp.bands import CANONICAL_BANDS
from src.dsp.features import design_filter_bank
from src.dsp.fir import FirFilter
from src.errors import ConfigurationError, StageError, UsageError
from src.graph.coarsening import CoarseningHierarchy, coarsening_depth, graclus_coarsen, perm_data
from src.graph.construction import GRAPH_METHODS, build_merged_graph, rand_graph
from src.graph.electrodes import standard_layout
from src.graph.export import write_graph_text, write_hierarchy_text
from src.graph.weighted_graph import WeightedGraph
from src.nn.checkpoint import load_checkpoint, save_checkpoint
from src.nn.gradcheck import DEFAULT_TOLERANCE, GradCheckReport, grad_check
from src.nn.knn import knn_baseline
from src.nn.model import GraphConvNet
from src.nn.network_spec import NETWORK_PRESETS, NetworkSpec, parse_network_spec
from src.nn.training import EpochMetrics, evaluate, train
from src.utils.json_writer import append_jsonl

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.cgnet"
METRICS_NAME = "metrics.jsonl"
FEATURES_NAME = "features.npz"
GRAPH_NAME = "graph.txt"

DEFAULT_DENSITIES: Dict[str, Tuple[float, ...]] = {
    "corr": (4, 8, 12),
    "dist": (4, 8, 12),
    "rand": (0.3, 0.5, 0.7),
}


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Label failures raised inside the block with a pipeline stage."""
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        logger.error(f"Stage '{name}' failed: {e}")
        raise StageError(name, e) from e


@dataclass
class PreparedData:
    """
    Features and split of one data partition (all subjects or one subject).

    Attributes:
        features: Raw features of every segment
        split: Train/test sample indices
        train_x: Normalized training features
        test_x: Test features normalized with training statistics
        stats: Training normalization statistics
        channels: Electrode names in channel order
        correlation: Per-band correlation graphs of the training segments
        subject: Subject id in per-subject mode
    """

    features: FeatureSet
    split: SplitIndices
    train_x: np.ndarray
    test_x: np.ndarray
    stats: NormalizationStats
    channels: Tuple[str, ...]
    correlation: Optional[List[WeightedGraph]] = None
    subject: Optional[int] = None

    @property
    def train_y(self) -> np.ndarray:
        return self.features.labels[self.split.train]

    @property
    def test_y(self) -> np.ndarray:
        return self.features.labels[self.split.test]

    @property
    def num_classes(self) -> int:
        return int(self.features.labels.max()) + 1


@dataclass
class RunResult:
    """Outcome of training one network on one partition."""

    accuracy: float
    num_parameters: int
    history: List[EpochMetrics] = field(default_factory=list)
    model: Optional[GraphConvNet] = None
    hierarchy: Optional[CoarseningHierarchy] = None


def parse_coefficient_files(spec: Optional[str]) -> Dict[str, Path]:
    """
    Resolve the FIR coefficient option.

    Accepts a directory holding ``<band>.txt`` files or a comma-separated
    list of ``band=path`` pairs.
    """
    if not spec:
        return {}
    candidate = Path(spec)
    if candidate.is_dir():
        files = {}
        for band in CANONICAL_BANDS:
            path = candidate / f"{band.name}.txt"
            if path.exists():
                files[band.name] = path
        if not files:
            raise ConfigurationError(f"No <band>.txt coefficient files in {candidate}")
        return files
    files = {}
    for item in spec.split(","):
        name, sep, path = item.partition("=")
        if not sep or not name.strip() or not path.strip():
            raise ConfigurationError(f"Expected band=path in fir_coeffs, got {item!r}")
        files[name.strip()] = Path(path.strip())
    return files


def load_dataset(config: ExperimentConfig) -> RecordingSet:
    """Recordings of the configured dataset, restricted to the selected subjects."""
    if not config.dataset:
        raise ConfigurationError("No dataset configured (set [data] dataset or pass --dataset)")
    recordings = load_recordings(config.dataset)
    if config.subjects:
        recordings = recordings.select_subjects(config.subjects)
        if len(recordings) == 0:
            raise ConfigurationError(f"No recordings for subjects {list(config.subjects)}")
    return recordings


def make_filters(config: ExperimentConfig, fs: float) -> Tuple[FirFilter, ...]:
    return design_filter_bank(
        fs,
        order=config.fir_order,
        method=config.fir_method,
        coefficient_files=parse_coefficient_files(config.fir_coeffs),
    )


def prepare_partitions(
    config: ExperimentConfig,
    recordings: RecordingSet,
    filters: Sequence[FirFilter],
    need_correlation: Optional[bool] = None,
) -> List[PreparedData]:
    """
    Features, split and normalization for every data partition.

    Pooled mode yields one partition; per-subject mode one per subject.
    Correlation graphs are computed from training segments only.
    """
    if need_correlation is None:
        need_correlation = config.graph_method == "corr"

    with stage("features"):
        features = build_feature_set(
            recordings,
            filters,
            feature_kind=config.feature_kind,
            window_s=config.window_s,
            stride_s=config.stride_s,
            subtract_baseline=config.baseline,
            bins=config.entropy_bins,
            jobs=config.jobs,
        )

    if config.per_subject:
        groups = [(s, np.flatnonzero(features.subjects == s)) for s in recordings.subjects]
    else:
        groups = [(None, np.arange(len(features)))]

    partitions = []
    for subject, members in groups:
        part = features.subset(members)
        with stage("split"):
            trial_groups = part.recording_indices if config.split_mode == "trial" else None
            indices = split(part.labels, config.split_ratio, config.split_seed, trial_groups)
        with stage("normalize"):
            train_x, (test_x,), stats = zscore_normalize(
                part.features[indices.train], [part.features[indices.test]]
            )
        correlation = None
        if need_correlation:
            with stage("graph"):
                correlation = correlation_graphs(
                    recordings, filters, part.subset(indices.train),
                    config.window_s, config.stride_s,
                )
        partitions.append(
            PreparedData(
                features=part,
                split=indices,
                train_x=train_x,
                test_x=test_x,
                stats=stats,
                channels=tuple(recordings.channels),
                correlation=correlation,
                subject=subject,
            )
        )
    return partitions


def load_partitions(
    config: ExperimentConfig, need_correlation: Optional[bool] = None
) -> List[PreparedData]:
    """Load the dataset and prepare its partitions."""
    with stage("load"):
        recordings = load_dataset(config)
    with stage("filters"):
        filters = make_filters(config, recordings.fs)
    return prepare_partitions(config, recordings, filters, need_correlation)


def resolve_spec(config: ExperimentConfig, num_classes: int) -> NetworkSpec:
    """Configured network with its output layer sized to the dataset."""
    spec = config.network_spec()
    if spec.num_classes != num_classes:
        logger.info(f"Output layer resized from FC{spec.num_classes} to FC{num_classes}")
        spec = spec.with_classes(num_classes)
    return spec


def build_graph(config: ExperimentConfig, data: PreparedData) -> WeightedGraph:
    layout = standard_layout().subset(data.channels)
    return build_merged_graph(config.graph_config(), layout, data.correlation)


def coarsen_for(config: ExperimentConfig, graph: WeightedGraph, spec: NetworkSpec):
    return graclus_coarsen(
        graph,
        coarsening_depth(config.coarsen_levels, spec.num_pools),
        seed=config.coarsen_seed,
        min_levels=max(spec.num_pools, 1),
    )


def _dtype(config: ExperimentConfig) -> type:
    return np.float64 if config.precision == "float64" else np.float32


def _check_writable(paths: Sequence[Path], overwrite: bool) -> None:
    for path in paths:
        if path.exists() and not overwrite:
            raise UsageError(f"{path} exists; pass --overwrite to replace it")


def dump_graph(
    config: ExperimentConfig, graph: WeightedGraph, hierarchy: CoarseningHierarchy
) -> List[Path]:
    """Write the merged graph and every coarsening level when dumping is enabled."""
    if config.dump_graph is None:
        return []
    target = Path(config.dump_graph) if config.dump_graph else Path(config.out_dir) / GRAPH_NAME
    _check_writable([target], config.overwrite)
    return [write_graph_text(graph, target)] + write_hierarchy_text(hierarchy, target)


def train_partition(
    config: ExperimentConfig,
    data: PreparedData,
    seed: int,
    out_dir: Optional[Path] = None,
) -> RunResult:
    """
    Train and evaluate one network on one partition.

    With ``out_dir`` the checkpoint and per-epoch metrics are written there.
    """
    with stage("graph"):
        graph = build_graph(config, data)
    spec = resolve_spec(config, data.num_classes)
    with stage("coarsen"):
        hierarchy = coarsen_for(config, graph, spec)
    with stage("artifacts"):
        dump_graph(config, graph, hierarchy)

    padded_n = hierarchy.padded_sizes[0]
    train_x = perm_data(data.train_x, hierarchy.perm, padded_n, vertex_axis=1)
    test_x = perm_data(data.test_x, hierarchy.perm, padded_n, vertex_axis=1)

    metrics_path = None
    if out_dir is not None:
        metrics_path = out_dir / METRICS_NAME
        _check_writable([metrics_path, out_dir / CHECKPOINT_NAME], config.overwrite)
        if metrics_path.exists():
            metrics_path.unlink()

    def record(metrics: EpochMetrics) -> None:
        if metrics_path is not None:
            append_jsonl(metrics.to_dict(), metrics_path)

    with stage("train"):
        model = GraphConvNet.from_hierarchy(spec, hierarchy, seed=seed, dtype=_dtype(config))
        result = train(
            model, train_x, data.train_y, config.train_config(seed),
            eval_x=test_x, eval_y=data.test_y, on_epoch=record,
        )
    with stage("evaluate"):
        accuracy = evaluate(model, test_x, data.test_y)
    logger.info(f"Test accuracy {accuracy:.4f} on {len(data.test_y)} samples")

    if out_dir is not None:
        with stage("artifacts"):
            save_checkpoint(
                out_dir / CHECKPOINT_NAME,
                model,
                seed=seed,
                epoch=len(result.history),
                extra=checkpoint_header(config, data),
                overwrite=config.overwrite,
            )
    return RunResult(
        accuracy=accuracy,
        num_parameters=model.num_parameters,
        history=result.history,
        model=model,
        hierarchy=hierarchy,
    )


def checkpoint_header(config: ExperimentConfig, data: PreparedData) -> Dict[str, object]:
    """Settings needed to rebuild the network's graph; output paths excluded."""
    return {
        "graph_method": config.graph_method,
        "density": config.graph_config().density_label,
        "inter_band": config.inter_band,
        "feature_kind": config.feature_kind,
        "graph_seed": config.graph_seed,
        "coarsen_seed": config.coarsen_seed,
        "coarsen_levels": config.coarsen_levels,
        "split_seed": config.split_seed,
        "subject": data.subject,
    }


def _run_dirs(
    config: ExperimentConfig, partitions: Sequence[PreparedData]
) -> List[Tuple[PreparedData, int, Path]]:
    root = Path(config.out_dir)
    runs = []
    for data in partitions:
        base = root if data.subject is None else root / f"subject_{data.subject:02d}"
        for r in range(config.repeats):
            out = base if config.repeats == 1 else base / f"repeat_{r}"
            runs.append((data, config.seed + r, out))
    return runs


def run_experiment(
    config: ExperimentConfig,
    partitions: Optional[Sequence[PreparedData]] = None,
    write_report: bool = True,
) -> ReportRow:
    """
    Run the full pipeline for one configuration.

    Args:
        config: Experiment settings
        partitions: Prepared data to reuse (loaded from the dataset when None)
        write_report: Write ``report.txt`` / ``report.json`` to the output dir

    Returns:
        ReportRow with the accuracy averaged over partitions and repeats

    Raises:
        StageError: Labelled with the failing stage
    """
    start = time.perf_counter()
    graph_config = config.graph_config()
    logger.info(
        f"Experiment: graph={config.graph_method} {graph_config.density_label} "
        f"inter_band={config.inter_band} feature={config.feature_kind} network={config.network}"
    )
    if partitions is None:
        partitions = load_partitions(config)

    accuracies = []
    num_parameters = None
    network = ""
    for data, seed, out_dir in _run_dirs(config, partitions):
        result = train_partition(config, data, seed, out_dir)
        accuracies.append(result.accuracy)
        num_parameters = result.num_parameters
        network = str(result.model.spec) if result.model is not None else ""

    percent = 100.0 * np.asarray(accuracies)
    row = ReportRow(
        graph=config.graph_method,
        inter_band=config.inter_band,
        density=graph_config.density_label,
        feature=config.feature_kind,
        accuracy=float(percent.mean()),
        num_parameters=num_parameters,
        wall_time_s=time.perf_counter() - start,
        network=network,
        runs=len(accuracies),
        accuracy_std=float(percent.std()),
    )
    if write_report:
        with stage("artifacts"):
            save_report(
                render_results_table([row]), [row], config.out_dir, overwrite=config.overwrite
            )
    return row


def run_knn(
    config: ExperimentConfig, partitions: Optional[Sequence[PreparedData]] = None
) -> ReportRow:
    """k-NN baseline on the normalized features of every partition."""
    start = time.perf_counter()
    if partitions is None:
        partitions = load_partitions(config, need_correlation=False)
    with stage("knn"):
        accuracies = [
            knn_baseline(data.train_x, data.train_y, data.test_x, data.test_y, config.knn_k)
            for data in partitions
        ]
    percent = 100.0 * np.asarray(accuracies)
    return ReportRow(
        graph=KNN_LABEL,
        inter_band=None,
        density=f"k={config.knn_k}",
        feature=config.feature_kind,
        accuracy=float(percent.mean()),
        wall_time_s=time.perf_counter() - start,
        runs=len(accuracies),
        accuracy_std=float(percent.std()),
    )


def grid_configs(
    base: ExperimentConfig,
    methods: Sequence[str] = GRAPH_METHODS,
    densities: Optional[Mapping[str, Sequence[float]]] = None,
    inter_bands: Sequence[bool] = (False, True),
    features: Sequence[str] = ("power", "entropy"),
) -> List[ExperimentConfig]:
    """
    Cell configurations in table order: method, inter-band, density, feature.

    Each cell writes its artifacts to its own subdirectory of the output dir.
    """
    densities = dict(DEFAULT_DENSITIES, **(densities or {}))
    configs = []
    for method in methods:
        if method not in GRAPH_METHODS:
            raise ConfigurationError(f"Unknown graph method {method!r}")
        for inter_band in inter_bands:
            for density in densities[method]:
                for kind in features:
                    density_key = "p" if method == "rand" else "k"
                    value = float(density) if method == "rand" else int(density)
                    name = f"{method}_{density_key}{value:g}_{'inter' if inter_band else 'intra'}"
                    configs.append(
                        replace_config(
                            base,
                            graph_method=method,
                            inter_band=inter_band,
                            feature_kind=kind,
                            out_dir=str(Path(base.out_dir) / "cells" / f"{name}_{kind}"),
                            **{density_key: value},
                        )
                    )
    return configs


def replace_config(base: ExperimentConfig, **changes: object) -> ExperimentConfig:
    return replace(base, **changes)


_WORKER_PARTITIONS: Dict[str, List[PreparedData]] = {}


def _init_worker(partitions: Dict[str, List[PreparedData]]) -> None:
    _WORKER_PARTITIONS.clear()
    _WORKER_PARTITIONS.update(partitions)


def _run_cell(
    config: ExperimentConfig, partitions: Optional[Sequence[PreparedData]] = None
) -> ReportRow:
    if partitions is None:
        partitions = _WORKER_PARTITIONS[config.feature_kind]
    start = time.perf_counter()
    try:
        return run_experiment(config, partitions, write_report=False)
    except Exception as e:
        logger.warning(f"Grid cell {config.out_dir} failed: {e}")
        return ReportRow(
            graph=config.graph_method,
            inter_band=config.inter_band,
            density=config.graph_config().density_label,
            feature=config.feature_kind,
            accuracy=None,
            wall_time_s=time.perf_counter() - start,
            error=str(e),
        )


def run_grid(
    base: ExperimentConfig,
    methods: Sequence[str] = GRAPH_METHODS,
    densities: Optional[Mapping[str, Sequence[float]]] = None,
    inter_bands: Sequence[bool] = (False, True),
    features: Sequence[str] = ("power", "entropy"),
    jobs: Optional[int] = None,
) -> List[ReportRow]:
    """
    Run the accuracy grid plus one k-NN row per feature kind.

    Data is prepared once per feature kind and shared by the cells. A
    failing cell is recorded in its row and the grid continues. With
    ``jobs > 1`` cells run in worker processes; rows keep grid order.

    Returns:
        GCNN rows in grid order followed by the baseline rows
    """
    configs = grid_configs(base, methods, densities, inter_bands, features)
    need_correlation = "corr" in methods
    jobs = base.jobs if jobs is None else jobs
    logger.info(f"Grid: {len(configs)} cells, {len(features)} baseline row(s), jobs={jobs}")

    with stage("load"):
        recordings = load_dataset(base)
    with stage("filters"):
        filters = make_filters(base, recordings.fs)
    prepared = {
        kind: prepare_partitions(
            replace_config(base, feature_kind=kind), recordings, filters, need_correlation
        )
        for kind in features
    }

    if jobs > 1:
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_init_worker, initargs=(prepared,)
        ) as pool:
            rows = list(pool.map(_run_cell, configs))
    else:
        rows = [_run_cell(cfg, prepared[cfg.feature_kind]) for cfg in configs]

    for kind in features:
        rows.append(run_knn(replace_config(base, feature_kind=kind), prepared[kind]))

    failed = sum(row.failed for row in rows)
    if failed:
        logger.warning(f"{failed} grid cell(s) failed")
    with stage("artifacts"):
        save_report(render_results_table(rows), rows, base.out_dir, overwrite=base.overwrite)
    return rows


def run_networks(
    base: ExperimentConfig, networks: Sequence[str] = tuple(NETWORK_PRESETS)
) -> List[Tuple[str, ReportRow]]:
    """
    Train every network on the same prepared data and tabulate
    parameter counts and accuracies.
    """
    partitions = load_partitions(base)
    rows = []
    for name in networks:
        cell = replace_config(
            base, network=name, out_dir=str(Path(base.out_dir) / "networks" / name)
        )
        rows.append((name, _run_cell(cell, partitions)))
    with stage("artifacts"):
        save_report(
            render_network_table(rows), rows, base.out_dir, stem="networks",
            overwrite=base.overwrite,
        )
    return rows


def evaluate_checkpoint(config: ExperimentConfig, checkpoint_path: Union[str, Path]) -> ReportRow:
    """
    Re-evaluate a saved network on the test split of its configuration.

    The graph and hierarchy are rebuilt from the config; the checkpoint
    provides the network structure and parameters.
    """
    start = time.perf_counter()
    with stage("load"):
        checkpoint = load_checkpoint(checkpoint_path)
    partitions = load_partitions(config)
    subject = checkpoint.header.get("subject")
    matching = [p for p in partitions if p.subject == subject] or list(partitions)
    data = matching[0]

    with stage("graph"):
        graph = build_graph(config, data)
    spec = parse_network_spec(checkpoint.spec)
    with stage("coarsen"):
        hierarchy = coarsen_for(config, graph, spec)
    with stage("evaluate"):
        model = GraphConvNet.from_hierarchy(spec, hierarchy, dtype=_dtype(config))
        model.load_parameters(checkpoint.params)
        padded_n = hierarchy.padded_sizes[0]
        test_x = perm_data(data.test_x, hierarchy.perm, padded_n, vertex_axis=1)
        accuracy = evaluate(model, test_x, data.test_y)
    return ReportRow(
        graph=config.graph_method,
        inter_band=config.inter_band,
        density=config.graph_config().density_label,
        feature=config.feature_kind,
        accuracy=100.0 * accuracy,
        num_parameters=model.num_parameters,
        wall_time_s=time.perf_counter() - start,
        network=str(spec),
    )


def run_gradcheck(
    config: ExperimentConfig,
    num_vertices: int = 16,
    edge_probability: float = 0.5,
    tolerance: float = DEFAULT_TOLERANCE,
    max_entries: Optional[int] = None,
    gradient_hook=None,
) -> GradCheckReport:
    """
    Gradient check of the configured network on a small random graph.

    Args:
        config: Provides the network, seeds and coarsening settings
        num_vertices: Vertices of the random graph
        edge_probability: Edge probability of the random graph
        tolerance: Pass threshold on the relative error
        max_entries: Entries compared per tensor; None checks all
        gradient_hook: Optional callback altering analytic gradients

    Returns:
        GradCheckReport (``passed`` tells the outcome)
    """
    spec = config.network_spec()
    with stage("graph"):
        graph = rand_graph(num_vertices, edge_probability, config.graph_seed)
    with stage("coarsen"):
        hierarchy = coarsen_for(config, graph, spec)
    with stage("gradcheck"):
        model = GraphConvNet.from_hierarchy(spec, hierarchy, seed=config.seed)
        rng = np.random.default_rng(config.seed)
        signal = rng.normal(size=num_vertices)
        sample = perm_data(signal, hierarchy.perm, hierarchy.padded_sizes[0])
        label = int(rng.integers(spec.num_classes))
        return grad_check(
            model, sample, label, tolerance=tolerance, max_entries=max_entries,
            seed=config.seed, gradient_hook=gradient_hook,
        )


def extract_features_artifact(config: ExperimentConfig) -> Tuple[FeatureSet, Path]:
    """Compute features of the configured dataset and save them as ``features.npz``."""
    with stage("load"):
        recordings = load_dataset(config)
    with stage("filters"):
        filters = make_filters(config, recordings.fs)
    with stage("features"):
        features = build_feature_set(
            recordings,
            filters,
            feature_kind=config.feature_kind,
            window_s=config.window_s,
            stride_s=config.stride_s,
            subtract_baseline=config.baseline,
            bins=config.entropy_bins,
            jobs=config.jobs,
        )
    with stage("artifacts"):
        path = features.save(Path(config.out_dir) / FEATURES_NAME, overwrite=config.overwrite)
    return features, path


def build_graph_artifact(config: ExperimentConfig) -> Tuple[WeightedGraph, CoarseningHierarchy]:
    """Build, coarsen and dump the configured graph (training split only)."""
    if config.graph_method == "corr":
        data = load_partitions(config, need_correlation=True)[0]
        with stage("graph"):
            graph = build_graph(config, data)
    else:
        with stage("graph"):
            graph = build_merged_graph(config.graph_config(), standard_layout())
    with stage("coarsen"):
        hierarchy = coarsen_for(config, graph, config.network_spec())
    if config.dump_graph is None:
        config = replace_config(config, dump_graph="")
    with stage("artifacts"):
        dump_graph(config, graph, hierarchy)
    return graph, hierarchy
