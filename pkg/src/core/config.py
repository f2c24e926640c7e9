"""
Experiment configuration loaded from an INI file.

Every field has a default. Keys live in fixed sections; unknown sections
or keys are rejected::

    [data]
    dataset = data/synth
    split_mode = segment

    [graph]
    method = dist
    k = 4
"""

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union
import configparser
import logging
import typing

from src.data.features import FEATURE_KINDS
from src.data.split import SPLIT_MODES
from src.dsp.fir import DEFAULT_ORDER, DESIGN_METHODS
from src.errors import ConfigurationError
from src.graph.coarsening import MAX_COARSEN_LEVELS
from src.graph.construction import GraphConfig
from src.nn.network_spec import NetworkSpec, resolve_network
from src.nn.training import TrainConfig

logger = logging.getLogger(__name__)


def _section(name: str, default: Any = None, **kwargs: Any) -> Any:
    return field(default=default, metadata={"section": name}, **kwargs)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    All settings of one pipeline run.

    Grouped by INI section: ``data``, ``features``, ``graph``, ``network``,
    ``train`` and ``output``.
    """

    # [data]
    dataset: Optional[str] = _section("data")
    subjects: Tuple[int, ...] = _section("data", ())
    per_subject: bool = _section("data", False)
    window_s: float = _section("data", 3.0)
    stride_s: float = _section("data", 1.0)
    split_ratio: float = _section("data", 0.8)
    split_mode: str = _section("data", "segment")
    split_seed: int = _section("data", 0)
    baseline: bool = _section("data", False)

    # [features]
    feature_kind: str = _section("features", "entropy")
    entropy_bins: int = _section("features", 16)
    fir_order: int = _section("features", DEFAULT_ORDER)
    fir_method: str = _section("features", "window")
    fir_coeffs: Optional[str] = _section("features")

    # [graph]
    graph_method: str = _section("graph", "dist")
    k: int = _section("graph", 4)
    p: float = _section("graph", 0.3)
    sigma: Optional[float] = _section("graph")
    inter_band: bool = _section("graph", True)
    graph_seed: int = _section("graph", 0)
    coarsen_levels: int = _section("graph", 0)
    coarsen_seed: int = _section("graph", 0)

    # [network]
    network: str = _section("network", "net2")

    # [train]
    epochs: int = _section("train", 30)
    initial_lr: float = _section("train", 0.001)
    lr_decay: float = _section("train", 0.95)
    l2_coef: float = _section("train", 5e-4)
    batch_size: int = _section("train", 64)
    precision: str = _section("train", "float64")
    seed: int = _section("train", 0)
    repeats: int = _section("train", 1)
    knn_k: int = _section("train", 5)

    # [output]
    out_dir: str = _section("output", "output")
    dump_graph: Optional[str] = _section("output")
    overwrite: bool = _section("output", False)
    jobs: int = _section("output", 1)

    def __post_init__(self) -> None:
        if self.feature_kind not in FEATURE_KINDS:
            raise ConfigurationError(
                f"feature_kind must be one of {FEATURE_KINDS}, got {self.feature_kind!r}"
            )
        if self.split_mode not in SPLIT_MODES:
            raise ConfigurationError(
                f"split_mode must be one of {SPLIT_MODES}, got {self.split_mode!r}"
            )
        if self.fir_method not in DESIGN_METHODS:
            raise ConfigurationError(
                f"fir_method must be one of {DESIGN_METHODS}, got {self.fir_method!r}"
            )
        if not 0 < self.split_ratio < 1:
            raise ConfigurationError(f"split_ratio must be in (0, 1), got {self.split_ratio}")
        if self.window_s <= 0 or self.stride_s <= 0:
            raise ConfigurationError("window_s and stride_s must be positive")
        if self.entropy_bins < 2:
            raise ConfigurationError(f"entropy_bins must be >= 2, got {self.entropy_bins}")
        if not 0 <= self.coarsen_levels <= MAX_COARSEN_LEVELS:
            raise ConfigurationError(
                f"coarsen_levels must be in [0, {MAX_COARSEN_LEVELS}], got {self.coarsen_levels}"
            )
        if self.repeats < 1:
            raise ConfigurationError(f"repeats must be >= 1, got {self.repeats}")
        if self.knn_k < 1:
            raise ConfigurationError(f"knn_k must be >= 1, got {self.knn_k}")
        if self.jobs < 1:
            raise ConfigurationError(f"jobs must be >= 1, got {self.jobs}")
        # component configs validate their own fields
        self.graph_config()
        self.train_config()
        self.network_spec()

    def graph_config(self) -> GraphConfig:
        return GraphConfig(
            method=self.graph_method,
            k=self.k,
            p=self.p,
            sigma=self.sigma,
            inter_band=self.inter_band,
            seed=self.graph_seed,
        )

    def train_config(self, seed: Optional[int] = None) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            initial_lr=self.initial_lr,
            lr_decay=self.lr_decay,
            l2_coef=self.l2_coef,
            batch_size=self.batch_size,
            seed=self.seed if seed is None else seed,
            precision=self.precision,
        )

    def network_spec(self) -> NetworkSpec:
        return resolve_network(self.network)

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with the non-None overrides applied."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **changes) if changes else self

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_ini(self) -> str:
        """INI text that :func:`load_config` reads back into this config."""
        parser = configparser.ConfigParser()
        for f in fields(self):
            section = f.metadata["section"]
            if not parser.has_section(section):
                parser.add_section(section)
            value = getattr(self, f.name)
            if value is None:
                text = ""
            elif isinstance(value, tuple):
                text = ", ".join(str(v) for v in value)
            else:
                text = str(value).lower() if isinstance(value, bool) else str(value)
            parser.set(section, f.name, text)
        lines = []
        for section in parser.sections():
            lines.append(f"[{section}]")
            lines.extend(f"{key} = {value}" for key, value in parser.items(section))
            lines.append("")
        return "\n".join(lines)


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_SECTIONS = {f.metadata["section"] for f in fields(ExperimentConfig)}
_HINTS = typing.get_type_hints(ExperimentConfig)


def _convert(name: str, text: str) -> Any:
    hint = _HINTS[name]
    optional = type(None) in typing.get_args(hint)
    if optional:
        hint = next(a for a in typing.get_args(hint) if a is not type(None))
        if text.strip() == "":
            return None
    try:
        if hint is bool:
            lowered = text.strip().lower()
            if lowered not in configparser.ConfigParser.BOOLEAN_STATES:
                raise ValueError(f"not a boolean: {text!r}")
            return configparser.ConfigParser.BOOLEAN_STATES[lowered]
        if hint is int:
            return int(text)
        if hint is float:
            return float(text)
        if typing.get_origin(hint) is tuple:
            return tuple(int(part) for part in text.replace(",", " ").split())
        return text.strip()
    except ValueError as e:
        raise ConfigurationError(f"Invalid value for {name}: {e}") from e


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """
    Parse INI text.

    Raises:
        ConfigurationError: On syntax errors, unknown sections or keys,
            keys in the wrong section and invalid values
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigurationError(f"Cannot parse {source}: {e}") from e

    values: Dict[str, Any] = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigurationError(f"{source}: unknown section [{section}]")
        for key, text_value in parser.items(section):
            if key not in _FIELDS:
                raise ConfigurationError(f"{source}: unknown key '{key}' in [{section}]")
            expected = _FIELDS[key].metadata["section"]
            if expected != section:
                raise ConfigurationError(
                    f"{source}: key '{key}' belongs in [{expected}], found in [{section}]"
                )
            values[key] = _convert(key, text_value)
    return ExperimentConfig(**values)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read a UTF-8 INI config file.

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigurationError: If the content is invalid
    """
    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except FileNotFoundError:
        logger.error(f"Config file not found: {config_path}")
        raise
    config = parse_config(text, source=str(config_path))
    logger.info(f"Loaded config: {config_path}")
    return config
