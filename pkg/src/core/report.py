"""
Report rows and their text / JSON rendering.

Two text tables: the accuracy grid (graph, inter-band, density against
power / entropy) and the network comparison (network, parameter count,
accuracy).
"""

from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
import logging

from src.errors import UsageError
from src.utils.json_writer import save_json

logger = logging.getLogger(__name__)

KNN_LABEL = "k-NN"
FEATURE_COLUMNS = ("power", "entropy")


def format_accuracy(percent: Optional[float]) -> str:
    """Two decimals, round half to even; ``-`` for a missing value."""
    if percent is None:
        return "-"
    return str(Decimal(repr(float(percent))).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def format_parameters(count: Optional[int]) -> str:
    """Parameter count in thousands, e.g. ``944k``."""
    if count is None:
        return "-"
    return f"{round(count / 1000)}k" if count >= 1000 else str(count)


@dataclass
class ReportRow:
    """
    Result of one experiment cell.

    Attributes:
        graph: ``corr``, ``dist``, ``rand`` or ``k-NN``
        inter_band: Inter-band edges on/off (``None`` for baselines)
        density: ``k=4`` / ``p=0.3`` style label (empty for baselines)
        feature: ``power`` or ``entropy``
        accuracy: Test accuracy in percent (mean over runs), ``None`` on failure
        num_parameters: Trainable parameters of the network
        wall_time_s: Elapsed seconds
        network: Layer string of the network
        runs: Number of runs averaged
        accuracy_std: Population std of the per-run accuracies
        error: Failure message of a failed cell
    """

    graph: str
    inter_band: Optional[bool]
    density: str
    feature: str
    accuracy: Optional[float]
    num_parameters: Optional[int] = None
    wall_time_s: float = 0.0
    network: str = ""
    runs: int = 1
    accuracy_std: float = 0.0
    error: Optional[str] = None

    def __post_init__(self) -> None:
        if self.accuracy is not None and not 0.0 <= self.accuracy <= 100.0:
            raise ValueError(f"Accuracy must be a percentage, got {self.accuracy}")

    @property
    def failed(self) -> bool:
        return self.error is not None

    @property
    def accuracy_text(self) -> str:
        return format_accuracy(self.accuracy)

    def key(self) -> Tuple[str, Optional[bool], str]:
        """Row of the results grid this cell belongs to."""
        return (self.graph, self.inter_band, self.density)

    def to_dict(self, include_time: bool = True) -> Dict[str, Any]:
        data = asdict(self)
        if not include_time:
            data.pop("wall_time_s")
        return data


def _inter_band_mark(value: Optional[bool]) -> str:
    if value is None:
        return ""
    return "o" if value else "x"


def render_results_table(rows: Sequence[ReportRow]) -> str:
    """
    Accuracy grid: one line per (graph, inter-band, density), one accuracy
    column per feature kind; baseline rows come last.
    """
    cells: Dict[Tuple[str, Optional[bool], str], Dict[str, ReportRow]] = {}
    for row in rows:
        cells.setdefault(row.key(), {})[row.feature] = row

    header = f"{'Graph':<6} | {'Inter-band':^10} | {'Density':<8} | {'Power':>8} | {'Entropy':>8}"
    lines = [header, "-" * len(header)]
    grid_keys = [k for k in cells if k[0] != KNN_LABEL]
    baseline_keys = [k for k in cells if k[0] == KNN_LABEL]
    previous_graph = None
    for key in grid_keys:
        graph, inter_band, density = key
        if previous_graph is not None and graph != previous_graph:
            lines.append("-" * len(header))
        previous_graph = graph
        values = [cells[key].get(kind) for kind in FEATURE_COLUMNS]
        texts = [format_accuracy(v.accuracy) if v else "" for v in values]
        lines.append(
            f"{graph:<6} | {_inter_band_mark(inter_band):^10} | {density:<8} | "
            f"{texts[0]:>8} | {texts[1]:>8}"
        )
    for key in baseline_keys:
        values = [cells[key].get(kind) for kind in FEATURE_COLUMNS]
        texts = [format_accuracy(v.accuracy) if v else "" for v in values]
        lines.append("-" * len(header))
        lines.append(f"{'k-nearest neighbors':<32} | {texts[0]:>8} | {texts[1]:>8}")

    for row in rows:
        if row.failed:
            mark = _inter_band_mark(row.inter_band)
            lines.append(f"! {row.graph} {mark} {row.density} {row.feature}: {row.error}")
    return "\n".join(lines) + "\n"


def render_network_table(rows: Sequence[Tuple[str, ReportRow]]) -> str:
    """Network comparison: name, parameter count and accuracy per network."""
    header = f"{'Network type':<14} | {'#parameter':>10} | {'Accuracy':>9}"
    lines = [header, "-" * len(header)]
    for name, row in rows:
        accuracy = "-" if row.accuracy is None else f"{format_accuracy(row.accuracy)}%"
        lines.append(f"{name:<14} | {format_parameters(row.num_parameters):>10} | {accuracy:>9}")
    return "\n".join(lines) + "\n"


def save_report(
    text: str,
    rows: Sequence[Union[ReportRow, Tuple[str, ReportRow]]],
    out_dir: Union[str, Path],
    stem: str = "report",
    overwrite: bool = False,
) -> List[Path]:
    """
    Write ``<stem>.txt`` and the machine-readable ``<stem>.json``.

    Raises:
        UsageError: If a file exists and ``overwrite`` is False
    """
    root = Path(out_dir)
    text_path = root / f"{stem}.txt"
    if text_path.exists() and not overwrite:
        raise UsageError(f"{text_path} exists; pass --overwrite to replace it")
    records = []
    for item in rows:
        if isinstance(item, tuple):
            name, row = item
            records.append({"name": name, **row.to_dict()})
        else:
            records.append(item.to_dict())
    json_path = save_json({"rows": records}, root / f"{stem}.json", overwrite=overwrite)
    text_path.write_text(text, encoding="utf-8")
    logger.info(f"Saved report: {text_path}")
    return [text_path, json_path]
