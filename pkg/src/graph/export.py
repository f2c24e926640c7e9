"""
Plain-text graph dump for inspection.

Format: first line ``n m``, then ``m`` lines ``i j w`` with ``i < j`` and
weights printed with 9 significant digits.
"""

from pathlib import Path
from typing import List, Tuple, Union
import logging

from src.errors import ValidationError
from src.graph.coarsening import CoarseningHierarchy
from src.graph.weighted_graph import WeightedGraph

logger = logging.getLogger(__name__)


def format_graph_text(g: WeightedGraph) -> str:
    """Render a graph in the dump format."""
    edges = g.edges()
    lines = [f"{g.n} {len(edges)}"]
    lines.extend(f"{i} {j} {w:.9g}" for i, j, w in edges)
    return "\n".join(lines) + "\n"


def write_graph_text(g: WeightedGraph, path: Union[str, Path]) -> Path:
    """
    Write a graph dump.

    Args:
        g: Graph to write
        path: Output file; parent directories are created

    Returns:
        Path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_graph_text(g), encoding="utf-8")
    logger.info(f"Graph written to {path} ({g.n} vertices, {g.num_edges} edges)")
    return path


def load_graph_text(path: Union[str, Path]) -> WeightedGraph:
    """
    Read a graph dump back.

    Raises:
        ValidationError: If the header or an edge line is malformed
    """
    path = Path(path)
    lines = [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise ValidationError(f"{path}: empty graph file")

    try:
        n, m = (int(token) for token in lines[0].split())
    except ValueError as e:
        raise ValidationError(f"{path}: bad header {lines[0]!r}") from e

    if len(lines) - 1 != m:
        raise ValidationError(f"{path}: header announces {m} edges, found {len(lines) - 1}")

    edges: List[Tuple[int, int, float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 3:
            raise ValidationError(f"{path}:{lineno}: expected 'i j w', got {line!r}")
        try:
            i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as e:
            raise ValidationError(f"{path}:{lineno}: {e}") from e
        if not 0 <= i < j < n:
            raise ValidationError(f"{path}:{lineno}: edge ({i}, {j}) out of range for n={n}")
        edges.append((i, j, w))

    return WeightedGraph.from_edges(n, edges)


def write_hierarchy_text(hierarchy: CoarseningHierarchy, path: Union[str, Path]) -> List[Path]:
    """
    Dump every padded level of a coarsening hierarchy.

    Level ``l`` goes to ``<stem>.level<l><suffix>`` next to ``path``.

    Returns:
        Paths written, finest level first
    """
    path = Path(path)
    written = []
    for level, g in enumerate(hierarchy.levels):
        target = path.with_name(f"{path.stem}.level{level}{path.suffix or '.txt'}")
        written.append(write_graph_text(g, target))
    return written
