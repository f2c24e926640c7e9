"""
Binary checkpoint of network parameters.

Layout: the magic line ``CGNET1``, one line of UTF-8 JSON header, then
every parameter as little-endian float64 in declaration order.
"""

from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union
import json
import logging

import numpy as np

from src.errors import UsageError, ValidationError
from src.nn.model import GraphConvNet

logger = logging.getLogger(__name__)

MAGIC = b"CGNET1\n"
FORMAT_DTYPE = np.dtype("<f8")


@dataclass
class Checkpoint:
    """Decoded checkpoint: header fields and named parameter arrays."""

    header: Dict[str, Any]
    params: "OrderedDict[str, np.ndarray]"

    @property
    def spec(self) -> str:
        return str(self.header["spec"])

    @property
    def seed(self) -> int:
        return int(self.header["seed"])

    @property
    def epoch(self) -> int:
        return int(self.header["epoch"])


def encode_checkpoint(
    params: Mapping[str, np.ndarray], header: Mapping[str, Any]
) -> bytes:
    """
    Serialize parameters and header fields.

    ``names`` and ``shapes`` are derived from ``params`` and override any
    same-named header entries. Keys are sorted so equal inputs give equal
    bytes.
    """
    full = dict(header)
    full["names"] = list(params)
    full["shapes"] = [list(np.shape(value)) for value in params.values()]
    header_line = json.dumps(full, sort_keys=True, separators=(",", ":")).encode("utf-8")
    if b"\n" in header_line:
        raise ValidationError("Checkpoint header must fit on one line")
    body = b"".join(
        np.ascontiguousarray(value, dtype=FORMAT_DTYPE).tobytes() for value in params.values()
    )
    return MAGIC + header_line + b"\n" + body


def decode_checkpoint(data: bytes) -> Checkpoint:
    """
    Parse checkpoint bytes.

    Raises:
        ValidationError: On a wrong magic, a malformed header or a payload
            whose size does not match the declared shapes
    """
    if not data.startswith(MAGIC):
        raise ValidationError("Not a checkpoint: missing CGNET1 magic")
    end = data.find(b"\n", len(MAGIC))
    if end < 0:
        raise ValidationError("Checkpoint header is not terminated")
    try:
        header = json.loads(data[len(MAGIC):end].decode("utf-8"))
        names = list(header["names"])
        shapes = [tuple(int(d) for d in shape) for shape in header["shapes"]]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"Malformed checkpoint header: {e}") from e
    if len(names) != len(shapes):
        raise ValidationError(f"{len(names)} parameter names but {len(shapes)} shapes")

    payload = data[end + 1:]
    expected = sum(int(np.prod(shape)) for shape in shapes) * FORMAT_DTYPE.itemsize
    if len(payload) != expected:
        raise ValidationError(
            f"Checkpoint payload has {len(payload)} bytes, header declares {expected}"
        )
    values = np.frombuffer(payload, dtype=FORMAT_DTYPE)
    params: "OrderedDict[str, np.ndarray]" = OrderedDict()
    offset = 0
    for name, shape in zip(names, shapes):
        size = int(np.prod(shape))
        params[name] = values[offset:offset + size].reshape(shape).astype(np.float64)
        offset += size
    return Checkpoint(header=header, params=params)


def save_checkpoint(
    path: Union[str, Path],
    model: GraphConvNet,
    seed: int,
    epoch: int,
    extra: Optional[Mapping[str, Any]] = None,
    overwrite: bool = False,
) -> Path:
    """
    Write the parameters of ``model``.

    Args:
        path: Output file
        model: Trained network
        seed: Training seed recorded in the header
        epoch: Number of completed epochs
        extra: Additional JSON-serializable header fields
        overwrite: Replace an existing file

    Returns:
        Path written

    Raises:
        UsageError: If the file exists and ``overwrite`` is False
    """
    output_path = Path(path)
    if output_path.exists() and not overwrite:
        raise UsageError(f"{output_path} exists; pass --overwrite to replace it")
    header: Dict[str, Any] = {
        "spec": str(model.spec),
        "seed": int(seed),
        "epoch": int(epoch),
        "vertex_counts": list(model.vertex_counts),
        "in_features": model.in_features,
        "num_classes": model.spec.num_classes,
    }
    if extra:
        header.update(extra)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_bytes(encode_checkpoint(model.parameters(), header))
    logger.info(f"Saved checkpoint: {output_path} ({model.num_parameters} parameters)")
    return output_path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Read a checkpoint file.

    Raises:
        FileNotFoundError: If the file does not exist
        ValidationError: If the content is not a valid checkpoint
    """
    input_path = Path(path)
    try:
        data = input_path.read_bytes()
    except FileNotFoundError:
        logger.error(f"Checkpoint not found: {input_path}")
        raise
    checkpoint = decode_checkpoint(data)
    logger.info(
        f"Loaded checkpoint: {input_path} ({checkpoint.spec}, epoch {checkpoint.header['epoch']})"
    )
    return checkpoint
