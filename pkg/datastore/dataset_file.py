"""
dataset_file.py

Versioned binary container for the prior dataset.

Layout (little-endian):
    header: b"VALD", u16 version, u16 image height, u16 image width,
            u16 action dim, u32 record count
    record: u32 payload length, then the payload
        u32 spec JSON length, spec JSON (UTF-8)
        u32 T, u16 state dim
        images  u8  (T+1)·H·W·3
        actions f32 T·action dim
        states  f32 (T+1)·state dim

Images are stored as 8-bit levels; rendered observations are already snapped to
those levels so the round trip is bit-exact. Images off the grid are rejected.
"""

from __future__ import annotations

import json
import logging
import os
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from datastore.errors import BadMagicError, DatasetFormatError, TruncatedFileError, VersionMismatchError
from datastore.records import GroundTruth, TrajectoryRecord
from deskworld.models import ACTION_DIM, SceneSpec
from deskworld.render import from_u8, to_u8

logger = logging.getLogger(__name__)

MAGIC = b"VALD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHHHI")
_U32 = struct.Struct("<I")
_RECORD_META = struct.Struct("<IH")


def _encode_record(record: TrajectoryRecord) -> bytes:
    spec_bytes = json.dumps(record.spec.to_dict(), sort_keys=True).encode("utf-8")
    states = record.ground_truth.storage_array()
    parts = [
        _U32.pack(len(spec_bytes)),
        spec_bytes,
        _RECORD_META.pack(record.length, states.shape[1]),
        to_u8(record.images).tobytes(),
        record.actions.astype("<f4").tobytes(),
        states.astype("<f4").tobytes(),
    ]
    return b"".join(parts)


def save_dataset(records: Sequence[TrajectoryRecord], path: str | os.PathLike[str]) -> Path:
    """
    Write ``records`` to ``path``.

    All records must share one image size and hold images already on the 8-bit
    grid. An empty sequence writes a valid file with zero records and a 0×0
    image size.
    """
    target = Path(path)
    if records:
        height, width = records[0].image_size
        mismatched = [i for i, r in enumerate(records) if r.image_size != (height, width)]
        if mismatched:
            raise DatasetFormatError(f"records {mismatched[:5]} do not match image size {height}x{width}")
    else:
        height = width = 0
    off_grid = [i for i, r in enumerate(records) if not np.array_equal(from_u8(to_u8(r.images)), r.images)]
    if off_grid:
        raise DatasetFormatError(f"records {off_grid[:5]} have images off the 8-bit grid and would not reload exactly")

    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "wb") as handle:
        handle.write(_HEADER.pack(MAGIC, FORMAT_VERSION, height, width, ACTION_DIM, len(records)))
        for record in records:
            payload = _encode_record(record)
            handle.write(_U32.pack(len(payload)))
            handle.write(payload)
    logger.info("Wrote %d records to %s", len(records), target)
    return target


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise TruncatedFileError(
                f"{self.path}: truncated while reading {what} "
                f"(needed {size} bytes at offset {self.offset}, file has {len(self.data)})"
            )
        chunk = self.data[self.offset : end]
        self.offset = end
        return chunk

    def unpack(self, fmt: struct.Struct, what: str) -> tuple:
        return fmt.unpack(self.take(fmt.size, what))


def _decode_record(payload: bytes, height: int, width: int, action_dim: int, path: Path) -> TrajectoryRecord:
    reader = _Reader(payload, path)
    (spec_len,) = reader.unpack(_U32, "spec length")
    try:
        spec = SceneSpec.from_dict(json.loads(reader.take(spec_len, "spec").decode("utf-8")))
    except (ValueError, KeyError, TypeError) as exc:
        raise DatasetFormatError(f"{path}: unreadable scene spec: {exc}") from exc
    steps, state_dim = reader.unpack(_RECORD_META, "record meta")
    image_bytes = (steps + 1) * height * width * 3
    images = np.frombuffer(reader.take(image_bytes, "images"), dtype=np.uint8)
    actions = np.frombuffer(reader.take(steps * action_dim * 4, "actions"), dtype="<f4")
    states = np.frombuffer(reader.take((steps + 1) * state_dim * 4, "states"), dtype="<f4")
    if reader.offset != len(payload):
        raise DatasetFormatError(f"{path}: {len(payload) - reader.offset} unexpected bytes inside a record")
    return TrajectoryRecord(
        spec=spec,
        images=from_u8(images.reshape(steps + 1, height, width, 3)),
        actions=actions.reshape(steps, action_dim).astype(np.float32),
        ground_truth=GroundTruth(spec.seed, states.reshape(steps + 1, state_dim).astype(np.float32)),
    )


def load_dataset(path: str | os.PathLike[str]) -> list[TrajectoryRecord]:
    """
    Read every record of a dataset file.

    Raises:
        BadMagicError: If the file is not a dataset file
        VersionMismatchError: If the file uses another format version
        TruncatedFileError: If the file ends early; no records are returned
        DatasetFormatError: For any other structural problem
    """
    source = Path(path)
    reader = _Reader(source.read_bytes(), source)
    if len(reader.data) >= 4 and reader.data[:4] != MAGIC:
        raise BadMagicError(f"{source}: bad magic {reader.data[:4]!r}, expected {MAGIC!r}")
    magic, version, height, width, action_dim, count = reader.unpack(_HEADER, "header")
    if magic != MAGIC:
        raise BadMagicError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{source}: format version {version}, this reader supports {FORMAT_VERSION}")
    if action_dim != ACTION_DIM:
        raise DatasetFormatError(f"{source}: action dim {action_dim}, expected {ACTION_DIM}")

    records = []
    for index in range(count):
        (size,) = reader.unpack(_U32, f"record {index} length")
        records.append(_decode_record(reader.take(size, f"record {index}"), height, width, action_dim, source))
    if reader.offset != len(reader.data):
        raise DatasetFormatError(
            f"{source}: {len(reader.data) - reader.offset} trailing bytes after {count} declared records"
        )
    logger.debug("Loaded %d records from %s", len(records), source)
    return records
