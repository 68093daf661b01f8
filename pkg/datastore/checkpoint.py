"""
checkpoint.py

Versioned checkpoint container for model parameters, optimizer moments, RNG
stream states and free-form metadata.

Layout (little-endian):
    b"VALC", u16 version, u32 header length, header JSON, raw array bytes

The header lists every array with its dtype, shape and byte offset into the
blob that follows, so arrays come back bit-identical.
"""

from __future__ import annotations

import json
import logging
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from autodiff.errors import ShapeError
from autodiff.layers import Module
from autodiff.optim import AdamState
from autodiff.rng import RngRegistry
from datastore.errors import ArchitectureMismatchError, CheckpointError

logger = logging.getLogger(__name__)

MAGIC = b"VALC"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sHI")


@dataclass(slots=True)
class Checkpoint:
    """Parsed checkpoint contents."""

    meta: dict[str, Any] = field(default_factory=dict)
    rng: dict[str, Any] | None = None
    optimizers: dict[str, dict[str, Any]] = field(default_factory=dict)
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    def _group(self, prefix: str) -> dict[str, np.ndarray]:
        start = len(prefix)
        return {name[start:]: value for name, value in self.arrays.items() if name.startswith(prefix)}

    def module_state(self, name: str) -> dict[str, np.ndarray]:
        state = self._group(f"model/{name}/")
        if not state:
            raise CheckpointError(f"checkpoint has no model named {name!r}")
        return state

    def restore_module(self, name: str, module: Module) -> None:
        """
        Load model ``name`` into ``module``.

        Raises:
            ArchitectureMismatchError: If parameter names or shapes differ
        """
        try:
            module.load_state_dict(self.module_state(name))
        except ShapeError as exc:
            raise ArchitectureMismatchError(f"model {name!r}: {exc}") from exc

    def restore_optimizer(self, name: str) -> AdamState:
        if name not in self.optimizers:
            raise CheckpointError(f"checkpoint has no optimizer named {name!r}")
        return AdamState.from_parts(self.optimizers[name], self._group(f"optim/{name}/"))

    def extra(self, name: str) -> np.ndarray:
        key = f"extra/{name}"
        if key not in self.arrays:
            raise CheckpointError(f"checkpoint has no array named {name!r}")
        return self.arrays[key]

    def rng_registry(self) -> RngRegistry:
        if self.rng is None:
            raise CheckpointError("checkpoint carries no RNG state")
        return RngRegistry.from_state_dict(self.rng)


def save_checkpoint(
    path: str | os.PathLike[str],
    modules: Mapping[str, Module] | None = None,
    optimizers: Mapping[str, AdamState] | None = None,
    rng: RngRegistry | None = None,
    meta: Mapping[str, Any] | None = None,
    extras: Mapping[str, np.ndarray] | None = None,
) -> Path:
    """Write a checkpoint atomically (temporary file, then rename)."""
    arrays: dict[str, np.ndarray] = {}
    for name, module in (modules or {}).items():
        for param_name, value in module.state_dict().items():
            arrays[f"model/{name}/{param_name}"] = value
    optimizer_meta = {}
    for name, state in (optimizers or {}).items():
        optimizer_meta[name] = state.to_dict()
        for key, value in state.arrays().items():
            arrays[f"optim/{name}/{key}"] = value
    for name, value in (extras or {}).items():
        arrays[f"extra/{name}"] = np.asarray(value)

    entries = []
    blobs = []
    offset = 0
    for name, value in arrays.items():
        little = np.ascontiguousarray(value).astype(value.dtype.newbyteorder("<"), copy=False)
        raw = little.tobytes()
        entries.append(
            {"name": name, "dtype": little.dtype.str, "shape": list(little.shape), "offset": offset, "nbytes": len(raw)}
        )
        blobs.append(raw)
        offset += len(raw)

    header = {
        "meta": dict(meta or {}),
        "rng": rng.state_dict() if rng is not None else None,
        "optimizers": optimizer_meta,
        "arrays": entries,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_name(target.name + ".tmp")
    with open(tmp, "wb") as handle:
        handle.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)))
        handle.write(header_bytes)
        for raw in blobs:
            handle.write(raw)
    os.replace(tmp, target)
    logger.info("Saved checkpoint %s (%d arrays, %d bytes)", target, len(entries), offset)
    return target


def load_checkpoint(path: str | os.PathLike[str]) -> Checkpoint:
    """
    Read a checkpoint written by ``save_checkpoint``.

    Raises:
        CheckpointError: Bad magic, version mismatch or truncated content
    """
    source = Path(path)
    data = source.read_bytes()
    if len(data) < _PREFIX.size:
        raise CheckpointError(f"{source}: truncated checkpoint header")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{source}: checkpoint version {version}, this reader supports {FORMAT_VERSION}")
    body_start = _PREFIX.size + header_len
    if len(data) < body_start:
        raise CheckpointError(f"{source}: truncated checkpoint header")
    try:
        header = json.loads(data[_PREFIX.size : body_start].decode("utf-8"))
    except ValueError as exc:
        raise CheckpointError(f"{source}: unreadable checkpoint header: {exc}") from exc

    arrays = {}
    for entry in header["arrays"]:
        start = body_start + entry["offset"]
        end = start + entry["nbytes"]
        if end > len(data):
            raise CheckpointError(f"{source}: truncated array {entry['name']}")
        dtype = np.dtype(entry["dtype"])
        value = np.frombuffer(data[start:end], dtype=dtype).reshape(entry["shape"])
        arrays[entry["name"]] = value.astype(dtype.newbyteorder("="))
    return Checkpoint(
        meta=header["meta"],
        rng=header["rng"],
        optimizers=header["optimizers"],
        arrays=arrays,
    )
