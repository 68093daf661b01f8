"""
rng.py

Named counter-based random streams.

Every component draws from its own Philox stream keyed by ``(seed, name)``,
so adding draws in one component never shifts another component's numbers.
Stream states are JSON-serializable for checkpoints.
"""

from __future__ import annotations

import zlib
from typing import Any

import numpy as np


def stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def make_stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Return a fresh generator for stream ``name`` under ``seed``; ``extra`` keys sub-streams."""
    entropy = [int(seed) & 0xFFFFFFFF, stream_key(name), *(int(e) & 0xFFFFFFFF for e in extra)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return {"__ndarray__": value.tolist(), "dtype": str(value.dtype)}
    if isinstance(value, dict):
        return {key: _to_jsonable(val) for key, val in value.items()}
    if isinstance(value, np.integer):
        return int(value)
    return value


def _from_jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        if "__ndarray__" in value:
            return np.array(value["__ndarray__"], dtype=value["dtype"])
        return {key: _from_jsonable(val) for key, val in value.items()}
    return value


def generator_state(rng: np.random.Generator) -> dict[str, Any]:
    return _to_jsonable(rng.bit_generator.state)


def restore_generator(state: dict[str, Any]) -> np.random.Generator:
    bit_generator = np.random.Philox()
    bit_generator.state = _from_jsonable(state)
    return np.random.Generator(bit_generator)


class RngRegistry:
    """Lazily created named streams for one run seed."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[str, np.random.Generator] = {}

    def get(self, name: str) -> np.random.Generator:
        if name not in self._streams:
            self._streams[name] = make_stream(self.seed, name)
        return self._streams[name]

    def state_dict(self) -> dict[str, Any]:
        return {"seed": self.seed, "streams": {name: generator_state(g) for name, g in self._streams.items()}}

    @classmethod
    def from_state_dict(cls, state: dict[str, Any]) -> "RngRegistry":
        registry = cls(state["seed"])
        for name, stream_state in state["streams"].items():
            registry._streams[name] = restore_generator(stream_state)
        return registry
