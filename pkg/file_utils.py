"""
file_utils.py

File helpers for run artifacts: JSON snapshots and binary PPM image dumps.

Key Features:
    - JSON file operations for config snapshots, summaries and stage markers
    - Binary PPM (P6) writing and reading of float images in [0, 1]
    - Tiling of image batches into one grid image

Note:
    - All text files use UTF-8 encoding
    - Parent directories are created on write
"""

import json
import os
from pathlib import Path
from typing import Any

import numpy as np

from deskworld.render import from_u8, to_u8

PPM_MAGIC = b"P6"


def _ensure_parent(file_path: str | Path) -> Path:
    # 경로 끝의 슬래시 제거 (예: "data.json/" -> "data.json")
    path = Path(str(file_path).rstrip(os.sep).rstrip("/"))
    if path.parent.exists() and path.parent.is_file():
        raise ValueError(f"Cannot create directory '{path.parent}': it already exists as a file")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def save_json(data: Any, file_path: str | Path, indent: int | None = 2) -> None:
    """
    Save data to a JSON file with sorted keys.

    Raises:
        ValueError: If the parent path exists as a file
        TypeError: If the data is not JSON serializable
    """
    path = _ensure_parent(file_path)
    with open(path, "w", encoding="utf-8") as json_file:
        json.dump(data, json_file, indent=indent, sort_keys=True)


def load_json(file_path: str | Path) -> Any:
    """
    Raises:
        FileNotFoundError: If the specified file does not exist
        json.JSONDecodeError: If the file contains invalid JSON
    """
    with open(file_path, "r", encoding="utf-8") as json_file:
        return json.load(json_file)


def write_ppm(image: np.ndarray, file_path: str | Path) -> Path:
    """
    Write an H×W×3 float image in [0, 1] as binary PPM.

    Raises:
        ValueError: If the image is not H×W×3
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"write_ppm expects H×W×3, got {image.shape}")
    pixels = image if image.dtype == np.uint8 else to_u8(image)
    path = _ensure_parent(file_path)
    height, width = pixels.shape[:2]
    with open(path, "wb") as ppm_file:
        ppm_file.write(b"%s\n%d %d\n255\n" % (PPM_MAGIC, width, height))
        ppm_file.write(np.ascontiguousarray(pixels).tobytes())
    return path


def read_ppm(file_path: str | Path) -> np.ndarray:
    """
    Read a binary PPM written by ``write_ppm`` back into float32 in [0, 1].

    Raises:
        ValueError: On a malformed header or short pixel data
    """
    data = Path(file_path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"truncated PPM header in {file_path}")
        fields.append(data[start:pos])
    magic, width, height, max_value = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    if magic != PPM_MAGIC or max_value != 255:
        raise ValueError(f"unsupported PPM {file_path}: magic {magic!r}, max {max_value}")
    pos += 1
    count = width * height * 3
    if len(data) - pos < count:
        raise ValueError(f"PPM {file_path} has {len(data) - pos} pixel bytes, expected {count}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=count, offset=pos).reshape(height, width, 3)
    return from_u8(pixels)


def image_grid(images: np.ndarray, columns: int | None = None, pad: int = 1) -> np.ndarray:
    """
    Tile N×H×W×3 images row-major into one image with ``pad`` white pixels between tiles.
    """
    images = np.asarray(images, dtype=np.float32)
    if images.ndim != 4 or len(images) == 0:
        raise ValueError(f"image_grid expects a nonempty N×H×W×3 batch, got {images.shape}")
    count, height, width, _ = images.shape
    columns = columns or count
    rows = -(-count // columns)
    grid = np.ones((rows * (height + pad) + pad, columns * (width + pad) + pad, 3), dtype=np.float32)
    for i, image in enumerate(images):
        r, c = divmod(i, columns)
        top, left = pad + r * (height + pad), pad + c * (width + pad)
        grid[top : top + height, left : left + width] = image
    return grid
