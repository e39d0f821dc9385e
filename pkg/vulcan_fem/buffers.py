"""
vulcan_fem/buffers.py

Flat binary layouts shared by the reference element, the integrators and the kernels. Every buffer
is a contiguous run of little-endian 32-bit floats in C order; the shape travels separately (in the
owning type or a JSON header/manifest).
"""

import json
import os
from typing import Any, Dict, Sequence

import numpy as np

from .encoder import Encoder
from .errors import ConfigurationError, ContractViolationError

FLOAT32_LE = np.dtype("<f4")


def encode_f32(array: np.ndarray) -> bytes:
    """
    Args:
        array (np.ndarray): Any real array.

    Returns:
        bytes: The array rounded to float32, little-endian, C order.
    """

    return np.ascontiguousarray(array, dtype=FLOAT32_LE).tobytes()


def decode_f32(data: bytes, shape: Sequence[int]) -> np.ndarray:
    """
    Decodes a float32 buffer.

    Args:
        data (bytes): Raw buffer.
        shape (Sequence[int]): Expected array shape.

    Returns:
        np.ndarray: Native-endian float32 array of ``shape``.

    Raises:
        ContractViolationError: When the byte count does not match ``shape``.
    """

    expected = int(np.prod(shape)) * FLOAT32_LE.itemsize
    if len(data) != expected:
        raise ContractViolationError(
            f"Buffer holds {len(data)} bytes, shape {tuple(shape)} needs {expected}",
            actual_bytes=len(data), expected_bytes=expected)
    return np.frombuffer(data, dtype=FLOAT32_LE).astype(np.float32).reshape(shape)


def write_f32(path: str, array: np.ndarray) -> int:
    """
    Writes ``array`` as a flat float32 file.

    Returns:
        int: Bytes written.
    """

    data = encode_f32(array)
    directory = os.path.dirname(path)
    try:
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "wb") as f:
            f.write(data)
    except OSError as e:
        raise ConfigurationError(f"Failed to write buffer {path}: {e}", path=path) from e
    return len(data)


def read_f32(path: str, shape: Sequence[int]) -> np.ndarray:
    """Reads a flat float32 file written by :func:`write_f32`."""

    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise ConfigurationError(f"Failed to read buffer {path}: {e}", path=path) from e
    return decode_f32(data, shape)


def write_json(path: str, payload: Any) -> None:
    """Writes ``payload`` as indented JSON through :class:`Encoder`."""

    directory = os.path.dirname(path)
    try:
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, cls=Encoder, indent=2)
    except OSError as e:
        raise ConfigurationError(f"Failed to write JSON {path}: {e}", path=path) from e


def read_json(path: str) -> Dict[str, Any]:
    """Reads a JSON document, mapping I/O and syntax failures to ConfigurationError."""

    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise ConfigurationError(f"Failed to read JSON {path}: {e}", path=path) from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Failed to parse JSON {path}: {e}", path=path) from e
