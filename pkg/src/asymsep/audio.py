"""Mono WAV input/output (16-bit PCM and 32-bit float)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import DataError


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a mono WAV file as float64 in [-1, 1]. Returns ``(signal, rate)``."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if data.ndim != 1:
        raise DataError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        x = data.astype(np.float64) / 2147483648.0
    elif data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(np.float64)
    else:
        raise DataError(f"{path}: unsupported sample format {data.dtype}")
    return x, int(rate)


def write_wav(path, signal, rate: int, fmt: str = "float32") -> None:
    """Write ``signal`` as mono WAV; ``fmt`` is ``"float32"`` or ``"pcm16"``."""
    x = np.asarray(signal, dtype=np.float64)
    if fmt == "float32":
        data = x.astype(np.float32)
    elif fmt == "pcm16":
        data = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
    else:
        raise ValueError(f"unknown WAV format {fmt!r}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(path, int(rate), data)
