"""Oracle time-frequency masks, mask application and source-overlap statistics."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigMismatchError, DataError
from .stft import Spectrogram, check_geometry

IRM_EPS = 1e-12

MASK_KINDS = ("binary", "ratio", "external")


@dataclass(eq=False)
class Mask:
    values: np.ndarray
    kind: str = "ratio"

    def __post_init__(self):
        if self.kind not in MASK_KINDS:
            raise ValueError(f"unknown mask kind {self.kind!r}")

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class OverlapStats:
    active_both: int
    total: int
    threshold: float
    degenerate: bool = False

    @property
    def proportion(self) -> float:
        if self.degenerate or self.total == 0:
            return 0.0
        return self.active_both / self.total


def ideal_ratio_mask(src: Spectrogram, others: list[Spectrogram]) -> Mask:
    """``|src| / (|src| + sum |others| + eps)`` per bin."""
    check_geometry(src, *others)
    mag = np.abs(src.frames)
    denom = mag.copy()
    for o in others:
        denom = denom + np.abs(o.frames)
    return Mask(mag / (denom + IRM_EPS), "ratio")


def ideal_binary_mask(src: Spectrogram, others: list[Spectrogram],
                      src_index: int = 0) -> Mask:
    """1 where ``|src|`` dominates every other source.

    ``others`` are the remaining sources in their original order with ``src``
    removed; ``src_index`` is the position ``src`` had in that order. Ties go
    to the lower-indexed source, so the binary masks of a source set
    partition the bins exactly.
    """
    check_geometry(src, *others)
    mag = np.abs(src.frames)
    keep = np.ones(mag.shape, dtype=bool)
    for i, o in enumerate(others):
        other_index = i if i < src_index else i + 1
        om = np.abs(o.frames)
        if other_index < src_index:
            keep &= mag > om
        else:
            keep &= mag >= om
    return Mask(keep.astype(np.float64), "binary")


def oracle_masks(sources: list[Spectrogram], kind: str) -> list[Mask]:
    """One mask per source, ``kind`` in ``{"ibm", "irm", "unity"}``."""
    out = []
    for j, s in enumerate(sources):
        rest = sources[:j] + sources[j + 1:]
        if kind == "ibm":
            out.append(ideal_binary_mask(s, rest, src_index=j))
        elif kind == "irm":
            out.append(ideal_ratio_mask(s, rest))
        elif kind == "unity":
            out.append(Mask(np.ones(s.shape), "external"))
        else:
            raise ValueError(f"unknown oracle mask kind {kind!r}")
    return out


def apply_mask(mix: Spectrogram, mask: Mask) -> Spectrogram:
    if mask.values.shape != mix.frames.shape:
        raise ConfigMismatchError(
            f"mask shape {mask.values.shape} does not match spectrogram {mix.frames.shape}")
    return Spectrogram(mix.frames * mask.values, mix.config)


def overlap_proportion(s1: Spectrogram, s2: Spectrogram, mix: Spectrogram,
                       tau: float = 0.1) -> OverlapStats:
    """Count bins where both sources exceed ``tau`` times the mixture peak."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    check_geometry(s1, s2, mix)
    total = mix.frames.size
    peak = np.abs(mix.frames).max() if total else 0.0
    if peak == 0.0:
        return OverlapStats(0, total, tau, degenerate=True)
    level = tau * peak
    both = (np.abs(s1.frames) >= level) & (np.abs(s2.frames) >= level)
    return OverlapStats(int(both.sum()), total, tau)


# -- external mask files ----------------------------------------------------
#
# Binary layout (little endian):
#   magic   4 bytes  b"TFMK"
#   rows    uint64
#   cols    uint64
#   dtype   8 bytes  b"f64" NUL padded
#   data    rows*cols float64, row-major (frames x bins)

_MAGIC = b"TFMK"
_HEADER = struct.Struct("<4sQQ8s")


def save_mask(path, values) -> None:
    path = Path(path)
    values = np.ascontiguousarray(values, dtype="<f8")
    if values.ndim != 2:
        raise ValueError("mask must be two-dimensional")
    if path.suffix.lower() == ".csv":
        np.savetxt(path, values, delimiter=",", fmt="%.17g")
        return
    with open(path, "wb") as f:
        f.write(_HEADER.pack(_MAGIC, values.shape[0], values.shape[1], b"f64"))
        f.write(values.tobytes())


def load_mask(path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path, newline="") as f:
            rows = [[float(v) for v in row] for row in csv.reader(f) if row]
        values = np.array(rows, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"{path}: ragged mask CSV")
        return values
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: truncated mask header")
    magic, rows, cols, dtype = _HEADER.unpack_from(raw)
    if magic != _MAGIC or dtype.rstrip(b"\0") != b"f64":
        raise DataError(f"{path}: not a float64 mask file")
    body = raw[_HEADER.size:]
    if len(body) != rows * cols * 8:
        raise DataError(f"{path}: expected {rows}x{cols} values, got {len(body) // 8}")
    return np.frombuffer(body, dtype="<f8").reshape(rows, cols).copy()
