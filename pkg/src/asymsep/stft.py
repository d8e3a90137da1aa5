"""Frame-synchronous STFT analysis and overlap-add synthesis.

Frame ``t`` covers input samples ``[t*M, t*M + K)``; the first frame starts
at sample 0 with no padding. The forward transform is unnormalised, the
inverse carries the ``1/K`` factor (numpy's ``rfft``/``irfft`` convention).
With no spectral modification the output satisfies ``y[n] == x[n]`` wherever
``n`` is covered by two synthesis windows, i.e. for ``K - M <= n`` up to the
last complete frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigMismatchError, EmptySpectrogramError
from .windows import WindowConfig, WindowPair


@dataclass(eq=False)
class Spectrogram:
    """Complex STFT matrix of shape ``(num_frames, K // 2 + 1)``."""

    frames: np.ndarray
    config: WindowConfig

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def num_bins(self) -> int:
        return self.frames.shape[1]

    @property
    def frame_advance(self) -> int:
        return self.config.hop

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames.shape

    def magnitude(self) -> np.ndarray:
        return np.abs(self.frames)


def check_geometry(*specs: Spectrogram) -> None:
    """Raise :class:`ConfigMismatchError` unless all spectrograms line up."""
    first = specs[0]
    for other in specs[1:]:
        if other.frames.shape != first.frames.shape or other.config != first.config:
            raise ConfigMismatchError(
                f"spectrogram geometry mismatch: {first.frames.shape} {first.config} "
                f"vs {other.frames.shape} {other.config}")


def num_frames(signal_len: int, config: WindowConfig) -> int:
    K, M = config.analysis_len, config.hop
    if signal_len < K:
        return 0
    return (signal_len - K) // M + 1


def analyze(signal, pair: WindowPair) -> Spectrogram:
    """STFT of ``signal`` using the pair's analysis window; trailing samples
    that do not fill a frame are dropped."""
    x = np.asarray(signal, dtype=np.float64)
    config = pair.config
    K, M = config.analysis_len, config.hop
    if x.ndim != 1:
        raise ValueError("signal must be one-dimensional")
    if len(x) < K:
        raise EmptySpectrogramError(
            f"signal of {len(x)} samples is shorter than one frame ({K})")
    framed = sliding_window_view(x, K)[::M]
    frames = np.fft.rfft(framed * pair.analysis, n=K, axis=1)
    return Spectrogram(frames, config)


def synthesize(spec: Spectrogram, pair: WindowPair) -> np.ndarray:
    """Inverse STFT with the pair's synthesis window and overlap-add at hop M.

    Output length is ``(num_frames - 1) * M + K``.
    """
    config = pair.config
    if spec.config != config or spec.num_bins != config.num_bins:
        raise ConfigMismatchError(
            f"spectrogram config {spec.config} does not match window pair {config}")
    K, M = config.analysis_len, config.hop
    T = spec.num_frames
    if T == 0:
        return np.zeros(0)
    blocks = np.fft.irfft(spec.frames, n=K, axis=1) * pair.synthesis
    out = np.zeros((T - 1) * M + K)
    # only the last 2M samples of each block are nonzero
    lo = K - config.synthesis_len
    for t in range(T):
        start = t * M
        out[start + lo:start + K] += blocks[t, lo:]
    return out


def frame_energy(spec: Spectrogram) -> np.ndarray:
    """Per-frame time-domain energy recovered from the half spectrum (Parseval)."""
    K = spec.config.analysis_len
    p = np.abs(spec.frames) ** 2
    weights = np.full(spec.num_bins, 2.0)
    weights[0] = 1.0
    if K % 2 == 0:
        weights[-1] = 1.0
    return (p * weights).sum(axis=1) / K
