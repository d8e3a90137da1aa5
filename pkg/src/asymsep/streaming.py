"""Streaming mask-based processing with a fixed algorithmic latency.

Input arrives in chunks of any size. Internally the stream is re-blocked into
hops of ``M`` samples; each completed ``K``-sample frame is windowed,
transformed, masked by an estimator, inverted, windowed with the synthesis
window and overlap-added. After ``c`` input samples have been consumed the
processor has emitted exactly ``max(0, c - 2M)`` output samples, and output
sample ``n`` only depends on input samples ``0 .. n + 2M - 1``.

Output sample ``n`` is the overlap-add reconstruction at stream index ``n``:
with a unity mask it equals input sample ``n`` once ``n >= K - M``. Placed on
the input clock (sample ``n`` leaves when input ``n + 2M`` arrives) the output
is the input delayed by ``2M`` samples.
"""

from __future__ import annotations

import logging
from typing import Callable, Protocol

import numpy as np

from .windows import WindowPair

logger = logging.getLogger(__name__)


class MaskEstimator(Protocol):
    def __call__(self, spectrum: np.ndarray, frame_index: int) -> np.ndarray:
        """Return a real mask in [0, 1] with the same shape as ``spectrum``."""


def unity_estimator(spectrum, frame_index):
    return np.ones(spectrum.shape)


def zero_estimator(spectrum, frame_index):
    return np.zeros(spectrum.shape)


class PrecomputedMaskEstimator:
    """Serve rows of an externally computed ``(frames, bins)`` mask matrix.

    Frames beyond the end of the matrix raise ``IndexError``, which the
    stream treats as an estimator failure (unity pass-through).
    """

    def __init__(self, values):
        self.values = np.asarray(values, dtype=np.float64)

    def __call__(self, spectrum, frame_index):
        return self.values[frame_index]


class StreamState:
    """Mutable buffers for one stream. Not safe to share between threads."""

    def __init__(self, pair: WindowPair):
        K = pair.config.analysis_len
        self.config = pair.config
        self.inbuf = np.zeros(K)     # samples [frames_done * M, ... + fill)
        self.fill = 0
        self.acc = np.zeros(K)       # overlap-add for [acc_start, acc_start + K)
        self.acc_start = 0
        self.samples_consumed = 0
        self.samples_emitted = 0
        self.frames_done = 0
        self.estimator_failures = 0

    @property
    def latency_samples(self) -> int:
        return self.config.synthesis_len


def _run_estimator(estimator, spectrum, frame_index, state):
    try:
        mask = np.asarray(estimator(spectrum, frame_index), dtype=np.float64)
        if mask.shape != spectrum.shape or not np.all(np.isfinite(mask)):
            raise ValueError(f"bad mask of shape {mask.shape}")
    except Exception as exc:  # the stream must keep going
        state.estimator_failures += 1
        logger.warning("mask estimator failed on frame %d (%s); passing frame through",
                       frame_index, exc)
        return None
    return np.clip(mask, 0.0, 1.0)


def _process_frame(state: StreamState, pair: WindowPair, estimator) -> None:
    K, M, S = state.config.analysis_len, state.config.hop, state.config.synthesis_len
    t = state.frames_done
    spectrum = np.fft.rfft(state.inbuf * pair.analysis)
    mask = _run_estimator(estimator, spectrum, t, state)
    if mask is not None:
        spectrum = spectrum * mask
    block = np.fft.irfft(spectrum, n=K) * pair.synthesis

    shift = t * M - state.acc_start
    if shift:
        state.acc[:K - shift] = state.acc[shift:]
        state.acc[K - shift:] = 0.0
        state.acc_start = t * M
    state.acc[K - S:] += block[K - S:]

    state.inbuf[:K - M] = state.inbuf[M:]
    state.fill = K - M
    state.frames_done += 1


def _emit(state: StreamState, out: list) -> None:
    target = state.samples_consumed - state.latency_samples
    if target <= state.samples_emitted:
        return
    lo = state.samples_emitted - state.acc_start
    hi = target - state.acc_start
    out.append(state.acc[lo:hi].copy())
    state.samples_emitted = target


def stream_process(state: StreamState, input_chunk, pair: WindowPair,
                   estimator: Callable = unity_estimator) -> np.ndarray:
    """Consume ``input_chunk`` and return the newly available output samples."""
    x = np.asarray(input_chunk, dtype=np.float64).ravel()
    K = state.config.analysis_len
    out: list[np.ndarray] = []
    pos = 0
    while pos < len(x):
        n = min(len(x) - pos, K - state.fill)
        state.inbuf[state.fill:state.fill + n] = x[pos:pos + n]
        state.fill += n
        state.samples_consumed += n
        pos += n
        if state.fill == K:
            # everything up to consumed - 2M is final before this frame lands
            _emit(state, out)
            _process_frame(state, pair, estimator)
    _emit(state, out)
    if not out:
        return np.zeros(0)
    return np.concatenate(out)


class StreamProcessor:
    """Convenience wrapper owning a :class:`StreamState`."""

    def __init__(self, pair: WindowPair, estimator: Callable = unity_estimator):
        self.pair = pair
        self.estimator = estimator
        self.state = StreamState(pair)

    def process(self, chunk) -> np.ndarray:
        return stream_process(self.state, chunk, self.pair, self.estimator)

    def run(self, signal, chunk_size: int = 64) -> np.ndarray:
        """Feed a whole signal in fixed-size chunks and collect the output."""
        signal = np.asarray(signal, dtype=np.float64)
        parts = [self.process(signal[i:i + chunk_size])
                 for i in range(0, len(signal), chunk_size)]
        return np.concatenate(parts) if parts else np.zeros(0)
