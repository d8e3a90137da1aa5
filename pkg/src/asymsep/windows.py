"""Analysis/synthesis window pairs for low-latency STFT processing.

An asymmetric pair uses a long analysis window of ``K`` samples for good
frequency resolution and a short synthesis window of ``2M`` samples
(zero-padded to ``K``) so that the overlap-add output only waits for ``2M``
samples. The pair is built so that the elementwise product of the two windows
is a periodic Hann window of length ``2M`` placed at the end of the frame,
which overlap-adds to one at hop ``M``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigError


def ms_to_samples(ms: float, sample_rate: int) -> int:
    """Convert a duration in milliseconds to the nearest even sample count."""
    n = int(2 * round(ms * sample_rate / 2000.0))
    return n


@dataclass(frozen=True)
class WindowConfig:
    """Geometry of a window pair.

    Parameters
    ----------
    analysis_len : int
        Analysis window (and FFT) length ``K``.
    synthesis_len : int
        Synthesis window length ``2M``; must be even.
    dead_zone : int
        Number of leading zeros ``d`` in the analysis window,
        ``0 <= d <= K - 2M``.
    sample_rate : int
        Sampling rate in Hz; only used for ms conversions and reporting.
    """

    analysis_len: int
    synthesis_len: int
    dead_zone: int = 0
    sample_rate: int = 8000

    def __post_init__(self):
        K, S, d = self.analysis_len, self.synthesis_len, self.dead_zone
        for name, val in (("analysis_len", K), ("synthesis_len", S),
                          ("dead_zone", d), ("sample_rate", self.sample_rate)):
            if int(val) != val:
                raise InvalidConfigError(f"{name} must be an integer, got {val!r}")
        if K <= 0 or S <= 0 or self.sample_rate <= 0:
            raise InvalidConfigError("window lengths and sample rate must be positive")
        if S % 2:
            raise InvalidConfigError(f"synthesis length must be even, got {S}")
        if K < S:
            raise InvalidConfigError(
                f"analysis length {K} shorter than synthesis length {S}")
        if not 0 <= d <= K - S:
            raise InvalidConfigError(
                f"dead zone must lie in [0, {K - S}], got {d}")

    @property
    def hop(self) -> int:
        return self.synthesis_len // 2

    @property
    def num_bins(self) -> int:
        return self.analysis_len // 2 + 1

    @property
    def latency(self) -> int:
        """Algorithmic latency in samples (the synthesis window length)."""
        return self.synthesis_len

    @property
    def is_symmetric(self) -> bool:
        return self.analysis_len == self.synthesis_len

    @classmethod
    def from_ms(cls, analysis_ms: float, synthesis_ms: float, sample_rate: int,
                dead_zone: int = 0) -> "WindowConfig":
        return cls(ms_to_samples(analysis_ms, sample_rate),
                   ms_to_samples(synthesis_ms, sample_rate),
                   dead_zone, sample_rate)

    def label(self) -> str:
        """Short human-readable id such as ``asym(32,8)``."""
        a = 1000.0 * self.analysis_len / self.sample_rate
        s = 1000.0 * self.synthesis_len / self.sample_rate
        kind = "sym" if self.is_symmetric else "asym"
        return f"{kind}({a:g},{s:g})"


@dataclass(frozen=True, eq=False)
class WindowPair:
    """Analysis and synthesis windows, both stored at length ``K``."""

    analysis: np.ndarray
    synthesis: np.ndarray
    config: WindowConfig

    def __post_init__(self):
        K = self.config.analysis_len
        if self.analysis.shape != (K,) or self.synthesis.shape != (K,):
            raise InvalidConfigError("window arrays must have length K")

    @property
    def product(self) -> np.ndarray:
        return self.analysis * self.synthesis


def hann_prototype(length: int) -> np.ndarray:
    """Periodic Hann window ``0.5 * (1 - cos(pi * n / M))`` of even length ``2M``.

    >>> hann_prototype(4)
    array([0. , 0.5, 1. , 0.5])
    """
    if length <= 0 or length % 2 or int(length) != length:
        raise InvalidConfigError(f"Hann prototype length must be even and >= 2, got {length}")
    half = length // 2
    n = np.arange(length, dtype=np.float64)
    h = 0.5 * (1.0 - np.cos(np.pi * n / half))
    # cos(pi) rounds cleanly, but pin the exact endpoints anyway
    h[0] = 0.0
    h[half] = 1.0
    return h


def padded_hann(config: WindowConfig) -> np.ndarray:
    """The target product window: zeros then ``H_2M`` over the last ``2M`` samples."""
    K, S = config.analysis_len, config.synthesis_len
    out = np.zeros(K)
    out[K - S:] = hann_prototype(S)
    return out


def design_symmetric_pair(length: int, sample_rate: int = 8000) -> WindowPair:
    """Square-root periodic Hann analysis and synthesis windows at 50% overlap."""
    config = WindowConfig(length, length, 0, sample_rate)
    w = np.sqrt(hann_prototype(length))
    return WindowPair(w, w.copy(), config)


def design_asymmetric_pair(config: WindowConfig) -> WindowPair:
    """Build the asymmetric pair for ``config``.

    The analysis window is ``d`` zeros, then the rising half of a root-Hann of
    length ``2(K - M - d)``, then the falling half of a root-Hann of length
    ``2M``. The synthesis window is zero up to ``K - 2M``, then the Hann
    prototype divided by the analysis window, then the same root-Hann tail.
    At ``n = K - 2M`` the quotient can be 0/0 (when ``d = K - 2M``); the
    numerator is exactly zero there so the sample is set to 0.

    With ``K == 2M`` this reduces to :func:`design_symmetric_pair`.
    """
    K, S, d = config.analysis_len, config.synthesis_len, config.dead_zone
    M = config.hop
    if K == S:
        sym = design_symmetric_pair(K, config.sample_rate)
        return WindowPair(sym.analysis, sym.synthesis, config)

    root_tail = np.sqrt(hann_prototype(S)[M:])

    analysis = np.zeros(K)
    rise_len = K - M - d
    analysis[d:K - M] = np.sqrt(hann_prototype(2 * rise_len)[:rise_len])
    analysis[K - M:] = root_tail

    synthesis = np.zeros(K)
    num = hann_prototype(S)[:M]
    den = analysis[K - S:K - M]
    quot = np.zeros(M)
    nz = den > 0.0
    quot[nz] = num[nz] / den[nz]
    synthesis[K - S:K - M] = quot
    synthesis[K - M:] = root_tail
    return WindowPair(analysis, synthesis, config)


def design_pair(config: WindowConfig) -> WindowPair:
    """Symmetric pair if ``K == 2M``, asymmetric otherwise."""
    return design_asymmetric_pair(config)


def verify_perfect_reconstruction(pair: WindowPair, test_len: int | None = None,
                                  seed: int = 0) -> float:
    """Measure identity-processing reconstruction error of ``pair``.

    White noise is framed with the analysis window, transformed, inverted,
    windowed with the synthesis window and overlap-added at hop ``M``. The
    returned value is ``max|y - x| / max|x|`` over the region covered by
    complete frames (the first and last ``K`` samples are excluded).
    """
    from .stft import analyze, synthesize

    K = pair.config.analysis_len
    if test_len is None:
        test_len = 8 * K
    if test_len < 4 * K:
        raise InvalidConfigError(f"test length must be at least 4K = {4 * K}")
    x = np.random.default_rng(seed).standard_normal(test_len)
    y = synthesize(analyze(x, pair), pair)
    stop = min(len(y), len(x)) - K
    err = np.max(np.abs(y[K:stop] - x[K:stop]))
    return float(err / np.max(np.abs(x)))


def window_pair_table(pair: WindowPair) -> dict:
    """JSON-serialisable description of a pair (config plus sample arrays)."""
    c = pair.config
    return {
        "config": {
            "analysis_len": c.analysis_len,
            "synthesis_len": c.synthesis_len,
            "hop": c.hop,
            "dead_zone": c.dead_zone,
            "sample_rate": c.sample_rate,
        },
        "analysis": pair.analysis.tolist(),
        "synthesis": pair.synthesis.tolist(),
        "product": pair.product.tolist(),
    }
