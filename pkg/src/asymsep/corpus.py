"""Seeded synthetic speech-like corpus for self-contained experiments.

Each "talker" is a sequence of voiced syllables: a harmonic series on a
gliding, vibrato-modulated fundamental, shaped by three formant resonances
and a spectral tilt, with raised-cosine onsets and short pauses. This gives
resolved harmonics at 32 ms that smear at 8 ms, which is what the window
experiments probe. A corpus directory holds one subdirectory per mixture
with ``s1.wav`` and ``s2.wav``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio import read_wav, write_wav
from .errors import DataError

LOW_VOICE = (85.0, 155.0)
HIGH_VOICE = (165.0, 255.0)


def _formant_gain(freqs, formants, bandwidths):
    g = np.zeros_like(freqs)
    for fc, bw in zip(formants, bandwidths):
        g += 1.0 / (1.0 + ((freqs - fc) / (0.5 * bw)) ** 2)
    return g + 0.02


def synth_talker(rng: np.random.Generator, rate: int, duration: float,
                 f0_range=LOW_VOICE) -> np.ndarray:
    """One talker's signal of ``duration`` seconds, peak-normalised to 0.5."""
    n_total = int(round(duration * rate))
    out = np.zeros(n_total)
    nyq = 0.5 * rate
    pos = int(rng.uniform(0.0, 0.15) * rate)
    while pos < n_total:
        n = int(rng.uniform(0.15, 0.35) * rate)
        n = min(n, n_total - pos)
        if n < int(0.03 * rate):
            break
        t = np.arange(n) / rate
        f_start = rng.uniform(*f0_range)
        f_end = f_start * (1.0 + rng.uniform(-0.15, 0.15))
        f0 = np.linspace(f_start, f_end, n)
        f0 *= 1.0 + 0.01 * np.sin(2 * np.pi * rng.uniform(4.0, 6.0) * t
                                  + rng.uniform(0, 2 * np.pi))
        phase = 2 * np.pi * np.cumsum(f0) / rate
        formants = (rng.uniform(300, 800), rng.uniform(900, 2300), rng.uniform(2400, 3400))
        bws = (rng.uniform(60, 120), rng.uniform(80, 160), rng.uniform(120, 250))
        seg = np.zeros(n)
        for h in range(1, int(nyq / f0.min()) + 1):
            fh = h * f0
            amp = _formant_gain(fh, formants, bws) / np.sqrt(h)
            amp[fh >= 0.95 * nyq] = 0.0
            seg += amp * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
        ramp = min(int(0.03 * rate), n // 2)
        env = np.ones(n)
        edge = 0.5 * (1 - np.cos(np.pi * np.arange(ramp) / ramp))
        env[:ramp] = edge
        env[n - ramp:] = edge[::-1]
        seg *= env * rng.uniform(0.5, 1.0)
        out[pos:pos + n] += seg
        pos += n + int(rng.uniform(0.02, 0.08) * rate)
    # low aspiration floor so no bin is exactly silent
    out += 1e-3 * np.std(out) * rng.standard_normal(n_total)
    peak = np.max(np.abs(out))
    return 0.5 * out / peak if peak > 0 else out


def synth_corpus(n_mixtures: int = 30, rate: int = 8000, duration: float = 1.5,
                 seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Deterministic list of ``(source1, source2)`` pairs."""
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n_mixtures):
        ranges = [LOW_VOICE, HIGH_VOICE]
        r1 = ranges[rng.integers(2)]
        r2 = ranges[rng.integers(2)]
        pairs.append((synth_talker(rng, rate, duration, r1),
                      synth_talker(rng, rate, duration, r2)))
    return pairs


def write_corpus(directory, n_mixtures: int = 30, rate: int = 8000,
                 duration: float = 1.5, seed: int = 0) -> list[Path]:
    directory = Path(directory)
    dirs = []
    for i, (s1, s2) in enumerate(synth_corpus(n_mixtures, rate, duration, seed)):
        d = directory / f"mix{i:03d}"
        write_wav(d / "s1.wav", s1, rate)
        write_wav(d / "s2.wav", s2, rate)
        dirs.append(d)
    return dirs


def corpus_entries(directory) -> list[tuple[Path, Path]]:
    """Source path pairs of a corpus directory, sorted by mixture name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"corpus directory not found: {directory}")
    entries = []
    for d in sorted(p for p in directory.iterdir() if p.is_dir()):
        s1, s2 = d / "s1.wav", d / "s2.wav"
        if s1.exists() and s2.exists():
            entries.append((s1, s2))
    if not entries:
        raise DataError(f"no s1.wav/s2.wav pairs under {directory}")
    return entries


def load_corpus(directory) -> tuple[list[tuple[np.ndarray, np.ndarray]], int]:
    pairs, rates = [], set()
    for p1, p2 in corpus_entries(directory):
        s1, r1 = read_wav(p1)
        s2, r2 = read_wav(p2)
        if r1 != r2:
            raise DataError(f"sample rate mismatch in {p1.parent}: {r1} vs {r2}")
        rates.add(r1)
        pairs.append((s1, s2))
    if len(rates) != 1:
        raise DataError(f"corpus mixes sample rates {sorted(rates)}")
    return pairs, rates.pop()
