"""Experiment flows: mixture creation, oracle separation and window sweeps."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import read_wav
from .errors import DataError, EmptySignalError, InvalidConfigError
from .masks import Mask, apply_mask, oracle_masks, overlap_proportion
from .metrics import SeparationScores, bss_eval
from .stft import analyze, synthesize
from .windows import WindowConfig, WindowPair, design_pair

TRIM_FRAME_MS = 10.0


def trim_leading_silence(signal, threshold_db: float = -40.0, rate: int = 8000) -> np.ndarray:
    """Drop everything before the first 10 ms frame that is loud enough.

    A frame is loud enough when its RMS level exceeds the loudest frame's RMS
    level plus ``threshold_db`` (a negative number).
    """
    if not threshold_db < 0:
        raise InvalidConfigError("trim threshold must be negative dB")
    x = np.asarray(signal, dtype=np.float64)
    flen = max(1, int(round(TRIM_FRAME_MS * rate / 1000.0)))
    nfr = -(-len(x) // flen)
    padded = np.zeros(nfr * flen)
    padded[:len(x)] = x
    rms = np.sqrt(np.mean(padded.reshape(nfr, flen) ** 2, axis=1)) if nfr else np.zeros(0)
    peak = rms.max() if nfr else 0.0
    if peak == 0.0:
        raise EmptySignalError("signal is entirely silent")
    level = peak * 10.0 ** (threshold_db / 20.0)
    first = int(np.argmax(rms > level))
    return x[first * flen:]


def _gain(db: float) -> float:
    return 0.0 if np.isneginf(db) else 10.0 ** (db / 20.0)


@dataclass
class MixtureSpec:
    sources: tuple
    gains_db: tuple = (0.0, 0.0)
    sample_rate: int | None = None
    trim_threshold_db: float = -40.0

    def __post_init__(self):
        if len(self.sources) != 2 or len(self.gains_db) != 2:
            raise InvalidConfigError("a mixture takes exactly two sources and two gains")


def mix_sources(s1, s2, gains_db=(0.0, 0.0), rate: int = 8000,
                trim_threshold_db: float | None = -40.0):
    """Trim, truncate to the shorter source, scale and sum.

    Returns ``(mixture, [ref1, ref2])`` where the references carry their gains,
    so ``mixture == ref1 + ref2``.
    """
    srcs = [np.asarray(s1, dtype=np.float64), np.asarray(s2, dtype=np.float64)]
    if trim_threshold_db is not None:
        srcs = [trim_leading_silence(s, trim_threshold_db, rate) for s in srcs]
    n = min(len(s) for s in srcs)
    refs = [_gain(g) * s[:n] for g, s in zip(gains_db, srcs)]
    return refs[0] + refs[1], refs


def make_mixture(spec: MixtureSpec):
    """Read both source files and build the mixture; rates must agree."""
    signals, rates = [], []
    for path in spec.sources:
        x, r = read_wav(path)
        signals.append(x)
        rates.append(r)
    if rates[0] != rates[1]:
        raise DataError(f"sample rate mismatch: {rates[0]} vs {rates[1]}")
    if spec.sample_rate is not None and rates[0] != spec.sample_rate:
        raise DataError(f"sources are {rates[0]} Hz, expected {spec.sample_rate}")
    mix, refs = mix_sources(signals[0], signals[1], spec.gains_db, rates[0],
                            spec.trim_threshold_db)
    return mix, refs, rates[0]


# -- separation ---------------------------------------------------------------

def framing_offset(config: WindowConfig) -> int:
    """Leading zeros added before analysis so sample 0 lies in steady state."""
    return config.analysis_len - config.hop


def pad_for_pair(x, config):
    off = framing_offset(config)
    M = config.hop
    total = off + len(x) + 2 * M
    total += (-(total - config.analysis_len)) % M
    out = np.zeros(total)
    out[off:off + len(x)] = x
    return out


def separate_with_masks(mixture, pair: WindowPair, mask_fn) -> list[np.ndarray]:
    """Mask the padded mixture spectrogram and resynthesise, delay-compensated.

    ``mask_fn(mix_spec)`` returns a list of :class:`Mask`, one per output.
    """
    mixture = np.asarray(mixture, dtype=np.float64)
    config = pair.config
    off = framing_offset(config)
    mix_spec = analyze(pad_for_pair(mixture, config), pair)
    outs = []
    for mask in mask_fn(mix_spec):
        y = synthesize(apply_mask(mix_spec, mask), pair)
        outs.append(y[off:off + len(mixture)])
    return outs


def oracle_separate(mixture, references, pair: WindowPair, mask_kind: str = "irm"):
    """Separate ``mixture`` with oracle masks from the known ``references``.

    Masks are computed from the references at the analysis-window
    resolution; the output is aligned sample-for-sample with ``mixture``.
    """
    mixture = np.asarray(mixture, dtype=np.float64)
    refs = [np.asarray(r, dtype=np.float64) for r in references]
    if any(len(r) != len(mixture) for r in refs):
        raise DataError("references must have the same length as the mixture")
    config = pair.config
    ref_specs = [analyze(pad_for_pair(r, config), pair) for r in refs]
    return separate_with_masks(mixture, pair, lambda _: oracle_masks(ref_specs, mask_kind))


def external_mask_separate(mixture, pair: WindowPair, values) -> list[np.ndarray]:
    """Apply an external mask and its complement; the mask must match the
    padded mixture spectrogram geometry (see :func:`spectrogram_shape`)."""
    values = np.asarray(values, dtype=np.float64)
    if np.any(values < 0) or np.any(values > 1) or not np.all(np.isfinite(values)):
        raise DataError("external mask values must lie in [0, 1]")
    return separate_with_masks(
        mixture, pair,
        lambda _: [Mask(values, "external"), Mask(1.0 - values, "external")])


def spectrogram_shape(num_samples: int, config: WindowConfig) -> tuple[int, int]:
    """Shape of the mask expected by :func:`external_mask_separate`."""
    padded = framing_offset(config) + num_samples + 2 * config.hop
    padded += (-(padded - config.analysis_len)) % config.hop
    return ((padded - config.analysis_len) // config.hop + 1, config.num_bins)


def mixture_overlap(s1, s2, pair: WindowPair, tau: float = 0.1) -> float:
    specs = [analyze(pad_for_pair(np.asarray(x, dtype=np.float64), pair.config), pair)
             for x in (s1, s2)]
    mix = type(specs[0])(specs[0].frames + specs[1].frames, specs[0].config)
    return overlap_proportion(specs[0], specs[1], mix, tau).proportion


# -- experiments --------------------------------------------------------------

@dataclass
class ExperimentResult:
    config: WindowConfig
    mask_kind: str
    scores: list = field(default_factory=list)     # per mixture: list[SeparationScores]
    overlaps: list = field(default_factory=list)   # per mixture overlap proportion

    @property
    def scheme(self) -> str:
        return "sym" if self.config.is_symmetric else "asym"

    @property
    def lengths_ms(self) -> tuple[float, float]:
        c = self.config
        return (1000.0 * c.analysis_len / c.sample_rate,
                1000.0 * c.synthesis_len / c.sample_rate)

    def per_mixture(self, metric: str) -> np.ndarray:
        """Mean over sources of ``metric`` for each mixture."""
        return np.array([np.mean([getattr(s, metric) for s in ss]) for ss in self.scores])

    def mean(self, metric: str) -> float:
        return float(np.mean(self.per_mixture(metric)))

    def summary(self) -> dict:
        a, s = self.lengths_ms
        return {
            "window": self.scheme, "analysis_ms": a, "synthesis_ms": s,
            "analysis_len": self.config.analysis_len,
            "synthesis_len": self.config.synthesis_len,
            "dead_zone": self.config.dead_zone,
            "mask": self.mask_kind, "mixtures": len(self.scores),
            "sdr": self.mean("sdr"), "sir": self.mean("sir"), "sar": self.mean("sar"),
            "overlap": float(np.mean(self.overlaps)) if self.overlaps else float("nan"),
        }


def _score_one(pair, mask_kind, filter_len, tau, rate, trim_db, s1, s2):
    mix, refs = mix_sources(s1, s2, rate=rate, trim_threshold_db=trim_db)
    est = oracle_separate(mix, refs, pair, mask_kind)
    scores = bss_eval(est, refs, filter_len)
    ov = mixture_overlap(refs[0], refs[1], pair, tau)
    return scores, ov


def evaluate_corpus(corpus, config: WindowConfig, mask_kind: str = "irm",
                    filter_len: int = 512, tau: float = 0.1,
                    trim_threshold_db: float | None = -40.0,
                    jobs: int = 1) -> ExperimentResult:
    """Oracle-separate every ``(s1, s2)`` pair in ``corpus`` with one window config."""
    pair = design_pair(config)
    args = [(pair, mask_kind, filter_len, tau, config.sample_rate, trim_threshold_db, s1, s2)
            for s1, s2 in corpus]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            results = list(ex.map(lambda a: _score_one(*a), args))
    else:
        results = [_score_one(*a) for a in args]
    res = ExperimentResult(config, mask_kind)
    for scores, ov in results:
        res.scores.append(scores)
        res.overlaps.append(ov)
    return res


DEFAULT_SCHEMES = ((32.0, 32.0), (8.0, 8.0), (32.0, 8.0))


def compare_schemes(corpus, rate: int, schemes=DEFAULT_SCHEMES, mask_kind: str = "irm",
                    dead_zone: int = 0, **kw) -> list[ExperimentResult]:
    out = []
    for a_ms, s_ms in schemes:
        cfg = WindowConfig.from_ms(a_ms, s_ms, rate)
        if not cfg.is_symmetric and dead_zone:
            cfg = WindowConfig(cfg.analysis_len, cfg.synthesis_len, dead_zone, rate)
        out.append(evaluate_corpus(corpus, cfg, mask_kind, **kw))
    return out


def sweep_analysis_lengths(corpus, lengths_ms, synthesis_ms: float = 8.0,
                           mask_kind: str = "ibm", rate: int = 8000,
                           dead_zone: int = 0, **kw) -> list[ExperimentResult]:
    """Asymmetric pairs with a fixed synthesis window, one result per length."""
    results = []
    for a_ms in lengths_ms:
        if a_ms < synthesis_ms:
            raise InvalidConfigError(
                f"analysis length {a_ms} ms shorter than synthesis {synthesis_ms} ms")
        cfg = WindowConfig.from_ms(a_ms, synthesis_ms, rate)
        d = min(dead_zone, cfg.analysis_len - cfg.synthesis_len)
        cfg = WindowConfig(cfg.analysis_len, cfg.synthesis_len, d, rate)
        results.append(evaluate_corpus(corpus, cfg, mask_kind, **kw))
    return results


# -- persistence --------------------------------------------------------------

SUMMARY_FIELDS = ["window", "analysis_ms", "synthesis_ms", "analysis_len", "synthesis_len",
                  "dead_zone", "mask", "mixtures", "sdr", "sir", "sar", "overlap"]
MIXTURE_FIELDS = ["window", "analysis_ms", "synthesis_ms", "mask", "mixture", "source",
                  "sdr", "sir", "sar", "overlap"]


def write_summary_csv(path, results) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=SUMMARY_FIELDS)
        w.writeheader()
        for r in results:
            w.writerow({k: _fmt(v) for k, v in r.summary().items()})


def write_mixture_csv(path, results) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=MIXTURE_FIELDS)
        w.writeheader()
        for r in results:
            a, s = r.lengths_ms
            for i, ss in enumerate(r.scores):
                for j, sc in enumerate(ss):
                    w.writerow({"window": r.scheme, "analysis_ms": _fmt(a),
                                "synthesis_ms": _fmt(s), "mask": r.mask_kind,
                                "mixture": i, "source": j + 1, "sdr": _fmt(sc.sdr),
                                "sir": _fmt(sc.sir), "sar": _fmt(sc.sar),
                                "overlap": _fmt(r.overlaps[i])})


def write_summary_json(path, results, run_config: dict | None = None) -> None:
    doc = {"config": run_config or {}, "rows": [r.summary() for r in results]}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def format_table(results) -> str:
    """Plain-text table in the layout ``Window (A, S) SDR SIR SAR``."""
    lines = [f"{'Window':<8}{'(A, S)':<12}{'SDR':>8}{'SIR':>8}{'SAR':>8}"]
    for r in results:
        a, s = r.lengths_ms
        label = "Sym." if r.config.is_symmetric else "Asym."
        lines.append(f"{label:<8}{f'({a:g}, {s:g})':<12}"
                     f"{r.mean('sdr'):>8.1f}{r.mean('sir'):>8.1f}{r.mean('sar'):>8.1f}")
    return "\n".join(lines)


def format_score_rows(label: str, lengths: tuple, scores: list[SeparationScores]) -> str:
    a, s = lengths
    lines = [f"{'Window':<8}{'(A, S)':<12}{'Source':>7}{'SDR':>8}{'SIR':>8}{'SAR':>8}"]
    for j, sc in enumerate(scores):
        lines.append(f"{label:<8}{f'({a:g}, {s:g})':<12}{j + 1:>7}"
                     f"{sc.sdr:>8.1f}{sc.sir:>8.1f}{sc.sar:>8.1f}")
    return "\n".join(lines)
