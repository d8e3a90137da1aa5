import numpy as np
import pytest

from asymsep.audio import read_wav, write_wav
from asymsep.corpus import corpus_entries, load_corpus, synth_corpus, write_corpus
from asymsep.errors import DataError, EmptySignalError, InvalidConfigError
from asymsep.masks import Mask, apply_mask, oracle_masks
from asymsep.pipeline import (
    MixtureSpec, evaluate_corpus, external_mask_separate, make_mixture, mix_sources,
    oracle_separate, pad_for_pair, separate_with_masks, spectrogram_shape, sweep_analysis_lengths,
    trim_leading_silence, write_summary_csv,
)
from asymsep.stft import analyze
from asymsep.windows import WindowConfig, design_asymmetric_pair, design_symmetric_pair

RATE = 8000


def scan_trim(x, threshold_db, rate):
    """Frame-by-frame loop reference for leading-silence trimming."""
    flen = int(round(0.01 * rate))
    frames = [x[i:i + flen] for i in range(0, len(x), flen)]
    rms = [np.sqrt(np.sum(f ** 2) / flen) for f in frames]
    peak_db = 20 * np.log10(max(rms))
    for k, r in enumerate(rms):
        if r > 0 and 20 * np.log10(r) > peak_db + threshold_db:
            return k * flen
    raise AssertionError("no loud frame")


@pytest.fixture
def pair_32_8():
    return design_asymmetric_pair(WindowConfig(256, 64, 0, RATE))


def tone(freq, n, rate=RATE, phase=0.0):
    return np.sin(2 * np.pi * freq * np.arange(n) / rate + phase)


def test_trim_leading_zeros():
    x = np.concatenate([np.zeros(100), tone(440, 2000)])
    y = trim_leading_silence(x, -40, RATE)
    # 100 zeros straddle a 80-sample frame boundary; the frame at 80 is loud
    assert len(x) - len(y) == 80
    np.testing.assert_array_equal(y[20:], x[100:])


def test_trim_loud_start_unchanged():
    x = tone(300, 1000)
    np.testing.assert_array_equal(trim_leading_silence(x, -40, RATE), x)


def test_trim_ramp_matches_scan():
    n = 4000
    x = tone(200, n) * np.linspace(0, 1, n) ** 3
    for thr in (-20, -40, -60):
        y = trim_leading_silence(x, thr, RATE)
        assert len(x) - len(y) == scan_trim(x, thr, RATE)


def test_trim_silent_raises():
    with pytest.raises(EmptySignalError):
        trim_leading_silence(np.zeros(500), -40, RATE)
    with pytest.raises(InvalidConfigError):
        trim_leading_silence(np.ones(500), 3.0, RATE)


def test_mix_identical_sources():
    s = tone(300, 1200)
    mix, refs = mix_sources(s, s)
    np.testing.assert_array_equal(mix, 2 * s)


def test_mix_muted_source():
    a, b = tone(300, 1200), tone(500, 1500)
    mix, refs = mix_sources(a, b, gains_db=(-np.inf, 0.0))
    np.testing.assert_array_equal(mix, b[:1200])
    assert not refs[0].any()


def test_make_mixture_from_wavs(tmp_path):
    a = np.concatenate([np.zeros(300), 0.3 * tone(250, 3000)])
    b = 0.2 * tone(700, 2500)
    write_wav(tmp_path / "a.wav", a, RATE)
    write_wav(tmp_path / "b.wav", b, RATE)
    mix, refs, rate = make_mixture(MixtureSpec((tmp_path / "a.wav", tmp_path / "b.wav"),
                                               (0.0, -6.0)))
    ra, _ = read_wav(tmp_path / "a.wav")
    rb, _ = read_wav(tmp_path / "b.wav")
    ta = trim_leading_silence(ra, -40, RATE)
    n = min(len(ta), len(rb))
    np.testing.assert_array_equal(mix, ta[:n] + 10 ** (-6 / 20) * rb[:n])
    np.testing.assert_array_equal(mix, refs[0] + refs[1])
    assert rate == RATE


def test_make_mixture_rate_mismatch(tmp_path):
    write_wav(tmp_path / "a.wav", tone(250, 3000), 8000)
    write_wav(tmp_path / "b.wav", tone(250, 3000), 16000)
    with pytest.raises(DataError):
        make_mixture(MixtureSpec((tmp_path / "a.wav", tmp_path / "b.wav")))


@pytest.mark.parametrize("fmt,tol", [("float32", 1e-7), ("pcm16", 1 / 32768)])
def test_wav_round_trip(tmp_path, fmt, tol):
    x = 0.5 * np.random.default_rng(0).uniform(-1, 1, 1000)
    write_wav(tmp_path / "x.wav", x, 16000, fmt)
    y, rate = read_wav(tmp_path / "x.wav")
    assert rate == 16000
    assert np.max(np.abs(x - y)) <= tol


def test_read_wav_rejects_stereo(tmp_path):
    from scipy.io import wavfile
    wavfile.write(tmp_path / "st.wav", 8000, np.zeros((10, 2), dtype=np.int16))
    with pytest.raises(DataError):
        read_wav(tmp_path / "st.wav")
    with pytest.raises(DataError):
        read_wav(tmp_path / "missing.wav")


@pytest.mark.parametrize("pair", [design_asymmetric_pair(WindowConfig(256, 64, 0, RATE)),
                                  design_asymmetric_pair(WindowConfig(256, 64, 191, RATE)),
                                  design_symmetric_pair(64)])
def test_unity_mask_reconstructs_whole_mixture(pair):
    x = np.random.default_rng(1).standard_normal(3001)
    (y,) = oracle_separate(x, [x], pair, "unity")
    assert len(y) == len(x)
    assert np.max(np.abs(y - x)) / np.max(np.abs(x)) < 1e-10


def test_ibm_with_silent_partner(pair_32_8):
    x = np.random.default_rng(2).standard_normal(2000)
    e1, e2 = oracle_separate(x, [x, np.zeros_like(x)], pair_32_8, "ibm")
    assert np.max(np.abs(e1 - x)) / np.max(np.abs(x)) < 1e-10
    assert np.max(np.abs(e2)) < 1e-12


def test_disjoint_tones_separate_cleanly(pair_32_8):
    cfg = pair_32_8.config
    n = 4000
    a = tone(16 * RATE / 256, n)          # bin 16
    b = tone(96 * RATE / 256, n, phase=0.4)     # bin 96
    ea, eb = oracle_separate(a + b, [a, b], pair_32_8, "ibm")
    masks = oracle_masks([analyze(pad_for_pair(x, cfg), pair_32_8) for x in (a, b)], "ibm")
    steady = slice(2 * cfg.analysis_len, n - 2 * cfg.analysis_len)
    db = lambda x, y: 10 * np.log10((x[steady] @ x[steady]) / (y[steady] @ y[steady]))
    # by linearity each estimate is (own tone through own mask) + (other tone through own mask)
    for est, own, other, mask in ((ea, a, b, masks[0]), (eb, b, a, masks[1])):
        (own_part,) = separate_with_masks(own, pair_32_8, lambda s: [mask])
        (leak,) = separate_with_masks(other, pair_32_8, lambda s: [mask])
        np.testing.assert_allclose(own_part + leak, est, atol=1e-12)
        assert db(leak, other) < -60


def test_masked_spectra_bounded_by_mixture(pair_32_8):
    rng = np.random.default_rng(3)
    a, b = rng.standard_normal(2000), rng.standard_normal(2000)
    cfg = pair_32_8.config
    specs = [analyze(pad_for_pair(x, cfg), pair_32_8) for x in (a, b, a + b)]
    for kind in ("ibm", "irm"):
        for m in oracle_masks(specs[:2], kind):
            masked = apply_mask(specs[2], m)
            assert np.all(np.abs(masked.frames) <= np.abs(specs[2].frames))
    masks = [Mask(np.full(specs[2].shape, 0.3)), Mask(np.ones(specs[2].shape))]
    outs = separate_with_masks(a + b, pair_32_8, lambda s: masks)
    assert np.max(np.abs(outs[1] - (a + b))) < 1e-10
    assert np.max(np.abs(outs[0] - 0.3 * (a + b))) < 1e-10


def test_external_mask_and_complement(pair_32_8):
    x = np.random.default_rng(4).standard_normal(1500)
    shape = spectrogram_shape(len(x), pair_32_8.config)
    m = np.random.default_rng(5).uniform(size=shape)
    e1, e2 = external_mask_separate(x, pair_32_8, m)
    assert np.max(np.abs(e1 + e2 - x)) < 1e-10
    with pytest.raises(DataError):
        external_mask_separate(x, pair_32_8, m + 1.0)


def test_reference_length_mismatch(pair_32_8):
    with pytest.raises(DataError):
        oracle_separate(np.zeros(1000), [np.zeros(999)], pair_32_8)


def test_sweep_single_length_equals_symmetric():
    corpus = synth_corpus(3, RATE, 0.6, seed=4)
    (sweep,) = sweep_analysis_lengths(corpus, [8], 8, "ibm", RATE, filter_len=32)
    sym = evaluate_corpus(corpus, WindowConfig(64, 64, 0, RATE), "ibm", filter_len=32)
    assert [[s.sdr for s in ss] for ss in sweep.scores] == \
        [[s.sdr for s in ss] for ss in sym.scores]


def test_sweep_deterministic(tmp_path):
    corpus = synth_corpus(3, RATE, 0.6, seed=5)
    runs = []
    for k in range(2):
        res = sweep_analysis_lengths(corpus, [8, 16], 8, "irm", RATE, filter_len=32)
        write_summary_csv(tmp_path / f"r{k}.csv", res)
        runs.append((tmp_path / f"r{k}.csv").read_text())
    assert runs[0] == runs[1]


def test_sweep_rejects_short_analysis():
    with pytest.raises(InvalidConfigError):
        sweep_analysis_lengths(synth_corpus(1, RATE, 0.5), [4], 8)


def test_parallel_matches_serial():
    corpus = synth_corpus(4, RATE, 0.6, seed=6)
    cfg = WindowConfig(256, 64, 0, RATE)
    a = evaluate_corpus(corpus, cfg, "irm", filter_len=32)
    b = evaluate_corpus(corpus, cfg, "irm", filter_len=32, jobs=4)
    assert a.summary() == b.summary()


def test_corpus_round_trip(tmp_path):
    write_corpus(tmp_path, 2, RATE, 0.5, seed=1)
    assert len(corpus_entries(tmp_path)) == 2
    pairs, rate = load_corpus(tmp_path)
    ref = synth_corpus(2, RATE, 0.5, seed=1)
    assert rate == RATE
    for (a, b), (c, d) in zip(pairs, ref):
        assert np.max(np.abs(a - c)) < 1e-7 and np.max(np.abs(b - d)) < 1e-7


def test_synth_corpus_is_seeded():
    a = synth_corpus(2, RATE, 0.5, seed=3)
    b = synth_corpus(2, RATE, 0.5, seed=3)
    c = synth_corpus(2, RATE, 0.5, seed=4)
    assert all(np.array_equal(x, y) for p, q in zip(a, b) for x, y in zip(p, q))
    assert not np.array_equal(a[0][0], c[0][0])
