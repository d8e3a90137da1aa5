import logging

import numpy as np
import pytest

from asymsep.streaming import (
    PrecomputedMaskEstimator, StreamProcessor, StreamState, stream_process,
    unity_estimator, zero_estimator,
)
from asymsep.windows import WindowConfig, design_asymmetric_pair


@pytest.fixture
def pair():
    return design_asymmetric_pair(WindowConfig(256, 64, 0, 8000))


@pytest.fixture
def noise():
    return np.random.default_rng(7).standard_normal(5000)


def test_identity_output_is_delayed_input(pair, noise):
    y = StreamProcessor(pair).run(noise, chunk_size=100)
    assert len(y) == len(noise) - 64
    # on the input clock the output trails by 2M samples
    clock = np.concatenate([np.zeros(64), y])
    n = np.arange(256 - 32 + 64, len(noise))
    assert np.max(np.abs(clock[n] - noise[n - 64])) / np.max(np.abs(noise)) < 1e-10


def test_zero_estimator_silences(pair, noise):
    y = StreamProcessor(pair, zero_estimator).run(noise, chunk_size=33)
    assert len(y) == len(noise) - 64
    assert not y.any()


@pytest.mark.parametrize("chunk", [7, 64, 1000])
def test_chunking_is_bit_exact(pair, noise, chunk):
    ref = StreamProcessor(pair).run(noise, chunk_size=1)
    got = StreamProcessor(pair).run(noise, chunk_size=chunk)
    np.testing.assert_array_equal(ref, got)


def test_irregular_chunks_bit_exact(pair, noise):
    mask = np.random.default_rng(0).uniform(size=(200, 129))
    ref = StreamProcessor(pair, PrecomputedMaskEstimator(mask)).run(noise, chunk_size=len(noise))
    proc = StreamProcessor(pair, PrecomputedMaskEstimator(mask))
    rng = np.random.default_rng(1)
    parts, pos = [], 0
    while pos < len(noise):
        n = int(rng.integers(0, 150))
        parts.append(proc.process(noise[pos:pos + n]))
        pos += n
    np.testing.assert_array_equal(ref, np.concatenate(parts))


def test_emission_count_per_sample(pair, noise):
    state = StreamState(pair)
    total = 0
    for i, v in enumerate(noise[:800]):
        total += len(stream_process(state, [v], pair))
        assert total == max(0, i + 1 - 64)
        assert state.samples_emitted == total
        assert state.samples_emitted <= max(0, state.samples_consumed - state.latency_samples)


def test_empty_chunk(pair):
    state = StreamState(pair)
    assert len(stream_process(state, [], pair)) == 0
    assert state.samples_consumed == 0


def test_output_does_not_depend_on_future_input(pair, noise):
    base = StreamProcessor(pair).run(noise, chunk_size=1)
    for j in (300, 1234, 4000):
        bumped = noise.copy()
        bumped[j] += 10.0
        out = StreamProcessor(pair).run(bumped, chunk_size=1)
        # outputs n < j - 2M cannot see input j
        np.testing.assert_array_equal(out[:j - 64], base[:j - 64])
        assert np.any(out[j - 64:] != base[j - 64:])


def test_failing_estimator_passes_through(pair, noise, caplog):
    def flaky(spectrum, t):
        if t % 3 == 0:
            raise RuntimeError("model crashed")
        return np.ones(spectrum.shape)

    with caplog.at_level(logging.WARNING, logger="asymsep.streaming"):
        proc = StreamProcessor(pair, flaky)
        y = proc.run(noise, chunk_size=128)
    ref = StreamProcessor(pair, unity_estimator).run(noise, chunk_size=128)
    np.testing.assert_array_equal(y, ref)
    assert proc.state.estimator_failures > 0
    assert "model crashed" in caplog.text


def test_bad_mask_shape_counts_as_failure(pair, noise):
    proc = StreamProcessor(pair, lambda s, t: np.ones(3))
    y = proc.run(noise[:1000], chunk_size=50)
    assert proc.state.estimator_failures == proc.state.frames_done
    assert len(y) == 1000 - 64


def test_precomputed_estimator_runs_out(pair, noise):
    proc = StreamProcessor(pair, PrecomputedMaskEstimator(np.zeros((10, 129))))
    y = proc.run(noise[:2000], chunk_size=256)
    assert proc.state.frames_done > 10
    assert proc.state.estimator_failures == proc.state.frames_done - 10
    assert not y[:10 * 32 + 256 - 64 - 32].any()
