import numpy as np
import pytest

from emgteleop import dsp

FS = 4000


def steady_gain_db(freq, seconds=2.0):
    t = np.arange(int(seconds * FS)) / FS
    x = 100.0 * np.sin(2 * np.pi * freq * t)[:, None]
    y = dsp.FilterChain(1).process(x)[:, 0]
    tail = slice(FS, None)  # skip transient
    return 20 * np.log10(np.sqrt(np.mean(y[tail] ** 2)) /
                         np.sqrt(np.mean(x[tail, 0] ** 2)))


def test_dc_step_suppressed():
    x = np.full((FS, 1), 100.0)
    y = dsp.FilterChain(1).process(x)[:, 0]
    settle = FS // 2  # 500 ms
    assert np.all(np.abs(y[settle:]) < 1.0)
    assert abs(np.mean(y[settle:])) < 1.0


def test_60hz_attenuation_at_least_30db():
    t = np.arange(2 * FS) / FS
    x = 100.0 * np.sin(2 * np.pi * 60.0 * t)[:, None]
    y = dsp.FilterChain(1).process(x)[:, 0]
    amp = np.sqrt(2) * np.sqrt(np.mean(y[FS:] ** 2))
    assert amp <= 3.2  # >= 30 dB down from 100 uV


def test_100hz_passband_within_1db():
    assert abs(steady_gain_db(100.0)) <= 1.0


def test_filter_linearity():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2000, 2))
    y = rng.normal(size=(2000, 2))
    a, b = 3.7, -1.2
    fx = dsp.FilterChain(2).process(x)
    fy = dsp.FilterChain(2).process(y)
    fxy = dsp.FilterChain(2).process(a * x + b * y)
    np.testing.assert_allclose(fxy, a * fx + b * fy, rtol=1e-9, atol=1e-9)


def test_chunked_equals_oneshot():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(4000, 3)) * 50
    whole = dsp.FilterChain(3).process(x)
    fc = dsp.FilterChain(3)
    parts = np.vstack([fc.process(x[i : i + 137]) for i in range(0, 4000, 137)])
    assert np.array_equal(whole, parts)


def test_reset_reproducibility():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(1000, 4))
    fc = dsp.FilterChain(4)
    a = fc.process(x)
    fc.reset()
    b = fc.process(x)
    assert np.array_equal(a, b)


def test_window_counts():
    assert dsp.window_count(319) == 0
    assert dsp.window_count(320) == 1
    assert dsp.window_count(4000) == 24
    assert dsp.window_count(16000) == 99


def test_iter_windows_grid():
    x = np.arange(4000, dtype=float)[:, None]
    wins = list(dsp.iter_windows(x))
    assert len(wins) == 24
    for k, w in enumerate(wins):
        assert w.start_index == 160 * k
        assert w.samples.shape == (320, 1)
        assert w.samples[0, 0] == 160 * k


def test_window_overlap_partition():
    # every sample of an aligned stream lands in one or two windows,
    # interior samples in exactly two
    n = 4000
    counts = np.zeros(n, dtype=int)
    for w in dsp.iter_windows(np.zeros((n, 1))):
        counts[w.start_index : w.start_index + 320] += 1
    assert counts.min() >= 1
    assert counts.max() == 2
    assert np.all(counts[160 : n - 160] == 2)


def test_streaming_windower_matches_batch():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(4000, 2))
    batch = list(dsp.iter_windows(x))
    sw = dsp.StreamingWindower(2)
    streamed = []
    for i in range(0, 4000, 97):
        streamed.extend(sw.feed(i, x[i : i + 97]))
    assert len(streamed) == len(batch)
    for a, b in zip(streamed, batch):
        assert a.start_index == b.start_index
        assert np.array_equal(a.samples, b.samples)


def test_streaming_windower_flags_gap_and_realigns():
    sw = dsp.StreamingWindower(1)
    out = sw.feed(0, np.ones((400, 1)))
    assert [(w.start_index, w.valid) for w in out] == [(0, True)]
    out = sw.feed(500, np.ones((620, 1)))  # samples 400-499 lost
    marks = [(w.start_index, w.valid) for w in out]
    # windows touching [400, 500) are invalid; grid stays at multiples of 160
    assert marks == [(160, False), (320, False), (480, False), (640, True),
                     (800, True)]
    assert sw.dropouts == 1


def test_streaming_windower_rejects_out_of_order():
    sw = dsp.StreamingWindower(1)
    sw.feed(0, np.zeros((100, 1)))
    with pytest.raises(ValueError):
        sw.feed(50, np.zeros((10, 1)))


def test_heatmap_zero_window():
    hm = dsp.rms_heatmap(dsp.Window(0, np.zeros((320, 256))), "left")
    assert hm.shape == (8, 16)
    assert not hm.any()


def test_heatmap_single_channel_constant():
    x = np.zeros((320, 256))
    x[:, 17] = -5.0  # left arm channel 17 -> grid cell (1, 1)
    hm = dsp.rms_heatmap(dsp.Window(0, x), "left")
    assert hm[1, 1] == 5.0
    hm[1, 1] = 0.0
    assert not hm.any()
    # the right arm saw nothing
    assert not dsp.rms_heatmap(dsp.Window(0, x), "right").any()


def test_heatmap_sinusoid_rms():
    t = np.arange(320) / FS
    x = np.zeros((320, 256))
    x[:, 128] = 10.0 * np.sin(2 * np.pi * 100.0 * t)  # 8 full periods in 80 ms
    hm = dsp.rms_heatmap(dsp.Window(0, x), "right")
    assert hm[0, 0] == pytest.approx(10.0 / np.sqrt(2), rel=0.01)


def test_heatmap_scaling():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(320, 256))
    base = dsp.rms_heatmap(dsp.Window(0, x), "left")
    doubled = dsp.rms_heatmap(dsp.Window(0, 2.0 * x), "left")
    assert np.array_equal(doubled, 2.0 * base)  # power-of-two scale is exact
    scaled = dsp.rms_heatmap(dsp.Window(0, 1.7 * x), "left")
    np.testing.assert_allclose(scaled, 1.7 * base, rtol=1e-12)


def test_heatmap_refuses_invalid_window():
    with pytest.raises(ValueError):
        dsp.rms_heatmap(dsp.Window(0, None, valid=False), "left")


def test_nearest_rank_percentile():
    assert dsp.nearest_rank_percentile(np.arange(1, 129), 90.0) == 116.0
    assert dsp.nearest_rank_percentile(np.array([7.0]), 90.0) == 7.0
    assert dsp.nearest_rank_percentile(np.array([3.0, 1.0, 2.0]), 50.0) == 2.0
    with pytest.raises(ValueError):
        dsp.nearest_rank_percentile(np.array([]), 90.0)


def test_calibrate_mvc_reference_values():
    # channels with RMS exactly 1..128: constant-valued channels
    samples = np.tile(np.arange(1.0, 129.0), (100, 1))
    prof = dsp.calibrate_mvc({("left", "fist"): samples})
    assert prof.reference("left", "fist") == 116.0
    flat = np.full((100, 128), 42.0)
    prof2 = dsp.calibrate_mvc({("right", "fist"): flat})
    assert prof2.reference("right", "fist") == pytest.approx(42.0)


def test_calibrate_mvc_errors():
    with pytest.raises(dsp.CalibrationError, match="silent"):
        dsp.calibrate_mvc({("left", "fist"): np.zeros((50, 128))})
    with pytest.raises(dsp.CalibrationError, match="missing"):
        dsp.calibrate_mvc({("left", "a"): np.ones((50, 128))},
                          expected_gestures=["a", "b"])
    with pytest.raises(dsp.CalibrationError, match="128"):
        dsp.calibrate_mvc({("left", "a"): np.ones((50, 64))})
    prof = dsp.calibrate_mvc({("left", "a"): np.ones((50, 128))})
    with pytest.raises(dsp.CalibrationError):
        prof.reference("left", "b")
    assert prof.is_complete("left", ["a"])
    assert not prof.is_complete("left", ["a", "b"])


def test_effort_fraction():
    prof = dsp.CalibrationProfile()
    prof.set_reference("left", "fist", 50.0)
    hm = np.full((8, 16), 50.0)
    assert dsp.effort_fraction(hm, prof, "left", "fist") == pytest.approx(1.0)
    assert dsp.effort_fraction(0.25 * hm, prof, "left", "fist") == pytest.approx(0.25)
    prof.set_reference("left", "zero", 0.0)
    with pytest.raises(dsp.CalibrationError, match="calibration required"):
        dsp.effort_fraction(hm, prof, "left", "zero")
