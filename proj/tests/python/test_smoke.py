import math

import pytest

cardiostream = pytest.importorskip("cardiostream")


def test_version():
    assert cardiostream.__version__ == "0.1.0"


def test_band_peak_finds_tone():
    fs = 30.0
    x = [math.sin(2 * math.pi * 1.2 * i / fs) for i in range(300)]
    pk = cardiostream.band_peak(x, fs)
    assert pk["found"]
    assert abs(pk["freq_hz"] - 1.2) < 0.02
    assert pk["snr_db"] > 10.0


def test_pos_pulse_recovers_rate():
    np = pytest.importorskip("numpy")
    fps, hz, frames = 30.0, 1.2, 240
    t = np.arange(frames) / fps
    pulse = 0.5 + 0.5 * np.sin(2 * math.pi * hz * t)
    video = np.empty((frames, 4, 4, 3))
    video[..., 0] = 0.45
    video[..., 1] = (0.55 + 0.05 * pulse)[:, None, None]
    video[..., 2] = 0.35
    sig = cardiostream.pos_pulse(video, fps)
    pk = cardiostream.band_peak(sig, fps)
    assert pk["found"]
    assert abs(pk["freq_hz"] - hz) < 0.05


def test_live_run_recovers_hr():
    rep = cardiostream.run(
        {"duration_s": 12, "video.width": 8, "video.height": 8, "seed": 5}
    )
    assert rep["windows"] == 9
    assert len(rep["estimates"]) == 9
    for e in rep["estimates"]:
        assert e["valid"]
        assert e["source"] == "fused"
        assert abs(e["bpm"] - 70.0) <= 2.0
    assert rep["stats"]["counters"]["windows_emitted"] == 9
    assert rep["invalid"] == 0


def test_capture_roundtrip(tmp_path):
    cap = tmp_path / "smoke.crd"
    cardiostream.synth_capture(
        cap, {"duration_s": 6, "video.width": 8, "video.height": 8, "seed": 5}
    )
    info = cardiostream.capture_info(str(cap))
    assert info["video_width"] == 8
    assert info["fps"] == 30.0
    assert info["packets"] > 0
    rep = cardiostream.run({"input": str(cap)})
    assert rep["windows"] == 3


def test_bad_keys_and_values_raise():
    with pytest.raises(ValueError):
        cardiostream.run({"no_such_key": 1})
    with pytest.raises(ValueError):
        cardiostream.run({"window_s": 0})
    with pytest.raises(RuntimeError):
        cardiostream.run({"input": "/no/such/capture.crd"})


def test_metrics():
    m = cardiostream.metrics([70.0, 72.0], [70.0, 70.0])
    assert m["mae"] == pytest.approx(1.0)
    assert m["rmse"] == pytest.approx(math.sqrt(2.0))
