import wave

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kwspot.audio import (AudioClip, AudioError, load_wav, max_energy_crop, pad_center,
                          save_wav, window_energies)


def write_raw(path, pcm: np.ndarray, channels=1, rate=16000, width=2):
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(width)
        wf.setframerate(rate)
        wf.writeframes(pcm.astype("<i2" if width == 2 else "u1").tobytes())


def test_load_length_and_scaling(tmp_path):
    pcm = np.zeros(20000, dtype=np.int16)
    pcm[0] = 32767
    pcm[1] = -32768
    write_raw(tmp_path / "a.wav", pcm)
    clip = load_wav(tmp_path / "a.wav")
    assert len(clip) == 20000
    assert clip.samples[0] == 32767 / 32768
    assert clip.samples[1] == -1.0
    assert clip.sample_rate == 16000


def test_stereo_is_averaged(tmp_path):
    left = np.array([1000, -2000, 300], dtype=np.int16)
    right = np.array([3000, 2000, -301], dtype=np.int16)
    write_raw(tmp_path / "s.wav", np.stack([left, right], axis=1).reshape(-1), channels=2)
    clip = load_wav(tmp_path / "s.wav")
    np.testing.assert_array_equal(clip.samples, (left.astype(float) + right) / 2 / 32768)


def test_wrong_rate_rejected_unless_resampling(tmp_path):
    write_raw(tmp_path / "r.wav", np.zeros(8000, dtype=np.int16), rate=8000)
    with pytest.raises(AudioError, match="8000"):
        load_wav(tmp_path / "r.wav")
    assert len(load_wav(tmp_path / "r.wav", resample=True)) == 16000


def test_load_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_wav(tmp_path / "missing.wav")
    write_raw(tmp_path / "u8.wav", np.zeros(10, dtype=np.uint8), width=1)
    with pytest.raises(AudioError, match="16-bit"):
        load_wav(tmp_path / "u8.wav")
    (tmp_path / "junk.wav").write_bytes(b"not a wav file at all")
    with pytest.raises(AudioError):
        load_wav(tmp_path / "junk.wav")


def test_save_quantization_and_round_trip(tmp_path, rng):
    clip = AudioClip(rng.uniform(-1, 1, 20000))
    save_wav(clip, tmp_path / "x.wav")
    back = load_wav(tmp_path / "x.wav")
    assert len(back) == 20000
    assert np.max(np.abs(back.samples - clip.samples)) <= 1 / 32768

    save_wav(AudioClip([0.5, 1.0, -1.0]), tmp_path / "h.wav")
    with wave.open(str(tmp_path / "h.wav")) as wf:
        stored = np.frombuffer(wf.readframes(3), dtype="<i2")
    assert abs(int(stored[0]) - 16384) <= 1
    assert stored[1] == 32767  # saturates instead of wrapping
    assert stored[2] == -32768


def test_save_empty_rejected(tmp_path):
    with pytest.raises(AudioError):
        save_wav(AudioClip([]), tmp_path / "e.wav")


def test_clip_validation():
    with pytest.raises(AudioError):
        AudioClip([0.0, 1.5])
    with pytest.raises(AudioError):
        AudioClip([np.nan])
    clip = AudioClip([0.1, 0.2])
    with pytest.raises(ValueError):
        clip.samples[0] = 0.5


@pytest.mark.parametrize("n, front, back", [(18000, 1000, 1000), (19999, 0, 1), (20000, 0, 0)])
def test_pad_center(n, front, back):
    src = AudioClip(np.full(n, 0.25))
    out = pad_center(src, 20000)
    assert len(out) == 20000
    nz = np.flatnonzero(out.samples)
    assert nz[0] == front
    assert 20000 - 1 - nz[-1] == back


def test_pad_center_too_long():
    with pytest.raises(AudioError):
        pad_center(AudioClip(np.zeros(10)), 5)


def brute_force_offset(x: np.ndarray, w: int) -> int:
    energies = [float(np.sum(x[i:i + w] ** 2)) for i in range(len(x) - w + 1)]
    return int(np.argmax(energies))  # first maximum


def test_max_energy_crop_planted_block():
    x = np.zeros(12000)
    x[5000:9000] = 0.5
    clip, off = max_energy_crop(AudioClip(x), 4000)
    assert off == 5000 == brute_force_offset(x, 4000)
    assert len(clip) == 4000


def test_max_energy_crop_ties_and_identity():
    assert max_energy_crop(AudioClip(np.full(9000, 0.3)), 4000)[1] == 0
    clip = AudioClip(np.linspace(-0.5, 0.5, 100))
    out, off = max_energy_crop(clip, 100)
    assert off == 0
    np.testing.assert_array_equal(out.samples, clip.samples)
    with pytest.raises(AudioError):
        max_energy_crop(clip, 101)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 400), st.integers(1, 300))
def test_max_energy_crop_beats_every_window(seed, extra, w):
    r = np.random.default_rng(seed)
    x = np.clip(r.standard_normal(w + extra) * r.uniform(0.01, 0.5), -1, 1)
    clip, off = max_energy_crop(AudioClip(x), w)
    e = window_energies(x, w)
    brute = [float(np.sum(x[i:i + w] ** 2)) for i in range(len(x) - w + 1)]
    np.testing.assert_allclose(e, brute, rtol=1e-9, atol=1e-12)
    assert clip.energy() >= max(brute) * (1 - 1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 500), st.integers(0, 300))
def test_pad_center_preserves_energy(seed, n, extra):
    x = np.random.default_rng(seed).uniform(-1, 1, n)
    clip = AudioClip(x)
    assert pad_center(clip, n + extra).energy() == clip.energy()
