import math

import numpy as np
import pytest

from conftest import noise_clip, tone_clip
from kwspot.audio import AudioClip
from kwspot.frontend import (FeatureMap, FrontendConfig, load_features, load_features_csv,
                             mel_filterbank, mfcc, n_frames_for, save_features, save_features_csv)

CFG = FrontendConfig()


def oracle_mfcc(x: np.ndarray, cfg: FrontendConfig) -> np.ndarray:
    """Loop-level MFCC: explicit DFT sums, per-filter triangles and the DCT-II formula."""
    n_fft, sr = cfg.n_fft, cfg.sample_rate
    mel = lambda f: 2595 * math.log10(1 + f / 700)
    imel = lambda m: 700 * (10 ** (m / 2595) - 1)
    lo, hi = mel(cfg.fmin), mel(cfg.fmax)
    edges = [imel(lo + (hi - lo) * i / (cfg.n_mels + 1)) for i in range(cfg.n_mels + 2)]
    n_bins = n_fft // 2 + 1
    freqs = [b * sr / n_fft for b in range(n_bins)]
    win = [0.5 - 0.5 * math.cos(2 * math.pi * i / cfg.frame_len) for i in range(cfg.frame_len)]
    kk = np.arange(n_bins)[:, None] * np.arange(cfg.frame_len)[None, :]
    basis = np.exp(-2j * np.pi * kk / n_fft)
    rows = []
    for start in range(0, len(x) - cfg.frame_len + 1, cfg.hop):
        frame = np.array([x[start + i] * win[i] for i in range(cfg.frame_len)])
        power = np.abs(basis @ frame) ** 2
        energies = []
        for m in range(cfg.n_mels):
            a, c, b = edges[m], edges[m + 1], edges[m + 2]
            tot = 0.0
            for k, f in enumerate(freqs):
                if a < f < b:
                    tot += power[k] * ((f - a) / (c - a) if f <= c else (b - f) / (b - c))
            energies.append(math.log(max(tot, cfg.log_floor)))
        n = len(energies)
        coeffs = []
        for q in range(cfg.n_mfcc):
            s = sum(e * math.cos(math.pi * q * (2 * i + 1) / (2 * n)) for i, e in enumerate(energies))
            coeffs.append(s * math.sqrt((1 if q == 0 else 2) / n))
        rows.append(coeffs)
    return np.array(rows)


def test_matches_loop_oracle(rng):
    clip = noise_clip(rng, 480 + 160 * 4, 0.3)
    np.testing.assert_allclose(mfcc(clip).values, oracle_mfcc(clip.samples, CFG), rtol=1e-9, atol=1e-8)


@pytest.mark.parametrize("n, frames", [(32000, 198), (20000, 123), (480, 1), (639, 1), (640, 2)])
def test_frame_count(n, frames):
    assert 1 + (n - 480) // 160 == frames
    assert n_frames_for(n, CFG) == frames
    assert mfcc(AudioClip(np.zeros(n))).values.shape == (frames, 40)


def test_short_clip_rejected():
    with pytest.raises(ValueError):
        mfcc(AudioClip(np.zeros(479)))


def test_silence_gives_constant_cepstrum():
    v = mfcc(AudioClip(np.zeros(4000))).values
    assert np.all(v == v[0])
    assert v[0, 0] == pytest.approx(math.sqrt(40) * math.log(1e-10), rel=1e-12)
    np.testing.assert_allclose(v[0, 1:], 0.0, atol=1e-9)


def test_filterbank_contract():
    fb = mel_filterbank(CFG)
    assert fb.shape == (40, 257)
    assert np.all(fb >= 0)
    assert np.all(fb.sum(axis=1) > 0)
    freqs = np.arange(257) * 16000 / 512
    assert np.all(fb[:, (freqs < 20) | (freqs > 4000)] == 0)
    peaks = freqs[np.argmax(fb, axis=1)]
    assert np.all(np.diff(peaks) >= 0)


def test_config_validation():
    with pytest.raises(ValueError, match="Nyquist"):
        FrontendConfig(fmax=9000)
    with pytest.raises(ValueError):
        FrontendConfig(n_mfcc=41)
    with pytest.raises(ValueError):
        mel_filterbank(CFG, n_fft=256)


def test_hop_shift(rng):
    x = np.clip(0.2 * rng.standard_normal(8000), -1, 1)
    a = mfcc(AudioClip(x)).values
    b = mfcc(AudioClip(x[160:])).values
    np.testing.assert_allclose(a[1:1 + b.shape[0]], b, atol=1e-6)


def test_out_of_band_tone_changes_little(rng):
    speech = AudioClip(np.clip(0.2 * rng.standard_normal(16000), -0.85, 0.85))
    base = mfcc(speech).values
    mixed = mfcc(AudioClip(speech.samples + tone_clip(5000, 16000, 0.1).samples)).values
    rel = np.abs(mixed - base) / np.maximum(np.abs(base), 1e-12)
    assert rel.max() < 0.01


def test_deterministic(rng):
    clip = noise_clip(rng, 6000)
    assert mfcc(clip).values.tobytes() == mfcc(clip).values.tobytes()


def test_feature_file_formats(tmp_path, rng):
    fm = FeatureMap(rng.standard_normal((7, 40)))
    save_features(fm, tmp_path / "f.feat")
    raw = (tmp_path / "f.feat").read_bytes()
    assert raw[:8] == (7).to_bytes(4, "little") + (40).to_bytes(4, "little")
    assert len(raw) == 8 + 7 * 40 * 4
    back = load_features(tmp_path / "f.feat")
    np.testing.assert_array_equal(back.values, fm.values.astype(np.float32))
    save_features_csv(fm, tmp_path / "f.csv")
    np.testing.assert_allclose(load_features_csv(tmp_path / "f.csv").values, fm.values, rtol=1e-7)
    (tmp_path / "bad.feat").write_bytes(raw[:-4])
    with pytest.raises(ValueError):
        load_features(tmp_path / "bad.feat")
