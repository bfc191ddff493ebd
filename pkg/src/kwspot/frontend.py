"""MFCC feature extraction: 30 ms frames, 10 ms hop, 40 mel bands over 20 Hz-4 kHz."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft

from .audio import SAMPLE_RATE, AudioClip


@dataclass(frozen=True)
class FrontendConfig:
    frame_len: int = 480
    hop: int = 160
    n_mels: int = 40
    n_mfcc: int = 40
    fmin: float = 20.0
    fmax: float = 4000.0
    log_floor: float = 1e-10
    n_fft: int = 512
    taper: str = "hann"
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        if not 0 <= self.fmin < self.fmax:
            raise ValueError(f"need 0 <= fmin < fmax, got {self.fmin}, {self.fmax}")
        if self.fmax > self.sample_rate / 2:
            raise ValueError(f"fmax {self.fmax} Hz exceeds Nyquist {self.sample_rate / 2} Hz")
        if self.n_mfcc > self.n_mels:
            raise ValueError("n_mfcc cannot exceed n_mels")
        if self.n_fft < self.frame_len:
            raise ValueError("n_fft must be at least frame_len")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """``values`` is a (n_frames, n_mfcc) float array; frame i starts at ``i * hop``."""

    values: np.ndarray
    hop: int = 160

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_coeffs(self) -> int:
        return self.values.shape[1]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def n_frames_for(n_samples: int, config: FrontendConfig) -> int:
    if n_samples < config.frame_len:
        return 0
    return 1 + (n_samples - config.frame_len) // config.hop


def mel_filterbank(config: FrontendConfig, n_fft: int | None = None) -> np.ndarray:
    """Triangular filters, centres uniform on the mel scale between fmin and fmax.

    Returns an ``(n_mels, n_fft // 2 + 1)`` matrix. Bins outside
    ``[fmin, fmax]`` get zero weight in every filter.
    """
    n_fft = config.n_fft if n_fft is None else n_fft
    if n_fft < config.frame_len:
        raise ValueError(f"n_fft={n_fft} is shorter than the frame ({config.frame_len})")
    edges = mel_to_hz(np.linspace(hz_to_mel(config.fmin), hz_to_mel(config.fmax), config.n_mels + 2))
    freqs = np.arange(n_fft // 2 + 1) * config.sample_rate / n_fft
    lower, centre, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    if np.any(upper - lower <= 0):
        raise ValueError("mel filter with zero bandwidth")
    rising = (freqs - lower) / (centre - lower)
    falling = (upper - freqs) / (upper - centre)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    if np.any(fb.sum(axis=1) <= 0):
        # a triangle narrower than one FFT bin catches no bins at all
        raise ValueError("mel filter with no FFT bins; increase n_fft or reduce n_mels")
    return fb


def _taper(config: FrontendConfig) -> np.ndarray:
    n = config.frame_len
    if config.taper == "hann":
        # periodic Hann
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    if config.taper == "hamming":
        return 0.54 - 0.46 * np.cos(2.0 * np.pi * np.arange(n) / n)
    if config.taper == "rect":
        return np.ones(n)
    raise ValueError(f"unknown taper {config.taper!r}")


def frame_signal(samples: np.ndarray, config: FrontendConfig) -> np.ndarray:
    n_frames = n_frames_for(samples.shape[0], config)
    idx = np.arange(config.frame_len)[None, :] + config.hop * np.arange(n_frames)[:, None]
    return samples[idx]


def mfcc(clip: AudioClip, config: FrontendConfig | None = None) -> FeatureMap:
    """Per frame: taper, power spectrum, mel filterbank, floored log, orthonormal DCT-II."""
    config = config or FrontendConfig()
    if clip.sample_rate != config.sample_rate:
        raise ValueError(f"clip rate {clip.sample_rate} Hz does not match frontend rate {config.sample_rate} Hz")
    if len(clip) < config.frame_len:
        raise ValueError(f"clip of {len(clip)} samples is shorter than one frame ({config.frame_len})")
    frames = frame_signal(clip.samples, config) * _taper(config)
    power = np.abs(np.fft.rfft(frames, n=config.n_fft, axis=1)) ** 2
    mel = power @ mel_filterbank(config).T
    logmel = np.log(np.maximum(mel, config.log_floor))
    cep = scipy.fft.dct(logmel, type=2, norm="ortho", axis=1)[:, : config.n_mfcc]
    return FeatureMap(cep, config.hop)


# Binary layout: int32 frames, int32 coeffs (little-endian), then row-major float32.
_HEADER = struct.Struct("<ii")


def save_features(fm: FeatureMap, path) -> None:
    path = Path(path)
    values = np.ascontiguousarray(fm.values, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*values.shape))
        fh.write(values.tobytes())


def load_features(path, hop: int = 160) -> FeatureMap:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated feature file")
    n_frames, n_coeffs = _HEADER.unpack_from(raw)
    body = raw[_HEADER.size:]
    if n_frames < 0 or n_coeffs < 0 or len(body) != 4 * n_frames * n_coeffs:
        raise ValueError(f"{path}: header says {n_frames}x{n_coeffs}, body has {len(body)} bytes")
    values = np.frombuffer(body, dtype="<f4").reshape(n_frames, n_coeffs).astype(np.float64)
    return FeatureMap(values, hop)


def save_features_csv(fm: FeatureMap, path) -> None:
    header = ",".join(f"c{i}" for i in range(fm.n_coeffs))
    np.savetxt(path, fm.values, delimiter=",", header=header, comments="", fmt="%.8g")


def load_features_csv(path, hop: int = 160) -> FeatureMap:
    values = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return FeatureMap(values, hop)
