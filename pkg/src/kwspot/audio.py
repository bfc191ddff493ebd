"""Fixed-rate mono audio clips, WAV I/O and the trimming/padding primitives."""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SAMPLE_RATE = 16000
PCM_SCALE = 32768.0


class AudioError(ValueError):
    """Raised for malformed, unsupported or out-of-contract audio."""


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono float64 samples in [-1, 1] at a fixed sample rate.

    The sample buffer is copied and marked read-only on construction, so
    clips can be shared freely between threads.
    """

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        data = np.array(self.samples, dtype=np.float64, copy=True).reshape(-1)
        if self.sample_rate <= 0:
            raise AudioError(f"sample rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(data)):
            raise AudioError("clip contains non-finite samples")
        if data.size and np.max(np.abs(data)) > 1.0:
            raise AudioError("clip samples must lie in [-1, 1]")
        data.flags.writeable = False
        object.__setattr__(self, "samples", data)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def energy(self) -> float:
        # exactly rounded, so zero padding never changes it
        return math.fsum(np.square(self.samples))


def seconds_to_samples(seconds: float, sample_rate: int = SAMPLE_RATE) -> int:
    return int(round(seconds * sample_rate))


def _linear_resample(x: np.ndarray, src_rate: int, dst_rate: int) -> np.ndarray:
    n_out = int(round(x.shape[0] * dst_rate / src_rate))
    t_out = np.arange(n_out) * (src_rate / dst_rate)
    return np.interp(t_out, np.arange(x.shape[0]), x)


def load_wav(path, resample: bool = False) -> AudioClip:
    """Read a PCM16 WAV file as a mono 16 kHz clip.

    Multi-channel files are averaged to mono. Files at another rate are
    rejected unless ``resample`` is set, in which case they are linearly
    interpolated to 16 kHz.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such WAV file: {path}")
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise AudioError(f"{path}: unsupported WAV container ({exc})") from exc
    if width != 2:
        raise AudioError(f"{path}: only 16-bit PCM is supported (sample width {width})")
    pcm = np.frombuffer(raw, dtype="<i2").astype(np.float64)
    pcm = pcm.reshape(-1, n_channels).mean(axis=1) / PCM_SCALE
    if rate != SAMPLE_RATE:
        if not resample:
            raise AudioError(f"{path}: sample rate {rate} Hz, expected {SAMPLE_RATE} Hz")
        pcm = np.clip(_linear_resample(pcm, rate, SAMPLE_RATE), -1.0, 1.0)
    return AudioClip(pcm, SAMPLE_RATE)


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    # saturating: +1.0 would otherwise wrap to -32768
    q = np.round(np.asarray(samples, dtype=np.float64) * PCM_SCALE)
    return np.clip(q, -32768, 32767).astype("<i2")


def save_wav(clip: AudioClip, path) -> None:
    if len(clip) == 0:
        raise AudioError("refusing to write an empty clip")
    path = Path(path)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(to_pcm16(clip.samples).tobytes())


def pad_center(clip: AudioClip, target_len: int) -> AudioClip:
    """Zero-pad equally on both sides; an odd leftover sample goes at the end."""
    n = len(clip)
    if n > target_len:
        raise AudioError(f"clip of {n} samples is longer than target {target_len}")
    front = (target_len - n) // 2
    out = np.zeros(target_len)
    out[front:front + n] = clip.samples
    return AudioClip(out, clip.sample_rate)


def window_energies(samples: np.ndarray, win_len: int) -> np.ndarray:
    """Energy of every length-``win_len`` window, offset stride 1."""
    csum = np.concatenate(([0.0], np.cumsum(np.square(samples))))
    return csum[win_len:] - csum[:-win_len]


def max_energy_crop(clip: AudioClip, crop_len: int) -> tuple[AudioClip, int]:
    """Return the contiguous ``crop_len`` window with the largest energy.

    Ties resolve to the smallest offset.
    """
    n = len(clip)
    if crop_len <= 0 or n < crop_len:
        raise AudioError(f"cannot crop {crop_len} samples from a clip of {n}")
    energies = window_energies(clip.samples, crop_len)
    # cumulative sums drift by a few ulps; treat near-equal windows as ties
    tol = 1e-9 * max(1.0, float(energies.max()))
    offset = int(np.flatnonzero(energies >= energies.max() - tol)[0])
    return AudioClip(clip.samples[offset:offset + crop_len], clip.sample_rate), offset
