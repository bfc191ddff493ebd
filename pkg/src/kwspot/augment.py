"""Training-time augmentation: SpecAugment-style masks on features, additive noise on audio."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioClip, AudioError
from .frontend import FeatureMap


@dataclass(frozen=True)
class MaskPolicy:
    F: int = 5
    T: int = 8
    p_freq: float = 0.5
    p_time: float = 0.5
    fill: float | str = 0.0  # a number, or "mean" for the per-map mean

    def __post_init__(self):
        if self.F < 0 or self.T < 0:
            raise ValueError("mask widths must be non-negative")
        for p in (self.p_freq, self.p_time):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} outside [0, 1]")
        if isinstance(self.fill, str) and self.fill != "mean":
            raise ValueError(f"unknown fill mode {self.fill!r}")


@dataclass(frozen=True)
class MaskDraw:
    """The mask actually applied; a width of 0 means that axis was left alone."""

    freq_start: int = 0
    freq_width: int = 0
    time_start: int = 0
    time_width: int = 0
    freq_applied: bool = False
    time_applied: bool = False


def draw_masks(n_frames: int, n_coeffs: int, policy: MaskPolicy, rng: np.random.Generator) -> MaskDraw:
    # a fixed number of draws per call keeps the rng stream aligned whether or not a mask fires
    u_f, u_t = rng.random(2)
    f = int(rng.integers(0, min(policy.F, n_coeffs), endpoint=True))
    f0 = int(rng.integers(0, n_coeffs - f, endpoint=True))
    t = int(rng.integers(0, min(policy.T, n_frames), endpoint=True))
    t0 = int(rng.integers(0, n_frames - t, endpoint=True))
    freq_on = bool(u_f < policy.p_freq)
    time_on = bool(u_t < policy.p_time)
    return MaskDraw(f0 if freq_on else 0, f if freq_on else 0,
                    t0 if time_on else 0, t if time_on else 0, freq_on, time_on)


def apply_masks(features: FeatureMap, draw: MaskDraw, fill: float | str = 0.0) -> FeatureMap:
    values = np.array(features.values, dtype=np.float64, copy=True)
    value = float(values.mean()) if fill == "mean" else float(fill)
    if draw.freq_width:
        values[:, draw.freq_start:draw.freq_start + draw.freq_width] = value
    if draw.time_width:
        values[draw.time_start:draw.time_start + draw.time_width, :] = value
    return FeatureMap(values, features.hop)


def spec_augment(features: FeatureMap, policy: MaskPolicy | None = None,
                 rng: np.random.Generator | None = None, return_draw: bool = False):
    """Mask at most one frequency band and one time band.

    Each axis is masked independently with its own probability; the width
    is uniform on ``0..F`` (or ``0..T``) and the start uniform over valid
    positions.
    """
    policy = policy or MaskPolicy()
    rng = rng if rng is not None else np.random.default_rng()
    n_frames, n_coeffs = features.values.shape
    if n_frames == 0 or n_coeffs == 0:
        raise ValueError("cannot augment an empty feature map")
    draw = draw_masks(n_frames, n_coeffs, policy, rng)
    out = apply_masks(features, draw, policy.fill)
    return (out, draw) if return_draw else out


def mix_noise(clip: AudioClip, noise: AudioClip, N: float = 0.12,
              rng: np.random.Generator | None = None, scale: float | None = None,
              offset: int | None = None) -> AudioClip:
    """``clip + s * noise[m:m+len(clip)]`` with ``s = N * U[0, 1]``, saturated to [-1, 1].

    ``scale`` and ``offset`` pin ``s`` and ``m`` instead of drawing them.
    """
    n = len(clip)
    if len(noise) < n:
        raise AudioError(f"noise has {len(noise)} samples, clip needs {n}")
    if N < 0:
        raise ValueError("noise multiplier must be non-negative")
    rng = rng if rng is not None else np.random.default_rng()
    u = rng.random()
    m = int(rng.integers(0, len(noise) - n, endpoint=True))
    s = N * u if scale is None else scale
    m = m if offset is None else offset
    if s == 0:
        return clip
    out = clip.samples + s * noise.samples[m:m + n]
    return AudioClip(np.clip(out, -1.0, 1.0), clip.sample_rate)
