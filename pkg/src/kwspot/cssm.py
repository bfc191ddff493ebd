"""Continuous speech synthesis: embed an isolated keyword in a background speech slice.

A keyword tapered by a Bessel bump window is added into a two-second
background slice whose carve region has been attenuated by the
complementary window.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache

import numpy as np

from .audio import AudioClip, AudioError, max_energy_crop, pad_center
from .augment import mix_noise


def bessel_i0(x, rel_tol: float = 1e-16):
    """Modified Bessel function of the first kind, order zero, by power series.

    Works elementwise on arrays. Summation stops once every term has
    dropped below ``rel_tol`` times its running sum.
    """
    q = 0.25 * np.square(np.asarray(x, dtype=np.float64))
    term = np.ones_like(q)
    total = np.ones_like(q)
    k = 0
    while np.any(term > rel_tol * total):
        k += 1
        term = term * q / (k * k)
        total = total + term
    return total if total.ndim else float(total)


def bessel_window_value(j, M: int, beta: float):
    """The keyword window as a function of the centred index ``j``."""
    j = np.asarray(j, dtype=np.float64)
    r = 1.0 - 4.0 * j * j / float((M - 1) ** 2)
    return bessel_i0(beta * np.sqrt(np.maximum(r, 0.0))) / bessel_i0(beta)


@lru_cache(maxsize=32)
def _kw_window_cached(M: int, beta: float) -> np.ndarray:
    w = bessel_window_value(np.arange(M) - (M - 1) / 2.0, M, beta)
    # exact symmetry regardless of rounding in j
    half = M // 2
    w[M - half:] = w[:half][::-1]
    w.flags.writeable = False
    return w


def kw_window(M: int, beta: float = 1.5) -> np.ndarray:
    """Keyword window I0(beta*sqrt(1 - 4j^2/(M-1)^2)) / I0(beta), j centred on the window.

    For even ``M`` no sample falls exactly on j = 0, so the sampled peak
    sits a hair below 1.
    """
    if M < 2:
        raise ValueError(f"window length must be >= 2, got {M}")
    if beta <= 0:
        raise ValueError("beta must be positive")
    return _kw_window_cached(int(M), float(beta)).copy()


def bg_window(core_len: int, pad: int, beta: float = 2.5, offset: float = 1.05,
              mode: str = "literal") -> np.ndarray:
    """Background window: ``offset - kw_window(core_len, beta)`` with ``pad`` samples either side.

    ``mode="literal"`` fills the pads with zeros. ``mode="ramp"`` instead
    ramps them linearly from 1 at the outer edge to the core edge value.
    """
    if pad < 0:
        raise ValueError("pad must be non-negative")
    core = offset - kw_window(core_len, beta)
    if mode == "literal":
        side = np.zeros(pad)
    elif mode == "ramp":
        side = np.linspace(1.0, core[0], pad + 1)[:-1] if pad else np.zeros(0)
    else:
        raise ValueError(f"unknown bg window mode {mode!r}")
    return np.concatenate([side, core, side[::-1]])


@dataclass(frozen=True)
class CssmParams:
    out_len: int = 32000
    kw_len: int = 16000
    pad: int = 2000
    beta_kw: float = 1.5
    beta_bg: float = 2.5
    bg_gain_offset: float = 1.05
    bound: int = 2000
    bg_mode: str = "literal"

    def __post_init__(self):
        if self.kw_len + 2 * self.pad > self.out_len - 2 * self.bound:
            raise ValueError("keyword region plus pads does not fit between the bounds")
        if self.beta_kw <= 0 or self.beta_bg <= 0:
            raise ValueError("window shape parameters must be positive")
        if self.bound < 0 or self.pad < 0:
            raise ValueError("bound and pad must be non-negative")

    @property
    def carve_len(self) -> int:
        return self.kw_len + 2 * self.pad

    @property
    def k_range(self) -> tuple[int, int]:
        """Inclusive range of valid carve offsets."""
        return self.bound, self.out_len - (self.bound + self.carve_len)


@dataclass(frozen=True)
class SynthRecipe:
    """Everything needed to regenerate one synthesized sample bit-exactly."""

    keyword_id: str
    background_id: str
    k: int
    seed: int
    params: CssmParams = field(default_factory=CssmParams)
    background_offset: int = 0
    keyword_offset: int = 0
    clamped: bool = False

    def __post_init__(self):
        lo, hi = self.params.k_range
        if not lo <= self.k <= hi:
            raise ValueError(f"k={self.k} outside [{lo}, {hi}]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthRecipe":
        """Build from a recipe dict; extra keys (e.g. journal fields) are ignored."""
        d = {f.name: d[f.name] for f in fields(cls) if f.name in d}
        d["params"] = CssmParams(**d["params"])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class SynthResult:
    clip: AudioClip
    raw: np.ndarray  # pre-clamp mixture
    clamped: bool


def synthesize(keyword: AudioClip, background_slice: AudioClip, k: int,
               params: CssmParams | None = None) -> SynthResult:
    """Attenuate ``[k, k + carve_len)`` of the background and add the windowed keyword.

    Output outside the carve region is the background, unchanged. The
    mixture is saturated to [-1, 1]; ``clamped`` reports whether that bit.
    """
    p = params or CssmParams()
    if len(background_slice) != p.out_len:
        raise AudioError(f"background slice has {len(background_slice)} samples, expected {p.out_len}")
    if len(keyword) != p.kw_len:
        raise AudioError(f"keyword has {len(keyword)} samples, expected {p.kw_len}")
    lo, hi = p.k_range
    if not lo <= k <= hi:
        raise ValueError(f"k={k} outside [{lo}, {hi}]")
    out = background_slice.samples.copy()
    end = k + p.carve_len
    out[k:end] *= bg_window(p.kw_len, p.pad, p.beta_bg, p.bg_gain_offset, p.bg_mode)
    start = k + p.pad
    out[start:start + p.kw_len] += keyword.samples * kw_window(p.kw_len, p.beta_kw)
    clipped = np.clip(out, -1.0, 1.0)
    out.flags.writeable = False
    return SynthResult(AudioClip(clipped, background_slice.sample_rate), out,
                       bool(np.any(clipped != out)))


def random_offset(rng: np.random.Generator, n_valid: int) -> int:
    return int(rng.integers(0, n_valid, endpoint=True))


def slice_background(source: AudioClip, rng: np.random.Generator, out_len: int = 32000) -> tuple[AudioClip, int]:
    if len(source) < out_len:
        raise AudioError(f"background of {len(source)} samples is shorter than {out_len}")
    n = random_offset(rng, len(source) - out_len)
    return AudioClip(source.samples[n:n + out_len], source.sample_rate), n


def make_silence(noise: AudioClip, rng: np.random.Generator, out_len: int = 32000) -> AudioClip:
    clip, _ = slice_background(noise, rng, out_len)
    return clip


def make_unknown(background: AudioClip, noise: AudioClip, N: float, rng: np.random.Generator,
                 out_len: int = 32000) -> AudioClip:
    """A background slice contaminated with randomly scaled noise."""
    if len(noise) < out_len:
        raise AudioError(f"noise of {len(noise)} samples is shorter than {out_len}")
    bg, _ = slice_background(background, rng, out_len)
    return mix_noise(bg, noise, N, rng)


def prepare_keyword(keyword: AudioClip, kw_len: int) -> tuple[AudioClip, int]:
    """Bring a keyword recording to exactly ``kw_len`` samples: max-energy crop or centre pad."""
    if len(keyword) >= kw_len:
        return max_energy_crop(keyword, kw_len)
    return pad_center(keyword, kw_len), 0


def synthesize_sample(keyword: AudioClip, backgrounds: list[AudioClip], seed: int,
                      params: CssmParams | None = None, keyword_id: str = "",
                      background_ids: list[str] | None = None) -> tuple[SynthResult, SynthRecipe]:
    """One full random draw: pick a background, slice it, pick k, synthesize."""
    p = params or CssmParams()
    if not backgrounds:
        raise ValueError("no background clips supplied")
    rng = np.random.default_rng(seed)
    bg_index = int(rng.integers(0, len(backgrounds)))
    bg_slice, n = slice_background(backgrounds[bg_index], rng, p.out_len)
    lo, hi = p.k_range
    k = int(rng.integers(lo, hi, endpoint=True))
    kw, kw_off = prepare_keyword(keyword, p.kw_len)
    result = synthesize(kw, bg_slice, k, p)
    ids = background_ids or [str(i) for i in range(len(backgrounds))]
    recipe = SynthRecipe(keyword_id, ids[bg_index], k, seed, p, n, kw_off, result.clamped)
    return result, recipe


def replay(recipe: SynthRecipe, keyword: AudioClip, background: AudioClip) -> SynthResult:
    """Regenerate a sample from its recipe and the two source recordings."""
    p = recipe.params
    n = recipe.background_offset
    bg = AudioClip(background.samples[n:n + p.out_len], background.sample_rate)
    if len(keyword) >= p.kw_len:
        off = recipe.keyword_offset
        kw = AudioClip(keyword.samples[off:off + p.kw_len], keyword.sample_rate)
    else:
        kw = pad_center(keyword, p.kw_len)
    return synthesize(kw, bg, recipe.k, p)


def derive_seed(global_seed: int, index: int) -> int:
    return (global_seed ^ index) & 0xFFFFFFFFFFFFFFFF


__all__ = [
    "CssmParams", "SynthRecipe", "SynthResult", "bessel_i0", "bessel_window_value", "bg_window", "derive_seed",
    "kw_window", "make_silence", "make_unknown", "prepare_keyword", "replay", "slice_background",
    "synthesize", "synthesize_sample",
]
