"""Sliding-window cleaning: find the most keyword-like 1.25 s window and gate it on confidence."""

from __future__ import annotations

import base64
import json
import subprocess
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from .audio import AudioClip, pad_center, to_pcm16


@dataclass(frozen=True)
class CleanerConfig:
    win_len: int = 20000
    stride: int = 1600
    threshold: float = 0.97

    def __post_init__(self):
        if not 0 < self.stride <= self.win_len:
            raise ValueError(f"need 0 < stride <= win_len, got {self.stride}, {self.win_len}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold {self.threshold} outside (0, 1)")


class ClipScorer(Protocol):
    """Maps a ``win_len`` window to a class-probability vector (or a single probability)."""

    def __call__(self, clip: AudioClip) -> float | Sequence[float] | np.ndarray: ...


class ScorerError(RuntimeError):
    pass


def keyword_probability(scores, target: int | None = None, n_keywords: int = 18) -> float:
    """Reduce scorer output to the probability that the keyword is present.

    A scalar is taken as-is. A vector yields ``scores[target]``, or when no
    target is set, the best keyword class (the reserved silence/unknown
    entries of a 20-way output are skipped).
    """
    arr = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ScorerError(f"scorer returned values outside [0, 1]: {arr!r}")
    if arr.ndim == 0:
        return float(arr)
    if target is not None:
        return float(arr[target])
    if arr.shape[0] == n_keywords + 2:
        arr = arr[:n_keywords]
    return float(arr.max())


def window_offsets(n_samples: int, cfg: CleanerConfig) -> range:
    return range(0, n_samples - cfg.win_len + 1, cfg.stride)


def _fit(clip: AudioClip, cfg: CleanerConfig) -> AudioClip:
    return pad_center(clip, cfg.win_len) if len(clip) < cfg.win_len else clip


def slide_best(clip: AudioClip, scorer: ClipScorer, cfg: CleanerConfig | None = None,
               target: int | None = None) -> tuple[AudioClip, int, float]:
    """Score windows at offsets 0, stride, 2*stride, ... and return the best one.

    Short clips are centre-padded to ``win_len`` first. Ties go to the
    smallest offset.
    """
    cfg = cfg or CleanerConfig()
    clip = _fit(clip, cfg)
    best_off, best_p = -1, -np.inf
    for off in window_offsets(len(clip), cfg):
        window = AudioClip(clip.samples[off:off + cfg.win_len], clip.sample_rate)
        p = keyword_probability(scorer(window), target)
        if p > best_p:
            best_off, best_p = off, p
    return AudioClip(clip.samples[best_off:best_off + cfg.win_len], clip.sample_rate), best_off, best_p


@dataclass(frozen=True, eq=False)
class CleanResult:
    window: AudioClip | None
    offset: int
    prob: float

    @property
    def accepted(self) -> bool:
        return self.window is not None


def clean_clip(clip: AudioClip, scorer: ClipScorer, cfg: CleanerConfig | None = None,
               target: int | None = None) -> CleanResult:
    """Keep the best window only when its probability is strictly above the threshold."""
    cfg = cfg or CleanerConfig()
    window, offset, prob = slide_best(clip, scorer, cfg, target)
    return CleanResult(window if prob > cfg.threshold else None, offset, prob)


class ModelScorer:
    """Scores windows with the in-package network: MFCC frontend then forward pass."""

    def __init__(self, arch, weights, frontend_config=None):
        from .frontend import FrontendConfig

        self.arch = arch
        self.weights = weights
        self.frontend_config = frontend_config or FrontendConfig()

    def __call__(self, clip: AudioClip) -> np.ndarray:
        from .frontend import mfcc
        from .model import forward

        return forward(self.arch, self.weights, mfcc(clip, self.frontend_config))


class SubprocessScorer:
    """External scorer speaking newline-delimited JSON over stdin/stdout.

    Request: ``{"pcm16": <base64 little-endian int16>, "sample_rate": 16000}``.
    Response: ``{"probs": [..]}`` (a bare JSON list or number is also accepted).
    """

    def __init__(self, argv: Sequence[str]):
        self.proc = subprocess.Popen(list(argv), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                     text=True, bufsize=1)

    def __call__(self, clip: AudioClip):
        payload = base64.b64encode(to_pcm16(clip.samples).tobytes()).decode("ascii")
        self.proc.stdin.write(json.dumps({"pcm16": payload, "sample_rate": clip.sample_rate}) + "\n")
        self.proc.stdin.flush()
        line = self.proc.stdout.readline()
        if not line:
            raise ScorerError(f"scorer process exited (code {self.proc.poll()})")
        reply = json.loads(line)
        return reply["probs"] if isinstance(reply, dict) else reply

    def close(self):
        if self.proc.poll() is None:
            self.proc.stdin.close()
            self.proc.wait(timeout=10)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def decode_request(line: str) -> AudioClip:
    """Server-side helper for writing a scorer that speaks the subprocess protocol."""
    req = json.loads(line)
    pcm = np.frombuffer(base64.b64decode(req["pcm16"]), dtype="<i2").astype(np.float64) / 32768.0
    return AudioClip(pcm, int(req.get("sample_rate", 16000)))


def serve(score: Callable[[AudioClip], Sequence[float]], stdin, stdout) -> None:
    for line in stdin:
        if line.strip():
            probs = np.asarray(score(decode_request(line)), dtype=np.float64).tolist()
            stdout.write(json.dumps({"probs": probs}) + "\n")
            stdout.flush()
