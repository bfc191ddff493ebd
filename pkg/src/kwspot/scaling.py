"""Compound scaling-down search over depth/width multipliers on an exact decimal grid."""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from .model.arch import Architecture


def _frac(x) -> Fraction:
    # str() first so 0.01 means one hundredth, not its binary neighbour
    return x if isinstance(x, Fraction) else Fraction(str(x))


@dataclass(frozen=True)
class SearchSpec:
    range_lo: Fraction = Fraction(25, 100)
    range_hi: Fraction = Fraction(60, 100)
    step: Fraction = Fraction(1, 100)
    target: Fraction = Fraction(5, 100)
    tol: Fraction = Fraction(3, 1000)
    gamma: Fraction = Fraction(1)

    def __post_init__(self):
        for name in ("range_lo", "range_hi", "step", "target", "tol", "gamma"):
            object.__setattr__(self, name, _frac(getattr(self, name)))
        if not self.range_lo < self.range_hi:
            raise ValueError("range_lo must be below range_hi")
        if self.step <= 0 or self.tol < 0:
            raise ValueError("step must be positive and tol non-negative")

    def grid(self) -> list[Fraction]:
        n = int((self.range_hi - self.range_lo) / self.step)
        values = [self.range_lo + i * self.step for i in range(n + 1)]
        if not values:
            raise ValueError("empty grid")
        return values


@dataclass(frozen=True)
class ScaleCandidate:
    alpha: Fraction
    beta: Fraction
    gamma: Fraction = Fraction(1)

    @property
    def product(self) -> Fraction:
        return self.alpha * self.beta ** 2 * self.gamma ** 2

    @property
    def depth(self) -> float:
        return float(self.alpha)

    @property
    def width(self) -> float:
        return float(self.beta)


def enumerate_candidates(spec: SearchSpec | None = None) -> list[ScaleCandidate]:
    """All grid pairs whose ``alpha * beta^2 * gamma^2`` lies within ``target +/- tol``.

    Bounds are inclusive and arithmetic is exact. Sorted by (beta, alpha).
    """
    spec = spec or SearchSpec()
    lo, hi = spec.target - spec.tol, spec.target + spec.tol
    grid = spec.grid()
    return [ScaleCandidate(a, b, spec.gamma) for b in grid for a in grid
            if lo <= a * b * b * spec.gamma ** 2 <= hi]


def round_half_up(x: Fraction) -> int:
    return int((x + Fraction(1, 2)) // 1)


def scale_channels(channels: int, beta, divisor: int = 8) -> int:
    return max(divisor, divisor * round_half_up(_frac(beta) * channels / divisor))


def scale_repeats(repeats: int, alpha) -> int:
    return max(1, round_half_up(_frac(alpha) * repeats))


def apply_scaling(base: Architecture, cand: ScaleCandidate) -> Architecture:
    """Scale every stage's width (multiples of 8, floor 8) and each MBConv stage's depth (floor 1).

    Kernels, strides and operators are untouched; so is the input
    resolution.
    """
    stages = []
    for s in base.stages:
        if s.channels <= 0 or s.repeats < 1:
            raise ValueError("base architecture needs positive channels and repeats")
        repeats = scale_repeats(s.repeats, cand.alpha) if s.is_mbconv else s.repeats
        stages.append(replace(s, channels=scale_channels(s.channels, cand.beta), repeats=repeats))
    return replace(base, stages=tuple(stages))
