"""Architecture descriptions: ordered stage lists for EfficientNet-A0 and the B0 base."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

OPERATORS = ("Conv", "MBConv1", "MBConv6", "Head")
EXPANSION = {"MBConv1": 1, "MBConv6": 6}

NUM_CLASSES = 20
N_MFCC = 40
DEFAULT_FRAMES = 198


class ArchitectureError(ValueError):
    pass


@dataclass(frozen=True)
class StageSpec:
    operator: str
    kernel: int
    channels: int
    repeats: int = 1
    stride: int = 1

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise ArchitectureError(f"unknown operator {self.operator!r}")
        if self.kernel not in (1, 3, 5):
            raise ArchitectureError(f"kernel {self.kernel} not in {{1, 3, 5}}")
        if self.channels <= 0 or self.repeats < 1:
            raise ArchitectureError("channels must be positive and repeats at least 1")
        if self.stride not in (1, 2):
            raise ArchitectureError(f"stride {self.stride} not in {{1, 2}}")

    @property
    def expansion(self) -> int:
        return EXPANSION.get(self.operator, 1)

    @property
    def is_mbconv(self) -> bool:
        return self.operator in EXPANSION


@dataclass(frozen=True)
class Architecture:
    """A stem convolution, a run of MBConv stages, and a conv + pool + FC head.

    ``input_shape`` is (frames, coefficients, channels). The frame axis is
    free at inference time since the head pools it away.
    """

    stages: tuple[StageSpec, ...]
    num_classes: int = NUM_CLASSES
    input_shape: tuple[int, int, int] = (DEFAULT_FRAMES, N_MFCC, 1)
    se_ratio: float = 0.25
    dropout: float = 0.2
    bn_eps: float = 1e-3
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "input_shape", tuple(self.input_shape))
        if not self.stages:
            raise ArchitectureError("architecture has no stages")
        if self.stages[0].operator != "Conv":
            raise ArchitectureError("first stage must be a plain convolution")
        if self.stages[-1].operator != "Head":
            raise ArchitectureError("last stage must be the conv + pool + FC head")
        if any(s.operator in ("Conv", "Head") for s in self.stages[1:-1]):
            raise ArchitectureError("inner stages must be MBConv blocks")
        if self.num_classes < 1:
            raise ArchitectureError("num_classes must be positive")

    @property
    def body(self) -> tuple[StageSpec, ...]:
        return self.stages[1:-1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stages"] = [asdict(s) for s in self.stages]
        d["input_shape"] = list(self.input_shape)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Architecture":
        d = dict(d)
        d["stages"] = tuple(StageSpec(**s) for s in d["stages"])
        if "input_shape" in d:
            d["input_shape"] = tuple(d["input_shape"])
        return cls(**d)

    def with_stages(self, stages) -> "Architecture":
        return replace(self, stages=tuple(stages))


# EfficientNet-A0 stage list. Strides are not given for A0 and follow the base family.
A0_STAGES = (
    StageSpec("Conv", 3, 16, 1, 2),
    StageSpec("MBConv1", 3, 8, 1, 1),
    StageSpec("MBConv6", 5, 16, 2, 2),
    StageSpec("MBConv6", 3, 24, 1, 2),
    StageSpec("MBConv6", 3, 32, 2, 2),
    StageSpec("MBConv6", 5, 56, 2, 1),
    StageSpec("MBConv6", 3, 96, 2, 2),
    StageSpec("Head", 1, 384, 1, 1),
)

B0_STAGES = (
    StageSpec("Conv", 3, 32, 1, 2),
    StageSpec("MBConv1", 3, 16, 1, 1),
    StageSpec("MBConv6", 3, 24, 2, 2),
    StageSpec("MBConv6", 5, 40, 2, 2),
    StageSpec("MBConv6", 3, 80, 3, 2),
    StageSpec("MBConv6", 5, 112, 3, 1),
    StageSpec("MBConv6", 5, 192, 4, 2),
    StageSpec("MBConv6", 3, 320, 1, 1),
    StageSpec("Head", 1, 1280, 1, 1),
)


def build_a0(num_classes: int = NUM_CLASSES) -> Architecture:
    return Architecture(A0_STAGES, num_classes=num_classes, name="a0")


def build_b0(num_classes: int = NUM_CLASSES) -> Architecture:
    """EfficientNet-B0 adapted to single-channel MFCC input."""
    return Architecture(B0_STAGES, num_classes=num_classes, name="b0")


BUILTIN = {"a0": build_a0, "b0": build_b0}


def resolve_arch(name_or_path: str) -> Architecture:
    """``a0``/``b0`` or a path to an architecture JSON file."""
    if name_or_path in BUILTIN:
        return BUILTIN[name_or_path]()
    path = Path(name_or_path)
    if not path.is_file():
        raise ArchitectureError(f"unknown architecture {name_or_path!r} (not a builtin or a file)")
    return load_arch(path)


def load_arch(path) -> Architecture:
    return Architecture.from_dict(json.loads(Path(path).read_text()))


def save_arch(arch: Architecture, path) -> None:
    Path(path).write_text(json.dumps(arch.to_dict(), indent=2) + "\n")


def block_plan(arch: Architecture):
    """Yield ``(path, stage_index, cin, cout, kernel, stride, expansion)`` for every MBConv repeat."""
    cin = arch.stages[0].channels
    for si, stage in enumerate(arch.body, start=2):
        for r in range(stage.repeats):
            stride = stage.stride if r == 0 else 1
            yield f"stage{si}.{r}", si, cin, stage.channels, stage.kernel, stride, stage.expansion
            cin = stage.channels


def se_channels(arch: Architecture, cin: int, mid: int, on: str = "input") -> int:
    base = cin if on == "input" else mid
    return max(1, int(base * arch.se_ratio))
