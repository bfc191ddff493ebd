"""Parameter and multiply-accumulate accounting for stage-list architectures.

Counts are closed-form arithmetic over the stage list; they do not look at
any weight tensors, so they can be checked against a materialized
``WeightSet``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .arch import Architecture, block_plan, se_channels

REPORTED_A0_PARAMS = 238250
REPORTED_B0_PARAMS = 4032595
REPORTED_A0_FLOPS = 7439100


@dataclass(frozen=True)
class Conventions:
    """What counts as a trainable parameter.

    The defaults are the declared convention: bias-free convolutions, two
    batch-norm parameters per channel, squeeze width taken from the block
    input channels, biased squeeze/excite projections.
    """

    conv_bias: bool = False
    bn_per_channel: int = 2
    se_on: str = "input"
    se_bias: bool = True


DEFAULT_CONVENTIONS = Conventions()


@dataclass
class ParamReport:
    total: int
    per_stage: dict[str, int] = field(default_factory=dict)
    per_layer: dict[str, int] = field(default_factory=dict)
    conventions: Conventions = DEFAULT_CONVENTIONS


def _conv(k: int, cin: int, cout: int, c: Conventions) -> int:
    return k * k * cin * cout + (cout if c.conv_bias else 0) + c.bn_per_channel * cout


def _dwconv(k: int, ch: int, c: Conventions) -> int:
    return k * k * ch + (ch if c.conv_bias else 0) + c.bn_per_channel * ch


def count_params(arch: Architecture, conventions: Conventions = DEFAULT_CONVENTIONS) -> ParamReport:
    c = conventions
    rep = ParamReport(0, conventions=c)

    def add(stage: str, layer: str, n: int):
        rep.per_layer[layer] = n
        rep.per_stage[stage] = rep.per_stage.get(stage, 0) + n
        rep.total += n

    stem = arch.stages[0]
    add("stage1", "stem.conv", _conv(stem.kernel, arch.input_shape[2], stem.channels, c))
    cin = stem.channels
    for path, si, cin, cout, k, _stride, e in block_plan(arch):
        stage = f"stage{si}"
        mid = cin * e
        if e != 1:
            add(stage, f"{path}.expand", _conv(1, cin, mid, c))
        add(stage, f"{path}.dw", _dwconv(k, mid, c))
        sq = se_channels(arch, cin, mid, c.se_on)
        add(stage, f"{path}.se", 2 * mid * sq + ((sq + mid) if c.se_bias else 0))
        add(stage, f"{path}.project", _conv(1, mid, cout, c))
        cin = cout
    head = arch.stages[-1]
    hs = f"stage{len(arch.stages)}"
    add(hs, "head.conv", _conv(head.kernel, cin, head.channels, c))
    add(hs, "head.fc", head.channels * arch.num_classes + arch.num_classes)
    return rep


def conv_out(n: int, k: int, s: int) -> int:
    """Output length of a same-padded convolution, padding (k - 1) // 2 each side."""
    p = (k - 1) // 2
    return (n + 2 * p - k) // s + 1


@dataclass
class FlopReport:
    macs: int
    input_shape: tuple[int, int]
    per_stage: dict[str, int] = field(default_factory=dict)

    @property
    def flops(self) -> int:
        return 2 * self.macs


def count_flops(arch: Architecture, input_shape: tuple[int, int] | None = None) -> FlopReport:
    """Multiply-accumulates per inference over a (frames, coefficients) input.

    Batch-norm, activations, residual adds and pooling are not counted. The
    squeeze-excite projections count once (they act on pooled vectors).
    """
    h, w = input_shape or arch.input_shape[:2]
    rep = FlopReport(0, (h, w))

    def add(stage: str, n: int):
        rep.per_stage[stage] = rep.per_stage.get(stage, 0) + n
        rep.macs += n

    stem = arch.stages[0]
    h, w = conv_out(h, stem.kernel, stem.stride), conv_out(w, stem.kernel, stem.stride)
    add("stage1", h * w * stem.channels * stem.kernel ** 2 * arch.input_shape[2])
    cin = stem.channels
    for _path, si, cin, cout, k, stride, e in block_plan(arch):
        stage = f"stage{si}"
        mid = cin * e
        if e != 1:
            add(stage, h * w * cin * mid)
        h, w = conv_out(h, k, stride), conv_out(w, k, stride)
        add(stage, h * w * mid * k * k)
        sq = se_channels(arch, cin, mid)
        add(stage, 2 * mid * sq)
        add(stage, h * w * mid * cout)
        cin = cout
    head = arch.stages[-1]
    hs = f"stage{len(arch.stages)}"
    add(hs, h * w * cin * head.channels)
    add(hs, head.channels * arch.num_classes)
    return rep


TOGGLES = {
    "declared": DEFAULT_CONVENTIONS,
    "conv_bias_on": replace(DEFAULT_CONVENTIONS, conv_bias=True),
    "bn_4_per_channel": replace(DEFAULT_CONVENTIONS, bn_per_channel=4),
    "se_on_expanded": replace(DEFAULT_CONVENTIONS, se_on="expanded"),
    "se_bias_off": replace(DEFAULT_CONVENTIONS, se_bias=False),
}


def convention_report(arch: Architecture, target: int = REPORTED_A0_PARAMS) -> dict:
    """Totals under each convention toggle, plus single-stage repeat probes.

    The repeat probes drop one layer from one multi-layer stage at a time,
    which localizes a gap that no counting convention can explain.
    """
    out = {"target": target, "toggles": {}, "repeat_probes": {}}
    for name, conv in TOGGLES.items():
        total = count_params(arch, conv).total
        out["toggles"][name] = {"total": total, "delta": total - target,
                                "rel_delta": (total - target) / target}
    for i, stage in enumerate(arch.stages):
        if stage.is_mbconv and stage.repeats > 1:
            stages = list(arch.stages)
            stages[i] = replace(stage, repeats=stage.repeats - 1)
            total = count_params(arch.with_stages(stages)).total
            out["repeat_probes"][f"stage{i + 1}_repeats_{stage.repeats - 1}"] = {
                "total": total, "delta": total - target, "rel_delta": (total - target) / target}
    return out


def within(total: int, target: int, rel: float) -> bool:
    return math.fabs(total - target) <= rel * target
