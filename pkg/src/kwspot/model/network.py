"""Inference-mode forward pass in numpy (one sample, HWC layout)."""

from __future__ import annotations

import numpy as np

from ..frontend import FeatureMap
from .arch import Architecture, block_plan
from .counting import conv_out
from .weights import WeightSet


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def swish(x):
    return x * sigmoid(x)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _pad(x: np.ndarray, k: int) -> np.ndarray:
    p = (k - 1) // 2
    return np.pad(x, ((p, p), (p, p), (0, 0))) if p else x


def conv2d(x: np.ndarray, w: np.ndarray, stride: int = 1) -> np.ndarray:
    """Same-padded dense convolution; ``w`` is (k, k, cin, cout)."""
    k = w.shape[0]
    h, wd = conv_out(x.shape[0], k, stride), conv_out(x.shape[1], k, stride)
    xp = _pad(x, k)
    out = np.zeros((h, wd, w.shape[3]))
    for dy in range(k):
        for dx in range(k):
            patch = xp[dy:dy + stride * (h - 1) + 1:stride, dx:dx + stride * (wd - 1) + 1:stride, :]
            out += patch @ w[dy, dx]
    return out


def depthwise2d(x: np.ndarray, w: np.ndarray, stride: int = 1) -> np.ndarray:
    """Same-padded depthwise convolution; ``w`` is (k, k, channels)."""
    k = w.shape[0]
    h, wd = conv_out(x.shape[0], k, stride), conv_out(x.shape[1], k, stride)
    xp = _pad(x, k)
    out = np.zeros((h, wd, x.shape[2]))
    for dy in range(k):
        for dx in range(k):
            out += xp[dy:dy + stride * (h - 1) + 1:stride, dx:dx + stride * (wd - 1) + 1:stride, :] * w[dy, dx]
    return out


def batch_norm(x: np.ndarray, ws: WeightSet, prefix: str, eps: float) -> np.ndarray:
    gamma, beta = ws[f"{prefix}.gamma"], ws[f"{prefix}.beta"]
    mean, var = ws[f"{prefix}.mean"], ws[f"{prefix}.var"]
    scale = gamma / np.sqrt(var.astype(np.float64) + eps)
    return (x - mean) * scale + beta


def squeeze_excite(x: np.ndarray, ws: WeightSet, prefix: str) -> np.ndarray:
    s = x.mean(axis=(0, 1))
    s = swish(s @ ws[f"{prefix}.reduce.weight"] + ws[f"{prefix}.reduce.bias"])
    s = sigmoid(s @ ws[f"{prefix}.expand.weight"] + ws[f"{prefix}.expand.bias"])
    return x * s


def mbconv(x, ws, arch, path, cin, cout, k, stride, e):
    eps = arch.bn_eps
    h = x
    if e != 1:
        h = swish(batch_norm(h @ ws[f"{path}.expand.weight"], ws, f"{path}.expand.bn", eps))
    h = swish(batch_norm(depthwise2d(h, ws[f"{path}.dw.weight"], stride), ws, f"{path}.dw.bn", eps))
    h = squeeze_excite(h, ws, f"{path}.se")
    h = batch_norm(h @ ws[f"{path}.project.weight"], ws, f"{path}.project.bn", eps)
    if stride == 1 and cin == cout:
        h = h + x
    return h


def _as_input(arch: Architecture, features) -> np.ndarray:
    values = features.values if isinstance(features, FeatureMap) else np.asarray(features)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 2:
        values = values[:, :, None]
    if values.ndim != 3 or values.shape[1:] != tuple(arch.input_shape[1:]):
        raise ValueError(f"input of shape {values.shape} does not match (frames, "
                         f"{arch.input_shape[1]}, {arch.input_shape[2]})")
    if not np.all(np.isfinite(values)):
        raise ValueError("input contains non-finite values")
    return values


def backbone(arch: Architecture, ws: WeightSet, features) -> np.ndarray:
    """Everything up to (not including) global pooling: the head conv activations."""
    x = _as_input(arch, features)
    stem = arch.stages[0]
    x = swish(batch_norm(conv2d(x, ws["stem.conv.weight"], stem.stride), ws, "stem.bn", arch.bn_eps))
    for path, _si, cin, cout, k, stride, e in block_plan(arch):
        x = mbconv(x, ws, arch, path, cin, cout, k, stride, e)
    return swish(batch_norm(x @ ws["head.conv.weight"], ws, "head.bn", arch.bn_eps))


def classify(arch: Architecture, ws: WeightSet, head_map: np.ndarray) -> np.ndarray:
    """Global average pool, dropout (identity at inference), fully connected -> logits."""
    pooled = head_map.mean(axis=(0, 1))
    return pooled @ ws["head.fc.weight"] + ws["head.fc.bias"]


def logits(arch: Architecture, ws: WeightSet, features) -> np.ndarray:
    ws.check(arch)
    return classify(arch, ws, backbone(arch, ws, features))


def forward(arch: Architecture, ws: WeightSet, features) -> np.ndarray:
    """Class distribution for one (frames, coefficients) feature map."""
    return softmax(logits(arch, ws, features))
