"""EfficientNet-A0 as data: stage lists, accounting, numpy inference and the training loss."""

from .arch import (A0_STAGES, B0_STAGES, Architecture, ArchitectureError, StageSpec, build_a0,
                   build_b0, load_arch, resolve_arch, save_arch)
from .counting import (REPORTED_A0_FLOPS, REPORTED_A0_PARAMS, REPORTED_B0_PARAMS, Conventions, FlopReport,
                       ParamReport, convention_report, count_flops, count_params)
from .loss import ClassWeights, class_weights_from_counts, weighted_xent, xent_grad
from .network import backbone, classify, forward, logits, softmax
from .weights import WeightError, WeightSet, init_weights, load_weights, save_weights, tensor_shapes

__all__ = [
    "A0_STAGES", "B0_STAGES", "Architecture", "ArchitectureError", "ClassWeights", "Conventions",
    "FlopReport", "REPORTED_A0_FLOPS", "REPORTED_A0_PARAMS", "REPORTED_B0_PARAMS", "ParamReport",
    "StageSpec", "WeightError", "WeightSet", "backbone", "build_a0", "build_b0",
    "class_weights_from_counts", "classify", "convention_report", "count_flops", "count_params",
    "forward", "init_weights", "load_arch", "load_weights", "logits", "resolve_arch", "save_arch",
    "save_weights", "softmax", "tensor_shapes", "weighted_xent", "xent_grad",
]
