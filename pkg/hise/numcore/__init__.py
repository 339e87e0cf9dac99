from hise.numcore.adam import AdamState, adam_step
from hise.numcore.gradcheck import finite_difference_check
from hise.numcore.ops import OPS, op
from hise.numcore.tape import Array, DiffValue, ParamBinding, Tape, apply, backward

__all__ = [
    "OPS",
    "AdamState",
    "Array",
    "DiffValue",
    "ParamBinding",
    "Tape",
    "adam_step",
    "apply",
    "backward",
    "finite_difference_check",
    "op",
]
