"""Conversion kernel selection.

The compiled extension (_native) is preferred when importable; otherwise
the NumPy fallback is used. Both are bit-identical by contract (enforced
by the parity tests), so the choice only affects speed. Set
CAPFLASH_BACKEND=fallback or =native to force one; forcing native when
the extension is missing raises at import of this module.
"""

from __future__ import annotations

import os

import numpy as np

from . import fallback as _fallback

try:
    from . import _native
except ImportError:
    _native = None

_requested = os.environ.get("CAPFLASH_BACKEND", "").strip().lower()
if _requested == "fallback":
    _active = "fallback"
elif _requested == "native":
    if _native is None:
        raise ImportError(
            "CAPFLASH_BACKEND=native but the compiled kernel is not built"
        )
    _active = "native"
elif _requested:
    raise ImportError(f"unknown CAPFLASH_BACKEND value {_requested!r}")
else:
    _active = "native" if _native is not None else "fallback"


def backend_name() -> str:
    """Name of the kernel backend selected at import time."""
    return _active


def available_backends() -> tuple[str, ...]:
    return ("native", "fallback") if _native is not None else ("fallback",)


def convert_batch(plan, voltages, v_meta, ms_seed, first_index=0, backend=None):
    """Convert a voltage record with the selected (or named) backend.

    plan is an analog_chain.ChainPlan; returns (binary, gray,
    metastable_count, decodable) arrays.
    """
    name = backend or _active
    if name == "fallback":
        return _fallback.convert_batch(plan, voltages, v_meta, ms_seed, first_index)
    if name == "native":
        if _native is None:
            raise RuntimeError("native kernel not built")
        v = np.ascontiguousarray(voltages, dtype=np.float64)
        return _native.convert_batch(
            plan.counts, plan.gains, plan.b0,
            plan.stage_offs, plan.off_start,
            plan.p_left, plan.p_right, plan.weights, plan.map_start,
            plan.clip, plan.comp_offsets,
            v, float(v_meta), int(ms_seed) & ((1 << 64) - 1), int(first_index),
        )
    raise ValueError(f"unknown backend {name!r}")
