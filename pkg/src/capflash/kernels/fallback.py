"""Pure-NumPy batch conversion kernel.

Bit-identical to the compiled kernel in kernels/_native.pyx: every
floating-point expression is evaluated in the same order (bias add, gain
multiply, clip; interpolation as left + w * (right - left)), decisions
use the same inclusive metastability window, and metastable bits come
from the same counter hash. Samples are processed in fixed-size chunks to
bound the (chunk, taps) workspace.
"""

from __future__ import annotations

import numpy as np

from ..seeding import decision_bit

CHUNK = 65536


def convert_batch(plan, voltages, v_meta, ms_seed, first_index=0):
    """Convert a voltage record to codes.

    Returns (binary uint8, gray uint8, metastable_count uint16,
    decodable bool) arrays of the record length.
    """
    v = np.ascontiguousarray(voltages, dtype=np.float64)
    n = len(v)
    n_comp = int(plan.counts[-1]) - 1
    codes = np.empty(n, dtype=np.uint8)
    gray = np.empty(n, dtype=np.uint8)
    meta = np.empty(n, dtype=np.uint16)
    dec = np.empty(n, dtype=bool)

    n_ranks = len(plan.counts)
    top = n_comp - 1

    for lo in range(0, n, CHUNK):
        hi = min(lo + CHUNK, n)
        chunk = v[lo:hi]
        y = np.clip(plan.gains[0] * (chunk[:, None] + plan.b0[None, :]),
                    -plan.clip, plan.clip)
        for r in range(1, n_ranks):
            m0, m1 = plan.map_start[r - 1], plan.map_start[r]
            o0, o1 = plan.off_start[r - 1], plan.off_start[r]
            left = y[:, plan.p_left[m0:m1]]
            x = left + plan.weights[m0:m1] * (y[:, plan.p_right[m0:m1]] - left)
            y = np.clip(plan.gains[r] * (x + plan.stage_offs[o0:o1]),
                        -plan.clip, plan.clip)

        w = y[:, 1:] + plan.comp_offsets[None, :]
        bits = (w > 0).astype(np.uint8)
        meta_mask = np.abs(w) <= v_meta
        meta[lo:hi] = meta_mask.sum(axis=1)
        if meta_mask.any():
            for i, k in np.argwhere(meta_mask):
                bits[i, k] = decision_bit(ms_seed, first_index + lo + int(i), int(k))

        ext = np.empty((hi - lo, n_comp + 2), dtype=np.uint8)
        ext[:, 0] = 1
        ext[:, 1:-1] = bits
        ext[:, -1] = 0
        maj = (ext[:, :-2] + ext[:, 1:-1] + ext[:, 2:]) >= 2

        mext = np.empty((hi - lo, n_comp + 2), dtype=bool)
        mext[:, 0] = True
        mext[:, 1:-1] = maj
        mext[:, -1] = False
        fires = mext[:, :-1] & ~mext[:, 1:]
        n_fires = fires.sum(axis=1)
        first_fire = np.argmax(fires, axis=1)
        ok = n_fires == 1
        popc = bits.sum(axis=1, dtype=np.int64)
        code = np.where(ok,
                        np.minimum(first_fire, top),
                        np.minimum(popc, top)).astype(np.uint8)
        codes[lo:hi] = code
        gray[lo:hi] = code ^ (code >> 1)
        dec[lo:hi] = ok

    return codes, gray, meta, dec
