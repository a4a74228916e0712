# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch conversion kernel.

Must stay bit-identical to kernels/fallback.py: same floating-point
expression order, same inclusive metastability window, same counter hash
for metastable bits. The per-sample loop runs without the GIL.
"""

import numpy as np

from libc.math cimport fabs
from libc.stdint cimport int64_t, uint8_t, uint16_t, uint64_t

# Constants duplicated from capflash.seeding; keep in sync.
cdef uint64_t GAMMA = 0x9E3779B97F4A7C15
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9
cdef uint64_t MIX2 = 0x94D049BB133111EB
cdef uint64_t SAMPLE_SALT = 0xD1B54A32D192ED03
cdef uint64_t COMP_SALT = 0x8CB92BA72F3D8DD7


cdef inline uint64_t _splitmix64(uint64_t x) nogil:
    x = x + GAMMA
    x ^= x >> 30
    x = x * MIX1
    x ^= x >> 27
    x = x * MIX2
    x ^= x >> 31
    return x


cdef inline int _decision_bit(uint64_t seed, uint64_t n, uint64_t k) nogil:
    cdef uint64_t z = seed + SAMPLE_SALT * n + COMP_SALT * k
    return <int>(_splitmix64(z) >> 63)


cdef inline double _clipv(double x, double c) nogil:
    if x > c:
        return c
    if x < -c:
        return -c
    return x


def convert_batch(
    int64_t[::1] counts,
    double[::1] gains,
    double[::1] b0,
    double[::1] stage_offs,
    int64_t[::1] off_start,
    int64_t[::1] p_left,
    int64_t[::1] p_right,
    double[::1] weights,
    int64_t[::1] map_start,
    double clip,
    double[::1] comp_offsets,
    double[::1] voltages,
    double v_meta,
    uint64_t ms_seed,
    int64_t first_index,
):
    cdef int64_t n = voltages.shape[0]
    cdef int n_ranks = counts.shape[0]
    cdef int max_count = 0
    cdef int i
    for i in range(n_ranks):
        if counts[i] > max_count:
            max_count = <int>counts[i]
    cdef int n_comp = <int>counts[n_ranks - 1] - 1
    cdef int top = n_comp - 1

    codes_arr = np.empty(n, dtype=np.uint8)
    gray_arr = np.empty(n, dtype=np.uint8)
    meta_arr = np.empty(n, dtype=np.uint16)
    dec_arr = np.empty(n, dtype=np.uint8)
    prev_arr = np.empty(max_count, dtype=np.float64)
    cur_arr = np.empty(max_count, dtype=np.float64)
    bits_arr = np.empty(n_comp, dtype=np.uint8)
    maj_arr = np.empty(n_comp + 2, dtype=np.uint8)

    cdef uint8_t[::1] codes = codes_arr
    cdef uint8_t[::1] gray = gray_arr
    cdef uint16_t[::1] meta = meta_arr
    cdef uint8_t[::1] dec = dec_arr
    cdef double[::1] prev = prev_arr
    cdef double[::1] cur = cur_arr
    cdef uint8_t[::1] bits = bits_arr
    cdef uint8_t[::1] mext = maj_arr

    cdef int64_t s
    cdef int r, j, k, n_meta, n_fires, first_fire, popc, code
    cdef int64_t m0, o0
    cdef int c_prev, c_cur
    cdef double v, x, left, w, g0
    cdef int b, sum3

    with nogil:
        g0 = gains[0]
        for s in range(n):
            v = voltages[s]
            c_cur = <int>counts[0]
            for j in range(c_cur):
                cur[j] = _clipv(g0 * (v + b0[j]), clip)
            for r in range(1, n_ranks):
                c_prev = c_cur
                c_cur = <int>counts[r]
                for j in range(c_prev):
                    prev[j] = cur[j]
                m0 = map_start[r - 1]
                o0 = off_start[r - 1]
                for j in range(c_cur):
                    left = prev[p_left[m0 + j]]
                    x = left + weights[m0 + j] * (prev[p_right[m0 + j]] - left)
                    cur[j] = _clipv(gains[r] * (x + stage_offs[o0 + j]), clip)

            n_meta = 0
            for k in range(n_comp):
                w = cur[k + 1] + comp_offsets[k]
                if fabs(w) <= v_meta:
                    b = _decision_bit(ms_seed, <uint64_t>(first_index + s),
                                      <uint64_t>k)
                    n_meta += 1
                elif w > 0:
                    b = 1
                else:
                    b = 0
                bits[k] = <uint8_t>b

            # Majority vote with virtual boundary bits: 1 below, 0 above.
            mext[0] = 1
            mext[n_comp + 1] = 0
            for k in range(n_comp):
                sum3 = bits[k]
                if k > 0:
                    sum3 += bits[k - 1]
                else:
                    sum3 += 1
                if k < n_comp - 1:
                    sum3 += bits[k + 1]
                mext[k + 1] = 1 if sum3 >= 2 else 0

            # 1->0 edge detection over the extended majority word.
            n_fires = 0
            first_fire = 0
            for k in range(n_comp + 1):
                if mext[k] == 1 and mext[k + 1] == 0:
                    if n_fires == 0:
                        first_fire = k
                    n_fires += 1

            if n_fires == 1:
                code = first_fire if first_fire < top else top
                dec[s] = 1
            else:
                popc = 0
                for k in range(n_comp):
                    popc += bits[k]
                code = popc if popc < top else top
                dec[s] = 0
            codes[s] = <uint8_t>code
            gray[s] = <uint8_t>(code ^ (code >> 1))
            meta[s] = <uint16_t>n_meta

    return codes_arr, gray_arr, meta_arr, dec_arr.view(np.bool_)
