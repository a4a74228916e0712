"""Deterministic seed derivation and decision-bit hashing.

All randomness in the simulator is rooted in a single 64-bit master seed.
Derived streams are obtained by hashing, never by sharing generator state,
so results are independent of scheduling and worker count:

* ``derive_seed(master, *salts)`` produces the seed for a sub-stream
  (per trial, per sweep point, per purpose).
* ``decision_bit(seed, sample_index, comparator_index)`` produces the fair
  random bit used to resolve a metastable comparator. It is a pure counter
  hash, so the compiled kernel and the NumPy fallback produce identical
  bits for identical inputs.

The mixer is the standard splitmix64 finalizer.
"""

from __future__ import annotations

import hashlib

_M64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Salt multipliers for the (sample, comparator) counter hash. These exact
# constants are duplicated in kernels/_native.pyx; keep them in sync.
SAMPLE_SALT = 0xD1B54A32D192ED03
COMP_SALT = 0x8CB92BA72F3D8DD7


def splitmix64(x: int) -> int:
    """One splitmix64 step: add the odd gamma, then finalize-mix."""
    x = (x + _GAMMA) & _M64
    x ^= x >> 30
    x = (x * _MIX1) & _M64
    x ^= x >> 27
    x = (x * _MIX2) & _M64
    x ^= x >> 31
    return x


def _salt_to_int(salt: int | str) -> int:
    if isinstance(salt, str):
        digest = hashlib.blake2b(salt.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    return salt & _M64


def derive_seed(master: int, *salts: int | str) -> int:
    """Derive a child seed from a master seed and a salt chain.

    The chain is order sensitive: derive_seed(s, "a", 3) differs from
    derive_seed(s, 3, "a"). String salts are hashed to 64 bits first so
    call sites can use readable purpose labels.
    """
    state = master & _M64
    for salt in salts:
        state = splitmix64(state ^ ((_salt_to_int(salt) * _GAMMA) & _M64))
    return state


def decision_bit(seed: int, sample_index: int, comparator_index: int) -> int:
    """Fair random bit for one metastable decision, as a counter hash.

    Reproducible per (seed, sample_index, comparator_index) with no
    generator state, which is what makes single conversions and batched
    kernel conversions bit-identical.
    """
    z = (seed + SAMPLE_SALT * sample_index + COMP_SALT * comparator_index) & _M64
    return splitmix64(z) >> 63
