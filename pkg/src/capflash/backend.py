"""Comparator row and digital backend.

Latch decisions include a metastability window: when the magnitude of the
latched difference stays below v_meta = v_swing * exp(-t_total/tau), the
regenerative latch has not resolved within its decision time and the
output bit is a fair coin flip. Re-latching stages extend the available
regeneration time, shrinking v_meta exponentially.

The digital chain is the silicon order: thermometer word, first-order
bubble correction to a 1-of-N word, Gray encoding through a ROM-style
mapping, and binary decode. The correction is a 3-point majority vote
followed by 1->0 edge detection with virtual boundary bits (one below the
row, zero above); any single-bit error then still fires exactly one
1-of-N line. Words the corrector cannot reduce to one line are flagged
non-decodable and fall back to the clamped popcount of the raw word.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analog_chain import LatchInputs, acquire, front_end_sample, propagate
from .mismatch import DeviceInstance
from .seeding import decision_bit, derive_seed
from .topology import AdcTopology


class NonDecodable(ValueError):
    """A 1-of-N word without exactly one active line."""


@dataclass(frozen=True)
class LatchModel:
    """Regenerative latch timing model.

    regen_tau is the regeneration time constant (C/gm of the
    cross-coupled pair), decide_time the regeneration time allotted per
    latch stage, relatch_stages the number of additional re-latching
    stages behind the first (each adds one decide_time to the exponent),
    and v_swing the swing a node must reach to count as a valid logic
    level.
    """

    regen_tau: float
    decide_time: float
    relatch_stages: int = 2
    v_swing: float = 0.75

    def __post_init__(self) -> None:
        if self.regen_tau <= 0:
            raise ValueError("regen_tau must be > 0")
        if self.decide_time <= 0:
            raise ValueError("decide_time must be > 0")
        if self.relatch_stages < 0:
            raise ValueError("relatch_stages must be >= 0")
        if self.v_swing <= 0:
            raise ValueError("v_swing must be > 0")

    @property
    def total_decide_time(self) -> float:
        return self.decide_time * (1 + self.relatch_stages)

    @property
    def v_meta(self) -> float:
        """Largest input magnitude that fails to regenerate in time."""
        return self.v_swing * math.exp(-self.total_decide_time / self.regen_tau)


def latch_decide(v: float, comp_offset: float, latch: LatchModel, rng) -> tuple[int, bool]:
    """Resolve one comparator decision.

    Returns (bit, metastable). Outside the metastability window the bit
    is the sign of v + comp_offset; inside it (|v + comp_offset| <=
    v_meta, including exactly zero) the bit is a fair draw from rng and
    the decision is flagged metastable.
    """
    w = v + comp_offset
    if abs(w) <= latch.v_meta:
        return int(rng.integers(0, 2)), True
    return (1 if w > 0 else 0), False


def bubble_correct(thermometer: int, n_bits: int = 64) -> tuple[int, bool]:
    """First-order bubble correction of a thermometer word.

    Returns (one_hot, decodable) where one_hot spans n_bits + 1 lines
    (codes 0..n_bits before clamping). Majority voting over each bit and
    its neighbors (virtual 1 below bit 0, virtual 0 above the top bit)
    removes any single-bit error; the following 1->0 edge detector fires
    the line at the remaining transition. decodable is False when more
    than one line fires (multi-bubble input), in which case callers fall
    back to the clamped popcount of the raw word.
    """
    t = [(thermometer >> i) & 1 for i in range(n_bits)]
    ext = [1] + t + [0]
    maj = [
        1 if ext[i] + ext[i + 1] + ext[i + 2] >= 2 else 0
        for i in range(n_bits)
    ]
    mext = [1] + maj + [0]
    one_hot = 0
    fired = 0
    for i in range(n_bits + 1):
        if mext[i] == 1 and mext[i + 1] == 0:
            one_hot |= 1 << i
            fired += 1
    return one_hot, fired == 1


def binary_to_gray(code: int) -> int:
    return code ^ (code >> 1)


def gray_to_binary(gray: int) -> int:
    b = gray
    shift = 1
    while (b >> shift) > 0:
        b ^= b >> shift
        shift <<= 1
    return b


def gray_encode(one_hot: int, resolution_bits: int = 6) -> int:
    """ROM-style mapping of a 1-of-N line to a Gray word.

    The fired line index is the code (clamped to the top code so the
    overrange line maps to full scale); the ROM contents follow the
    binary-reflected rule b xor (b >> 1). Raises NonDecodable unless
    exactly one line is active.
    """
    if one_hot <= 0 or one_hot & (one_hot - 1):
        raise NonDecodable(f"one_hot word {one_hot:#x} has != 1 active line")
    code = min(one_hot.bit_length() - 1, 2 ** resolution_bits - 1)
    return binary_to_gray(code)


def gray_decode(gray: int) -> int:
    """Inverse of gray_encode's ROM mapping."""
    if gray < 0:
        raise ValueError("gray word must be non-negative")
    return gray_to_binary(gray)


@dataclass(frozen=True)
class CodeSample:
    """Every representation of one conversion result."""

    thermometer: int
    one_hot: int
    gray: int
    binary: int
    metastable_count: int
    decodable: bool
    sample_index: int = 0


def decide_row(
    inputs: LatchInputs,
    comp_offsets: np.ndarray,
    latch: LatchModel,
    seed: int,
) -> tuple[int, int]:
    """Latch the whole comparator row for one sample.

    Returns (thermometer, metastable_count). Metastable decisions resolve
    through the counter hash of (seed, sample_index, comparator_index),
    making the row reproducible without generator state.
    """
    v_meta = latch.v_meta
    word = 0
    n_meta = 0
    for k, v in enumerate(inputs.values):
        w = v + comp_offsets[k]
        if abs(w) <= v_meta:
            bit = decision_bit(seed, inputs.sample_index, k)
            n_meta += 1
        else:
            bit = 1 if w > 0 else 0
        word |= bit << k
    return word, n_meta


def convert(
    topology: AdcTopology,
    instance: DeviceInstance,
    latch: LatchModel,
    v_in: float | None = None,
    signal=None,
    t: float = 0.0,
    seed: int = 0,
    sample_index: int = 0,
    rng=None,
) -> CodeSample:
    """End-to-end single conversion.

    Give either v_in directly or a signal plus sampling instant t (the
    signal path applies the instance's jitter and tracking model, drawing
    jitter from a generator derived from (seed, sample_index) unless an
    explicit rng is passed). Identical (topology, instance, latch, seed,
    sample_index) inputs produce identical CodeSamples.
    """
    if (v_in is None) == (signal is None):
        raise ValueError("pass exactly one of v_in or signal")
    if signal is not None:
        if rng is None:
            rng = np.random.Generator(
                np.random.PCG64(derive_seed(seed, "jitter", sample_index))
            )
        v_in = acquire(signal, t, instance.model, rng)

    state = front_end_sample(v_in, topology, instance, sample_index=sample_index)
    inputs = propagate(state, topology, instance)
    ms_seed = derive_seed(seed, "meta")
    thermometer, n_meta = decide_row(inputs, instance.comp_offsets, latch, ms_seed)
    one_hot, ok = bubble_correct(thermometer, topology.n_comparators)
    top = topology.n_codes - 1
    if ok:
        binary = min(one_hot.bit_length() - 1, top)
    else:
        binary = min(bin(thermometer).count("1"), top)
    gray = binary_to_gray(binary)
    return CodeSample(
        thermometer=thermometer,
        one_hot=one_hot,
        gray=gray,
        binary=binary,
        metastable_count=n_meta,
        decodable=ok,
        sample_index=sample_index,
    )


@dataclass(frozen=True)
class CodeStream:
    """A captured record of conversions plus its provenance."""

    binary: np.ndarray
    gray: np.ndarray
    metastable_count: np.ndarray
    decodable: np.ndarray
    fs: float
    seed: int
    decimation: int = 1
    meta: dict | None = None

    def __len__(self) -> int:
        return len(self.binary)


def downsample(stream: CodeStream, factor: int) -> CodeStream:
    """Keep every factor-th sample (test-mode decimation).

    Order is preserved and the cumulative decimation factor is recorded
    on the stream; the effective sample rate drops accordingly.
    """
    if factor < 1 or int(factor) != factor:
        raise ValueError("decimation factor must be an integer >= 1")
    factor = int(factor)
    if factor == 1:
        return stream
    return CodeStream(
        binary=stream.binary[::factor],
        gray=stream.gray[::factor],
        metastable_count=stream.metastable_count[::factor],
        decodable=stream.decodable[::factor],
        fs=stream.fs / factor,
        seed=stream.seed,
        decimation=stream.decimation * factor,
        meta=stream.meta,
    )
