"""Static converter architecture: stage structure, references, gain budget.

An AdcTopology describes the interpolating amplifier array of the flash
converter: a front-end rank of coarse-pitch amplifiers followed by
interpolation ranks that double the number of zero crossings until one
crossing per LSB exists. Interpolation factors are listed per stage; the
first factor sets the front-end tap pitch (front_end_amps = factor + 1)
and every later factor f multiplies the crossing count via
f * (n - 1) + 1. A factor of 1 is a plain gain stage that adds no new
taps (direct drive of the next rank) and therefore no entry in
stage_amp_counts.

Everything here is signal independent and immutable; device mismatch
lives in capflash.mismatch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class InvalidTopology(ValueError):
    """Raised when architecture parameters are inconsistent."""


@dataclass(frozen=True)
class ReferenceTap:
    """One front-end reference, generated by a capacitive divider.

    The tap voltage follows v_refn + c1/(c1+c2) * (v_refp - v_refn); c1
    and c2 are reported in farads with c1 + c2 equal to the per-amplifier
    sampling capacitance.
    """

    index: int
    c1: float
    c2: float
    v_ref: float


@dataclass(frozen=True)
class AdcTopology:
    """Validated static description of the converter architecture.

    stage_amp_counts holds the amplifier count of each interpolating rank
    (nominally [9, 17, 33, 65]); stage_gains holds the effective gain of
    each rank after capacitive divider loss. The final rank realizes
    2^resolution_bits + 1 zero crossings; the comparator row uses
    crossings 1..2^resolution_bits (crossing 0 at v_refn is dropped, and
    the all-ones code clamps to the top code).
    """

    resolution_bits: int = 6
    interp_factors: tuple[int, ...] = (8, 2, 2, 2, 1)
    front_end_amps: int = field(init=False, default=0)
    stage_amp_counts: tuple[int, ...] = field(init=False, default=())
    stage_gains: tuple[float, ...] = (2.5, 2.5, 2.5, 2.5)
    sampling_cap_per_amp: float = 44.4e-15
    wiring_parasitic: float = 0.0
    v_refn: float = 0.25
    v_refp: float = 1.25
    clip_swing: float = 0.75

    def __post_init__(self) -> None:
        if self.resolution_bits < 1:
            raise InvalidTopology("resolution_bits must be >= 1")
        factors = tuple(int(f) for f in self.interp_factors)
        if not factors or any(f < 1 for f in factors):
            raise InvalidTopology("interpolation factors must be integers >= 1")
        product = math.prod(factors)
        if product != 2 ** self.resolution_bits:
            raise InvalidTopology(
                f"interpolation factor product {product} != "
                f"2^{self.resolution_bits}"
            )
        counts = [factors[0] + 1]
        for f in factors[1:]:
            if f == 1:
                continue
            counts.append(f * (counts[-1] - 1) + 1)
        gains = self.stage_gains
        if isinstance(gains, (int, float)):
            gains = (float(gains),) * len(counts)
        else:
            gains = tuple(float(g) for g in gains)
            if len(gains) == 1:
                gains = gains * len(counts)
        if len(gains) != len(counts):
            raise InvalidTopology(
                f"need one stage gain per rank: got {len(gains)} gains "
                f"for {len(counts)} ranks"
            )
        if any(g <= 0 for g in gains):
            raise InvalidTopology("stage gains must be strictly positive")
        if self.sampling_cap_per_amp <= 0:
            raise InvalidTopology("sampling_cap_per_amp must be > 0")
        if self.wiring_parasitic < 0:
            raise InvalidTopology("wiring_parasitic must be >= 0")
        if not self.v_refp > self.v_refn:
            raise InvalidTopology("v_refp must exceed v_refn")
        if self.clip_swing <= 0:
            raise InvalidTopology("clip_swing must be > 0")
        object.__setattr__(self, "interp_factors", factors)
        object.__setattr__(self, "front_end_amps", factors[0] + 1)
        object.__setattr__(self, "stage_amp_counts", tuple(counts))
        object.__setattr__(self, "stage_gains", gains)

    @property
    def full_scale(self) -> float:
        return self.v_refp - self.v_refn

    @property
    def lsb(self) -> float:
        return self.full_scale / 2 ** self.resolution_bits

    @property
    def n_codes(self) -> int:
        return 2 ** self.resolution_bits

    @property
    def n_comparators(self) -> int:
        return 2 ** self.resolution_bits

    @property
    def total_gain(self) -> float:
        return math.prod(self.stage_gains)


def build_topology(
    resolution_bits: int = 6,
    interp_factors=(8, 2, 2, 2, 1),
    stage_gains=2.5,
    sampling_cap_per_amp: float = 44.4e-15,
    wiring_parasitic: float = 0.0,
    v_refn: float = 0.25,
    v_refp: float = 1.25,
    clip_swing: float = 0.75,
) -> AdcTopology:
    """Build and validate an AdcTopology from raw architecture parameters.

    stage_gains may be a scalar (applied to every rank) or a sequence with
    one entry per interpolating rank. Rejects factor products that do not
    equal 2^resolution_bits and any non-positive capacitance or gain.
    """
    return AdcTopology(
        resolution_bits=resolution_bits,
        interp_factors=tuple(interp_factors),
        stage_gains=stage_gains,
        sampling_cap_per_amp=sampling_cap_per_amp,
        wiring_parasitic=wiring_parasitic,
        v_refn=v_refn,
        v_refp=v_refp,
        clip_swing=clip_swing,
    )


def reference_taps(topology: AdcTopology) -> list[ReferenceTap]:
    """Front-end reference ladder as capacitive dividers.

    Tap i uses c1/(c1+c2) = i/interp_factors[0], so tap 0 sits at v_refn
    and the top tap at v_refp. c1 + c2 equals the per-amplifier sampling
    capacitance.
    """
    taps = []
    c_total = topology.sampling_cap_per_amp
    f0 = topology.interp_factors[0]
    for i in range(topology.front_end_amps):
        ratio = i / f0
        c1 = ratio * c_total
        c2 = c_total - c1
        v_ref = topology.v_refn + ratio * (topology.v_refp - topology.v_refn)
        taps.append(ReferenceTap(index=i, c1=c1, c2=c2, v_ref=v_ref))
    return taps


def input_capacitance(topology: AdcTopology) -> float:
    """Total converter input capacitance.

    The distributed sample-and-hold makes the input load simply the sum of
    the front-end sampling capacitors plus wiring parasitics.
    """
    return (
        topology.front_end_amps * topology.sampling_cap_per_amp
        + topology.wiring_parasitic
    )


def effective_stage_gain(intrinsic_gain: float, c_sample: float, c_amp_in: float) -> float:
    """Per-stage gain after capacitive divider loss.

    The amplifier's intrinsic gain is attenuated by the divider formed by
    its sampling capacitor and the next stage's input capacitance:
    intrinsic * c_sample / (c_sample + c_amp_in).
    """
    if c_sample <= 0:
        raise ValueError("c_sample must be > 0")
    if c_amp_in < 0:
        raise ValueError("c_amp_in must be >= 0")
    return intrinsic_gain * c_sample / (c_sample + c_amp_in)


def threshold_levels(topology: AdcTopology):
    """All 2^N + 1 ideal zero-crossing levels, v_refn + k * FS / 2^N.

    Index k runs 0..2^N. The comparator row is instantiated on k = 1..2^N;
    crossing 0 at v_refn is dropped so a full-scale input never
    under-ranges.
    """
    n = 2 ** topology.resolution_bits
    k = np.arange(n + 1, dtype=np.float64)
    return topology.v_refn + k * (topology.full_scale / n)
