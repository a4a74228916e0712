"""Mismatch statistics and per-device Monte Carlo draws.

A MismatchModel holds the sigmas of every modeled imperfection; a
DeviceInstance is one concrete draw of all of them for a single physical
converter. Instances are reproducible from (model, topology, seed): the
draw order is fixed (amplifier offsets rank by rank, then comparator
offsets, then capacitor-ratio errors) and all draws are independent
Gaussians.

Amplifier offsets are stored as drawn; the fraction that survives
input-offset sampling (ios_residual_factor) is applied where the offsets
act, in the signal chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .topology import AdcTopology


@dataclass(frozen=True)
class MismatchModel:
    """Statistical imperfection model.

    sigma_cap_ratio is the relative sigma of the reference divider ratio,
    sigma_amp_offset the per-amplifier input offset sigma in volts before
    offset sampling, ios_residual_factor the fraction of that offset
    surviving offset sampling, sigma_comp_offset the comparator latch
    offset sigma in volts, sigma_jitter the rms sampling clock jitter in
    seconds, and tracking_bandwidth the first-order front-end pole in Hz
    (math.inf disables the pole).
    """

    sigma_cap_ratio: float = 0.0
    sigma_amp_offset: float = 0.0
    ios_residual_factor: float = 0.0
    sigma_comp_offset: float = 0.0
    sigma_jitter: float = 0.0
    tracking_bandwidth: float = math.inf

    def __post_init__(self) -> None:
        for name in ("sigma_cap_ratio", "sigma_amp_offset",
                     "sigma_comp_offset", "sigma_jitter"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.ios_residual_factor <= 1.0:
            raise ValueError("ios_residual_factor must be in [0, 1]")
        if not self.tracking_bandwidth > 0:
            raise ValueError("tracking_bandwidth must be > 0")


@dataclass(frozen=True)
class DeviceInstance:
    """One drawn converter: all offset and ratio errors, plus provenance.

    amp_offsets has one array per interpolating rank (shapes matching
    AdcTopology.stage_amp_counts), comp_offsets one entry per comparator,
    cap_ratio_errors one relative error per front-end reference tap.
    """

    model: MismatchModel
    seed: int
    amp_offsets: tuple[np.ndarray, ...]
    comp_offsets: np.ndarray
    cap_ratio_errors: np.ndarray

    def validate_against(self, topology: AdcTopology) -> None:
        counts = tuple(len(a) for a in self.amp_offsets)
        if counts != topology.stage_amp_counts:
            raise ValueError(
                f"amp offset shapes {counts} do not match stage amp "
                f"counts {topology.stage_amp_counts}"
            )
        if len(self.comp_offsets) != topology.n_comparators:
            raise ValueError(
                f"expected {topology.n_comparators} comparator offsets, "
                f"got {len(self.comp_offsets)}"
            )
        if len(self.cap_ratio_errors) != topology.front_end_amps:
            raise ValueError(
                f"expected {topology.front_end_amps} cap ratio errors, "
                f"got {len(self.cap_ratio_errors)}"
            )


def draw_instance(model: MismatchModel, topology: AdcTopology, seed: int) -> DeviceInstance:
    """Draw one DeviceInstance; deterministic in (model, topology, seed).

    With all sigmas zero the draws are exactly zero and the instance is
    the nominal converter.
    """
    rng = np.random.Generator(np.random.PCG64(seed & ((1 << 64) - 1)))
    amp_offsets = tuple(
        rng.normal(0.0, model.sigma_amp_offset, count)
        for count in topology.stage_amp_counts
    )
    comp_offsets = rng.normal(0.0, model.sigma_comp_offset, topology.n_comparators)
    cap_ratio_errors = rng.normal(0.0, model.sigma_cap_ratio, topology.front_end_amps)
    return DeviceInstance(
        model=model,
        seed=seed,
        amp_offsets=amp_offsets,
        comp_offsets=comp_offsets,
        cap_ratio_errors=cap_ratio_errors,
    )


def nominal_instance(topology: AdcTopology, model: MismatchModel | None = None) -> DeviceInstance:
    """All-zero instance (ideal converter), optionally keeping a model
    for its jitter/tracking parameters."""
    model = model if model is not None else MismatchModel()
    return DeviceInstance(
        model=model,
        seed=0,
        amp_offsets=tuple(np.zeros(c) for c in topology.stage_amp_counts),
        comp_offsets=np.zeros(topology.n_comparators),
        cap_ratio_errors=np.zeros(topology.front_end_amps),
    )
