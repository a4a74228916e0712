"""Per-conversion analog signal path, input to comparator-row voltages.

The chain is evaluated in the two clock phases of the converter. In the
acquisition phase each front-end amplifier samples the tracked, jittered
input against its capacitively divided reference (distributed
sample-and-hold with input-offset sampling). In the amplification phase
the stored differences travel through the interpolating gain ranks: each
rank amplifies, adds its residual offsets, clips at the supply-limited
swing, and hands an interpolated copy to the next rank. Midpoint taps are
the arithmetic mean of their two parents (purely reactive averaging).

The whole unclipped chain is affine in the input voltage, which gives an
analytic expression for every comparator trip point; build_chain_plan and
analytic_thresholds expose that structure for the batched kernels and the
Monte Carlo fast path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mismatch import DeviceInstance, MismatchModel
from .signals import Signal
from .topology import AdcTopology


class DimensionMismatch(ValueError):
    """Instance arrays do not match the topology."""


class PhaseOrderViolation(RuntimeError):
    """Amplification phase invoked without a preceding sampling phase."""


@dataclass(frozen=True)
class FrontEndState:
    """Differences stored on the front-end sampling caps during phase 1."""

    values: np.ndarray
    v_in: float
    sample_index: int = 0
    sampled: bool = True


@dataclass(frozen=True)
class LatchInputs:
    """Differential voltages presented to the comparator row."""

    values: np.ndarray
    sample_index: int = 0
    true_input: float = 0.0


def acquire(signal: Signal, t_nominal: float, model: MismatchModel, rng) -> float:
    """Sample the continuous-time input at a jittered instant.

    The first-order tracking pole is applied analytically (sinusoids lose
    amplitude by 1/sqrt(1+(f/B)^2) and phase by atan(f/B)); the sampling
    instant is t_nominal plus a Gaussian jitter draw truncated at +-5
    sigma.
    """
    jitter = rng.normal(0.0, model.sigma_jitter)
    bound = 5.0 * model.sigma_jitter
    jitter = min(max(jitter, -bound), bound)
    tracked = signal.tracked(model.tracking_bandwidth)
    return float(tracked.value(t_nominal + jitter))


def acquire_batch(signal: Signal, times: np.ndarray, model: MismatchModel, rng) -> np.ndarray:
    """Vectorized acquire over an array of nominal sampling instants."""
    sigma = model.sigma_jitter
    jitter = rng.normal(0.0, sigma, len(times))
    np.clip(jitter, -5.0 * sigma, 5.0 * sigma, out=jitter)
    tracked = signal.tracked(model.tracking_bandwidth)
    return np.asarray(tracked.value(np.asarray(times, dtype=np.float64) + jitter))


def _front_end_bias(topology: AdcTopology, instance: DeviceInstance) -> np.ndarray:
    """Additive term of each front-end unit: minus its (perturbed)
    reference plus the offset-sampling residual."""
    f0 = topology.interp_factors[0]
    ratios = np.arange(topology.front_end_amps, dtype=np.float64) / f0
    ratios = ratios * (1.0 + instance.cap_ratio_errors)
    v_refs = topology.v_refn + ratios * topology.full_scale
    rho = instance.model.ios_residual_factor
    return -v_refs + rho * instance.amp_offsets[0]


def front_end_sample(
    v_in: float,
    topology: AdcTopology,
    instance: DeviceInstance,
    sample_index: int = 0,
) -> FrontEndState:
    """Phase-1 sampling: store (v_in - v_ref_i) on every front-end unit.

    Capacitor-ratio errors perturb each reference through the divider
    ratio; the residual amplifier offset ios_residual_factor * draw is
    added to the stored difference. Raises DimensionMismatch when the
    instance was drawn for a different topology.
    """
    try:
        instance.validate_against(topology)
    except ValueError as exc:
        raise DimensionMismatch(str(exc)) from None
    values = v_in + _front_end_bias(topology, instance)
    return FrontEndState(values=values, v_in=float(v_in), sample_index=sample_index)


def _interp_maps(counts):
    """Parent gather indices and weights for each rank transition.

    Child j of a factor-f transition reads parents j//f and j//f + 1 with
    weight (j mod f)/f; aligned children (weight 0) are plain copies. The
    right index is clamped so the top aligned child stays in range.
    """
    maps = []
    for prev, cur in zip(counts[:-1], counts[1:]):
        f = (cur - 1) // (prev - 1)
        j = np.arange(cur, dtype=np.int64)
        p_left = j // f
        p_right = np.minimum(p_left + 1, prev - 1)
        weights = (j - p_left * f).astype(np.float64) / f
        maps.append((p_left, p_right, weights))
    return maps


def propagate(
    state: FrontEndState,
    topology: AdcTopology,
    instance: DeviceInstance,
) -> LatchInputs:
    """Phase-2 amplification through every interpolating rank.

    Each rank multiplies by its effective gain, adds the rank's residual
    offsets, and clips at +-clip_swing; interpolated taps average their
    two parents before amplification. Returns the comparator-row vector
    (crossing 0 at v_refn is dropped).
    """
    if state is None or not getattr(state, "sampled", False):
        raise PhaseOrderViolation("front_end_sample must run before propagate")
    instance.validate_against(topology)
    rho = instance.model.ios_residual_factor
    clip = topology.clip_swing
    gains = topology.stage_gains
    counts = topology.stage_amp_counts

    y = np.clip(gains[0] * state.values, -clip, clip)
    for r, (p_left, p_right, w) in enumerate(_interp_maps(counts), start=1):
        left = y[p_left]
        x = left + w * (y[p_right] - left)
        y = np.clip(gains[r] * (x + rho * instance.amp_offsets[r]), -clip, clip)
    return LatchInputs(
        values=y[1:],
        sample_index=state.sample_index,
        true_input=state.v_in,
    )


@dataclass(frozen=True)
class ChainPlan:
    """Flattened per-instance chain description for the batch kernels.

    Rank-0 bias b0 already folds reference perturbation and offset
    residuals; stage_offs holds rho-scaled offsets of ranks >= 1 back to
    back, indexed by off_start. Parent gather indices and interpolation
    weights are flattened the same way (map_start). All arrays are
    C-contiguous float64/int64.
    """

    counts: np.ndarray
    gains: np.ndarray
    b0: np.ndarray
    stage_offs: np.ndarray
    off_start: np.ndarray
    p_left: np.ndarray
    p_right: np.ndarray
    weights: np.ndarray
    map_start: np.ndarray
    clip: float
    comp_offsets: np.ndarray
    total_gain: float


def build_chain_plan(topology: AdcTopology, instance: DeviceInstance) -> ChainPlan:
    instance.validate_against(topology)
    counts = np.asarray(topology.stage_amp_counts, dtype=np.int64)
    gains = np.asarray(topology.stage_gains, dtype=np.float64)
    rho = instance.model.ios_residual_factor
    b0 = np.ascontiguousarray(_front_end_bias(topology, instance), dtype=np.float64)

    offs, off_start = [], [0]
    pl, pr, wt, map_start = [], [], [], [0]
    for r, (left, right, w) in enumerate(_interp_maps(topology.stage_amp_counts), start=1):
        offs.append(rho * instance.amp_offsets[r])
        off_start.append(off_start[-1] + len(offs[-1]))
        pl.append(left)
        pr.append(right)
        wt.append(w)
        map_start.append(map_start[-1] + len(w))

    def cat(parts, dtype):
        if not parts:
            return np.zeros(0, dtype=dtype)
        return np.ascontiguousarray(np.concatenate(parts), dtype=dtype)

    return ChainPlan(
        counts=counts,
        gains=gains,
        b0=b0,
        stage_offs=cat(offs, np.float64),
        off_start=np.asarray(off_start, dtype=np.int64),
        p_left=cat(pl, np.int64),
        p_right=cat(pr, np.int64),
        weights=cat(wt, np.float64),
        map_start=np.asarray(map_start, dtype=np.int64),
        clip=float(topology.clip_swing),
        comp_offsets=np.ascontiguousarray(instance.comp_offsets, dtype=np.float64),
        total_gain=float(np.prod(gains)),
    )


def analytic_thresholds(topology: AdcTopology, instance: DeviceInstance) -> np.ndarray:
    """Input-referred trip voltage of every comparator, ignoring clipping.

    The unclipped chain is affine in v_in with a common slope (product of
    stage gains), so each comparator's trip point is where its node's
    affine intercept plus the latch offset crosses zero. Valid whenever
    decisions happen inside the linear range, which the clip level
    guarantees near every trip point.
    """
    instance.validate_against(topology)
    rho = instance.model.ios_residual_factor
    gains = topology.stage_gains
    slope = gains[0]
    intercept = gains[0] * _front_end_bias(topology, instance)
    for r, (p_left, p_right, w) in enumerate(_interp_maps(topology.stage_amp_counts), start=1):
        left = intercept[p_left]
        x = left + w * (intercept[p_right] - left)
        intercept = gains[r] * (x + rho * instance.amp_offsets[r])
        slope *= gains[r]
    node_intercepts = intercept[1:] + instance.comp_offsets
    return -node_intercepts / slope
