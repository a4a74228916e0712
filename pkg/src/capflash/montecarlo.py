"""Mismatch ensembles: yield statistics and the averaging benefit.

Ensembles use the analytic fast path by default: offsets propagate
through the affine gain/averaging chain to zero-crossing shifts, giving
per-trial static DNL/INL without waveform simulation. Trial seeds derive
from (master_seed, trial_index), so results are independent of execution
order and worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analog_chain import analytic_thresholds, front_end_sample, propagate
from .mismatch import DeviceInstance, MismatchModel, draw_instance
from .seeding import derive_seed
from .topology import AdcTopology, threshold_levels


@dataclass(frozen=True)
class TrialEnsemble:
    """Summaries of a Monte Carlo run over device instances."""

    n_trials: int
    master_seed: int
    peak_dnl: np.ndarray
    peak_inl: np.ndarray
    yield_fraction: float
    limits: tuple[float, float]


def static_linearity(topology: AdcTopology, instance: DeviceInstance) -> tuple[float, float]:
    """Peak static |DNL| and |INL| in LSB from analytic trip points.

    DNL is the differential error of interior code widths; INL the
    endpoint-corrected threshold error. Both exclude the outermost
    codes, matching the histogram estimator's interior convention.
    """
    trips = analytic_thresholds(topology, instance)
    ideal = threshold_levels(topology)[1:]
    err = (trips - ideal) / topology.lsb
    dnl = err[1:-1] - err[:-2]
    line = err[0] + (err[-1] - err[0]) * (
        np.arange(len(err)) / (len(err) - 1)
    )
    inl = err - line
    return float(np.abs(dnl).max()), float(np.abs(inl[1:-1]).max())


def trial_peaks(
    topology: AdcTopology,
    model: MismatchModel,
    master_seed: int,
    indices,
) -> list[tuple[int, float, float]]:
    """Peak (|DNL|, |INL|) for the given trial indices.

    Each trial draws its instance from derive_seed(master_seed, index),
    so any partition of the index range reproduces the same ensemble.
    """
    out = []
    for i in indices:
        inst = draw_instance(model, topology, derive_seed(master_seed, i))
        dnl, inl = static_linearity(topology, inst)
        out.append((int(i), dnl, inl))
    return out


def run_ensemble(
    topology: AdcTopology,
    model: MismatchModel,
    n_trials: int,
    master_seed: int,
    limits: tuple[float, float] = (0.4, 0.6),
) -> TrialEnsemble:
    """Draw n_trials instances and aggregate linearity yield.

    A trial passes when its peak static DNL and INL stay within limits.
    Per-trial seeds are derive_seed(master_seed, trial_index); results
    are reproducible from (topology, model, n_trials, master_seed).
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    peak_dnl = np.empty(n_trials)
    peak_inl = np.empty(n_trials)
    for i, dnl, inl in trial_peaks(topology, model, master_seed,
                                   range(n_trials)):
        peak_dnl[i] = dnl
        peak_inl[i] = inl
    passed = (peak_dnl <= limits[0]) & (peak_inl <= limits[1])
    return TrialEnsemble(
        n_trials=n_trials,
        master_seed=master_seed,
        peak_dnl=peak_dnl,
        peak_inl=peak_inl,
        yield_fraction=float(passed.mean()),
        limits=tuple(limits),
    )


@dataclass(frozen=True)
class AveragingReport:
    """Interpolated-vs-parent zero-crossing error spread."""

    ratio: float | None
    parent_sigma: float
    interp_sigma: float
    n_trials: int
    not_applicable: bool = False


def averaging_experiment(
    model: MismatchModel,
    topology: AdcTopology,
    n_trials: int,
    seed: int = 0,
) -> AveragingReport:
    """Measure how interpolation averages out amplifier offsets.

    Zero-crossing errors are probed at the first interpolation rank,
    where the mechanism lives: a node aligned with front-end amplifier i
    inherits that amplifier's offset, while an interpolated midpoint sees
    the mean of its two neighbors, so the error sigma ratio converges to
    1/sqrt(2) for independent draws. The ratio is scale invariant in
    sigma_amp_offset (and in the offset-sampling residual, which scales
    both ranks equally, so it is ignored here).

    Requires a model with only amplifier offsets active; with
    sigma_amp_offset of zero the ratio is undefined and the report says
    not applicable.
    """
    if model.sigma_cap_ratio != 0 or model.sigma_comp_offset != 0:
        raise ValueError(
            "averaging_experiment needs amplifier offsets only "
            "(other sigmas must be zero)"
        )
    if n_trials < 2:
        raise ValueError("n_trials must be >= 2")
    if model.sigma_amp_offset == 0:
        return AveragingReport(
            ratio=None,
            parent_sigma=0.0,
            interp_sigma=0.0,
            n_trials=n_trials,
            not_applicable=True,
        )
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "averaging")))
    draws = rng.normal(0.0, model.sigma_amp_offset,
                       (n_trials, topology.front_end_amps))
    # Crossing error at an aligned first-rank node is its parent's
    # offset; at a midpoint it is the mean of the two neighbors.
    parent = draws
    interp = 0.5 * (draws[:, :-1] + draws[:, 1:])
    parent_sigma = float(parent.std())
    interp_sigma = float(interp.std())
    return AveragingReport(
        ratio=interp_sigma / parent_sigma,
        parent_sigma=parent_sigma,
        interp_sigma=interp_sigma,
        n_trials=n_trials,
    )


def measure_threshold(
    topology: AdcTopology,
    instance: DeviceInstance,
    comparator_index: int,
    tol: float = 1e-9,
) -> float:
    """Trip voltage of one comparator measured through the full chain.

    Bisects the deterministic comparator polarity (sign of the latched
    difference) over the input range; tol is in volts. This is the
    slow-path oracle for analytic_thresholds.
    """
    def polarity(v: float) -> bool:
        state = front_end_sample(v, topology, instance)
        inputs = propagate(state, topology, instance)
        return inputs.values[comparator_index] + \
            instance.comp_offsets[comparator_index] > 0

    span = topology.full_scale
    lo = topology.v_refn - 0.5 * span
    hi = topology.v_refp + 0.5 * span
    if not polarity(hi) or polarity(lo):
        raise ValueError("comparator does not trip inside the search range")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if polarity(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
