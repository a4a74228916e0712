"""Record capture: stimulus generation plus batched conversion.

This is the production path for multi-sample runs. Sine stimuli snapped
to a coherent FFT bin are evaluated through an exact phase accumulator
(integer arithmetic modulo the record period) so the fundamental lands
exactly on its bin regardless of record length; jitter enters as a small
additive phase per sample. Jitter draws come from a generator derived
from (seed, "jitter") in one vectorized call, and metastable decision
bits from the (seed, "meta") counter hash, so a capture is reproducible
from (config, seed) alone on either kernel backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .analog_chain import build_chain_plan
from .backend import CodeStream, LatchModel
from .characterize import coherent_bin
from .mismatch import DeviceInstance
from .seeding import derive_seed
from .signals import RampSignal
from .topology import AdcTopology


@dataclass(frozen=True)
class StimulusSpec:
    """Resolved stimulus description for one capture.

    For sine waveforms with coherent=True the frequency is a target that
    gets snapped to the nearest odd-numerator coherent bin of (fs,
    n_fft). Ramps sweep offset-amplitude to offset+amplitude across the
    record; DC holds the offset.
    """

    waveform: str
    fs: float
    n_samples: int
    frequency: float = 0.0
    amplitude: float = 0.0
    offset: float = 0.0
    phase: float = 0.0
    n_fft: int = 4096
    coherent: bool = True

    def __post_init__(self) -> None:
        if self.waveform not in ("sine", "ramp", "dc"):
            raise ValueError(f"unknown waveform {self.waveform!r}")
        if self.fs <= 0:
            raise ValueError("fs must be > 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.waveform == "sine" and self.frequency <= 0:
            raise ValueError("sine stimulus needs frequency > 0")

    def resolved_frequency(self) -> tuple[int, float]:
        """(bin numerator M, actual frequency) of the coherent sine."""
        if self.waveform != "sine":
            raise ValueError("only sine stimuli have a coherent frequency")
        if not self.coherent:
            return 0, self.frequency
        return coherent_bin(self.fs, self.n_fft, self.frequency)


def _jitter(model, n_samples: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "jitter")))
    sigma = model.sigma_jitter
    j = rng.normal(0.0, sigma, n_samples)
    np.clip(j, -5.0 * sigma, 5.0 * sigma, out=j)
    return j


def stimulus_voltages(spec: StimulusSpec, model, seed: int) -> np.ndarray:
    """Tracked, jittered stimulus evaluated at every sampling instant."""
    n = np.arange(spec.n_samples, dtype=np.int64)
    if spec.waveform == "dc":
        return np.full(spec.n_samples, spec.offset, dtype=np.float64)

    jitter = _jitter(model, spec.n_samples, seed)
    bandwidth = model.tracking_bandwidth

    if spec.waveform == "ramp":
        rate = 2.0 * spec.amplitude * spec.fs / spec.n_samples
        ramp = RampSignal(start=spec.offset - spec.amplitude, rate=rate)
        return np.asarray(ramp.tracked(bandwidth).value(n / spec.fs + jitter))

    m, f_actual = spec.resolved_frequency()
    ratio = 0.0 if math.isinf(bandwidth) else f_actual / bandwidth
    gain = 1.0 / math.sqrt(1.0 + ratio * ratio)
    phase_eff = spec.phase - math.atan(ratio)
    omega = 2.0 * math.pi * f_actual
    if spec.coherent:
        # Exact bin placement: phase advances by 2*pi*M/n_fft per sample,
        # accumulated in integers modulo the record period.
        core = (m * (n % spec.n_fft)) % spec.n_fft
        theta = (2.0 * math.pi / spec.n_fft) * core.astype(np.float64)
    else:
        theta = omega * (n / spec.fs)
    return spec.offset + spec.amplitude * gain * np.sin(
        theta + phase_eff + omega * jitter
    )


def simulate_capture(
    topology: AdcTopology,
    instance: DeviceInstance,
    latch: LatchModel,
    spec: StimulusSpec,
    seed: int,
    backend: str | None = None,
) -> CodeStream:
    """Capture one record of conversions through the batch kernel."""
    plan = build_chain_plan(topology, instance)
    volts = stimulus_voltages(spec, instance.model, seed)
    ms_seed = derive_seed(seed, "meta")
    binary, gray, meta, dec = kernels.convert_batch(
        plan, volts, latch.v_meta, ms_seed, first_index=0, backend=backend
    )
    info = {
        "waveform": spec.waveform,
        "n_samples": spec.n_samples,
        "n_fft": spec.n_fft,
        "amplitude": spec.amplitude,
        "offset": spec.offset,
        "phase": spec.phase,
    }
    if spec.waveform == "sine":
        m, f_actual = spec.resolved_frequency()
        info["f_target"] = spec.frequency
        info["f_in"] = f_actual
        info["coherent_m"] = m
    return CodeStream(
        binary=binary,
        gray=gray,
        metastable_count=meta,
        decodable=dec,
        fs=spec.fs,
        seed=seed,
        meta=info,
    )
