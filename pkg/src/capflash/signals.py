"""Stimulus descriptions evaluated analytically.

Signals are closed-form functions of time. The front-end tracking pole is
applied analytically per waveform (amplitude/phase shift for sinusoids,
steady-state delay for ramps, identity for DC) so no time-domain filtering
is needed. A tracking bandwidth of infinity leaves every waveform
untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class DCSignal:
    level: float

    def value(self, t):
        if np.ndim(t):
            return np.full(np.shape(t), self.level, dtype=np.float64)
        return self.level

    def tracked(self, bandwidth: float) -> "DCSignal":
        return self


@dataclass(frozen=True)
class SineSignal:
    """offset + amplitude * sin(2*pi*frequency*t + phase)."""

    amplitude: float
    frequency: float
    phase: float = 0.0
    offset: float = 0.0

    def value(self, t):
        omega = 2.0 * math.pi * self.frequency
        return self.offset + self.amplitude * np.sin(
            omega * np.asarray(t, dtype=np.float64) + self.phase
        )

    def tracked(self, bandwidth: float) -> "SineSignal":
        if math.isinf(bandwidth):
            return self
        ratio = self.frequency / bandwidth
        gain = 1.0 / math.sqrt(1.0 + ratio * ratio)
        return replace(
            self,
            amplitude=self.amplitude * gain,
            phase=self.phase - math.atan(ratio),
        )


@dataclass(frozen=True)
class RampSignal:
    """start + rate * t; the tracking pole delays it by its time constant."""

    start: float
    rate: float

    def value(self, t):
        return self.start + self.rate * np.asarray(t, dtype=np.float64)

    def tracked(self, bandwidth: float) -> "RampSignal":
        if math.isinf(bandwidth):
            return self
        # Steady-state response of a first-order pole to a ramp is the
        # same ramp delayed by 1/(2*pi*B).
        tau = 1.0 / (2.0 * math.pi * bandwidth)
        return replace(self, start=self.start - self.rate * tau)


Signal = DCSignal | SineSignal | RampSignal
