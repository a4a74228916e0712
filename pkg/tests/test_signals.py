"""Continuous-time stimulus models and their tracking-pole transforms."""

import math

import numpy as np
import pytest

from capflash.signals import DCSignal, RampSignal, SineSignal


def test_dc_ignores_bandwidth_and_time():
    s = DCSignal(0.7)
    assert s.value(0.0) == 0.7
    assert s.value(1e-3) == 0.7
    assert s.tracked(1e6).value(5.0) == 0.7


def test_sine_value():
    s = SineSignal(amplitude=0.5, frequency=1e6, phase=0.0, offset=0.75)
    assert s.value(0.0) == pytest.approx(0.75)
    assert s.value(0.25e-6) == pytest.approx(1.25)
    assert s.value(0.75e-6) == pytest.approx(0.25)


def test_sine_tracking_pole_at_corner():
    f = 5e8
    s = SineSignal(amplitude=1.0, frequency=f, phase=0.2, offset=0.0)
    t = s.tracked(f)
    assert t.amplitude == pytest.approx(1.0 / math.sqrt(2.0))
    assert t.phase == pytest.approx(0.2 - math.pi / 4)
    assert t.frequency == f
    assert t.offset == 0.0


def test_sine_tracking_infinite_bandwidth_is_identity():
    s = SineSignal(amplitude=0.5, frequency=7e8, phase=0.1, offset=0.75)
    t = s.tracked(math.inf)
    assert t.amplitude == s.amplitude
    assert t.phase == s.phase


def test_sine_tracking_rolloff_shape():
    s = SineSignal(amplitude=1.0, frequency=2e9, phase=0.0, offset=0.0)
    b = 1e9
    t = s.tracked(b)
    assert t.amplitude == pytest.approx(1.0 / math.sqrt(5.0))
    assert t.phase == pytest.approx(-math.atan(2.0))


def test_ramp_value_and_delay():
    r = RampSignal(start=0.25, rate=1e9)
    assert r.value(0.0) == pytest.approx(0.25)
    assert r.value(1e-9) == pytest.approx(1.25)
    b = 1e9
    tau = 1.0 / (2.0 * math.pi * b)
    tr = r.tracked(b)
    # first-order lag shifts a ramp by its time constant
    assert tr.value(tau) == pytest.approx(r.value(0.0))
    assert tr.tracked(math.inf).value(0.0) == pytest.approx(tr.value(0.0))


def test_vectorized_evaluation():
    s = SineSignal(amplitude=0.5, frequency=1e6, phase=0.0, offset=0.0)
    t = np.linspace(0, 1e-6, 32)
    v = s.value(t)
    assert v.shape == (32,)
    assert np.allclose(v, 0.5 * np.sin(2 * np.pi * 1e6 * t))
