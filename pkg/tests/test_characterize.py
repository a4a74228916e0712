"""Metrology tests against synthetic quantizer oracles.

Code records here are generated directly from closed-form quantizer
models (floor/searchsorted on known threshold sets), independent of the
signal-chain simulator, so the analysis functions are checked against
arithmetic rather than against the thing they will later measure.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capflash.characterize import (
    FomInput,
    InsufficientSamples,
    NoCrossing,
    NonCoherent,
    NotFullScale,
    TooShort,
    coherent_bin,
    coherent_frequency,
    erbw,
    fom,
    histogram_linearity,
    spectral_metrics,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def quantize(u):
    """Ideal 6-bit flash: thresholds at 1..63 code units, clamp at ends."""
    return np.clip(np.floor(u), 0, 63).astype(np.int64)


def sine_codes(n, amp_codes, off_codes=32.0, m=349, n_fft=4096, harm3=0.0):
    theta = 2.0 * math.pi * m * np.arange(n) / n_fft
    u = off_codes + amp_codes * np.sin(theta) + harm3 * np.sin(3 * theta)
    return quantize(u)


def golden_codes(n, amp_codes, off_codes=32.0, thresholds=None):
    """Equidistributed phases; optionally a custom threshold set."""
    theta = 2.0 * math.pi * ((GOLDEN * np.arange(n)) % 1.0)
    u = off_codes + amp_codes * np.sin(theta)
    if thresholds is None:
        return quantize(u)
    return np.searchsorted(thresholds, u, side="right").astype(np.int64)


# ---------------------------------------------------------------------------
# coherent bin selection


def test_coherent_bin_examples():
    m, f = coherent_bin(600e6, 4096, 51e6)
    assert m == 349
    assert f == pytest.approx(51.123046875e6, abs=1e-3)

    m2, _ = coherent_bin(1.2e9, 8192, 121e6)
    assert m2 == 827

    # quarter-rate target sits exactly between numerators 1 and 3
    m3, _ = coherent_bin(8.0, 8, 2.0)
    assert m3 == 1


def test_coherent_bin_subsampled_target():
    # beyond-Nyquist targets are legal and stay near the request
    m, f = coherent_bin(600e6, 4096, 700e6)
    assert m % 2 == 1
    assert m > 4096 // 2
    assert abs(f - 700e6) <= 600e6 / 4096


def test_coherent_bin_validation():
    with pytest.raises(ValueError):
        coherent_bin(600e6, 4095, 51e6)
    with pytest.raises(ValueError):
        coherent_bin(600e6, 2, 51e6)
    with pytest.raises(ValueError):
        coherent_bin(0.0, 4096, 51e6)
    with pytest.raises(ValueError):
        coherent_bin(600e6, 4096, 0.0)


@settings(max_examples=200, deadline=None)
@given(
    fs=st.floats(1e6, 1e10),
    log_n=st.integers(2, 14),
    frac=st.floats(1e-4, 8.0),
)
def test_coherent_bin_properties(fs, log_n, frac):
    n_fft = 1 << log_n
    f_target = frac * fs / 4.0
    m, f = coherent_bin(fs, n_fft, f_target)
    assert m >= 1 and m % 2 == 1
    assert f == m * fs / n_fft
    # snapping never moves the frequency by more than one bin
    assert abs(f - f_target) <= fs / n_fft * (1.0 + 1e-12)
    assert coherent_frequency(fs, n_fft, f_target) == f


# ---------------------------------------------------------------------------
# spectral metrics


def test_ideal_quantizer_sndr():
    codes = sine_codes(1 << 16, amp_codes=0.499 * 64)
    f_in = 349 * 600e6 / 4096
    m = spectral_metrics(codes, fs=600e6, f_in=f_in, n_fft=4096)
    assert m.sndr_db == pytest.approx(37.88, abs=0.3)
    assert m.enob == pytest.approx(6.00, abs=0.05)
    assert m.fundamental_bin == 349
    assert m.n_fft == 4096
    assert m.snr_db > m.sndr_db
    assert m.sfdr_db >= m.sndr_db


def test_half_scale_loses_six_db():
    codes = sine_codes(1 << 16, amp_codes=0.2495 * 64)
    f_in = 349 * 600e6 / 4096
    m = spectral_metrics(codes, fs=600e6, f_in=f_in, n_fft=4096)
    assert m.sndr_db == pytest.approx(37.88 - 6.02, abs=0.4)


def test_power_decomposition_identity():
    # p_noise + p_harm = p_nd exactly, so the three ratios must satisfy
    # 10^(-sndr/10) = 10^(-snr/10) + 10^(-thd/10)
    codes = sine_codes(4096, amp_codes=31.5)
    m = spectral_metrics(codes, fs=600e6, f_in=349 * 600e6 / 4096,
                         n_fft=4096)
    lhs = 10.0 ** (-m.sndr_db / 10.0)
    rhs = 10.0 ** (-m.snr_db / 10.0) + 10.0 ** (-m.thd_db / 10.0)
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_injected_third_harmonic():
    # unquantized float record with a -40 dBc third harmonic; M chosen so
    # the harmonic folds (3*1499 = 4497 -> bin 401)
    n_fft = 4096
    theta = 2.0 * math.pi * 1499 * np.arange(n_fft) / n_fft
    x = 32.0 + 20.0 * np.sin(theta) + 0.2 * np.sin(3.0 * theta + 0.3)
    f_in = 1499 * 600e6 / 4096
    m = spectral_metrics(x, fs=600e6, f_in=f_in, n_fft=n_fft)
    assert m.thd_db == pytest.approx(40.0, abs=0.01)
    assert m.sfdr_db == pytest.approx(40.0, abs=0.01)
    assert m.sndr_db == pytest.approx(40.0, abs=0.01)
    assert m.snr_db > 100.0


def test_subsampled_fundamental_folds():
    # M = 4779 is the alias of M = 683: identical records, and the
    # analysis must agree when told the true (aliased) input frequency.
    # Integer phase accumulation keeps the two records bit-identical.
    def accum_codes(m):
        core = (m * np.arange(4096, dtype=np.int64)) % 4096
        u = 32.0 + 31.5 * np.sin(2.0 * math.pi * core / 4096)
        return quantize(u)

    direct = accum_codes(683)
    aliased = accum_codes(4779)
    np.testing.assert_array_equal(direct, aliased)
    f_hi = 4779 * 600e6 / 4096
    m = spectral_metrics(aliased, fs=600e6, f_in=f_hi, n_fft=4096)
    assert m.fundamental_bin == 683
    ref = spectral_metrics(direct, fs=600e6, f_in=683 * 600e6 / 4096,
                           n_fft=4096)
    assert m.sndr_db == pytest.approx(ref.sndr_db, abs=1e-12)


def test_noncoherent_rejected_with_suggestion():
    codes = sine_codes(4096, amp_codes=31.5)
    with pytest.raises(NonCoherent) as ei:
        spectral_metrics(codes, fs=600e6, f_in=51e6, n_fft=4096)
    assert ei.value.suggested == pytest.approx(51.123046875e6, abs=1e-3)


def test_dc_and_nyquist_fundamentals_rejected():
    codes = sine_codes(4096, amp_codes=31.5)
    with pytest.raises(NonCoherent):
        spectral_metrics(codes, fs=600e6, f_in=600e6, n_fft=4096)
    with pytest.raises(NonCoherent):
        spectral_metrics(codes, fs=600e6, f_in=300e6, n_fft=4096)


def test_too_short_record():
    codes = sine_codes(1000, amp_codes=31.5)
    with pytest.raises(TooShort):
        spectral_metrics(codes, fs=600e6, f_in=349 * 600e6 / 4096,
                         n_fft=4096)


def test_default_fft_length_is_largest_power_of_two():
    codes = sine_codes(5000, amp_codes=31.5)
    m = spectral_metrics(codes, fs=600e6, f_in=349 * 600e6 / 4096)
    assert m.n_fft == 4096


def test_degenerate_record_rejected():
    with pytest.raises(ValueError):
        spectral_metrics(np.full(4096, 17), fs=600e6,
                         f_in=349 * 600e6 / 4096, n_fft=4096)
    with pytest.raises(ValueError):
        spectral_metrics(sine_codes(4096, 31.5), fs=600e6,
                         f_in=349 * 600e6 / 4096, n_fft=1000)


# ---------------------------------------------------------------------------
# histogram linearity


def test_ideal_histogram_is_flat():
    codes = golden_codes(1 << 18, amp_codes=32.5)
    rep = histogram_linearity(codes)
    assert rep.peak_dnl < 0.02
    assert rep.peak_inl < 0.03
    assert rep.fitted_amplitude == pytest.approx(32.5, abs=0.3)
    assert rep.fitted_offset == pytest.approx(32.0, abs=0.2)
    assert rep.n_samples == 1 << 18
    # ends pinned, inl is the prefix sum of dnl
    assert rep.dnl[0] == 0.0 and rep.dnl[-1] == 0.0
    np.testing.assert_allclose(rep.inl, np.cumsum(rep.dnl), atol=1e-12)


def test_recovers_injected_threshold_shift():
    # moving transition 33 up by 0.5 LSB widens code 32 and narrows code
    # 33 by the same amount
    t = np.arange(1.0, 64.0)
    t[32] += 0.5
    codes = golden_codes(1 << 18, amp_codes=32.5, thresholds=t)
    rep = histogram_linearity(codes)
    assert rep.dnl[32] == pytest.approx(+0.5, abs=0.07)
    assert rep.dnl[33] == pytest.approx(-0.5, abs=0.07)
    mask = np.ones(64, bool)
    mask[[0, 32, 33, 63]] = False
    assert np.abs(rep.dnl[mask]).max() < 0.05


def test_explicit_fit_parameters():
    codes = golden_codes(1 << 18, amp_codes=32.5)
    rep = histogram_linearity(codes, fit_amplitude=False, amplitude=32.5,
                              offset=32.0)
    assert rep.peak_dnl < 0.02
    with pytest.raises(ValueError):
        histogram_linearity(codes, fit_amplitude=False)


def test_underdriven_sine_rejected():
    codes = golden_codes(1 << 16, amp_codes=20.0)
    with pytest.raises(NotFullScale):
        histogram_linearity(codes)


def test_insufficient_samples_reports_requirement():
    codes = golden_codes(4000, amp_codes=32.5)
    with pytest.raises(InsufficientSamples) as ei:
        histogram_linearity(codes)
    assert ei.value.required is not None
    assert ei.value.required > 4000


def test_out_of_range_codes_rejected():
    with pytest.raises(ValueError):
        histogram_linearity(np.array([0, 1, 64]))
    with pytest.raises(ValueError):
        histogram_linearity(np.array([-1, 1, 2]))


# ---------------------------------------------------------------------------
# bandwidth and merit


def test_erbw_worked_example():
    sweep = [(100e6, 35.8), (600e6, 34.0), (800e6, 32.0)]
    assert erbw(sweep) == pytest.approx(720e6, rel=1e-12)


def test_erbw_ignores_extra_colinear_point():
    a = [(100e6, 35.8), (600e6, 34.0), (800e6, 32.0)]
    b = [(100e6, 35.8), (300e6, 35.0), (600e6, 34.0), (800e6, 32.0)]
    assert erbw(b) == pytest.approx(erbw(a), rel=1e-12)


def test_erbw_anchor_is_first_point():
    # the anchor is the first sweep point even when a later one is higher
    sweep = [(50e6, 34.0), (100e6, 35.0), (400e6, 31.5), (800e6, 28.0)]
    # target is 34.0 - 3 = 31.0, crossed on the 400..800 MHz segment
    want = 400e6 + (31.5 - 31.0) / (31.5 - 28.0) * 400e6
    assert erbw(sweep) == pytest.approx(want, rel=1e-12)


def test_erbw_errors():
    with pytest.raises(NoCrossing):
        erbw([(1e8, 35.0), (2e8, 34.5), (3e8, 34.0)])
    with pytest.raises(ValueError):
        erbw([(1e8, 35.0), (2e8, 30.0)])
    with pytest.raises(ValueError):
        erbw([(2e8, 35.0), (1e8, 30.0), (3e8, 20.0)])


def test_fom_reference_values():
    f1 = fom(FomInput(power=90e-3, enob_dc=5.64, erbw=600e6))
    assert f1 == pytest.approx(1.504e-12, rel=1e-3)
    f2 = fom(FomInput(power=160e-3, enob_dc=5.66, erbw=700e6))
    assert f2 == pytest.approx(160e-3 / (2.0 ** 5.66 * 1.4e9), rel=1e-12)


def test_fom_homogeneity():
    base = fom(FomInput(power=0.1, enob_dc=5.5, erbw=5e8))
    assert fom(FomInput(power=0.2, enob_dc=5.5, erbw=5e8)) == \
        pytest.approx(2 * base, rel=1e-12)
    assert fom(FomInput(power=0.1, enob_dc=5.5, erbw=1e9)) == \
        pytest.approx(base / 2, rel=1e-12)
    assert fom(FomInput(power=0.1, enob_dc=6.5, erbw=5e8)) == \
        pytest.approx(base / 2, rel=1e-12)


def test_fom_input_validation():
    with pytest.raises(ValueError):
        FomInput(power=-1e-3, enob_dc=5.5, erbw=1e9)
    with pytest.raises(ValueError):
        FomInput(power=1e-3, enob_dc=math.inf, erbw=1e9)
    with pytest.raises(ValueError):
        FomInput(power=1e-3, enob_dc=5.5, erbw=0.0)
