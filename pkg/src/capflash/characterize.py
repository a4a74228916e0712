"""Converter characterization: linearity, spectrum, bandwidth, merit.

The harness mirrors standard converter metrology. Linearity comes from
the sine-wave histogram against the arcsine ideal density with a
two-parameter (amplitude, offset) end-bin fit. Spectral metrics use a
rectangular-window FFT on a coherently sampled record, with harmonics
folded through alias bins; coherence is enforced, never windowed around.
ERBW is the -3 dB point of the SNDR-vs-frequency curve, and the figure
of merit is Power / (2^ENOB_DC * 2 * ERBW).

All functions are pure and operate on code arrays (or CodeStream objects
via their binary field); nothing here touches the signal chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class CharacterizeError(Exception):
    """Base for measurement-precondition failures."""


class NonCoherent(CharacterizeError):
    """Stimulus frequency does not sit on an FFT bin."""

    def __init__(self, message: str, suggested: float | None = None):
        super().__init__(message)
        self.suggested = suggested


class TooShort(CharacterizeError):
    """Record shorter than the requested FFT length."""


class InsufficientSamples(CharacterizeError):
    """Histogram confidence bound exceeds the DNL resolution target."""

    def __init__(self, message: str, required: int | None = None):
        super().__init__(message)
        self.required = required


class NotFullScale(CharacterizeError):
    """Fitted stimulus amplitude does not cover the converter range."""


class NoCrossing(CharacterizeError):
    """SNDR never drops 3 dB below its low-frequency value."""


def _as_code_array(codes) -> np.ndarray:
    binary = getattr(codes, "binary", codes)
    arr = np.asarray(binary)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("codes must be a non-empty 1-d array")
    return arr


def coherent_bin(fs: float, n_fft: int, f_target: float) -> tuple[int, float]:
    """Nearest odd-numerator coherent bin: (M, M / n_fft * fs).

    M odd and n_fft a power of two makes them coprime, so the record
    covers M full periods with every sample at a distinct phase. Ties
    between the two neighboring odd numerators resolve downward.
    f_target may exceed fs/2: sub-sampled (aliased) stimuli are legal and
    fold to an odd, nonzero bin.
    """
    if n_fft < 4 or n_fft & (n_fft - 1):
        raise ValueError("n_fft must be a power of two >= 4")
    if fs <= 0:
        raise ValueError("fs must be > 0")
    if f_target <= 0:
        raise ValueError("f_target must be > 0")
    m_real = f_target * n_fft / fs
    below = math.floor(m_real)
    if below % 2 == 0:
        below -= 1
    above = below + 2
    if below < 1:
        m = 1
    elif (m_real - below) <= (above - m_real):
        m = below
    else:
        m = above
    return m, m * fs / n_fft


def coherent_frequency(fs: float, n_fft: int, f_target: float) -> float:
    """Coherent stimulus frequency nearest to f_target (see coherent_bin)."""
    return coherent_bin(fs, n_fft, f_target)[1]


@dataclass(frozen=True)
class SpectralMetrics:
    snr_db: float
    sndr_db: float
    thd_db: float
    sfdr_db: float
    enob: float
    fundamental_bin: int
    n_fft: int

    def as_dict(self) -> dict:
        return {
            "snr_db": self.snr_db,
            "sndr_db": self.sndr_db,
            "thd_db": self.thd_db,
            "sfdr_db": self.sfdr_db,
            "enob": self.enob,
            "fundamental_bin": self.fundamental_bin,
            "n_fft": self.n_fft,
        }


def spectral_metrics(codes, fs: float, f_in: float, n_harmonics: int = 7,
                     n_fft: int | None = None) -> SpectralMetrics:
    """Rectangular-window FFT metrics of a coherently sampled record.

    f_in is the true stimulus frequency (it may exceed fs/2 for
    sub-sampled measurements; the fundamental is folded to its alias
    bin). THD sums harmonics 2..n_harmonics, each folded the same way.
    SNDR takes all non-DC, non-fundamental power; SFDR the largest single
    non-DC spur bin. THD and SFDR are positive dB below the carrier.
    Raises NonCoherent (with a suggested frequency) when f_in is off-bin
    and TooShort when the record cannot fill n_fft.
    """
    x = _as_code_array(codes).astype(np.float64)
    if n_fft is None:
        n_fft = 1 << (len(x).bit_length() - 1)
        if n_fft > len(x):
            n_fft >>= 1
    if n_fft < 16 or n_fft & (n_fft - 1):
        raise ValueError("n_fft must be a power of two >= 16")
    if len(x) < n_fft:
        raise TooShort(f"record has {len(x)} samples, n_fft={n_fft}")
    if n_harmonics < 1:
        raise ValueError("n_harmonics must be >= 1")

    bins = f_in * n_fft / fs
    m = round(bins)
    if abs(bins - m) > 1e-6:
        raise NonCoherent(
            f"f_in={f_in} is {abs(bins - m):.3g} bins off bin {m} "
            f"(n_fft={n_fft}, fs={fs})",
            suggested=coherent_frequency(fs, n_fft, f_in),
        )
    half = n_fft // 2
    folded = m % n_fft
    fund = folded if folded <= half else n_fft - folded
    if fund == 0 or fund == half:
        raise NonCoherent(
            f"fundamental folds onto bin {fund} (DC/Nyquist); "
            "choose an odd coherent numerator",
            suggested=coherent_frequency(fs, n_fft, f_in),
        )

    spectrum = np.fft.rfft(x[:n_fft])
    power = np.abs(spectrum) ** 2
    weights = np.full(half + 1, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    pw = power * weights / float(n_fft) ** 2

    p_sig = pw[fund]
    p_nd = pw.sum() - pw[0] - p_sig
    if p_sig <= 0 or p_nd <= 0:
        raise ValueError("degenerate spectrum: no signal or no residual power")

    harm_bins = set()
    for h in range(2, n_harmonics + 1):
        bh = (h * m) % n_fft
        bh = bh if bh <= half else n_fft - bh
        if bh not in (0, fund):
            harm_bins.add(bh)
    p_harm = sum(pw[b] for b in harm_bins)
    p_noise = p_nd - p_harm

    spur_pw = pw.copy()
    spur_pw[0] = 0.0
    spur_pw[fund] = 0.0
    p_spur = spur_pw.max()

    sndr = 10.0 * math.log10(p_sig / p_nd)
    snr = 10.0 * math.log10(p_sig / p_noise) if p_noise > 0 else math.inf
    thd = 10.0 * math.log10(p_sig / p_harm) if p_harm > 0 else math.inf
    sfdr = 10.0 * math.log10(p_sig / p_spur) if p_spur > 0 else math.inf
    return SpectralMetrics(
        snr_db=snr,
        sndr_db=sndr,
        thd_db=thd,
        sfdr_db=sfdr,
        enob=(sndr - 1.76) / 6.02,
        fundamental_bin=fund,
        n_fft=n_fft,
    )


@dataclass(frozen=True)
class LinearityReport:
    """Histogram linearity result in LSB.

    dnl and inl span all codes with the end codes pinned to zero (they
    absorb the overrange and are excluded from peak statistics); inl is
    the exact prefix sum of dnl, which together with the zero-mean
    interior normalization makes it endpoint corrected.
    """

    dnl: np.ndarray
    inl: np.ndarray
    peak_dnl: float
    peak_inl: float
    histogram: np.ndarray
    n_samples: int
    fitted_amplitude: float
    fitted_offset: float


def histogram_linearity(codes, n_codes: int = 64, fit_amplitude: bool = True,
                        amplitude: float | None = None,
                        offset: float | None = None) -> LinearityReport:
    """Sine-histogram DNL/INL against the arcsine ideal density.

    The stimulus must be a full-scale (or slightly overranged) sine.
    DNL_k = H_k / H_ideal_k - 1 per interior code, with the ideal counts
    taken from the fitted sine parameters: amplitude and offset (in code
    units) solve the two end-bin equations so the estimated first and
    last transitions land on their ideal positions. Pass
    fit_amplitude=False with explicit amplitude/offset (code units) to
    skip the fit.

    Raises NotFullScale when the fitted amplitude is below half the code
    range and InsufficientSamples when the per-bin confidence bound
    3/sqrt(N * p_min) exceeds 0.1 LSB.
    """
    x = _as_code_array(codes)
    if x.min() < 0 or x.max() >= n_codes:
        raise ValueError("codes outside 0..n_codes-1")
    hist = np.bincount(x.astype(np.int64), minlength=n_codes)
    n = int(hist.sum())

    if fit_amplitude:
        q_lo = hist[0] / n
        q_hi = 1.0 - hist[-1] / n
        denom = math.cos(math.pi * q_lo) - math.cos(math.pi * q_hi)
        if denom <= 0:
            raise NotFullScale("end bins empty or inverted; sine does not clip")
        # first and last transitions sit at 1 and n_codes-1 code units,
        # so the fitted span between them is n_codes-2
        amp = (n_codes - 2) / denom
        off = 1.0 + amp * math.cos(math.pi * q_lo)
    else:
        if amplitude is None or offset is None:
            raise ValueError("amplitude and offset required when not fitting")
        amp, off = float(amplitude), float(offset)
    if amp < n_codes / 2:
        raise NotFullScale(
            f"fitted amplitude {amp:.2f} codes is below half range "
            f"({n_codes // 2} codes)"
        )

    edges = np.arange(1, n_codes, dtype=np.float64)
    u = np.clip((edges - off) / amp, -1.0, 1.0)
    asin = np.arcsin(u)
    p = (asin[1:] - asin[:-1]) / math.pi
    if p.min() <= 0:
        raise NotFullScale("fitted sine does not sweep the interior codes")
    bound = 3.0 / math.sqrt(n * p.min())
    if bound > 0.1:
        raise InsufficientSamples(
            f"confidence bound {bound:.3f} LSB exceeds 0.1 LSB at "
            f"{n} samples",
            required=math.ceil(900.0 / p.min()),
        )

    dnl = np.zeros(n_codes)
    interior = hist[1:-1] / (n * p) - 1.0
    interior -= interior.mean()
    dnl[1:-1] = interior
    inl = np.cumsum(dnl)
    return LinearityReport(
        dnl=dnl,
        inl=inl,
        peak_dnl=float(np.abs(dnl[1:-1]).max()),
        peak_inl=float(np.abs(inl[1:-1]).max()),
        histogram=hist,
        n_samples=n,
        fitted_amplitude=amp,
        fitted_offset=off,
    )


def erbw(sweep) -> float:
    """Frequency where SNDR first drops 3 dB below the low-frequency
    anchor (the first sweep point), linearly interpolated.

    sweep is a sequence of (f_in, sndr_db) sorted by frequency with at
    least 3 points. Raises NoCrossing when the curve stays within 3 dB.
    """
    pts = [(float(f), float(s)) for f, s in sweep]
    if len(pts) < 3:
        raise ValueError("sweep needs at least 3 points")
    freqs = [f for f, _ in pts]
    if any(b <= a for a, b in zip(freqs, freqs[1:])):
        raise ValueError("sweep must be sorted by strictly increasing f_in")
    target = pts[0][1] - 3.0
    for (f1, s1), (f2, s2) in zip(pts, pts[1:]):
        if s2 <= target:
            return f1 + (s1 - target) / (s1 - s2) * (f2 - f1)
    raise NoCrossing(
        f"SNDR stays above {target:.2f} dB across the sweep"
    )


@dataclass(frozen=True)
class FomInput:
    power: float
    enob_dc: float
    erbw: float

    def __post_init__(self) -> None:
        if self.power < 0:
            raise ValueError("power must be >= 0")
        if not math.isfinite(self.enob_dc):
            raise ValueError("enob_dc must be finite")
        if self.erbw <= 0:
            raise ValueError("erbw must be > 0")


def fom(inp: FomInput) -> float:
    """Figure of merit: Power / (2^ENOB_DC * 2 * ERBW), joules per
    conversion step."""
    return inp.power / (2.0 ** inp.enob_dc * 2.0 * inp.erbw)
