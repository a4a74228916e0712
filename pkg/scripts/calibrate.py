"""Search mismatch parameters and a device seed for the shipped configs.

The committed calibrated configs pin one synthetic device that has to
land inside the measured-performance windows:

  600 MS/s : peak DNL in [0.3, 0.5] LSB, peak INL < 0.6 LSB,
             SNDR near 51 MHz in [35.0, 36.0] dB, ERBW 600 MHz +-10%
  1.2 GS/s : SNDR near 121 MHz in [35.3, 36.3] dB, ERBW 700 MHz +-10%

Stage 1 greps a (sigma, seed) grid with the analytic threshold fast
path: static DNL/INL peaks plus an SNDR estimate from quantizing a
coherent sine against the instance's trip points. Stage 2 re-measures
the shortlist through the full capture pipeline (jitter, latch,
histogram estimator) and fits the per-rate tracking bandwidth so the
swept ERBW hits its target. Run from the repo root:

    python3 scripts/calibrate.py [--trials 400]
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from capflash.analog_chain import analytic_thresholds
from capflash.backend import LatchModel
from capflash.characterize import erbw, histogram_linearity, spectral_metrics
from capflash.mismatch import MismatchModel, draw_instance
from capflash.montecarlo import static_linearity
from capflash.seeding import derive_seed
from capflash.simulate import StimulusSpec, simulate_capture
from capflash.topology import build_topology

TOPO = build_topology()
LSB = TOPO.lsb

# static windows, tightened so measurement noise cannot push the full
# pipeline out of the acceptance windows
DNL_WIN = (0.34, 0.46)
INL_MAX = 0.52
SNDR_WIN = (35.55, 35.85)

FS_A, F_A = 600e6, 51e6
FS_B, F_B = 1.2e9, 121e6
ERBW_A, ERBW_B = 600e6, 700e6


def static_sndr(inst, n=1 << 16, n_fft=4096):
    """SNDR of a jitter-free sine quantized by the instance's trip points."""
    trips = analytic_thresholds(TOPO, inst)
    m = 349
    theta = 2.0 * math.pi * ((m * (np.arange(n) % n_fft)) % n_fft) / n_fft
    v = 0.75 + 0.499 * np.sin(theta)
    codes = np.searchsorted(trips, v).astype(np.uint8)
    codes = np.minimum(codes, 63)
    met = spectral_metrics(codes, fs=FS_A, f_in=m * FS_A / n_fft,
                           n_fft=n_fft)
    return met.sndr_db


def stage1(trials):
    grid = []
    for s_comp in (0.060, 0.066, 0.072):
        for amp_ref_lsb in (0.12, 0.15, 0.18):
            for s_cap in (0.0022, 0.0028):
                grid.append((s_comp, amp_ref_lsb, s_cap))
    hits = []
    for s_comp, amp_ref, s_cap in grid:
        model = MismatchModel(
            sigma_cap_ratio=s_cap,
            sigma_amp_offset=amp_ref * LSB / 0.3,  # ios residual 0.3
            ios_residual_factor=0.3,
            sigma_comp_offset=s_comp,
            sigma_jitter=1.5e-12,
        )
        for run_seed in range(1, trials + 1):
            inst = draw_instance(model, TOPO,
                                 derive_seed(run_seed, "instance"))
            dnl, inl = static_linearity(TOPO, inst)
            if not (DNL_WIN[0] <= dnl <= DNL_WIN[1] and inl <= INL_MAX):
                continue
            sndr = static_sndr(inst)
            if SNDR_WIN[0] <= sndr <= SNDR_WIN[1]:
                hits.append((model, run_seed, dnl, inl, sndr))
                print(f"hit: comp={s_comp} ampref={amp_ref} cap={s_cap} "
                      f"seed={run_seed} dnl={dnl:.3f} inl={inl:.3f} "
                      f"sndr={sndr:.2f}")
                break  # one seed per sigma point is plenty
    return hits


def make_setup(model, run_seed, fs, bandwidth):
    model = MismatchModel(
        sigma_cap_ratio=model.sigma_cap_ratio,
        sigma_amp_offset=model.sigma_amp_offset,
        ios_residual_factor=model.ios_residual_factor,
        sigma_comp_offset=model.sigma_comp_offset,
        sigma_jitter=model.sigma_jitter,
        tracking_bandwidth=bandwidth,
    )
    inst = draw_instance(model, TOPO, derive_seed(run_seed, "instance"))
    latch = LatchModel(regen_tau=15e-12, decide_time=0.5 / fs,
                       relatch_stages=2)
    return model, inst, latch


def full_metrics(model, run_seed, fs, f_target, bandwidth):
    model, inst, latch = make_setup(model, run_seed, fs, bandwidth)

    lin_spec = StimulusSpec(waveform="sine", fs=fs, n_samples=1 << 18,
                            frequency=f_target, amplitude=0.51, offset=0.75,
                            n_fft=4096)
    lin_stream = simulate_capture(TOPO, inst, latch, lin_spec, seed=run_seed)
    rep = histogram_linearity(lin_stream.binary)

    spec = StimulusSpec(waveform="sine", fs=fs, n_samples=1 << 16,
                        frequency=f_target, amplitude=0.499, offset=0.75,
                        n_fft=4096)
    stream = simulate_capture(TOPO, inst, latch, spec, seed=run_seed)
    met = spectral_metrics(stream.binary, fs=fs,
                           f_in=float(stream.meta["f_in"]), n_fft=4096)
    return rep.peak_dnl, rep.peak_inl, met.sndr_db, (model, inst, latch)


def sweep_erbw(model, inst, latch, fs, f_lo=21e6, f_hi=None, n_pts=12,
               seed=1):
    f_hi = f_hi or 1.6 * (ERBW_B if fs > 1e9 else ERBW_A)
    rows = []
    seen = set()
    for i, f in enumerate(np.geomspace(f_lo, f_hi, n_pts)):
        spec = StimulusSpec(waveform="sine", fs=fs, n_samples=1 << 14,
                            frequency=float(f), amplitude=0.499,
                            offset=0.75, n_fft=4096)
        stream = simulate_capture(TOPO, inst, latch, spec,
                                  seed=derive_seed(seed, "sweep", i))
        f_in = float(stream.meta["f_in"])
        if f_in in seen:
            continue
        seen.add(f_in)
        met = spectral_metrics(stream.binary, fs=fs, f_in=f_in, n_fft=4096)
        rows.append((f_in, met.sndr_db))
    return erbw(rows)


def fit_bandwidth(model, run_seed, fs, target):
    from capflash.characterize import NoCrossing

    lo, hi = 0.6 * target, 2.0 * target
    for _ in range(18):
        mid = math.sqrt(lo * hi)
        m, inst, latch = make_setup(model, run_seed, fs, mid)
        try:
            got = sweep_erbw(m, inst, latch, fs, seed=run_seed)
        except NoCrossing:
            got = math.inf  # rolloff never reached -3 dB inside the sweep
        if got != math.inf and abs(got / target - 1.0) < 0.01:
            return mid, got
        if got < target:
            lo = mid
        else:
            hi = mid
    return mid, got


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=400,
                    help="seeds per sigma grid point in stage 1")
    args = ap.parse_args()

    hits = stage1(args.trials)
    if not hits:
        print("no static hits; widen the grid")
        return 1

    for model, run_seed, *_ in hits[:4]:
        dnl, inl, sndr, _ = full_metrics(model, run_seed, FS_A, F_A,
                                         math.inf)
        print(f"full 600M: seed={run_seed} "
              f"comp={model.sigma_comp_offset} "
              f"amp={model.sigma_amp_offset:.5f} "
              f"cap={model.sigma_cap_ratio} "
              f"dnl={dnl:.3f} inl={inl:.3f} sndr={sndr:.2f}")
        ok = 0.31 <= dnl <= 0.49 and inl < 0.58 and 35.1 <= sndr <= 35.9
        if not ok:
            continue
        # one bandwidth has to serve both rates: the 600 MS/s window is
        # [540, 660] MHz and the 1.2 GS/s window [630, 770] MHz, so aim
        # for the middle of the overlap and check both sweeps
        b, got_a = fit_bandwidth(model, run_seed, FS_A, 646e6)
        m2, inst2, latch2 = make_setup(model, run_seed, FS_B, b)
        got_b = sweep_erbw(m2, inst2, latch2, FS_B, seed=run_seed)
        _, _, sndr_b, _ = full_metrics(model, run_seed, FS_B, F_B, b)
        print(f"  B={b:.6g}: erbw600={got_a / 1e6:.1f} MHz "
              f"erbw1200={got_b / 1e6:.1f} MHz sndr@121M={sndr_b:.2f}")
        if (540e6 <= got_a <= 660e6 and 630e6 <= got_b <= 770e6
                and 35.35 <= sndr_b <= 36.25):
            print("candidate accepted:")
            print(f"  run.seed              = {run_seed}")
            print(f"  sigma_comp_offset     = {model.sigma_comp_offset}")
            print(f"  sigma_amp_offset      = {model.sigma_amp_offset:.6f}")
            print(f"  ios_residual_factor   = {model.ios_residual_factor}")
            print(f"  sigma_cap_ratio       = {model.sigma_cap_ratio}")
            print(f"  sigma_jitter          = {model.sigma_jitter}")
            print(f"  tracking_bandwidth    = {b:.6g}")
            return 0
    print("static hits did not survive the full pipeline; rerun with "
          "more --trials")
    return 1


if __name__ == "__main__":
    sys.exit(main())
