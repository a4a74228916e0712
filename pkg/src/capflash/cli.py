"""Command line front end.

Subcommands:

* simulate      run one capture, write the code stream
* characterize  linearity and/or spectral metrics from a config or stream
* sweep         frequency sweep of spectral metrics, with bandwidth estimate
* mc            Monte Carlo linearity yield over mismatch instances
* fom           figure-of-merit arithmetic from measured numbers

Exit codes: 0 success, 2 configuration problem, 3 unexpected failure,
4 analysis not feasible on the given data (non-coherent record, sparse
histogram, wrong stimulus kind, no bandwidth crossing).

Relative --out paths land in $CAPFLASH_OUT_DIR when it is set. Output
names derived automatically contain the config hash and seed, never a
timestamp, so reruns overwrite their own artifacts.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import reports
from .backend import CodeStream
from .characterize import (
    CharacterizeError,
    FomInput,
    NoCrossing,
    erbw,
    fom,
    histogram_linearity,
    spectral_metrics,
)
from .config import ConfigError, RunConfig, config_hash, load_config
from .mismatch import draw_instance
from .montecarlo import run_ensemble, trial_peaks
from .seeding import derive_seed
from .simulate import simulate_capture
from .kernels import available_backends, backend_name

_STREAM_COLS_NOTE = "sample_index, binary, gray_hex, metastable_count"


def _out_path(arg_out: str | None, default_name: str) -> Path:
    base = os.environ.get("CAPFLASH_OUT_DIR", "")
    if arg_out:
        p = Path(arg_out)
        if not p.is_absolute() and base:
            p = Path(base) / p
    else:
        p = (Path(base) if base else Path(".")) / default_name
    if p.parent != Path("."):
        p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _build_setup(cfg: RunConfig):
    """Topology, instance, latch, stimulus from a resolved config."""
    topo = cfg.topology()
    model = cfg.mismatch()
    spec = cfg.stimulus()
    latch = cfg.latch(fs=spec.fs)
    inst = draw_instance(model, topo, derive_seed(cfg.seed, "instance"))
    return topo, model, inst, latch, spec


def _capture(cfg: RunConfig, backend=None) -> CodeStream:
    topo, _, inst, latch, spec = _build_setup(cfg)
    return simulate_capture(topo, inst, latch, spec, seed=cfg.seed,
                            backend=backend)


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    fmt = args.format or "csv"
    if fmt not in ("csv", "bin"):
        raise ConfigError(f"simulate supports csv or bin output, not {fmt}")
    stream = _capture(cfg, backend=args.backend)
    ext = "csv" if fmt == "csv" else "cfst"
    out = _out_path(args.out, f"stream_{cfg.hash}_s{cfg.seed}.{ext}")
    if fmt == "csv":
        reports.write_stream_csv(out, stream, cfg.embedded(), cfg.hash)
    else:
        reports.write_stream_bin(out, stream, cfg.embedded(), cfg.hash)
    n_meta = int(np.asarray(stream.metastable_count, dtype=np.int64).sum())
    n_bad = int((~np.asarray(stream.decodable)).sum())
    print(f"wrote {out}")
    print(f"samples={len(stream)} "
          f"backend={args.backend or backend_name()} "
          f"metastable_events={n_meta} nondecodable={n_bad}")
    return 0


# ---------------------------------------------------------------------------
# characterize


def _stream_source(args):
    """Codes + context either from a stream file or a fresh capture."""
    if args.stream:
        arrays, header = reports.read_stream(args.stream)
        meta = header.get("meta", {})
        return (arrays["binary"], float(header["fs"]), meta,
                header.get("config", {}), header.get("config_hash", ""),
                int(header.get("seed", 0)))
    cfg = load_config(args.config, seed_override=args.seed)
    stream = _capture(cfg)
    return (np.asarray(stream.binary), stream.fs, dict(stream.meta),
            cfg.embedded(), cfg.hash, cfg.seed)


def cmd_characterize(args) -> int:
    if bool(args.stream) == bool(args.config):
        raise ConfigError("give exactly one of --config or --stream")
    fmt = args.format or "json"
    if fmt not in ("json", "csv"):
        raise ConfigError(f"characterize supports json or csv, not {fmt}")
    if fmt == "csv" and args.mode == "both":
        raise ConfigError("csv output needs --mode linearity or "
                          "--mode spectrum")
    codes, fs, meta, cfg_dict, digest, seed = _stream_source(args)
    waveform = meta.get("waveform", "unknown")
    if waveform != "sine":
        raise CharacterizeError(
            f"characterization needs a sine stimulus, stream holds "
            f"{waveform!r}"
        )
    mode = args.mode
    results: dict = {"waveform": waveform, "fs": fs, "n_samples": len(codes)}
    lin = spec_m = None
    if mode in ("linearity", "both"):
        lin = histogram_linearity(codes)
        results["linearity"] = {
            "peak_dnl_lsb": lin.peak_dnl,
            "peak_inl_lsb": lin.peak_inl,
            "fitted_amplitude_codes": lin.fitted_amplitude,
            "fitted_offset_codes": lin.fitted_offset,
            "n_samples": lin.n_samples,
            "dnl_lsb": lin.dnl.tolist(),
            "inl_lsb": lin.inl.tolist(),
            "histogram": lin.histogram.tolist(),
        }
    if mode in ("spectrum", "both"):
        f_in = meta.get("f_in")
        if f_in is None:
            raise CharacterizeError("stream lacks the stimulus frequency "
                                    "needed for spectral analysis")
        m = spectral_metrics(codes, fs=fs, f_in=float(f_in))
        spec_m = {"f_in": float(f_in), **m.as_dict()}
        results["spectrum"] = spec_m
    if fmt == "json":
        out = _out_path(args.out,
                        f"characterize_{mode}_{digest}_s{seed}.json")
        report = reports.make_report("characterize", cfg_dict, digest, seed,
                                     results)
        reports.write_report(out, report)
    else:
        out = _out_path(args.out,
                        f"characterize_{mode}_{digest}_s{seed}.csv")
        if mode == "linearity":
            reports.write_linearity_csv(out, lin)
        else:
            reports.write_spectrum_csv(out, spec_m)
    print(f"wrote {out}")
    if lin is not None:
        print(f"peak_dnl={lin.peak_dnl:+.4f} LSB  "
              f"peak_inl={lin.peak_inl:+.4f} LSB")
    if spec_m is not None:
        print(f"sndr={spec_m['sndr_db']:.2f} dB  "
              f"sfdr={spec_m['sfdr_db']:.2f} dB  "
              f"enob={spec_m['enob']:.3f} bits")
    return 0


# ---------------------------------------------------------------------------
# sweep


def _sweep_targets(cfg: RunConfig, override_points: int | None):
    sw = cfg.raw["sweep"]
    pts = [float(p) for p in sw["points"]]
    if not pts:
        n = int(override_points if override_points else sw["n_points"])
        if n < 3 or sw["f_min"] <= 0 or sw["f_max"] <= sw["f_min"]:
            raise ConfigError(
                "sweep needs either sweep.points or f_min < f_max with "
                "n_points >= 3"
            )
        pts = np.geomspace(sw["f_min"], sw["f_max"], n).tolist()
    if len(pts) < 3:
        raise ConfigError(f"sweep needs at least 3 points, got {len(pts)}")
    return pts


def _sweep_point(payload):
    """Worker: one sweep point. Import-safe and picklable."""
    raw, axis, value, index = payload
    cfg = RunConfig(raw=raw)
    try:
        if axis == "fsignal":
            spec = cfg.stimulus(frequency=value,
                                n_fft=int(raw["sweep"]["n_fft"]))
        else:
            spec = cfg.stimulus(fs=value,
                                n_fft=int(raw["sweep"]["n_fft"]))
        topo = cfg.topology()
        model = cfg.mismatch()
        latch = cfg.latch(fs=spec.fs)
        inst = draw_instance(model, topo,
                             derive_seed(cfg.seed, "instance"))
        seed = derive_seed(cfg.seed, "sweep", index)
        stream = simulate_capture(topo, inst, latch, spec, seed=seed)
        f_in = float(stream.meta["f_in"])
        m = spectral_metrics(np.asarray(stream.binary), fs=spec.fs,
                             f_in=f_in)
        axis_value = f_in if axis == "fsignal" else float(value)
        return index, axis_value, {"f_in": f_in, **m.as_dict()}, None
    except (ConfigError, CharacterizeError, ValueError) as exc:
        return index, float(value), None, f"{type(exc).__name__}: {exc}"


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    axis = cfg.raw["sweep"]["axis"]
    if axis not in ("fsignal", "fsample"):
        raise ConfigError(f"sweep.axis must be fsignal or fsample, "
                          f"not {axis!r}")
    targets = _sweep_targets(cfg, args.points)
    payloads = [(cfg.raw, axis, t, i) for i, t in enumerate(targets)]
    workers = max(1, args.workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw_results = list(pool.map(_sweep_point, payloads))
    else:
        raw_results = [_sweep_point(p) for p in payloads]
    raw_results.sort(key=lambda r: r[0])

    rows, failures, seen = [], [], set()
    for index, axis_value, metrics, err in raw_results:
        if err is not None:
            failures.append((axis_value, err))
        elif axis_value not in seen:
            # two targets can snap to the same coherent bin; keep one
            seen.add(axis_value)
            rows.append((axis_value, metrics))

    results: dict = {
        "axis": axis,
        "points": [[f, m] for f, m in rows],
        "failures": [[f, r] for f, r in failures],
    }
    if axis == "fsignal" and len(rows) >= 3:
        try:
            results["erbw_hz"] = erbw([(f, m["sndr_db"]) for f, m in rows])
        except (NoCrossing, ValueError) as exc:
            results["erbw_hz"] = None
            results["erbw_error"] = str(exc)
    if axis == "fsample":
        # usable-rate summary: highest sample rate still giving 5 bits
        ok = [f for f, m in rows if m["enob"] >= 5.0]
        results["max_fs_enob5_hz"] = max(ok) if ok else None
    fmt = args.format or "json"
    if fmt == "json":
        out = _out_path(args.out, f"sweep_{cfg.hash}_s{cfg.seed}.json")
        reports.write_report(
            out, reports.make_report("sweep", cfg.embedded(), cfg.hash,
                                     cfg.seed, results))
    elif fmt == "csv":
        out = _out_path(args.out, f"sweep_{cfg.hash}_s{cfg.seed}.csv")
        reports.write_sweep_csv(out, rows, failures)
    else:
        raise ConfigError(f"sweep supports json or csv, not {fmt}")
    print(f"wrote {out}")
    print(f"points={len(rows)} failures={len(failures)}")
    if results.get("erbw_hz"):
        print(f"erbw={results['erbw_hz'] / 1e6:.1f} MHz")
    if results.get("max_fs_enob5_hz"):
        print(f"max fs with enob>=5: "
              f"{results['max_fs_enob5_hz'] / 1e6:.0f} MHz")
    return 0


# ---------------------------------------------------------------------------
# mc


def _mc_chunk(payload):
    raw, lo, hi = payload
    cfg = RunConfig(raw=raw)
    topo = cfg.topology()
    model = cfg.mismatch()
    return trial_peaks(topo, model, cfg.seed, range(lo, hi))


def cmd_mc(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    mc = cfg.raw["montecarlo"]
    n_trials = int(args.points if args.points else mc["n_trials"])
    if n_trials < 1:
        raise ConfigError("montecarlo.n_trials must be >= 1")
    limits = (float(mc["dnl_limit"]), float(mc["inl_limit"]))
    workers = max(1, args.workers)
    if workers > 1:
        bounds = np.linspace(0, n_trials, workers + 1).astype(int)
        payloads = [(cfg.raw, int(lo), int(hi))
                    for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        peak_dnl = np.empty(n_trials)
        peak_inl = np.empty(n_trials)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(_mc_chunk, payloads):
                for i, dnl, inl in chunk:
                    peak_dnl[i] = dnl
                    peak_inl[i] = inl
        passed = (peak_dnl <= limits[0]) & (peak_inl <= limits[1])
        yield_fraction = float(passed.mean())
    else:
        ens = run_ensemble(cfg.topology(), cfg.mismatch(), n_trials,
                           cfg.seed, limits)
        peak_dnl, peak_inl = ens.peak_dnl, ens.peak_inl
        yield_fraction = ens.yield_fraction
    results = {
        "n_trials": n_trials,
        "limits": {"dnl_lsb": limits[0], "inl_lsb": limits[1]},
        "yield_fraction": yield_fraction,
        "peak_dnl_lsb": {
            "mean": float(peak_dnl.mean()),
            "p95": float(np.percentile(peak_dnl, 95)),
            "max": float(peak_dnl.max()),
        },
        "peak_inl_lsb": {
            "mean": float(peak_inl.mean()),
            "p95": float(np.percentile(peak_inl, 95)),
            "max": float(peak_inl.max()),
        },
        "trials": {
            "peak_dnl_lsb": peak_dnl.tolist(),
            "peak_inl_lsb": peak_inl.tolist(),
        },
    }
    fmt = args.format or "json"
    if fmt != "json":
        raise ConfigError(f"mc supports json output, not {fmt}")
    out = _out_path(args.out, f"mc_{cfg.hash}_s{cfg.seed}.json")
    reports.write_report(
        out, reports.make_report("mc", cfg.embedded(), cfg.hash, cfg.seed,
                                 results))
    print(f"wrote {out}")
    print(f"trials={n_trials} yield={yield_fraction:.3f} "
          f"limits=({limits[0]}, {limits[1]}) LSB")
    return 0


# ---------------------------------------------------------------------------
# fom


def cmd_fom(args) -> int:
    cfg = load_config(args.config, seed_override=args.seed)
    section = cfg.raw["fom"]
    power = float(section["power"])
    enob_dc = float(section["enob_dc"])
    bw = float(section["erbw"])
    if args.sweep_report:
        rep = reports.read_report(args.sweep_report)
        got = rep.get("results", {}).get("erbw_hz")
        if not got:
            raise ConfigError(
                f"sweep report {args.sweep_report} holds no bandwidth "
                "estimate"
            )
        bw = float(got)
    if args.characterize_report:
        rep = reports.read_report(args.characterize_report)
        spec = rep.get("results", {}).get("spectrum", {})
        if "enob" not in spec:
            raise ConfigError(
                f"report {args.characterize_report} holds no spectral "
                "metrics"
            )
        enob_dc = float(spec["enob"])
    if power <= 0:
        raise ConfigError("fom.power must be > 0 watts")
    if bw <= 0:
        raise ConfigError("fom.erbw must be > 0 Hz (or give --sweep-report)")
    try:
        value = fom(FomInput(power=power, enob_dc=enob_dc, erbw=bw))
    except ValueError as exc:
        raise ConfigError(f"fom: {exc}") from None
    results = {
        "power_w": power,
        "enob_dc": enob_dc,
        "erbw_hz": bw,
        "fom_j_per_step": value,
        "fom_pj_per_step": value * 1e12,
    }
    ranked = None
    if args.compare:
        import csv as _csv
        rows = [("this work", value * 1e12)]
        with open(args.compare, newline="") as fh:
            reader = _csv.DictReader(fh)
            if reader.fieldnames is None or \
                    "label" not in reader.fieldnames or \
                    "fom_pj" not in reader.fieldnames:
                raise ConfigError(
                    f"{args.compare} needs columns label,fom_pj"
                )
            for rec in reader:
                rows.append((rec["label"], float(rec["fom_pj"])))
        ranked = sorted(rows, key=lambda r: r[1])
        results["comparison"] = [
            {"rank": i + 1, "label": lbl, "fom_pj": f}
            for i, (lbl, f) in enumerate(ranked)
        ]
    fmt = args.format or "json"
    if fmt != "json":
        raise ConfigError(f"fom supports json output, not {fmt}")
    out = _out_path(args.out, f"fom_{cfg.hash}.json")
    reports.write_report(
        out, reports.make_report("fom", cfg.embedded(), cfg.hash, cfg.seed,
                                 results))
    print(f"wrote {out}")
    print(f"fom={value * 1e12:.4f} pJ/step  (P={power} W, "
          f"enob_dc={enob_dc}, erbw={bw / 1e6:.1f} MHz)")
    if ranked:
        width = max(len(lbl) for lbl, _ in ranked)
        for i, (lbl, f) in enumerate(ranked):
            print(f"  {i + 1:2d}. {lbl:<{width}}  {f:8.3f} pJ/step")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capflash",
        description="Interpolating flash converter simulator and "
                    "characterization harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats):
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--seed", type=int, default=None,
                       help="override run.seed from the config")
        p.add_argument("--out", help="output path (relative paths land in "
                                     "$CAPFLASH_OUT_DIR when set)")
        p.add_argument("--format", choices=formats, default=None,
                       help=f"output format (default {formats[0]})")

    p = sub.add_parser("simulate",
                       help="run one capture and write the code stream "
                            f"({_STREAM_COLS_NOTE})")
    common(p, ["csv", "bin"])
    p.add_argument("--backend", choices=list(available_backends()),
                   default=None, help="force a conversion kernel")
    p.set_defaults(func=cmd_simulate, needs_config=True)

    p = sub.add_parser("characterize",
                       help="linearity / spectral metrics from a config "
                            "or a recorded stream")
    common(p, ["json", "csv"])
    p.add_argument("--stream", help="analyze an existing stream file "
                                    "instead of simulating")
    p.add_argument("--mode", choices=["linearity", "spectrum", "both"],
                   default="both")
    p.set_defaults(func=cmd_characterize, needs_config=False)

    p = sub.add_parser("sweep",
                       help="spectral metrics across frequency, with "
                            "bandwidth estimate")
    common(p, ["json", "csv"])
    p.add_argument("--workers", type=int, default=1,
                   help="parallel worker processes")
    p.add_argument("--points", type=int, default=None,
                   help="override sweep.n_points")
    p.set_defaults(func=cmd_sweep, needs_config=True)

    p = sub.add_parser("mc", help="Monte Carlo linearity yield")
    common(p, ["json"])
    p.add_argument("--workers", type=int, default=1,
                   help="parallel worker processes")
    p.add_argument("--points", type=int, default=None,
                   help="override montecarlo.n_trials")
    p.set_defaults(func=cmd_mc, needs_config=True)

    p = sub.add_parser("fom", help="figure of merit from measured numbers")
    common(p, ["json"])
    p.add_argument("--sweep-report",
                   help="take the bandwidth from a sweep JSON report")
    p.add_argument("--characterize-report",
                   help="take enob_dc from a characterize JSON report")
    p.add_argument("--compare",
                   help="CSV of published converters (label,fom_pj) to "
                        "rank against")
    p.set_defaults(func=cmd_fom, needs_config=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.needs_config and not args.config:
        print(f"error: {args.command} requires --config", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CharacterizeError as exc:
        print(f"analysis not feasible: {exc}", file=sys.stderr)
        suggested = getattr(exc, "suggested", None)
        if suggested:
            print(f"hint: nearest coherent frequency is {suggested} Hz",
                  file=sys.stderr)
        required = getattr(exc, "required", None)
        if required:
            print(f"hint: roughly {required} samples would be enough",
                  file=sys.stderr)
        return 4
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
