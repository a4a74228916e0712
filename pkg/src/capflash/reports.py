"""Output file writers and readers.

Three kinds of artifacts leave the tool:

* code streams, as annotated CSV or a compact binary container
* analysis reports (spectrum, linearity, sweep, monte carlo, fom) as JSON
* sweep / linearity tables as plain CSV for plotting

Every artifact embeds the resolved config and seed that produced it, so
any file can be re-run or re-analyzed without the original command line.
Timestamps are the only non-deterministic field and live in a single
`created_utc` key that comparisons should ignore.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

TOOL_VERSION = "0.1.0"
STREAM_SCHEMA = "capflash.stream/1"
REPORT_SCHEMA_PREFIX = "capflash.report."
_BIN_MAGIC = b"CFST"
_BIN_VERSION = 1


def _utcnow() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# ---------------------------------------------------------------------------
# code streams


def write_stream_csv(path, stream, config: dict, config_digest: str) -> None:
    """CSV stream: comment header with provenance, then one row per sample."""
    header = {
        "schema": STREAM_SCHEMA,
        "tool_version": TOOL_VERSION,
        "config_hash": config_digest,
        "seed": stream.seed,
        "fs": stream.fs,
        "decimation": stream.decimation,
        "n_samples": len(stream),
        "meta": dict(stream.meta),
        "config": config,
    }
    with open(path, "w", newline="") as fh:
        for key in ("schema", "tool_version", "config_hash", "seed", "fs",
                    "decimation", "n_samples"):
            fh.write(f"# {key}={header[key]}\n")
        for key in ("meta", "config"):
            fh.write(f"# {key}=" + json.dumps(header[key], sort_keys=True,
                                              separators=(",", ":")) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["sample_index", "binary", "gray_hex",
                         "metastable_count"])
        meta = stream.metastable_count
        for i, (b, g) in enumerate(zip(stream.binary, stream.gray)):
            writer.writerow([i, int(b), format(int(g), "02x"), int(meta[i])])


def read_stream_csv(path):
    """Read a CSV stream back into (arrays dict, header dict)."""
    header = {}
    rows = []
    with open(path, "r", newline="") as fh:
        text_rows = []
        for line in fh:
            if line.startswith("#"):
                body = line[1:].strip()
                key, _, value = body.partition("=")
                header[key.strip()] = value
            else:
                text_rows.append(line)
        reader = csv.reader(io.StringIO("".join(text_rows)))
        cols = next(reader)
        if cols != ["sample_index", "binary", "gray_hex", "metastable_count"]:
            raise ValueError(f"unexpected stream CSV columns: {cols}")
        for row in reader:
            rows.append(row)
    for key in ("config", "meta"):
        if key in header:
            header[key] = json.loads(header[key])
    for key in ("seed", "decimation", "n_samples"):
        if key in header:
            header[key] = int(header[key])
    if "fs" in header:
        header["fs"] = float(header["fs"])
    binary = np.array([int(r[1]) for r in rows], dtype=np.uint8)
    gray = np.array([int(r[2], 16) for r in rows], dtype=np.uint8)
    meta = np.array([int(r[3]) for r in rows], dtype=np.uint16)
    return {"binary": binary, "gray": gray, "metastable_count": meta}, header


def write_stream_bin(path, stream, config: dict, config_digest: str) -> None:
    """Compact container: magic, version, JSON header, 5-byte records.

    Record layout: binary u8, gray u8, flags u8 (bit0 = decodable),
    metastable_count u16 little endian.
    """
    header = {
        "schema": STREAM_SCHEMA,
        "tool_version": TOOL_VERSION,
        "config_hash": config_digest,
        "seed": stream.seed,
        "fs": stream.fs,
        "decimation": stream.decimation,
        "n_samples": len(stream),
        "meta": dict(stream.meta),
        "config": config,
    }
    blob = json.dumps(header, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")
    n = len(stream)
    rec = np.empty((n, 5), dtype=np.uint8)
    rec[:, 0] = stream.binary
    rec[:, 1] = stream.gray
    rec[:, 2] = stream.decodable.astype(np.uint8)
    meta16 = stream.metastable_count.astype("<u2")
    rec[:, 3:5] = meta16.view(np.uint8).reshape(n, 2)
    with open(path, "wb") as fh:
        fh.write(_BIN_MAGIC)
        fh.write(struct.pack("<HI", _BIN_VERSION, len(blob)))
        fh.write(blob)
        fh.write(rec.tobytes())


def read_stream_bin(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _BIN_MAGIC:
            raise ValueError(f"not a stream container: bad magic {magic!r}")
        version, hlen = struct.unpack("<HI", fh.read(6))
        if version != _BIN_VERSION:
            raise ValueError(f"unsupported stream container version {version}")
        header = json.loads(fh.read(hlen).decode("utf-8"))
        body = fh.read()
    rec = np.frombuffer(body, dtype=np.uint8)
    if rec.size % 5:
        raise ValueError("stream container truncated")
    rec = rec.reshape(-1, 5)
    arrays = {
        "binary": rec[:, 0].copy(),
        "gray": rec[:, 1].copy(),
        "decodable": rec[:, 2].astype(bool),
        "metastable_count": rec[:, 3:5].copy().view("<u2").ravel(),
    }
    return arrays, header


def read_stream(path):
    """Dispatch on extension / magic; returns (arrays, header)."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == _BIN_MAGIC:
        return read_stream_bin(path)
    return read_stream_csv(path)


# ---------------------------------------------------------------------------
# JSON reports


def make_report(kind: str, config: dict, config_digest: str, seed: int,
                results: dict) -> dict:
    return {
        "schema": f"{REPORT_SCHEMA_PREFIX}{kind}/1",
        "tool_version": TOOL_VERSION,
        "config_hash": config_digest,
        "seed": seed,
        "config": config,
        "results": results,
        "created_utc": _utcnow(),
    }


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_report(path, report: dict) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True,
                  default=_json_default)
        fh.write("\n")


def read_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# CSV tables


def write_sweep_csv(path, rows, failures=()) -> None:
    """Sweep table: f_in_hz, snr_db, sndr_db, sfdr_db, thd_db, enob.

    `rows` holds (f_in, metrics-dict) pairs; failed points are recorded
    as comment lines so the table stays machine-readable.
    """
    with open(path, "w", newline="") as fh:
        for f_in, reason in failures:
            fh.write(f"# failed f_in={f_in!r}: {reason}\n")
        writer = csv.writer(fh)
        writer.writerow(["f_in_hz", "snr_db", "sndr_db", "sfdr_db",
                         "thd_db", "enob"])
        for f_in, m in rows:
            writer.writerow([
                repr(float(f_in)),
                repr(float(m["snr_db"])),
                repr(float(m["sndr_db"])),
                repr(float(m["sfdr_db"])),
                repr(float(m["thd_db"])),
                repr(float(m["enob"])),
            ])


def read_sweep_csv(path):
    rows = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(io.StringIO("".join(lines)))
    cols = next(reader)
    for row in reader:
        rows.append({k: float(v) for k, v in zip(cols, row)})
    return rows


def write_spectrum_csv(path, metrics: dict) -> None:
    """Single-row metrics table with the sweep column set plus extras."""
    cols = ["f_in_hz", "snr_db", "sndr_db", "sfdr_db", "thd_db", "enob",
            "n_fft", "fundamental_bin"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        writer.writerow([
            repr(float(metrics["f_in"])),
            repr(float(metrics["snr_db"])),
            repr(float(metrics["sndr_db"])),
            repr(float(metrics["sfdr_db"])),
            repr(float(metrics["thd_db"])),
            repr(float(metrics["enob"])),
            int(metrics["n_fft"]),
            int(metrics["fundamental_bin"]),
        ])


def write_linearity_csv(path, report) -> None:
    """Per-code table: code, histogram count, dnl_lsb, inl_lsb."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["code", "count", "dnl_lsb", "inl_lsb"])
        for code in range(len(report.dnl)):
            writer.writerow([
                code,
                int(report.histogram[code]),
                repr(float(report.dnl[code])),
                repr(float(report.inl[code])),
            ])
