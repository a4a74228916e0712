"""File format round trips and report envelopes."""

import json

import numpy as np
import pytest

from capflash.backend import CodeStream
from capflash.characterize import histogram_linearity
from capflash.reports import (
    STREAM_SCHEMA,
    TOOL_VERSION,
    make_report,
    read_report,
    read_stream,
    read_stream_bin,
    read_stream_csv,
    read_sweep_csv,
    write_linearity_csv,
    write_report,
    write_spectrum_csv,
    write_stream_bin,
    write_stream_csv,
    write_sweep_csv,
)

from conftest import rng_for_test


@pytest.fixture()
def stream():
    rng = rng_for_test(0)
    binary = rng.integers(0, 64, 300).astype(np.uint8)
    meta = np.zeros(300, dtype=np.uint16)
    meta[17] = 2
    dec = np.ones(300, dtype=bool)
    dec[44] = False
    return CodeStream(
        binary=binary,
        gray=(binary ^ (binary >> 1)).astype(np.uint8),
        metastable_count=meta,
        decodable=dec,
        fs=600e6,
        seed=12,
        decimation=4,
        meta={"waveform": "sine", "f_in": 51.123e6, "n_fft": 4096},
    )


CONFIG = {"run": {"seed": 12}, "stimulus": {"fs": 600e6}}


def test_csv_stream_roundtrip(tmp_path, stream):
    p = tmp_path / "s.csv"
    write_stream_csv(p, stream, CONFIG, "abc123")
    arrays, header = read_stream_csv(p)
    np.testing.assert_array_equal(arrays["binary"], stream.binary)
    np.testing.assert_array_equal(arrays["gray"], stream.gray)
    np.testing.assert_array_equal(arrays["metastable_count"],
                                  stream.metastable_count)
    assert header["schema"] == STREAM_SCHEMA
    assert header["tool_version"] == TOOL_VERSION
    assert header["config_hash"] == "abc123"
    assert header["seed"] == 12
    assert header["fs"] == 600e6
    assert header["decimation"] == 4
    assert header["n_samples"] == 300
    assert header["config"] == CONFIG
    assert header["meta"]["f_in"] == 51.123e6


def test_bin_stream_roundtrip(tmp_path, stream):
    p = tmp_path / "s.bin"
    write_stream_bin(p, stream, CONFIG, "abc123")
    arrays, header = read_stream_bin(p)
    np.testing.assert_array_equal(arrays["binary"], stream.binary)
    np.testing.assert_array_equal(arrays["gray"], stream.gray)
    np.testing.assert_array_equal(arrays["decodable"], stream.decodable)
    np.testing.assert_array_equal(arrays["metastable_count"],
                                  stream.metastable_count)
    assert header["config"] == CONFIG
    assert header["n_samples"] == 300


def test_read_stream_dispatches_on_magic(tmp_path, stream):
    pc = tmp_path / "s.csv"
    pb = tmp_path / "s.dat"
    write_stream_csv(pc, stream, CONFIG, "x")
    write_stream_bin(pb, stream, CONFIG, "x")
    for p in (pc, pb):
        arrays, header = read_stream(p)
        np.testing.assert_array_equal(arrays["binary"], stream.binary)


def test_bin_stream_corruption_detected(tmp_path, stream):
    p = tmp_path / "s.bin"
    write_stream_bin(p, stream, CONFIG, "x")
    raw = p.read_bytes()

    bad_magic = tmp_path / "m.bin"
    bad_magic.write_bytes(b"NOPE" + raw[4:])
    with pytest.raises(ValueError, match="magic"):
        read_stream_bin(bad_magic)

    truncated = tmp_path / "t.bin"
    truncated.write_bytes(raw[:-3])
    with pytest.raises(ValueError, match="truncated"):
        read_stream_bin(truncated)

    bad_version = tmp_path / "v.bin"
    bad_version.write_bytes(raw[:4] + b"\xff\x00" + raw[6:])
    with pytest.raises(ValueError, match="version"):
        read_stream_bin(bad_version)


def test_report_envelope(tmp_path):
    rep = make_report("spectrum", CONFIG, "deadbeef", 5,
                      {"sndr_db": np.float64(37.9),
                       "dnl": np.arange(3.0)})
    assert rep["schema"] == "capflash.report.spectrum/1"
    assert rep["tool_version"] == TOOL_VERSION
    assert rep["config_hash"] == "deadbeef"
    assert "created_utc" in rep
    p = tmp_path / "r.json"
    write_report(p, rep)
    back = read_report(p)
    assert back["results"]["sndr_db"] == 37.9
    assert back["results"]["dnl"] == [0.0, 1.0, 2.0]
    # numpy scalars and arrays must serialize; other objects must not
    with pytest.raises(TypeError):
        write_report(tmp_path / "bad.json", {"x": object()})


def test_sweep_csv_roundtrip(tmp_path):
    rows = [
        (51e6, {"snr_db": 38.0, "sndr_db": 37.8, "sfdr_db": 49.0,
                "thd_db": 45.0, "enob": 5.99}),
        (201e6, {"snr_db": 37.0, "sndr_db": 36.5, "sfdr_db": 47.0,
                 "thd_db": 44.0, "enob": 5.77}),
    ]
    p = tmp_path / "sweep.csv"
    write_sweep_csv(p, rows, failures=[(901e6, "analysis not feasible")])
    back = read_sweep_csv(p)
    assert len(back) == 2
    assert back[0]["f_in_hz"] == 51e6
    assert back[1]["sndr_db"] == 36.5
    text = p.read_text()
    assert text.startswith("# failed f_in=")
    # full float precision survives the text format
    assert repr(37.8) in text


def test_spectrum_csv(tmp_path):
    p = tmp_path / "spec.csv"
    write_spectrum_csv(p, {"f_in": 51.123e6, "snr_db": 38.0,
                           "sndr_db": 37.8, "sfdr_db": 49.0, "thd_db": 45.0,
                           "enob": 5.99, "n_fft": 4096,
                           "fundamental_bin": 349})
    lines = p.read_text().strip().splitlines()
    assert lines[0].split(",")[0] == "f_in_hz"
    assert len(lines) == 2
    assert lines[1].split(",")[-1] == "349"


def test_linearity_csv(tmp_path):
    theta = 2.0 * np.pi * ((0.61803398875 * np.arange(1 << 18)) % 1.0)
    codes = np.clip(np.floor(32.0 + 32.5 * np.sin(theta)), 0,
                    63).astype(np.int64)
    rep = histogram_linearity(codes)
    p = tmp_path / "lin.csv"
    write_linearity_csv(p, rep)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "code,count,dnl_lsb,inl_lsb"
    assert len(lines) == 65
    first = lines[1].split(",")
    assert first[0] == "0"
    assert int(first[1]) == rep.histogram[0]
    assert float(first[2]) == 0.0
