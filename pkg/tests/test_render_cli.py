import json
import subprocess
import sys

import numpy as np
import pytest

from sonify.analysis import analyze, band_magnitude
from sonify.render import read_wav, render_session, to_int16, write_wav
from sonify.session import load_session

from conftest import fixture_path

SR = 44100


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "sonify.cli", *args], capture_output=True, text=True
    )


def test_airquality_duration(tmp_path):
    out = tmp_path / "air.wav"
    r = run_cli("render", fixture_path("airquality_fm.json"), "-o", str(out))
    assert r.returncode == 0, r.stderr
    audio, rate = read_wav(str(out))
    assert rate == SR
    # 60 rows at 0.2 s/point
    assert abs(len(audio) - 60 * 0.2 * SR) <= 64


def test_render_byte_identical(tmp_path):
    a, b = tmp_path / "a.wav", tmp_path / "b.wav"
    for out in (a, b):
        r = run_cli("render", fixture_path("airquality_fm.json"), "-o", str(out))
        assert r.returncode == 0, r.stderr
    assert a.read_bytes() == b.read_bytes()


def test_event_log_lines(tmp_path):
    out, log = tmp_path / "d.wav", tmp_path / "d.jsonl"
    r = run_cli(
        "render", fixture_path("eeg_discrete.json"), "-o", str(out),
        "--log", str(log), "--duration", "10",
    )
    assert r.returncode == 0, r.stderr
    events = [json.loads(line) for line in log.read_text().splitlines()]
    assert events, "expected at least one trigger in the first 10 s"
    for e in events:
        assert set(e) == {"time", "track", "row", "value"}
    rows = [e["row"] for e in events]
    assert rows == sorted(rows)


def test_duration_override_truncates(tmp_path):
    out = tmp_path / "short.wav"
    r = run_cli("render", fixture_path("eeg_fm.json"), "-o", str(out), "--duration", "1.5")
    assert r.returncode == 0, r.stderr
    audio, _ = read_wav(str(out))
    assert abs(len(audio) - 1.5 * SR) <= 64


def test_exit_code_config_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli("render", str(bad), "-o", str(tmp_path / "x.wav")).returncode == 2
    assert run_cli("render", str(tmp_path / "missing.json"), "-o", "x.wav").returncode == 2


def test_exit_code_dataset_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dataset": "missing.csv", "rate": 0.1, "tracks": []}))
    assert run_cli("render", str(cfg), "-o", str(tmp_path / "x.wav")).returncode == 3


def test_exit_code_invalid_track_is_config_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "dataset": fixture_path("data/airquality.csv"),
                "rate": 0.1,
                "tracks": [{"id": "t0", "series": "NOPE"}],
            }
        )
    )
    assert run_cli("render", str(cfg), "-o", str(tmp_path / "x.wav")).returncode == 2


def test_exit_code_io_error(tmp_path):
    r = run_cli(
        "render", fixture_path("airquality_fm.json"), "-o", "/nonexistent/dir/out.wav"
    )
    assert r.returncode == 4


def test_analyze_pure_sine(tmp_path):
    t = np.arange(SR) / SR
    tone = np.column_stack([np.sin(2 * np.pi * 440 * t)] * 2) * 0.8
    path = tmp_path / "tone.wav"
    write_wav(str(path), tone, SR)
    r = run_cli("analyze", str(path), "--window", "8192")
    assert r.returncode == 0
    first = r.stdout.splitlines()[0]
    dominant = float(first.split(":")[1].split("Hz")[0])
    assert abs(dominant - 440.0) <= SR / 8192  # FFT bin resolution


def test_analyze_silence(tmp_path):
    path = tmp_path / "silence.wav"
    write_wav(str(path), np.zeros((SR, 2)), SR)
    r = run_cli("analyze", str(path))
    assert r.returncode == 0
    assert all("no peaks" in line for line in r.stdout.splitlines())


def test_analyze_reports_fm_sidebands():
    session = load_session(fixture_path("airquality_fm.json"))
    audio, _, _ = render_session(session, duration=3.0)
    reports = analyze(audio, SR, window=2**15)
    peak_freqs = [p.frequency for rep in reports for p in rep.peaks]
    # SO2 carrier at 750 Hz should be among the peaks somewhere
    assert any(abs(f - 750.0) < 3 for f in peak_freqs)


def test_analyze_missing_file():
    assert run_cli("analyze", "/nonexistent.wav").returncode == 4


def test_wav_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(9)
    audio = rng.uniform(-1, 1, (1000, 2))
    path = tmp_path / "rt.wav"
    write_wav(str(path), audio, SR)
    back, rate = read_wav(str(path))
    assert rate == SR
    assert np.array_equal(to_int16(back * 32767.0 / 32767.0), to_int16(audio)) or np.allclose(
        back, audio, atol=1 / 32767.0
    )
