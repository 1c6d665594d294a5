#!/usr/bin/env python3
"""Regenerate the fixture datasets under fixtures/data/.

Deterministic (seeded) so the committed CSVs are reproducible.
"""

import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
DATA_DIR = os.path.join(HERE, "..", "fixtures", "data")


def eeg_alpha(n: int = 30_000) -> dict:
    """Synthetic EEG alpha-band power traces: slow envelopes + jitter.

    Two conditions (low/high alpha), values in arbitrary power units with an
    overall rising trend so the discrete threshold/increment demo has
    something to climb.
    """
    rng = np.random.default_rng(42)
    t = np.linspace(0.0, 60.0, n)
    low = 2.0 + 1.5 * np.sin(2 * np.pi * t / 13.0) + 0.4 * rng.standard_normal(n)
    high = 1.0 + 0.12 * t + 2.0 * np.abs(np.sin(2 * np.pi * t / 9.0)) + 0.5 * rng.standard_normal(n)
    return {"alpha_low": np.clip(low, 0, None), "alpha_high": np.clip(high, 0, None)}


def airquality(n: int = 60) -> dict:
    """Hourly-ish pollutant readings with diurnal swings (arbitrary units)."""
    rng = np.random.default_rng(7)
    t = np.arange(n)
    day = np.sin(2 * np.pi * t / 24.0)
    return {
        "SO2": np.clip(4 + 2 * day + rng.normal(0, 0.6, n), 0, None),
        "O3": np.clip(30 + 18 * np.sin(2 * np.pi * (t - 6) / 24.0) + rng.normal(0, 3, n), 0, None),
        "NO2": np.clip(22 - 10 * day + rng.normal(0, 2, n), 0, None),
        "CO": np.clip(0.8 + 0.3 * day + rng.normal(0, 0.08, n), 0, None),
        "PM2.5": np.clip(15 + 6 * day + rng.normal(0, 2, n), 0, None),
    }


def write_csv(path: str, columns: dict) -> None:
    names = list(columns)
    rows = np.column_stack([columns[c] for c in names])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.6f}" for v in row) + "\n")
    print(f"wrote {path} ({len(rows)} rows)")


def main():
    os.makedirs(DATA_DIR, exist_ok=True)
    write_csv(os.path.join(DATA_DIR, "eeg_alpha.csv"), eeg_alpha())
    write_csv(os.path.join(DATA_DIR, "airquality.csv"), airquality())


if __name__ == "__main__":
    main()
