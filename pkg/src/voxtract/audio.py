"""Mono 16 kHz WAV I/O.

Reads 16-bit PCM and 32-bit float files; always writes 32-bit float.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.io import wavfile

SAMPLE_RATE = 16000


def read_wav(path: str | Path, expected_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Load a mono WAV as float64 samples in [-1, 1]."""
    rate, data = wavfile.read(str(path))
    if rate != expected_rate:
        raise ValueError(f"{path}: sample rate {rate}, expected {expected_rate}")
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono audio, got shape {data.shape}")
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0
    if data.dtype in (np.float32, np.float64):
        return data.astype(np.float64)
    raise ValueError(f"{path}: unsupported sample format {data.dtype}")


def write_wav(path: str | Path, samples: np.ndarray, rate: int = SAMPLE_RATE) -> None:
    """Write float32 WAV; create parent directories as needed."""
    samples = np.asarray(samples)
    if samples.ndim != 1:
        raise ValueError(f"expected mono audio, got shape {samples.shape}")
    if not np.all(np.isfinite(samples)):
        raise ValueError("refusing to write non-finite samples")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(str(path), rate, samples.astype(np.float32))
