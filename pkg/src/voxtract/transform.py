"""Waveform <-> compressed complex spectrogram conversion.

The analysis path is a windowed STFT followed by per-element amplitude
compression ``c * |X|^a * exp(i*angle(X))``; the synthesis path inverts the
compression and reconstructs by weighted overlap-add with window-square
normalization.  Round trips are exact to float64 rounding for any window
satisfying the nonzero-overlap condition at the configured hop.

Spectrograms are stored as complex128 arrays of shape
``[frequency_bins, frames]`` with frequency_bins = fft_size // 2 + 1.
Signals are center-padded by reflection so the frame count is a
deterministic function of the input length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window


@dataclass(frozen=True)
class TransformConfig:
    """STFT framing and amplitude-compression settings.

    The defaults (510-point FFT, hop 128, periodic Hann, |X|^0.5 scaled by
    0.33) give 256 frequency bins at 16 kHz and a compressed dynamic range
    suited to spectrogram-domain models; all of them are overridable.
    """

    fft_size: int = 510
    hop: int = 128
    window: str = "hann"
    compress_exponent: float = 0.5
    compress_scale: float = 0.33

    def __post_init__(self):
        if self.hop <= 0 or self.fft_size <= 0:
            raise ValueError("fft_size and hop must be positive")
        if self.hop >= self.fft_size:
            raise ValueError(f"hop ({self.hop}) must be < fft_size ({self.fft_size})")
        if not 0 < self.compress_exponent <= 1:
            raise ValueError(f"compress_exponent must lie in (0, 1], got {self.compress_exponent}")
        if self.compress_scale <= 0:
            raise ValueError(f"compress_scale must be positive, got {self.compress_scale}")
        w = self.window_array()
        if _min_overlap_power(w, self.hop) < 1e-10:
            raise ValueError(f"window {self.window!r} fails overlap coverage at hop {self.hop}")

    @property
    def freq_bins(self) -> int:
        return self.fft_size // 2 + 1

    def window_array(self) -> np.ndarray:
        return get_window(self.window, self.fft_size, fftbins=True).astype(np.float64)

    def num_frames(self, length: int) -> int:
        """Frame count produced by stft() for a signal of ``length`` samples."""
        if length < self.fft_size:
            raise ValueError(f"signal too short: {length} < fft_size {self.fft_size}")
        padded = length + 2 * (self.fft_size // 2)
        return 1 + int(np.ceil((padded - self.fft_size) / self.hop))


@dataclass
class ComplexSpectrogram:
    """Compressed complex STFT plus the metadata needed to invert it."""

    data: np.ndarray  # complex128 [freq_bins, frames]
    length: int  # original waveform sample count

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ValueError(f"expected [freq_bins, frames], got shape {self.data.shape}")

    @property
    def frames(self) -> int:
        return self.data.shape[1]


def _min_overlap_power(window: np.ndarray, hop: int) -> float:
    """Minimum of the overlapped squared-window sum in steady state."""
    n = len(window)
    reps = 3 * (n // hop + 1)
    acc = np.zeros(n + reps * hop)
    for i in range(reps):
        acc[i * hop : i * hop + n] += window**2
    mid = acc[n : n + reps * hop - 2 * n]
    return float(mid.min()) if len(mid) else 0.0


def compress(x: np.ndarray, cfg: TransformConfig) -> np.ndarray:
    """Amplitude compression c*|x|^a with phase preserved; 0 maps to 0."""
    mag = np.abs(x)
    out = np.zeros_like(x)
    nz = mag > 0
    out[nz] = cfg.compress_scale * mag[nz] ** cfg.compress_exponent * (x[nz] / mag[nz])
    return out


def decompress(z: np.ndarray, cfg: TransformConfig) -> np.ndarray:
    """Inverse of compress(): (|z|/c)^(1/a) with phase preserved."""
    mag = np.abs(z)
    out = np.zeros_like(z)
    nz = mag > 0
    out[nz] = (mag[nz] / cfg.compress_scale) ** (1.0 / cfg.compress_exponent) * (z[nz] / mag[nz])
    return out


def stft(samples: np.ndarray, cfg: TransformConfig) -> ComplexSpectrogram:
    """Compressed complex STFT of a mono waveform."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected mono 1-D waveform, got shape {x.shape}")
    if len(x) < cfg.fft_size:
        raise ValueError(f"signal too short: {len(x)} < fft_size {cfg.fft_size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("waveform contains non-finite values")

    pad = cfg.fft_size // 2
    padded = np.concatenate([x[1 : pad + 1][::-1], x, x[-pad - 1 : -1][::-1]])
    n_frames = 1 + int(np.ceil((len(padded) - cfg.fft_size) / cfg.hop))
    total = cfg.fft_size + (n_frames - 1) * cfg.hop
    padded = np.concatenate([padded, np.zeros(total - len(padded))])

    frames = np.lib.stride_tricks.sliding_window_view(padded, cfg.fft_size)[:: cfg.hop]
    spec = np.fft.rfft(frames * cfg.window_array(), axis=1).T  # [bins, frames]
    return ComplexSpectrogram(data=compress(spec, cfg), length=len(x))


def istft(spec: ComplexSpectrogram, cfg: TransformConfig, length: int | None = None) -> np.ndarray:
    """Invert stft(): decompress then weighted overlap-add.

    The result is truncated or zero-padded to ``length`` samples
    (defaults to the length recorded at analysis time).
    """
    if length is None:
        length = spec.length
    if spec.data.shape[0] != cfg.freq_bins:
        raise ValueError(
            f"spectrogram has {spec.data.shape[0]} bins, config expects {cfg.freq_bins}"
        )

    window = cfg.window_array()
    raw = decompress(np.asarray(spec.data, dtype=np.complex128), cfg)
    frames = np.fft.irfft(raw.T, n=cfg.fft_size, axis=1)  # [frames, fft]

    n_frames = frames.shape[0]
    total = cfg.fft_size + (n_frames - 1) * cfg.hop
    acc = np.zeros(total)
    norm = np.zeros(total)
    for i in range(n_frames):
        sl = slice(i * cfg.hop, i * cfg.hop + cfg.fft_size)
        acc[sl] += frames[i] * window
        norm[sl] += window**2

    pad = cfg.fft_size // 2
    out = np.zeros(length)
    # beyond the analyzed extent only padding artifacts exist; emit zeros there
    avail = min(length, spec.length, total - pad)
    covered = norm[pad : pad + avail]
    if np.any(covered <= 1e-12):
        raise ValueError("spectrogram has too few frames to cover the requested length")
    out[:avail] = acc[pad : pad + avail] / covered
    return out
