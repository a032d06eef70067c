"""Square-root Hann analysis/synthesis short-time transform.

Frames are hop-synchronous: frame ``l`` covers samples
``[l*hop, l*hop + frame_len)``.  Frame sequences are represented as 2-D
complex arrays of shape ``(n_frames, K//2 + 1)`` (one-sided spectra, row
index = frame index).  Synthesis divides by the numerically computed
overlap-add of the squared analysis window, so analyze -> synthesize is
an identity in the interior region.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StftConfig:
    sample_rate: int = 16000
    frame_len: int = 512
    hop: int = 128

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.frame_len & (self.frame_len - 1):
            raise ValueError("frame_len must be a power of two")
        if self.frame_len % self.hop:
            raise ValueError("hop must divide frame_len")

    @property
    def dft_size(self):
        return self.frame_len

    @property
    def num_bins(self):
        return self.frame_len // 2 + 1

    @property
    def frame_rate(self):
        return self.sample_rate / self.hop


def sqrt_hann(frame_len):
    """Square root of the periodic (DFT-even) Hann window."""
    n = np.arange(frame_len)
    return np.sqrt(0.5 - 0.5 * np.cos(2.0 * np.pi * n / frame_len))


def _check_finite(x):
    x = np.asarray(x, dtype=np.float64)
    if x.size and not np.all(np.isfinite(x)):
        raise ValueError("input signal contains non-finite samples")
    return x


def num_frames(n_samples, cfg):
    if n_samples < cfg.frame_len:
        return 0
    return 1 + int(np.ceil((n_samples - cfg.frame_len) / cfg.hop))


def analyze(signal, cfg=StftConfig()):
    """STFT of a real signal: (n_frames, K/2+1) complex array.

    The tail is zero padded so the last frame is complete.  Signals
    shorter than one frame produce an empty sequence.
    """
    x = _check_finite(signal)
    nf = num_frames(x.shape[0], cfg)
    if nf == 0:
        return np.zeros((0, cfg.num_bins), dtype=np.complex128)
    need = (nf - 1) * cfg.hop + cfg.frame_len
    if need > x.shape[0]:
        x = np.concatenate([x, np.zeros(need - x.shape[0])])
    win = sqrt_hann(cfg.frame_len)
    frames = np.lib.stride_tricks.sliding_window_view(x, cfg.frame_len)[::cfg.hop][:nf]
    return np.fft.rfft(frames * win, axis=1)


def _overlap_norm(nf, cfg):
    win2 = sqrt_hann(cfg.frame_len) ** 2
    n_out = (nf - 1) * cfg.hop + cfg.frame_len
    norm = np.zeros(n_out)
    for l in range(nf):
        norm[l * cfg.hop:l * cfg.hop + cfg.frame_len] += win2
    return norm


def synthesize(frames, cfg=StftConfig()):
    """Overlap-add inverse of :func:`analyze`.

    Output length is ``(n_frames - 1) * hop + frame_len``; samples whose
    window overlap is numerically zero are left at zero.
    """
    frames = np.asarray(frames)
    if frames.ndim != 2 or frames.shape[1] != cfg.num_bins:
        raise ValueError(f"expected (n, {cfg.num_bins}) frame array, got {frames.shape}")
    nf = frames.shape[0]
    if nf == 0:
        return np.zeros(0)
    win = sqrt_hann(cfg.frame_len)
    segs = np.fft.irfft(frames, n=cfg.frame_len, axis=1) * win
    out = np.zeros((nf - 1) * cfg.hop + cfg.frame_len)
    for l in range(nf):
        out[l * cfg.hop:l * cfg.hop + cfg.frame_len] += segs[l]
    norm = _overlap_norm(nf, cfg)
    good = norm > 1e-12
    out[good] /= norm[good]
    return out
