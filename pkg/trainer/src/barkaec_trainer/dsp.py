"""Differentiable DSP pieces mirroring the engine's analysis chain."""

import numpy as np
import torch

FRAME_LEN = 512
HOP = 128
NUM_BINS = FRAME_LEN // 2 + 1
SAMPLE_RATE = 16000
LOG_FLOOR = 1e-12


def sqrt_hann(n):
    """Square root of the periodic Hann window."""
    k = torch.arange(n, dtype=torch.float64)
    return torch.sqrt(0.5 - 0.5 * torch.cos(2.0 * torch.pi * k / n))


def stft_analyze(x, frame_len=FRAME_LEN, hop=HOP, window=None):
    """WOLA analysis of a batch of signals (..., n) -> (..., T, bins)."""
    if window is None:
        window = sqrt_hann(frame_len).to(x.dtype)
    n = x.shape[-1]
    n_frames = max(0, (n - frame_len) // hop + 1)
    frames = torch.stack([x[..., j * hop:j * hop + frame_len] * window
                          for j in range(n_frames)], dim=-2)
    return torch.fft.rfft(frames, dim=-1)


def stft_synthesize(frames, frame_len=FRAME_LEN, hop=HOP, window=None):
    """Overlap-add synthesis with per-sample window-power normalization."""
    if window is None:
        window = sqrt_hann(frame_len).to(torch.float64)
    n_frames = frames.shape[-2]
    n_out = (n_frames - 1) * hop + frame_len
    segs = torch.fft.irfft(frames, n=frame_len, dim=-1) * window
    out = segs.new_zeros(frames.shape[:-2] + (n_out,))
    norm = torch.zeros(n_out, dtype=window.dtype)
    w2 = window ** 2
    for j in range(n_frames):
        out[..., j * hop:j * hop + frame_len] = (
            out[..., j * hop:j * hop + frame_len] + segs[..., j, :])
        norm[j * hop:j * hop + frame_len] += w2
    return out / torch.clamp(norm, min=1e-12)


def hz_to_bark(f):
    return 26.81 * f / (1960.0 + f) - 0.53


def bark_to_hz(z):
    return 1960.0 * (z + 0.53) / (26.28 - z)


def bark_matrix(dft_size=FRAME_LEN, num_bands=86, sample_rate=SAMPLE_RATE):
    """Bin-to-band overlap-fraction matrix, shape (bins, bands).

    Band edges are uniform on the Bark axis over [0, f_s/2]; entry (k, b)
    is the fraction of bin k's width covered by band b.
    """
    n_bins = dft_size // 2 + 1
    z = np.linspace(hz_to_bark(0.0), hz_to_bark(sample_rate / 2.0), num_bands + 1)
    edges = bark_to_hz(z)
    edges[0], edges[-1] = 0.0, sample_rate / 2.0
    k = np.arange(n_bins)
    bin_lo = (2 * k - 1) * sample_rate / (2.0 * dft_size)
    bin_hi = (2 * k + 1) * sample_rate / (2.0 * dft_size)
    overlap = (np.minimum(edges[None, 1:], bin_hi[:, None])
               - np.maximum(edges[None, :-1], bin_lo[:, None]))
    mat = np.maximum(0.0, overlap) / (sample_rate / dft_size)
    return torch.from_numpy(mat)


def log_bark_features(frames, bark_mat, floor=LOG_FLOOR):
    """log10 band energies of complex STFT frames, (..., T, bins) -> (..., T, B)."""
    power = frames.real ** 2 + frames.imag ** 2
    pooled = power @ bark_mat.to(power.dtype)
    return torch.log10(torch.clamp(pooled, min=floor))
