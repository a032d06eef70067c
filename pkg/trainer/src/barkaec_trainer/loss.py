"""Differentiable CCMSE loss with STFT consistency enforcement."""

import torch

from barkaec_trainer import dsp

COMPRESSION = 0.3


def _smooth_mag(frames, floor):
    """|S| lower-bounded by the floor, smooth at zero (safe gradients)."""
    return torch.sqrt(frames.real ** 2 + frames.imag ** 2 + floor * floor)


def ccmse(s_tilde, s_ref, alpha=0.3, floor=1e-12, normalized=False):
    """Compressed complex spectral MSE over one-sided frame sequences.

    J = sum w(k) [ (1-alpha) (|S~|^c - |S|^c)^2
                   + alpha |  |S~|^c e^{j phi~} - |S|^c e^{j phi} |^2 ]

    with conjugate-symmetry weights w (2 on interior bins, 1 on DC and
    Nyquist).  ``normalized=True`` divides by the frame count.
    """
    if s_tilde.shape != s_ref.shape:
        raise ValueError(f"shape mismatch: {tuple(s_tilde.shape)} vs {tuple(s_ref.shape)}")
    mt = _smooth_mag(s_tilde, floor) ** COMPRESSION
    mr = _smooth_mag(s_ref, floor) ** COMPRESSION
    pt = s_tilde / _smooth_mag(s_tilde, floor)
    pr = s_ref / _smooth_mag(s_ref, floor)

    w = torch.full(s_tilde.shape[-1:], 2.0, dtype=mt.dtype, device=s_tilde.device)
    w[0] = 1.0
    w[-1] = 1.0
    mag_term = (mt - mr) ** 2
    diff = mt * pt - mr * pr
    phase_term = diff.real ** 2 + diff.imag ** 2
    j = torch.sum(w * ((1.0 - alpha) * mag_term + alpha * phase_term))
    if normalized:
        frames = s_tilde.numel() // s_tilde.shape[-1]
        j = j / max(frames, 1)
    return j


def consistent_frames(shat_frames, frame_len=dsp.FRAME_LEN, hop=dsp.HOP):
    """Consistency enforcement: synthesize then re-analyze the estimate."""
    s_time = dsp.stft_synthesize(shat_frames, frame_len, hop)
    return dsp.stft_analyze(s_time, frame_len, hop)
