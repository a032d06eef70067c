"""Minimal WAV I/O: 16 kHz mono, 32-bit float written, 16-bit PCM accepted."""

import numpy as np
from scipy.io import wavfile


def read_wav(path):
    """Read a mono WAV file; returns (float64 samples in [-1, 1], rate)."""
    rate, data = wavfile.read(path)
    if data.ndim > 1:
        data = data[:, 0]
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        x = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(np.float64)
    else:
        raise ValueError(f"unsupported WAV sample format {data.dtype}")
    return x, int(rate)


def write_wav(path, samples, rate=16000):
    """Write 32-bit float PCM."""
    wavfile.write(path, int(rate), np.asarray(samples, dtype=np.float32))
