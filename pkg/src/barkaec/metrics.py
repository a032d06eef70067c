"""Signal metrics: ERLE, realtime factor, simple SNR helpers."""

import time
from dataclasses import dataclass, field

import numpy as np


@dataclass
class MetricReport:
    erle_db: float = float("nan")
    rtf: float = float("nan")
    condition: str = ""
    extra: dict = field(default_factory=dict)

    def lines(self):
        out = [f"erle_db = {self.erle_db:.4f}", f"rtf = {self.rtf:.6f}"]
        if self.condition:
            out.append(f"condition = {self.condition}")
        for k, v in self.extra.items():
            out.append(f"{k} = {v}")
        return out


def erle(y, s_hat):
    """Echo return loss enhancement, 10*log10(||y||^2 / ||s_hat||^2).

    Inputs must already be sample-aligned (the pipeline is array-aligned,
    so no shift is applied here); lengths are truncated to the shorter
    stream.  A zero-energy enhanced signal yields +inf; a zero-energy
    unprocessed signal is an error.
    """
    y = np.asarray(y, dtype=np.float64)
    s_hat = np.asarray(s_hat, dtype=np.float64)
    n = min(y.shape[0], s_hat.shape[0])
    if n == 0:
        raise ValueError("empty signals")
    ey = float(np.sum(y[:n] ** 2))
    es = float(np.sum(s_hat[:n] ** 2))
    if ey == 0.0:
        raise ValueError("unprocessed signal has zero energy")
    if es == 0.0:
        return float("inf")
    return 10.0 * np.log10(ey / es)


def segmental_erle(y, s_hat, sample_rate=16000, win_s=1.0):
    """Per-window ERLE trace for diagnostics; returns (times, erle_db)."""
    n = min(len(y), len(s_hat))
    w = int(round(win_s * sample_rate))
    times, vals = [], []
    for i in range(0, n - w + 1, w):
        times.append(i / sample_rate)
        vals.append(erle(y[i:i + w], s_hat[i:i + w]))
    return np.array(times), np.array(vals)


def snr_db(signal, noise):
    es = float(np.sum(np.asarray(signal, dtype=np.float64) ** 2))
    en = float(np.sum(np.asarray(noise, dtype=np.float64) ** 2))
    if en == 0.0:
        return float("inf")
    return 10.0 * np.log10(es / en)


def measure_rtf(fn, audio_duration_s):
    """Wall-clock realtime factor of ``fn()`` against the audio duration."""
    if audio_duration_s <= 0:
        raise ValueError("audio duration must be positive")
    t0 = time.perf_counter()
    result = fn()
    elapsed = time.perf_counter() - t0
    return elapsed / audio_duration_s, result
