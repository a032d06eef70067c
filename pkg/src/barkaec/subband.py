"""Oversampled DFT analysis/synthesis filterbank for the echo-canceller path.

Analysis: frames of ``filter_len`` samples every ``decimation`` samples are
weighted by the lowpass prototype, time-aliased to ``num_subbands`` points
and transformed by a real FFT, giving K/2+1 one-sided complex subband
streams at 1/decimation of the input rate.

The synthesis window is solved per polyphase residue as the minimum
perturbation of the analysis prototype satisfying the exact
reconstruction constraints of the unmodified analysis->synthesis chain,
so the round trip is identity to machine precision and sample-aligned
(no net group delay in array indexing).  Cross-subband aliasing of the
analysis bank is set by the Kaiser prototype (about -80 dB with the
default design).
"""

import struct
from dataclasses import dataclass, field

import numpy as np

_MAGIC_TAPS = b"BFBP"


@dataclass(frozen=True)
class PrototypeFilter:
    taps: np.ndarray            # analysis prototype, length filter_len
    synthesis_taps: np.ndarray  # constrained-LS synthesis window
    num_subbands: int
    decimation: int

    @property
    def filter_len(self):
        return self.taps.shape[0]

    @property
    def num_streams(self):
        return self.num_subbands // 2 + 1

    @property
    def lookahead(self):
        """Streaming lookahead in input samples (array-aligned delay is 0)."""
        return self.filter_len - self.decimation


def design_prototype(filter_len=1024, num_subbands=512, decimation=128,
                     kaiser_beta=8.0, cutoff_scale=1.0):
    """Design the lowpass prototype and its matched synthesis window.

    Requires oversampling (decimation < num_subbands); filter_len must be
    a multiple of num_subbands, which must be a multiple of decimation.
    The prototype is a Kaiser-windowed sinc with passband edge near
    ``f_s / (2 * num_subbands)``, normalized to unit DC gain.
    """
    lp, k, d = int(filter_len), int(num_subbands), int(decimation)
    if d >= k:
        raise ValueError("critically/under-sampled design rejected: decimation must be < num_subbands")
    if lp < k:
        raise ValueError("filter_len must be >= num_subbands")
    if lp % k or k % d:
        raise ValueError("need filter_len % num_subbands == 0 and num_subbands % decimation == 0")

    n = np.arange(lp) - (lp - 1) / 2.0
    h = np.sinc(n * cutoff_scale / k) * np.kaiser(lp, kaiser_beta)
    h = h / h.sum()

    # For each polyphase residue r, pick the synthesis taps g on the frame
    # grid closest to h subject to: overlap-add of g*h equals 1 and the
    # +-K time-alias cross terms cancel exactly.
    g = np.zeros_like(h)
    n_pos = lp // d
    shifts = [0, k, -k]
    for r in range(d):
        j = r + d * np.arange(n_pos)
        c = np.zeros((len(shifts), n_pos))
        for ci, p in enumerate(shifts):
            jj = j + p
            ok = (jj >= 0) & (jj < lp)
            c[ci, ok] = h[jj[ok]]
        rhs = np.zeros(len(shifts))
        rhs[0] = 1.0
        lam = np.linalg.solve(c @ c.T, rhs - c @ h[j])
        g[j] = h[j] + c.T @ lam

    return PrototypeFilter(taps=h, synthesis_taps=g, num_subbands=k, decimation=d)


def _as_finite_1d(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a 1-D sample stream")
    if x.size and not np.all(np.isfinite(x)):
        raise ValueError("non-finite samples in input")
    return x


def analyze_frame(segment, proto):
    """One analysis step on a filter_len-sample segment."""
    u = segment * proto.taps
    v = u.reshape(-1, proto.num_subbands).sum(axis=0)
    return np.fft.rfft(v)


def synthesis_segment(subband_frame, proto):
    """Time-domain contribution of one subband frame (length filter_len)."""
    v = np.fft.irfft(subband_frame, n=proto.num_subbands)
    return np.tile(v, proto.filter_len // proto.num_subbands) * proto.synthesis_taps


def fb_analyze(signal, proto):
    """Subband decomposition: (n_frames, K/2+1) complex array.

    Frame m covers input samples [m*D, m*D + filter_len); the tail is zero
    padded so the last frame is complete.
    """
    x = _as_finite_1d(signal)
    lp, d = proto.filter_len, proto.decimation
    if x.shape[0] == 0:
        nf = 0
    else:
        nf = 1 + int(np.ceil(max(0, x.shape[0] - lp) / d))
    if nf == 0:
        return np.zeros((0, proto.num_streams), dtype=np.complex128)
    need = (nf - 1) * d + lp
    if need > x.shape[0]:
        x = np.concatenate([x, np.zeros(need - x.shape[0])])
    out = np.empty((nf, proto.num_streams), dtype=np.complex128)
    for m in range(nf):
        out[m] = analyze_frame(x[m * d:m * d + lp], proto)
    return out


def fb_synthesize(subbands, proto):
    """Overlap-add resynthesis, inverse of :func:`fb_analyze` to machine
    precision on the interior when the subbands are unmodified."""
    sub = np.asarray(subbands)
    if sub.ndim != 2 or sub.shape[1] != proto.num_streams:
        raise ValueError(f"expected (n, {proto.num_streams}) subband array, got {sub.shape}")
    nf = sub.shape[0]
    lp, d = proto.filter_len, proto.decimation
    if nf == 0:
        return np.zeros(0)
    out = np.zeros((nf - 1) * d + lp)
    for m in range(nf):
        out[m * d:m * d + lp] += synthesis_segment(sub[m], proto)
    return out


def save_taps(path, taps):
    """Flat tap file: magic, uint32 length, little-endian float64 data."""
    arr = np.ascontiguousarray(taps, dtype="<f8")
    with open(path, "wb") as f:
        f.write(_MAGIC_TAPS)
        f.write(struct.pack("<I", arr.shape[0]))
        f.write(arr.tobytes())


def load_taps(path):
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC_TAPS:
            raise ValueError("not a prototype tap file")
        (n,) = struct.unpack("<I", f.read(4))
        data = np.frombuffer(f.read(8 * n), dtype="<f8")
        if data.shape[0] != n:
            raise ValueError("truncated tap file")
    return data.astype(np.float64)
