"""End-to-end streaming orchestration.

Signal path per 128-sample step: subband analysis of farend and mic,
NLMS bank step, error resynthesis (overlap-add), then for each completed
STFT frame of the error/mic/farend triple: Bark pooling, log
compression, mask inference, transpose un-mapping, spectral masking of
the error frame and overlap-add synthesis of the enhanced output.

Everything is computed frame-synchronously from the amount of input
available, so feeding a clip in arbitrary chunk sizes is bit-identical
to processing it in one call.  All stages are array-aligned (no net
delay in sample indexing); the streaming lookahead is
``(filter_len - decimation) + (frame_len - hop)`` input samples.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from barkaec import bark, framing, metrics, postfilter, subband
from barkaec.lec import LecConfig, lec_init, lec_run, lec_step


@dataclass
class PipelineConfig:
    stft: framing.StftConfig = field(default_factory=framing.StftConfig)
    lec: LecConfig = field(default_factory=LecConfig)
    proto: subband.PrototypeFilter = None
    num_bands: int = bark.DEFAULT_NUM_BANDS
    log_floor: float = bark.DEFAULT_LOG_FLOOR
    weights: postfilter.ModelWeights = None
    mask_mode: str = "model"  # "model" | "unity" | "zero" | "oracle"

    def __post_init__(self):
        if self.proto is None:
            self.proto = subband.design_prototype(
                num_subbands=self.stft.dft_size, decimation=self.stft.hop)
        if self.proto.decimation != self.stft.hop:
            raise ValueError("filterbank decimation must equal the STFT hop")
        if self.mask_mode not in ("model", "unity", "zero", "oracle"):
            raise ValueError(f"unknown mask mode {self.mask_mode!r}")
        if self.mask_mode == "model" and self.weights is None:
            raise ValueError("mask_mode='model' needs weights")
        if self.weights is not None and self.weights.arch.num_bands != self.num_bands:
            raise ValueError("weights band count does not match pipeline config")

    @property
    def lookahead(self):
        return self.proto.lookahead + (self.stft.frame_len - self.stft.hop)


class OracleIrmProvider:
    """Ideal-ratio-mask oracle from the ground-truth nearend signal.

    Stands in for the trained network in tests: per band,
    mask = pooled |S|^2 / (pooled |E|^2 + floor), clamped to [0, 1].
    """

    def __init__(self, nearend, cfg, floor=1e-10):
        self.s_frames = framing.analyze(nearend, cfg.stft)
        self.floor = floor

    def band_mask(self, frame_index, bark_map, e_frame, feats):
        if frame_index >= self.s_frames.shape[0]:
            s = np.zeros_like(e_frame)
        else:
            s = self.s_frames[frame_index]
        return oracle_irm(s[None, :], e_frame[None, :], bark_map, self.floor)[0]


def oracle_irm(s_frames, e_frames, bark_map, floor=1e-10):
    """Band-domain IRM oracle for frame batches."""
    ps = bark.pool_energy(bark_map, np.abs(np.asarray(s_frames)) ** 2)
    pe = bark.pool_energy(bark_map, np.abs(np.asarray(e_frames)) ** 2)
    return np.clip(ps / (pe + floor), 0.0, 1.0)


class StreamProcessor:
    """Stateful single-stream processor; one instance per stream."""

    def __init__(self, cfg, mask_provider=None, capture=False):
        self.cfg = cfg
        if cfg.mask_mode == "oracle" and mask_provider is None:
            raise ValueError("oracle mask mode needs a mask provider")
        self.mask_provider = mask_provider
        self.capture = capture

        self.bark_map = bark.build_bark_map(cfg.stft.dft_size, cfg.num_bands,
                                            cfg.stft.sample_rate)
        self.lec_state = lec_init(cfg.lec, cfg.proto.num_streams)
        if cfg.weights is not None:
            self.pf_state = postfilter.PostfilterState(cfg.weights.arch)
        else:
            self.pf_state = None
        self.window = framing.sqrt_hann(cfg.stft.frame_len)

        self.xin = np.zeros(0)
        self.yin = np.zeros(0)
        self.n_in = 0           # samples pushed
        self.fb_frame = 0       # next subband frame
        self.stft_frame = 0     # next postfilter frame
        self.emitted = 0        # output samples handed out
        self.e_buf = np.zeros(0)
        self.out_buf = np.zeros(0)
        self.norm_buf = np.zeros(0)
        self.dhat_buf = np.zeros(0) if capture else None
        self.captured = {"masks": [], "e_frames": [], "shat_frames": []} if capture else None

    # -- internals ---------------------------------------------------------

    def _grow(self, buf, upto):
        # geometric overallocation; trailing zeros are never read as data
        if buf.shape[0] < upto:
            new = np.zeros(max(upto, buf.shape[0] + (buf.shape[0] >> 1), 1 << 14))
            new[:buf.shape[0]] = buf
            buf = new
        return buf

    def _fb_steps(self):
        cfg = self.cfg
        lp, d = cfg.proto.filter_len, cfg.proto.decimation
        while self.fb_frame * d + lp <= self.n_in:
            m = self.fb_frame
            xf = subband.analyze_frame(self.xin[m * d:m * d + lp], cfg.proto)
            yf = subband.analyze_frame(self.yin[m * d:m * d + lp], cfg.proto)
            e_sub, d_sub = lec_step(self.lec_state, xf, yf)
            self.e_buf = self._grow(self.e_buf, m * d + lp)
            self.e_buf[m * d:m * d + lp] += subband.synthesis_segment(e_sub, cfg.proto)
            if self.capture:
                self.dhat_buf = self._grow(self.dhat_buf, m * d + lp)
                self.dhat_buf[m * d:m * d + lp] += subband.synthesis_segment(d_sub, cfg.proto)
            self.fb_frame += 1

    def _band_mask(self, j, e_frame, feats):
        cfg = self.cfg
        if cfg.mask_mode == "oracle":
            return self.mask_provider.band_mask(j, self.bark_map, e_frame, feats)
        mask, _ = postfilter.infer_mask(self.pf_state, cfg.weights, *feats)
        return mask

    def _stft_steps(self):
        cfg = self.cfg
        fl, hop = cfg.stft.frame_len, cfg.stft.hop
        # error samples up to (fb_frame) * hop are final
        e_ready = self.fb_frame * hop
        in_ready = self.n_in
        while True:
            j = self.stft_frame
            end = j * hop + fl
            if end > e_ready or end > in_ready:
                break
            e_seg = self.e_buf[j * hop:end] * self.window
            y_seg = self.yin[j * hop:end] * self.window
            x_seg = self.xin[j * hop:end] * self.window
            e_frame = np.fft.rfft(e_seg)
            y_frame = np.fft.rfft(y_seg)
            x_frame = np.fft.rfft(x_seg)

            feats = tuple(
                bark.log_compress(bark.pool_energy(self.bark_map, np.abs(f) ** 2),
                                  cfg.log_floor)
                for f in (e_frame, y_frame, x_frame))
            # unity/zero bypass modes act directly on the DFT bins: a
            # constant band mask would not unmap to a constant bin mask
            # because the overlapping band windows do not sum to one at
            # the spectrum edges.
            if cfg.mask_mode == "unity":
                bin_mask = np.ones(e_frame.shape[0])
            elif cfg.mask_mode == "zero":
                bin_mask = np.zeros(e_frame.shape[0])
            else:
                band_mask = self._band_mask(j, e_frame, feats)
                bin_mask = bark.unmap_mask(self.bark_map, band_mask)
            shat_frame = postfilter.apply_mask(e_frame, bin_mask)

            seg = np.fft.irfft(shat_frame, n=fl) * self.window
            self.out_buf = self._grow(self.out_buf, end)
            self.norm_buf = self._grow(self.norm_buf, end)
            self.out_buf[j * hop:end] += seg
            self.norm_buf[j * hop:end] += self.window ** 2
            if self.capture:
                self.captured["masks"].append(bin_mask)
                self.captured["e_frames"].append(e_frame)
                self.captured["shat_frames"].append(shat_frame)
            self.stft_frame += 1

    def _emit(self):
        # output samples in [0, stft_frame * hop) have all contributions
        ready = self.stft_frame * self.cfg.stft.hop
        if ready <= self.emitted:
            return np.zeros(0)
        lo, hi = self.emitted, min(ready, self.out_buf.shape[0])
        out = self.out_buf[lo:hi].copy()
        norm = self.norm_buf[lo:hi]
        good = norm > 1e-12
        out[good] /= norm[good]
        self.emitted = hi
        return out

    # -- public API --------------------------------------------------------

    def push(self, x_chunk, y_chunk):
        """Feed equal-length farend/mic chunks; returns finished output."""
        x_chunk = np.asarray(x_chunk, dtype=np.float64)
        y_chunk = np.asarray(y_chunk, dtype=np.float64)
        if x_chunk.shape != y_chunk.shape:
            raise ValueError("farend and mic chunks must have equal length")
        self.xin = np.concatenate([self.xin, x_chunk])
        self.yin = np.concatenate([self.yin, y_chunk])
        self.n_in = self.xin.shape[0]
        self._fb_steps()
        self._stft_steps()
        return self._emit()

    def finalize(self):
        """Flush with zero padding; returns output up to the input length."""
        n = self.n_in
        pad = self.cfg.lookahead + self.cfg.proto.filter_len
        out_tail = self.push(np.zeros(pad), np.zeros(pad))
        total = self.emitted
        keep = max(0, n - (total - out_tail.shape[0]))
        return out_tail[:keep]


def process_stream(x, y, cfg, mask_provider=None, capture=False, chunk=None):
    """Process a whole clip; returns (s_hat, MetricReport[, intermediates]).

    ``chunk`` feeds the stream in fixed-size pieces (result is
    bit-identical for any chunking).  With ``capture=True`` a dict of
    intermediates (error/echo-estimate signals, per-frame masks and
    spectra) is returned as a third element.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        n = min(x.shape[0], y.shape[0])
        x, y = x[:n], y[:n]
    proc = StreamProcessor(cfg, mask_provider=mask_provider, capture=capture)

    t0 = time.perf_counter()
    pieces = []
    if chunk is None:
        pieces.append(proc.push(x, y))
    else:
        for i in range(0, x.shape[0], chunk):
            pieces.append(proc.push(x[i:i + chunk], y[i:i + chunk]))
    pieces.append(proc.finalize())
    elapsed = time.perf_counter() - t0

    s_hat = np.concatenate(pieces)
    duration = x.shape[0] / cfg.stft.sample_rate if x.shape[0] else 0.0
    report = metrics.MetricReport(rtf=elapsed / duration if duration else float("nan"))
    if y.size and np.any(y != 0) and np.any(s_hat != 0):
        report.erle_db = metrics.erle(y, s_hat)
    report.extra["lookahead_samples"] = cfg.lookahead
    if capture:
        cap = proc.captured
        inter = {
            "e_time": proc.e_buf[:x.shape[0]].copy(),
            "d_hat_time": proc.dhat_buf[:x.shape[0]].copy(),
            "masks": np.array(cap["masks"]),
            "e_frames": np.array(cap["e_frames"]),
            "shat_frames": np.array(cap["shat_frames"]),
        }
        return s_hat, report, inter
    return s_hat, report


def lec_only(x, y, cfg):
    """LEC stage alone: returns the resynthesized error signal."""
    x_sub = subband.fb_analyze(x, cfg.proto)
    y_sub = subband.fb_analyze(y, cfg.proto)
    state = lec_init(cfg.lec, cfg.proto.num_streams)
    e_sub, _ = lec_run(state, x_sub, y_sub)
    e = subband.fb_synthesize(e_sub, cfg.proto)
    n = min(len(e), len(y))
    return e[:n]
