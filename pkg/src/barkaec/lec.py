"""Subband NLMS linear echo canceller with a parallel filter-length bank.

Each one-sided subband runs a small complex NLMS filter per bank member
(default lengths 4/8/16/32 taps); short members react quickly to echo
path changes, long members reach deeper cancellation.  Per subband the
emitted error comes from the member with the lowest smoothed error
power.  The step size is varied online as

    mu(k) = clip(mu0 * P_dhat(k) / P_err(k), step_floor * mu0, 1)

which throttles adaptation when the error is dominated by signal the
filter cannot explain (nearend speech / noise), and the regularization
scales with the mean farend power so behaviour is level-invariant.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from barkaec.backend import kernels

DEFAULT_FILTER_LENGTHS = (4, 8, 16, 32)


@dataclass(frozen=True)
class LecConfig:
    filter_lengths: tuple = DEFAULT_FILTER_LENGTHS
    step_size: float = 0.5          # mu0
    step_floor: float = 0.25        # lower clamp for mu, as a fraction of mu0
    regularization: float = 0.1     # delta0, scales mean farend power
    update_gate: float = 1e-8       # min excitation energy rel. peak farend power
    psd_smoothing: float = 1.0      # beta, factor on the nominal time constant
    psd_time_constant: float = 0.05  # seconds, nominal
    sample_rate: int = 16000
    decimation: int = 128

    def __post_init__(self):
        if not self.filter_lengths or any(t < 1 for t in self.filter_lengths):
            raise ValueError("all filter lengths must be >= 1")
        if not 0.0 <= self.step_size <= 1.0:
            raise ValueError("step_size must be in [0, 1]")
        if not 0.0 <= self.step_floor <= 1.0:
            raise ValueError("step_floor must be in [0, 1]")
        if self.regularization <= 0:
            raise ValueError("regularization must be positive")
        if self.update_gate < 0:
            raise ValueError("update_gate must be non-negative")
        if self.psd_smoothing <= 0:
            raise ValueError("psd_smoothing must be positive")

    @property
    def smoothing_coeff(self):
        """First-order recursive smoothing coefficient per subband frame."""
        tau = self.psd_time_constant * self.psd_smoothing
        return float(np.exp(-self.decimation / (self.sample_rate * tau)))


class LecState:
    """Mutable per-stream canceller state (one instance per stream)."""

    def __init__(self, cfg, num_streams):
        self.cfg = cfg
        self.num_streams = num_streams
        self.taps = np.array(sorted(cfg.filter_lengths), dtype=np.int64)
        self.t_max = int(self.taps.max())
        n_members = self.taps.shape[0]
        self.xbuf = np.zeros((self.t_max, num_streams), dtype=np.complex128)
        self.coeffs = np.zeros((n_members, self.t_max, num_streams),
                               dtype=np.complex128)
        self.px = np.zeros(num_streams)
        self.pe = np.zeros((n_members, num_streams))
        self.pd = np.zeros((n_members, num_streams))
        self.pref = np.zeros(1)  # running max of mean farend power
        self.selected = np.zeros(num_streams, dtype=np.int64)
        self.frame_count = 0

    def reset(self):
        """Zero the coefficients and delay line, reset power smoothers."""
        self.xbuf[:] = 0
        self.coeffs[:] = 0
        self.px[:] = 0
        self.pe[:] = 0
        self.pd[:] = 0
        self.pref[:] = 0
        self.selected[:] = 0
        self.frame_count = 0
        return self


def lec_init(cfg=LecConfig(), num_streams=257):
    return LecState(cfg, num_streams)


def lec_reset(state):
    return state.reset()


def lec_step(state, x_sub, y_sub):
    """Process one subband frame pair; returns (error, echo estimate).

    Mutates ``state``.  Raises on non-finite input, leaving the state
    untouched.
    """
    xf = np.ascontiguousarray(x_sub, dtype=np.complex128)
    yf = np.ascontiguousarray(y_sub, dtype=np.complex128)
    if xf.shape != (state.num_streams,) or yf.shape != (state.num_streams,):
        raise ValueError("subband frame length mismatch")
    if not (np.all(np.isfinite(xf.view(np.float64)))
            and np.all(np.isfinite(yf.view(np.float64)))):
        raise ValueError("non-finite subband input")

    e_out = np.empty(state.num_streams, dtype=np.complex128)
    d_out = np.empty(state.num_streams, dtype=np.complex128)
    kernels.lec_frame(xf, yf, state.xbuf, state.coeffs, state.px, state.pe,
                      state.pd, state.pref, state.taps, float(state.cfg.step_size),
                      float(state.cfg.step_floor * state.cfg.step_size),
                      float(state.cfg.regularization),
                      float(state.cfg.update_gate),
                      state.cfg.smoothing_coeff,
                      state.frame_count == 0, e_out, d_out, state.selected)
    state.frame_count += 1
    return e_out, d_out


def lec_run(state, x_subbands, y_subbands):
    """Run the canceller over aligned subband frame sequences.

    Returns (error frames, echo-estimate frames), shape (n_frames, Ks).
    """
    x_subbands = np.asarray(x_subbands)
    y_subbands = np.asarray(y_subbands)
    nf = min(x_subbands.shape[0], y_subbands.shape[0])
    e = np.empty((nf, state.num_streams), dtype=np.complex128)
    d = np.empty((nf, state.num_streams), dtype=np.complex128)
    for m in range(nf):
        e[m], d[m] = lec_step(state, x_subbands[m], y_subbands[m])
    return e, d


def save_state_snapshot(path, state):
    """Diagnostic coefficient dump (not bit-stable across versions)."""
    with open(path, "wb") as f:
        f.write(b"LECS")
        f.write(struct.pack("<III", state.coeffs.shape[0], state.t_max,
                            state.num_streams))
        f.write(np.ascontiguousarray(state.taps, dtype="<i8").tobytes())
        f.write(np.ascontiguousarray(state.coeffs, dtype="<c16").tobytes())
