"""Pure-numpy build of the hot kernels.

Same function set and in-place state contract as ``_kernels_nb``; used
when numba is unavailable or ``BARKAEC_BACKEND=numpy``.
"""

import numpy as np

_TINY = 1e-30

# activation ids shared with the numba build
ACT_LINEAR = 0
ACT_RELU = 1
ACT_SIGMOID = 2


def lec_frame(xf, yf, xbuf, coeffs, px, pe, pd, pref, taps, mu0, mu_floor,
              delta0, gate, lam, first, e_out, d_out, sel_out):
    """One subband NLMS bank step over all subbands.

    xf, yf : complex128 (Ks,) current farend / mic subband frames.
    xbuf   : complex128 (T_max, Ks) farend delay line, row 0 newest (mutated).
    coeffs : complex128 (M, T_max, Ks) filter bank (mutated).
    px     : float64 (Ks,) smoothed farend power (mutated).
    pe, pd : float64 (M, Ks) smoothed error / echo-estimate power (mutated).
    pref   : float64 (1,) running maximum of the mean farend/mic power
             (mutated); anchors the regularization and the update gate to
             the working signal scale so they neither vanish during farend
             silence nor get seeded by leakage-level onsets, while staying
             covariant with joint input scaling.
    taps   : int64 (M,) active length per bank member.
    first  : True on the first frame of a stream; powers are seeded instead
             of smoothed so the variable step size starts near mu0.
    gate   : update gate: coefficients in a subband only adapt when the
             delay-line excitation energy reaches gate * taps * pref, so
             mic content in subbands with no real farend excitation
             (filter-ringing leakage) cannot be fitted with unbounded
             coefficients.
    e_out, d_out : complex128 (Ks,) selected error / echo estimate (written).
    sel_out      : int64 (Ks,) selected member per subband (written).
    """
    xbuf[1:] = xbuf[:-1]
    xbuf[0] = xf

    ax2 = (xf.real * xf.real + xf.imag * xf.imag)
    ay2 = (yf.real * yf.real + yf.imag * yf.imag)
    if first:
        px[:] = ax2
    else:
        px[:] = lam * px + (1.0 - lam) * ax2

    mean_px = float(np.mean(px))
    mean_py = float(np.mean(ay2))
    pref[0] = max(pref[0], mean_px, mean_py)
    delta = delta0 * (mean_px + 1e-6 * pref[0])

    # exact excitation energy over the delay line, cumulative over taps:
    # the smoothed power decays faster than the buffer empties after
    # speech offsets, which would overshoot the stable step range.
    xb2 = xbuf.real * xbuf.real + xbuf.imag * xbuf.imag
    cum = np.cumsum(xb2, axis=0)

    n_members = coeffs.shape[0]
    ks = xf.shape[0]
    d_all = np.empty((n_members, ks), dtype=np.complex128)
    e_all = np.empty((n_members, ks), dtype=np.complex128)
    for m in range(n_members):
        t = int(taps[m])
        d_m = np.sum(coeffs[m, :t] * xbuf[:t], axis=0)
        e_m = yf - d_m
        d_all[m] = d_m
        e_all[m] = e_m

        ad2 = d_m.real * d_m.real + d_m.imag * d_m.imag
        ae2 = e_m.real * e_m.real + e_m.imag * e_m.imag
        if first:
            pd[m] = ay2
            pe[m] = ay2
        else:
            pd[m] = lam * pd[m] + (1.0 - lam) * ad2
            pe[m] = lam * pe[m] + (1.0 - lam) * ae2

        mu = mu0 * pd[m] / (pe[m] + _TINY)
        np.clip(mu, mu_floor, 1.0, out=mu)
        active = cum[t - 1] >= gate * t * pref[0]
        norm = cum[t - 1] + delta + _TINY
        coeffs[m, :t] += (active * mu * e_m / norm) * np.conj(xbuf[:t])

    np.argmin(pe, axis=0, out=sel_out)
    idx = np.arange(ks)
    e_out[:] = e_all[sel_out, idx]
    d_out[:] = d_all[sel_out, idx]


def fc_step(w, b, x, act):
    """Fully connected layer: act(w @ x + b)."""
    y = w @ x + b
    if act == ACT_RELU:
        np.maximum(y, 0.0, out=y)
    elif act == ACT_SIGMOID:
        y = 1.0 / (1.0 + np.exp(-y))
    return y


def gru_step(wi, wr, b, x, h):
    """One GRU time step, single combined bias, gate order (z, r, n).

    wi : (3H, in) input weights, wr : (3H, H) recurrent weights, b : (3H,).
    Candidate uses the reset gate on the recurrent product only:
        n = tanh(Wn x + r * (Un h) + bn)
    Returns the new hidden state.
    """
    hs = h.shape[0]
    gi = wi @ x
    gr = wr @ h
    z = 1.0 / (1.0 + np.exp(-(gi[:hs] + gr[:hs] + b[:hs])))
    r = 1.0 / (1.0 + np.exp(-(gi[hs:2 * hs] + gr[hs:2 * hs] + b[hs:2 * hs])))
    n = np.tanh(gi[2 * hs:] + r * gr[2 * hs:] + b[2 * hs:])
    return (1.0 - z) * n + z * h


def sinc_resample(x, ratio, half_width, beta, out):
    """Windowed-sinc fractional resampling: out[i] = x(i * ratio).

    Kaiser window of shape parameter ``beta`` over ``2 * half_width`` taps.
    Samples outside the input are treated as zero.
    """
    n = x.shape[0]
    n_out = out.shape[0]
    pos = np.arange(n_out) * ratio
    base = np.floor(pos).astype(np.int64)
    frac = pos - base

    offsets = np.arange(-half_width + 1, half_width + 1)
    idx = base[:, None] + offsets[None, :]
    t = offsets[None, :] - frac[:, None]

    win_arg = t / half_width
    win = np.where(np.abs(win_arg) < 1.0,
                   np.i0(beta * np.sqrt(np.maximum(0.0, 1.0 - win_arg ** 2))),
                   0.0) / np.i0(beta)
    kern = np.sinc(t) * win

    valid = (idx >= 0) & (idx < n)
    xg = np.where(valid, x[np.clip(idx, 0, n - 1)], 0.0)
    out[:] = np.sum(xg * kern, axis=1)
