"""Numba build of the hot kernels.

Loop-level mirrors of ``_kernels_np`` compiled with ``@njit(cache=True)``.
"""

import math

import numpy as np
from numba import njit

_TINY = 1e-30

ACT_LINEAR = 0
ACT_RELU = 1
ACT_SIGMOID = 2


@njit(cache=True)
def lec_frame(xf, yf, xbuf, coeffs, px, pe, pd, pref, taps, mu0, mu_floor,
              delta0, gate, lam, first, e_out, d_out, sel_out):
    t_max, ks = xbuf.shape
    n_members = coeffs.shape[0]

    for t in range(t_max - 1, 0, -1):
        for k in range(ks):
            xbuf[t, k] = xbuf[t - 1, k]
    for k in range(ks):
        xbuf[0, k] = xf[k]

    px_sum = 0.0
    py_sum = 0.0
    for k in range(ks):
        ax2 = xf[k].real * xf[k].real + xf[k].imag * xf[k].imag
        py_sum += yf[k].real * yf[k].real + yf[k].imag * yf[k].imag
        if first:
            px[k] = ax2
        else:
            px[k] = lam * px[k] + (1.0 - lam) * ax2
        px_sum += px[k]
    mean_px = px_sum / ks
    mean_py = py_sum / ks
    if mean_px > pref[0]:
        pref[0] = mean_px
    if mean_py > pref[0]:
        pref[0] = mean_py
    delta = delta0 * (mean_px + 1e-6 * pref[0])

    # exact excitation energy over the delay line, cumulative over taps
    cum = np.empty((t_max, ks))
    for k in range(ks):
        acc = 0.0
        for t in range(t_max):
            acc += xbuf[t, k].real * xbuf[t, k].real + xbuf[t, k].imag * xbuf[t, k].imag
            cum[t, k] = acc

    d_all = np.empty((n_members, ks), dtype=np.complex128)
    e_all = np.empty((n_members, ks), dtype=np.complex128)
    for m in range(n_members):
        t_m = taps[m]
        for k in range(ks):
            acc = 0.0 + 0.0j
            for t in range(t_m):
                acc += coeffs[m, t, k] * xbuf[t, k]
            d_m = acc
            e_m = yf[k] - d_m
            d_all[m, k] = d_m
            e_all[m, k] = e_m

            ad2 = d_m.real * d_m.real + d_m.imag * d_m.imag
            ae2 = e_m.real * e_m.real + e_m.imag * e_m.imag
            ay2 = yf[k].real * yf[k].real + yf[k].imag * yf[k].imag
            if first:
                pd[m, k] = ay2
                pe[m, k] = ay2
            else:
                pd[m, k] = lam * pd[m, k] + (1.0 - lam) * ad2
                pe[m, k] = lam * pe[m, k] + (1.0 - lam) * ae2

            mu = mu0 * pd[m, k] / (pe[m, k] + _TINY)
            if mu > 1.0:
                mu = 1.0
            elif mu < mu_floor:
                mu = mu_floor
            if cum[t_m - 1, k] >= gate * t_m * pref[0]:
                norm = cum[t_m - 1, k] + delta + _TINY
                g = mu * e_m / norm
                for t in range(t_m):
                    coeffs[m, t, k] += g * np.conj(xbuf[t, k])

    for k in range(ks):
        best = 0
        best_pe = pe[0, k]
        for m in range(1, n_members):
            if pe[m, k] < best_pe:
                best_pe = pe[m, k]
                best = m
        sel_out[k] = best
        e_out[k] = e_all[best, k]
        d_out[k] = d_all[best, k]


@njit(cache=True)
def fc_step(w, b, x, act):
    # matrix product lowers to BLAS inside numba
    y = w @ x + b
    n_out = y.shape[0]
    if act == ACT_RELU:
        for i in range(n_out):
            if y[i] < 0.0:
                y[i] = 0.0
    elif act == ACT_SIGMOID:
        for i in range(n_out):
            y[i] = 1.0 / (1.0 + math.exp(-y[i]))
    return y


@njit(cache=True)
def gru_step(wi, wr, b, x, h):
    hs = h.shape[0]
    gi = wi @ x
    gr = wr @ h
    h_new = np.empty(hs)
    for i in range(hs):
        z = 1.0 / (1.0 + math.exp(-(gi[i] + gr[i] + b[i])))
        r = 1.0 / (1.0 + math.exp(-(gi[hs + i] + gr[hs + i] + b[hs + i])))
        n = math.tanh(gi[2 * hs + i] + r * gr[2 * hs + i] + b[2 * hs + i])
        h_new[i] = (1.0 - z) * n + z * h[i]
    return h_new


@njit(cache=True)
def _i0(x):
    # series expansion of the modified Bessel function I0
    acc = 1.0
    term = 1.0
    k = 1
    while term > 1e-16 * acc:
        term *= (x / (2.0 * k)) ** 2
        acc += term
        k += 1
    return acc


@njit(cache=True)
def sinc_resample(x, ratio, half_width, beta, out):
    n = x.shape[0]
    n_out = out.shape[0]
    i0_beta = _i0(beta)
    for i in range(n_out):
        pos = i * ratio
        base = int(math.floor(pos))
        frac = pos - base
        acc = 0.0
        for off in range(-half_width + 1, half_width + 1):
            j = base + off
            if j < 0 or j >= n:
                continue
            t = off - frac
            win_arg = t / half_width
            if abs(win_arg) >= 1.0:
                continue
            win = _i0(beta * math.sqrt(1.0 - win_arg * win_arg)) / i0_beta
            if t == 0.0:
                s = 1.0
            else:
                s = math.sin(math.pi * t) / (math.pi * t)
            acc += x[j] * s * win
        out[i] = acc
